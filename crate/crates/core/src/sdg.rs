//! Multi-label SDG classification through a term glossary, with prevalence,
//! continent-contribution and institution coverage tables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cooccur::extract_terms;
use crate::corpus::{Continent, Corpus, DocId, OrgFilter, PubIdSet, PublicationRecord};
use crate::numfmt::Percent;
use crate::text;

pub const N_SDGS: usize = 17;

/// One of the 17 Sustainable Development Goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SdgId(u8);

impl SdgId {
    pub fn new(id: u8) -> Option<SdgId> {
        (1..=N_SDGS as u8).contains(&id).then_some(SdgId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position (SDG1 -> 0).
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> SdgId {
        assert!(i < N_SDGS);
        SdgId(i as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = SdgId> {
        (1..=N_SDGS as u8).map(SdgId)
    }
}

impl fmt::Display for SdgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Subset of {1..17} as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SdgSet(u32);

impl SdgSet {
    pub const EMPTY: SdgSet = SdgSet(0);

    pub fn insert(&mut self, id: SdgId) {
        self.0 |= 1 << id.index();
    }

    pub fn contains(self, id: SdgId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn union(self, other: SdgSet) -> SdgSet {
        SdgSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn iter(self) -> impl Iterator<Item = SdgId> {
        SdgId::all().filter(move |&id| self.contains(id))
    }
}

impl FromIterator<SdgId> for SdgSet {
    fn from_iter<I: IntoIterator<Item = SdgId>>(iter: I) -> Self {
        let mut s = SdgSet::EMPTY;
        for id in iter {
            s.insert(id);
        }
        s
    }
}

impl fmt::Display for SdgSet {
    /// Semicolon-joined ids, e.g. `1;6`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

impl Serialize for SdgSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(SdgId::get))
    }
}

#[derive(Debug, Error)]
pub enum GlossaryError {
    #[error("cannot read glossary {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("glossary line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("glossary line {line}: invalid SDG id `{value}` (expected 1-17)")]
    InvalidSdg { line: u64, value: String },
    #[error("glossary line {line}: term is empty after normalization")]
    EmptyTerm { line: u64 },
    #[error("glossary header must contain `term` and `sdg_id` columns")]
    Header,
    #[error("glossary has no entries")]
    Empty,
}

/// Normalized term -> SDG set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SdgGlossary {
    entries: HashMap<String, SdgSet>,
    max_words: usize,
}

impl SdgGlossary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a term; the term is normalized first. Returns false for a term
    /// that normalizes to nothing.
    pub fn insert(&mut self, term: &str, sdg: SdgId) -> bool {
        let norm = text::normalize(term);
        if norm.is_empty() {
            return false;
        }
        self.max_words = self.max_words.max(text::tokens(&norm).count());
        self.entries.entry(norm).or_default().insert(sdg);
        true
    }

    pub fn lookup(&self, normalized_term: &str) -> SdgSet {
        self.entries.get(normalized_term).copied().unwrap_or_default()
    }

    pub fn term_count(&self) -> usize {
        self.entries.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, SdgSet)> {
        self.entries.iter().map(|(t, &s)| (t.as_str(), s))
    }
}

pub fn load_glossary(path: &Path) -> Result<SdgGlossary, GlossaryError> {
    let file = File::open(path).map_err(|source| GlossaryError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_glossary(file)
}

/// Reads `term,sdg_id` rows (header required). Duplicate rows collapse.
pub fn read_glossary(reader: impl Read) -> Result<SdgGlossary, GlossaryError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|_| GlossaryError::Header)?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (Some(term_col), Some(sdg_col)) = (find("term"), find("sdg_id")) else {
        return Err(GlossaryError::Header);
    };
    let mut glossary = SdgGlossary::new();
    for row in rdr.records() {
        let row = row.map_err(|e| GlossaryError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let term = row.get(term_col).unwrap_or("");
        let value = row.get(sdg_col).unwrap_or("").trim();
        let sdg = value
            .parse::<u8>()
            .ok()
            .and_then(SdgId::new)
            .ok_or_else(|| GlossaryError::InvalidSdg {
                line,
                value: value.to_owned(),
            })?;
        if !glossary.insert(term, sdg) {
            return Err(GlossaryError::EmptyTerm { line });
        }
    }
    if glossary.term_count() == 0 {
        return Err(GlossaryError::Empty);
    }
    Ok(glossary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClassifyOptions {
    /// Also match glossary terms as phrases in the title and abstract.
    pub scan_text: bool,
}

/// Union of glossary hits over the record's normalized keywords (whole-term
/// matches only), plus title/abstract phrase hits when enabled.
pub fn classify(record: &PublicationRecord, glossary: &SdgGlossary, options: ClassifyOptions) -> SdgSet {
    let mut sdgs = SdgSet::EMPTY;
    for term in extract_terms(record) {
        sdgs = sdgs.union(glossary.lookup(&term));
    }
    if options.scan_text {
        for field in [&record.title, &record.abstract_text] {
            let norm = text::normalize(field);
            let words: Vec<&str> = text::tokens(&norm).collect();
            for start in 0..words.len() {
                for len in 1..=glossary.max_words.min(words.len() - start) {
                    let phrase = words[start..start + len].join(" ");
                    sdgs = sdgs.union(glossary.lookup(&phrase));
                }
            }
        }
    }
    sdgs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdgAssignment {
    pub doc: DocId,
    pub sdgs: SdgSet,
}

/// Classifies every publication of `set`, in set order.
pub fn classify_set(
    set: &PubIdSet,
    corpus: &Corpus,
    glossary: &SdgGlossary,
    options: ClassifyOptions,
) -> Vec<SdgAssignment> {
    let docs: Vec<DocId> = set.iter().collect();
    docs.par_iter()
        .map(|&doc| SdgAssignment {
            doc,
            sdgs: classify(corpus.record(doc), glossary, options),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// All publications considered, classified or not.
    All,
    /// Publications with at least one SDG.
    Classified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prevalence {
    pub total: u64,
    pub classified: u64,
    pub counts: [u64; N_SDGS],
}

impl Prevalence {
    pub fn from_counts(total: u64, classified: u64, counts: [u64; N_SDGS]) -> Self {
        Prevalence {
            total,
            classified,
            counts,
        }
    }

    pub fn count(&self, sdg: SdgId) -> u64 {
        self.counts[sdg.index()]
    }

    pub fn denominator(&self, d: Denominator) -> u64 {
        match d {
            Denominator::All => self.total,
            Denominator::Classified => self.classified,
        }
    }

    pub fn pct(&self, sdg: SdgId, d: Denominator) -> Percent {
        Percent::of_or_zero(self.count(sdg), self.denominator(d))
    }

    /// Share of publications with at least one SDG.
    pub fn classified_pct(&self) -> Percent {
        Percent::of_or_zero(self.classified, self.total)
    }
}

pub fn prevalence(assignments: &[SdgAssignment]) -> Prevalence {
    let mut counts = [0u64; N_SDGS];
    let mut classified = 0;
    for a in assignments {
        if !a.sdgs.is_empty() {
            classified += 1;
        }
        for id in a.sdgs.iter() {
            counts[id.index()] += 1;
        }
    }
    Prevalence {
        total: assignments.len() as u64,
        classified,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinentTables {
    /// counts[sdg][continent] by first-author continent.
    pub counts: [[u64; 5]; N_SDGS],
    /// Each non-empty row scaled to exactly 100 by largest remainder.
    pub row_pct: [[Percent; 5]; N_SDGS],
    /// Each non-empty column scaled to exactly 100 by largest remainder.
    pub col_pct: [[Percent; 5]; N_SDGS],
    /// Publications without any affiliation, left out of the tables.
    pub excluded_no_affiliation: u64,
}

pub fn continent_tables(assignments: &[SdgAssignment], corpus: &Corpus) -> ContinentTables {
    let mut counts = [[0u64; 5]; N_SDGS];
    let mut excluded = 0;
    for a in assignments {
        let Some(first) = corpus.record(a.doc).first_affiliation() else {
            excluded += 1;
            continue;
        };
        let c = first.continent.index();
        for id in a.sdgs.iter() {
            counts[id.index()][c] += 1;
        }
    }
    let zero = Percent::of_or_zero(0, 1);
    let mut row_pct = [[zero; 5]; N_SDGS];
    let mut col_pct = [[zero; 5]; N_SDGS];
    for (s, row) in counts.iter().enumerate() {
        row_pct[s].copy_from_slice(&Percent::apportion(row));
    }
    for c in 0..5 {
        let column: Vec<u64> = counts.iter().map(|row| row[c]).collect();
        for (s, p) in Percent::apportion(&column).into_iter().enumerate() {
            col_pct[s][c] = p;
        }
    }
    ContinentTables {
        counts,
        row_pct,
        col_pct,
        excluded_no_affiliation: excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstitutionsPerSdg {
    pub total_institutions: u64,
    pub counts: [u64; N_SDGS],
}

impl InstitutionsPerSdg {
    pub fn from_counts(total_institutions: u64, counts: [u64; N_SDGS]) -> Self {
        InstitutionsPerSdg {
            total_institutions,
            counts,
        }
    }

    pub fn pct(&self, sdg: SdgId) -> Percent {
        Percent::of_or_zero(self.counts[sdg.index()], self.total_institutions)
    }
}

/// Distinct organizations (of the accepted types) per SDG, over the
/// publications in `assignments`.
pub fn institutions_per_sdg(
    assignments: &[SdgAssignment],
    corpus: &Corpus,
    org_types: &OrgFilter,
) -> InstitutionsPerSdg {
    let mut all: BTreeSet<&str> = BTreeSet::new();
    let mut per: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); N_SDGS];
    for a in assignments {
        for aff in &corpus.record(a.doc).affiliations {
            if !org_types.accepts_type(aff.org_type) {
                continue;
            }
            all.insert(&aff.org_id);
            for id in a.sdgs.iter() {
                per[id.index()].insert(&aff.org_id);
            }
        }
    }
    let mut counts = [0u64; N_SDGS];
    for (c, set) in counts.iter_mut().zip(&per) {
        *c = set.len() as u64;
    }
    InstitutionsPerSdg {
        total_institutions: all.len() as u64,
        counts,
    }
}

/// `pub_id,sdgs` rows sorted by pub_id, SDG ids joined by `;`.
pub fn write_assignments_csv(assignments: &[SdgAssignment], corpus: &Corpus, out: impl Write) -> io::Result<()> {
    let mut rows: Vec<(&str, SdgSet)> = assignments
        .iter()
        .map(|a| (corpus.record(a.doc).pub_id.as_str(), a.sdgs))
        .collect();
    rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pub_id", "sdgs"])?;
    for (id, sdgs) in rows {
        w.write_record([id, &sdgs.to_string()])?;
    }
    w.flush()
}

/// Reads an assignment dump back, resolving ids against `corpus`.
pub fn read_assignments_csv(reader: impl Read, corpus: &Corpus) -> Result<Vec<SdgAssignment>, String> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| e.to_string())?;
        let id = row.get(0).unwrap_or("");
        let doc = corpus
            .lookup(id)
            .ok_or_else(|| format!("assignment for unknown pub_id `{id}`"))?;
        let mut sdgs = SdgSet::EMPTY;
        for part in row.get(1).unwrap_or("").split(';').filter(|s| !s.is_empty()) {
            let sdg = part
                .parse::<u8>()
                .ok()
                .and_then(SdgId::new)
                .ok_or_else(|| format!("bad SDG id `{part}` for `{id}`"))?;
            sdgs.insert(sdg);
        }
        out.push(SdgAssignment { doc, sdgs });
    }
    out.sort_by_key(|a| a.doc);
    Ok(out)
}

pub fn write_prevalence_csv(p: &Prevalence, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sdg".to_owned(),
        "count".to_owned(),
        format!("pct_of_classified_n{}", p.classified),
        format!("pct_of_all_n{}", p.total),
    ])?;
    for id in SdgId::all() {
        w.write_record([
            id.to_string(),
            p.count(id).to_string(),
            p.pct(id, Denominator::Classified).to_string(),
            p.pct(id, Denominator::All).to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_continent_csv<T: ToString>(table: &[[T; 5]; N_SDGS], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sdg".to_owned()];
    header.extend(Continent::ALL.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for id in SdgId::all() {
        let mut row = vec![id.to_string()];
        row.extend(table[id.index()].iter().map(ToString::to_string));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_institutions_csv(t: &InstitutionsPerSdg, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sdg".to_owned(),
        "institutions".to_owned(),
        format!("pct_of_n{}", t.total_institutions),
    ])?;
    for id in SdgId::all() {
        w.write_record([id.to_string(), t.counts[id.index()].to_string(), t.pct(id).to_string()])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Affiliation, OrgType};

    fn sdg(i: u8) -> SdgId {
        SdgId::new(i).unwrap()
    }

    fn glossary(rows: &str) -> Result<SdgGlossary, GlossaryError> {
        read_glossary(format!("term,sdg_id\n{rows}").as_bytes())
    }

    fn kw(id: &str, keywords: &[&str]) -> PublicationRecord {
        let mut r = PublicationRecord::new(id, 2010);
        r.author_keywords = keywords.iter().map(|s| s.to_string()).collect();
        r
    }

    #[test]
    fn glossary_lookup() {
        let g = glossary("poverty,1\nwater,6\nwater,14\nWater ,6\n").unwrap();
        assert_eq!(g.lookup("poverty"), [sdg(1)].into_iter().collect());
        assert_eq!(g.lookup("water"), [sdg(6), sdg(14)].into_iter().collect());
        assert_eq!(g.term_count(), 2);
    }

    #[test]
    fn glossary_errors() {
        assert!(matches!(
            glossary("x,18\n"),
            Err(GlossaryError::InvalidSdg { line: 2, .. })
        ));
        assert!(matches!(
            glossary("ok,3\nx,0\n"),
            Err(GlossaryError::InvalidSdg { line: 3, .. })
        ));
        assert!(matches!(glossary(""), Err(GlossaryError::Empty)));
        assert!(matches!(read_glossary("".as_bytes()), Err(GlossaryError::Header)));
        assert!(matches!(glossary("...,3\n"), Err(GlossaryError::EmptyTerm { line: 2 })));
        assert!(matches!(
            load_glossary(Path::new("/no/such/glossary.csv")),
            Err(GlossaryError::Io { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let g = glossary("poverty,1\nsanitation,6\n").unwrap();
        let opts = ClassifyOptions::default();
        let r = kw("a", &["Poverty", "sanitation"]);
        assert_eq!(classify(&r, &g, opts).to_string(), "1;6");
        assert!(classify(&kw("b", &["astronomy"]), &g, opts).is_empty());
        let r = kw("c", &["poverty", "poverty alleviation"]);
        assert_eq!(classify(&r, &g, opts).to_string(), "1");
    }

    #[test]
    fn text_scan_is_opt_in() {
        let g = glossary("clean water,6\n").unwrap();
        let mut r = kw("a", &[]);
        r.abstract_text = "Access to clean-water in rural areas".into();
        assert!(classify(&r, &g, ClassifyOptions::default()).is_empty());
        assert_eq!(classify(&r, &g, ClassifyOptions { scan_text: true }).to_string(), "6");
    }

    #[test]
    fn prevalence_counts_and_denominators() {
        let p = Prevalence::from_counts(25_299, 20_749, [0; N_SDGS]);
        assert_eq!(p.classified_pct().to_string(), "82.02");
        let single = prevalence(&[SdgAssignment {
            doc: DocId(0),
            sdgs: [sdg(3)].into_iter().collect(),
        }]);
        assert_eq!(single.pct(sdg(3), Denominator::Classified).to_string(), "100.00");
        assert_eq!(single.pct(sdg(4), Denominator::All).to_string(), "0.00");
        let mixed = prevalence(&[
            SdgAssignment {
                doc: DocId(0),
                sdgs: [sdg(3), sdg(5)].into_iter().collect(),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: SdgSet::EMPTY,
            },
            SdgAssignment {
                doc: DocId(2),
                sdgs: [sdg(3)].into_iter().collect(),
            },
        ]);
        assert_eq!(
            (mixed.total, mixed.classified, mixed.count(sdg(3)), mixed.count(sdg(5))),
            (3, 2, 2, 1)
        );
        assert_eq!(mixed.pct(sdg(5), Denominator::Classified).to_string(), "50.00");
        assert_eq!(mixed.pct(sdg(5), Denominator::All).to_string(), "33.33");
    }

    fn affiliated(id: &str, country: Option<&str>, org: &str, t: OrgType) -> PublicationRecord {
        let mut r = PublicationRecord::new(id, 2010);
        if let Some(c) = country {
            r.affiliations.push(Affiliation::new(org, org, t, c).unwrap());
        }
        r
    }

    #[test]
    fn continent_tables_use_first_author() {
        let mut a = affiliated("a", Some("UG"), "o1", OrgType::Hei);
        a.affiliations
            .push(Affiliation::new("o2", "o2", OrgType::Hei, "US").unwrap());
        let corpus = Corpus::from_records([
            a,
            affiliated("b", Some("US"), "o2", OrgType::Hei),
            affiliated("c", None, "", OrgType::Hei),
        ]);
        let set: SdgSet = [sdg(3)].into_iter().collect();
        let assignments: Vec<_> = corpus.docs().map(|doc| SdgAssignment { doc, sdgs: set }).collect();
        let t = continent_tables(&assignments, &corpus);
        assert_eq!(t.excluded_no_affiliation, 1);
        assert_eq!(t.counts[2][Continent::Africa.index()], 1);
        assert_eq!(t.counts[2][Continent::America.index()], 1);
        assert_eq!(t.row_pct[2][Continent::Africa.index()].to_string(), "50.00");
        assert_eq!(t.col_pct[2][Continent::America.index()].to_string(), "100.00");
        assert_eq!(t.row_pct[0][0].to_string(), "0.00");
    }

    #[test]
    fn institutions_per_sdg_counts_distinct_orgs() {
        let p = InstitutionsPerSdg::from_counts(1_968, {
            let mut c = [0; N_SDGS];
            c[2] = 1_670;
            c
        });
        assert_eq!(p.pct(sdg(3)).to_string(), "84.86");
        let corpus = Corpus::from_records([
            affiliated("a", Some("GB"), "u1", OrgType::Hei),
            affiliated("b", Some("GB"), "u1", OrgType::Hei),
            affiliated("c", Some("GB"), "g1", OrgType::Gov),
            affiliated("d", Some("GB"), "r1", OrgType::Rc),
        ]);
        let three: SdgSet = [sdg(3)].into_iter().collect();
        let assignments = vec![
            SdgAssignment {
                doc: DocId(0),
                sdgs: three,
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: three,
            },
            SdgAssignment {
                doc: DocId(2),
                sdgs: three,
            },
            SdgAssignment {
                doc: DocId(3),
                sdgs: SdgSet::EMPTY,
            },
        ];
        let t = institutions_per_sdg(&assignments, &corpus, &OrgFilter::hei_rc());
        assert_eq!(t.total_institutions, 2);
        assert_eq!(t.counts[2], 1);
        assert_eq!(t.counts[0], 0);
        assert_eq!(t.pct(sdg(3)).to_string(), "50.00");
    }

    #[test]
    fn assignment_dump_round_trip() {
        let corpus = Corpus::from_records([kw("b", &[]), kw("a", &[])]);
        let assignments = vec![
            SdgAssignment {
                doc: DocId(0),
                sdgs: [sdg(1), sdg(17)].into_iter().collect(),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: SdgSet::EMPTY,
            },
        ];
        let mut out = Vec::new();
        write_assignments_csv(&assignments, &corpus, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "pub_id,sdgs\na,\nb,1;17\n");
        assert_eq!(read_assignments_csv(out.as_slice(), &corpus).unwrap(), assignments);
    }

    #[test]
    fn sdg_id_bounds() {
        assert!(SdgId::new(0).is_none());
        assert!(SdgId::new(18).is_none());
        assert_eq!(SdgId::all().count(), 17);
    }
}
