//! Publication records, corpus loading and the directed citation graph.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1900;
pub const MAX_YEAR: i32 = 2100;

const COUNTRY_TABLE: &str = include_str!("../data/country_continent.csv");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("CSV corpus {path}: {message}")]
    CsvHeader { path: PathBuf, message: String },
    #[error("invalid year range [{lo}, {hi}]: lower bound exceeds upper bound")]
    InvalidYearRange { lo: i32, hi: i32 },
    #[error("unknown corpus format `{0}` (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrgType {
    #[serde(rename = "HEI")]
    Hei,
    #[serde(rename = "RC")]
    Rc,
    #[serde(rename = "GOV")]
    Gov,
    #[serde(rename = "HOSPITAL")]
    Hospital,
    #[serde(rename = "NGO")]
    Ngo,
    #[serde(rename = "COMPANY")]
    Company,
    #[serde(rename = "OTHER")]
    Other,
}

impl OrgType {
    pub const ALL: [OrgType; 7] = [
        OrgType::Hei,
        OrgType::Rc,
        OrgType::Gov,
        OrgType::Hospital,
        OrgType::Ngo,
        OrgType::Company,
        OrgType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OrgType::Hei => "HEI",
            OrgType::Rc => "RC",
            OrgType::Gov => "GOV",
            OrgType::Hospital => "HOSPITAL",
            OrgType::Ngo => "NGO",
            OrgType::Company => "COMPANY",
            OrgType::Other => "OTHER",
        }
    }
}

impl fmt::Display for OrgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrgType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        OrgType::ALL
            .into_iter()
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| format!("unknown org_type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continent {
    Africa,
    America,
    Asia,
    Europe,
    Oceania,
}

impl Continent {
    pub const ALL: [Continent; 5] = [
        Continent::Africa,
        Continent::America,
        Continent::Asia,
        Continent::Europe,
        Continent::Oceania,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Continent::Africa => "Africa",
            Continent::America => "America",
            Continent::Asia => "Asia",
            Continent::Europe => "Europe",
            Continent::Oceania => "Oceania",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Continent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Continent::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown continent `{s}`"))
    }
}

fn country_table() -> &'static HashMap<String, Continent> {
    static TABLE: OnceLock<HashMap<String, Continent>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(COUNTRY_TABLE.as_bytes());
        reader
            .records()
            .map(|row| {
                let row = row.expect("bundled country table is valid CSV");
                let continent = row[1].parse().expect("bundled country table continent");
                (row[0].to_owned(), continent)
            })
            .collect()
    })
}

/// Looks up the continent of an ISO 3166-1 alpha-2 code in the bundled table.
pub fn continent_of(country: &str) -> Option<Continent> {
    country_table().get(&country.trim().to_ascii_uppercase()).copied()
}

/// Every country code in the bundled table, sorted.
pub fn known_countries() -> Vec<&'static str> {
    let mut codes: Vec<&'static str> = country_table().keys().map(String::as_str).collect();
    codes.sort_unstable();
    codes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affiliation {
    pub org_id: String,
    pub org_name: String,
    pub org_type: OrgType,
    /// Uppercase ISO 3166-1 alpha-2 code.
    pub country: String,
    pub continent: Continent,
}

impl Affiliation {
    /// Builds an affiliation, resolving the continent from the country code.
    pub fn new(
        org_id: impl Into<String>,
        org_name: impl Into<String>,
        org_type: OrgType,
        country: &str,
    ) -> Result<Self, String> {
        let continent = continent_of(country).ok_or_else(|| format!("unknown country code `{country}`"))?;
        Ok(Affiliation {
            org_id: org_id.into(),
            org_name: org_name.into(),
            org_type,
            country: country.trim().to_ascii_uppercase(),
            continent,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    pub title: String,
    pub abstract_text: String,
    pub author_keywords: Vec<String>,
    pub index_keywords: Vec<String>,
    /// Referenced pub_ids; may point outside the corpus.
    pub references: Vec<String>,
    /// Element 0 is the first author's affiliation.
    pub affiliations: Vec<Affiliation>,
}

impl PublicationRecord {
    /// A record with only an id and a year; handy for building fixtures.
    pub fn new(pub_id: impl Into<String>, year: i32) -> Self {
        PublicationRecord {
            pub_id: pub_id.into(),
            year,
            title: String::new(),
            abstract_text: String::new(),
            author_keywords: Vec::new(),
            index_keywords: Vec::new(),
            references: Vec::new(),
            affiliations: Vec::new(),
        }
    }

    pub fn first_affiliation(&self) -> Option<&Affiliation> {
        self.affiliations.first()
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.author_keywords
            .iter()
            .chain(self.index_keywords.iter())
            .map(String::as_str)
    }
}

/// Index of a record inside a [`Corpus`], in load order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocId(pub u32);

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A set of corpus records. Iterates in load order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PubIdSet(BTreeSet<DocId>);

impl PubIdSet {
    pub fn new() -> Self {
        PubIdSet(BTreeSet::new())
    }

    pub fn insert(&mut self, doc: DocId) -> bool {
        self.0.insert(doc)
    }

    pub fn contains(&self, doc: DocId) -> bool {
        self.0.contains(&doc)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = DocId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &PubIdSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersection(&self, other: &PubIdSet) -> PubIdSet {
        PubIdSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn union(&self, other: &PubIdSet) -> PubIdSet {
        PubIdSet(self.0.union(&other.0).copied().collect())
    }

    /// Record ids sorted lexicographically, for stable output.
    pub fn sorted_ids<'c>(&self, corpus: &'c Corpus) -> Vec<&'c str> {
        let mut ids: Vec<&str> = self.iter().map(|d| corpus.record(d).pub_id.as_str()).collect();
        ids.sort_unstable();
        ids
    }
}

impl FromIterator<DocId> for PubIdSet {
    fn from_iter<I: IntoIterator<Item = DocId>>(iter: I) -> Self {
        PubIdSet(iter.into_iter().collect())
    }
}

impl Extend<DocId> for PubIdSet {
    fn extend<I: IntoIterator<Item = DocId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl<'a> IntoIterator for &'a PubIdSet {
    type Item = DocId;
    type IntoIter = std::iter::Copied<std::collections::btree_set::Iter<'a, DocId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<PublicationRecord>,
    index: HashMap<String, DocId>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a record, returning `None` if its pub_id is already present.
    pub fn push(&mut self, record: PublicationRecord) -> Option<DocId> {
        if self.index.contains_key(&record.pub_id) {
            return None;
        }
        let doc = DocId(self.records.len() as u32);
        self.index.insert(record.pub_id.clone(), doc);
        self.records.push(record);
        Some(doc)
    }

    /// Builds a corpus from records, dropping later duplicates.
    pub fn from_records(records: impl IntoIterator<Item = PublicationRecord>) -> Self {
        let mut corpus = Corpus::new();
        for r in records {
            corpus.push(r);
        }
        corpus
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, doc: DocId) -> &PublicationRecord {
        &self.records[doc.index()]
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn lookup(&self, pub_id: &str) -> Option<DocId> {
        self.index.get(pub_id).copied()
    }

    pub fn docs(&self) -> impl ExactSizeIterator<Item = DocId> {
        (0..self.records.len() as u32).map(DocId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DocId, &PublicationRecord)> {
        self.records.iter().enumerate().map(|(i, r)| (DocId(i as u32), r))
    }

    pub fn all(&self) -> PubIdSet {
        self.docs().collect()
    }

    /// Resolves a list of pub_ids; unknown ids are returned separately.
    pub fn resolve<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> (PubIdSet, Vec<String>) {
        let mut set = PubIdSet::new();
        let mut missing = Vec::new();
        for id in ids {
            match self.lookup(id) {
                Some(d) => {
                    set.insert(d);
                }
                None => missing.push(id.to_owned()),
            }
        }
        (set, missing)
    }
}

// ---------------------------------------------------------------------------
// Loading

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_owned())),
        }
    }
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Some(CorpusFormat::Jsonl),
            "csv" => Some(CorpusFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SkipReason {
    Malformed(String),
    MissingField(String),
    YearOutOfRange(i64),
    InvalidAffiliation(String),
    UnknownCountry(String),
    DuplicateId,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Malformed(m) => write!(f, "malformed record: {m}"),
            SkipReason::MissingField(field) => write!(f, "missing required field `{field}`"),
            SkipReason::YearOutOfRange(y) => {
                write!(f, "year {y} outside [{MIN_YEAR}, {MAX_YEAR}]")
            }
            SkipReason::InvalidAffiliation(m) => write!(f, "invalid affiliation: {m}"),
            SkipReason::UnknownCountry(c) => write!(f, "unknown country code `{c}`"),
            SkipReason::DuplicateId => f.write_str("duplicate pub_id"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRecord {
    /// 1-based line number in the input file.
    pub line: u64,
    pub pub_id: Option<String>,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub skipped: Vec<SkippedRecord>,
}

impl LoadReport {
    pub fn duplicates(&self) -> impl Iterator<Item = &SkippedRecord> {
        self.skipped.iter().filter(|s| s.reason == SkipReason::DuplicateId)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct WireAffiliation {
    #[serde(default)]
    org_id: Option<String>,
    #[serde(default)]
    org_name: String,
    #[serde(default)]
    org_type: Option<String>,
    #[serde(default)]
    country: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct WireRecord {
    #[serde(default)]
    pub_id: Option<String>,
    #[serde(default)]
    year: Option<i64>,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default)]
    author_keywords: Vec<String>,
    #[serde(default)]
    index_keywords: Vec<String>,
    #[serde(default)]
    references: Vec<String>,
    #[serde(default)]
    affiliations: Vec<WireAffiliation>,
}

impl WireRecord {
    fn from_record(r: &PublicationRecord) -> Self {
        WireRecord {
            pub_id: Some(r.pub_id.clone()),
            year: Some(r.year as i64),
            title: r.title.clone(),
            abstract_text: r.abstract_text.clone(),
            author_keywords: r.author_keywords.clone(),
            index_keywords: r.index_keywords.clone(),
            references: r.references.clone(),
            affiliations: r
                .affiliations
                .iter()
                .map(|a| WireAffiliation {
                    org_id: Some(a.org_id.clone()),
                    org_name: a.org_name.clone(),
                    org_type: Some(a.org_type.as_str().to_owned()),
                    country: Some(a.country.clone()),
                })
                .collect(),
        }
    }

    fn into_record(self) -> Result<PublicationRecord, (Option<String>, SkipReason)> {
        let pub_id = match self.pub_id.map(|s| s.trim().to_owned()) {
            Some(id) if !id.is_empty() => id,
            _ => return Err((None, SkipReason::MissingField("pub_id".into()))),
        };
        let fail = |reason| Err((Some(pub_id.clone()), reason));
        let year = match self.year {
            Some(y) if (MIN_YEAR as i64..=MAX_YEAR as i64).contains(&y) => y as i32,
            Some(y) => return fail(SkipReason::YearOutOfRange(y)),
            None => return fail(SkipReason::MissingField("year".into())),
        };
        let mut affiliations = Vec::with_capacity(self.affiliations.len());
        for a in self.affiliations {
            let org_id = match a.org_id.map(|s| s.trim().to_owned()) {
                Some(id) if !id.is_empty() => id,
                _ => return fail(SkipReason::InvalidAffiliation("missing org_id".into())),
            };
            let org_type = match a.org_type.as_deref().map(OrgType::from_str) {
                Some(Ok(t)) => t,
                Some(Err(e)) => return fail(SkipReason::InvalidAffiliation(e)),
                None => return fail(SkipReason::InvalidAffiliation("missing org_type".into())),
            };
            let country = match a.country {
                Some(c) => c,
                None => return fail(SkipReason::InvalidAffiliation("missing country".into())),
            };
            match Affiliation::new(org_id, a.org_name, org_type, &country) {
                Ok(aff) => affiliations.push(aff),
                Err(_) => return fail(SkipReason::UnknownCountry(country)),
            }
        }
        let references = self
            .references
            .into_iter()
            .map(|r| r.trim().to_owned())
            .filter(|r| !r.is_empty())
            .collect();
        Ok(PublicationRecord {
            pub_id,
            year,
            title: self.title,
            abstract_text: self.abstract_text,
            author_keywords: self.author_keywords,
            index_keywords: self.index_keywords,
            references,
            affiliations,
        })
    }
}

fn io_error(path: &Path, source: io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Loads a corpus file. Bad records are skipped and listed in the report;
/// only an unreadable file (or a CSV without the expected header) is fatal.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(Corpus, LoadReport), CorpusError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file)).map_err(|e| io_error(path, e)),
        CorpusFormat::Csv => read_csv(file, path),
    }
}

pub fn read_jsonl(reader: impl BufRead) -> Result<(Corpus, LoadReport), io::Error> {
    let mut builder = CorpusBuilder::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<WireRecord>(&line)
            .map_err(|e| (None, SkipReason::Malformed(e.to_string())))
            .and_then(WireRecord::into_record);
        builder.accept(line_no, parsed);
    }
    Ok(builder.finish())
}

pub const CSV_COLUMNS: [&str; 8] = [
    "pub_id",
    "year",
    "title",
    "abstract",
    "author_keywords",
    "index_keywords",
    "references",
    "affiliations",
];

fn split_list(cell: &str) -> Vec<String> {
    cell.split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn parse_csv_affiliations(cell: &str) -> Result<Vec<WireAffiliation>, SkipReason> {
    split_list(cell)
        .into_iter()
        .map(|entry| {
            let parts: Vec<&str> = entry.split(';').collect();
            if parts.len() != 4 {
                return Err(SkipReason::InvalidAffiliation(format!(
                    "expected org_id;org_name;org_type;country, got `{entry}`"
                )));
            }
            Ok(WireAffiliation {
                org_id: Some(parts[0].to_owned()),
                org_name: parts[1].to_owned(),
                org_type: Some(parts[2].to_owned()),
                country: Some(parts[3].to_owned()),
            })
        })
        .collect()
}

fn read_csv(reader: impl Read, path: &Path) -> Result<(Corpus, LoadReport), CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CorpusError::CsvHeader {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let mut col = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.insert(h.trim().to_owned(), i);
    }
    for required in ["pub_id", "year"] {
        if !col.contains_key(required) {
            return Err(CorpusError::CsvHeader {
                path: path.to_owned(),
                message: format!("missing column `{required}`"),
            });
        }
    }
    let mut builder = CorpusBuilder::default();
    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(CorpusError::Io {
                        path: path.to_owned(),
                        source: io::Error::other(e.to_string()),
                    });
                }
                builder.accept(line, Err((None, SkipReason::Malformed(e.to_string()))));
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |name: &str| col.get(name).and_then(|&i| row.get(i)).unwrap_or("");
        let parsed = (|| {
            let pub_id = Some(cell("pub_id").to_owned()).filter(|s| !s.trim().is_empty());
            let year_cell = cell("year").trim();
            let year = if year_cell.is_empty() {
                None
            } else {
                Some(
                    year_cell
                        .parse::<i64>()
                        .map_err(|_| (pub_id.clone(), SkipReason::Malformed(format!("bad year `{year_cell}`"))))?,
                )
            };
            let affiliations = parse_csv_affiliations(cell("affiliations")).map_err(|r| (pub_id.clone(), r))?;
            WireRecord {
                pub_id,
                year,
                title: cell("title").to_owned(),
                abstract_text: cell("abstract").to_owned(),
                author_keywords: split_list(cell("author_keywords")),
                index_keywords: split_list(cell("index_keywords")),
                references: split_list(cell("references")),
                affiliations,
            }
            .into_record()
        })();
        builder.accept(line, parsed);
    }
    Ok(builder.finish())
}

#[derive(Default)]
struct CorpusBuilder {
    corpus: Corpus,
    report: LoadReport,
}

impl CorpusBuilder {
    fn accept(&mut self, line: u64, parsed: Result<PublicationRecord, (Option<String>, SkipReason)>) {
        match parsed {
            Ok(record) => {
                let pub_id = record.pub_id.clone();
                if self.corpus.push(record).is_none() {
                    self.report.skipped.push(SkippedRecord {
                        line,
                        pub_id: Some(pub_id),
                        reason: SkipReason::DuplicateId,
                    });
                }
            }
            Err((pub_id, reason)) => self.report.skipped.push(SkippedRecord { line, pub_id, reason }),
        }
    }

    fn finish(mut self) -> (Corpus, LoadReport) {
        self.report.loaded = self.corpus.len();
        (self.corpus, self.report)
    }
}

/// Writes the corpus as JSONL in load order. Continents are not written;
/// they are re-derived from the country code on load.
pub fn write_jsonl(corpus: &Corpus, mut out: impl Write) -> Result<(), CorpusError> {
    for record in corpus.records() {
        serde_json::to_writer(&mut out, &WireRecord::from_record(record)).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the CSV variant. List cells are `|`-joined; affiliations are
/// `org_id;org_name;org_type;country`.
pub fn write_csv(corpus: &Corpus, out: impl Write) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| io::Error::other(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(to_io)?;
    for r in corpus.records() {
        let affs: Vec<String> = r
            .affiliations
            .iter()
            .map(|a| format!("{};{};{};{}", a.org_id, a.org_name, a.org_type, a.country))
            .collect();
        w.write_record([
            r.pub_id.as_str(),
            &r.year.to_string(),
            &r.title,
            &r.abstract_text,
            &r.author_keywords.join("|"),
            &r.index_keywords.join("|"),
            &r.references.join("|"),
            &affs.join("|"),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Filtering

/// Inclusive calendar-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct YearRange {
    lo: i32,
    hi: i32,
}

impl YearRange {
    pub fn new(lo: i32, hi: i32) -> Result<Self, CorpusError> {
        if lo > hi {
            return Err(CorpusError::InvalidYearRange { lo, hi });
        }
        Ok(YearRange { lo, hi })
    }

    pub fn lo(self) -> i32 {
        self.lo
    }

    pub fn hi(self) -> i32 {
        self.hi
    }

    pub fn contains(self, year: i32) -> bool {
        (self.lo..=self.hi).contains(&year)
    }

    pub fn years(self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }

    pub fn len(self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum OrgFilter {
    #[default]
    Any,
    Only(BTreeSet<OrgType>),
}

impl OrgFilter {
    pub fn only(types: impl IntoIterator<Item = OrgType>) -> Self {
        OrgFilter::Only(types.into_iter().collect())
    }

    pub fn hei_rc() -> Self {
        Self::only([OrgType::Hei, OrgType::Rc])
    }

    pub fn accepts(&self, record: &PublicationRecord) -> bool {
        match self {
            OrgFilter::Any => true,
            OrgFilter::Only(types) => record.affiliations.iter().any(|a| types.contains(&a.org_type)),
        }
    }

    pub fn accepts_type(&self, org_type: OrgType) -> bool {
        match self {
            OrgFilter::Any => true,
            OrgFilter::Only(types) => types.contains(&org_type),
        }
    }
}

/// Records with year in `years` and (for a restricted filter) at least one
/// affiliation of an accepted org type.
pub fn filter(corpus: &Corpus, years: YearRange, org_types: &OrgFilter) -> PubIdSet {
    corpus
        .iter()
        .filter(|(_, r)| years.contains(r.year) && org_types.accepts(r))
        .map(|(d, _)| d)
        .collect()
}

// ---------------------------------------------------------------------------
// Citation graph

/// Node of the citation graph. Ids below the corpus size are corpus records;
/// the rest are phantom targets referenced but absent from the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Default)]
pub struct CitationGraph {
    n_docs: u32,
    phantoms: Vec<String>,
    /// cited[doc] = distinct targets cited by doc, in reference order.
    cited: Vec<Vec<NodeId>>,
    /// citing[node] = docs citing node, ascending.
    citing: Vec<Vec<DocId>>,
    edge_count: usize,
}

impl CitationGraph {
    pub fn node_count(&self) -> usize {
        self.n_docs as usize + self.phantoms.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn phantom_count(&self) -> usize {
        self.phantoms.len()
    }

    pub fn is_phantom(&self, node: NodeId) -> bool {
        node.0 >= self.n_docs
    }

    pub fn doc(&self, node: NodeId) -> Option<DocId> {
        (node.0 < self.n_docs).then_some(DocId(node.0))
    }

    pub fn node_of(&self, doc: DocId) -> NodeId {
        NodeId(doc.0)
    }

    pub fn label<'a>(&'a self, node: NodeId, corpus: &'a Corpus) -> &'a str {
        match self.doc(node) {
            Some(d) => &corpus.record(d).pub_id,
            None => &self.phantoms[(node.0 - self.n_docs) as usize],
        }
    }

    /// Targets cited by `doc`.
    pub fn cited_by(&self, doc: DocId) -> &[NodeId] {
        &self.cited[doc.index()]
    }

    /// Records citing `node`.
    pub fn citing(&self, node: NodeId) -> &[DocId] {
        &self.citing[node.0 as usize]
    }

    /// All edges (citing, cited) in record order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.cited
            .iter()
            .enumerate()
            .flat_map(|(i, targets)| targets.iter().map(move |&t| (NodeId(i as u32), t)))
    }
}

/// One edge per (record, distinct reference); self-references dropped;
/// unknown targets become phantom nodes numbered in first-seen order.
pub fn build_citation_graph(corpus: &Corpus) -> CitationGraph {
    let n_docs = corpus.len() as u32;
    let mut phantoms: Vec<String> = Vec::new();
    let mut phantom_index: HashMap<&str, u32> = HashMap::new();
    let mut cited = Vec::with_capacity(corpus.len());
    let mut edge_count = 0;
    for (doc, record) in corpus.iter() {
        let mut seen: HashSet<&str> = HashSet::with_capacity(record.references.len());
        let mut targets = Vec::with_capacity(record.references.len());
        for reference in &record.references {
            if reference == &record.pub_id || !seen.insert(reference.as_str()) {
                continue;
            }
            let node = match corpus.lookup(reference) {
                Some(d) => NodeId(d.0),
                None => {
                    let next = n_docs + phantoms.len() as u32;
                    let idx = *phantom_index.entry(reference.as_str()).or_insert_with(|| {
                        phantoms.push(reference.clone());
                        next
                    });
                    NodeId(idx)
                }
            };
            debug_assert_ne!(node.0, doc.0);
            targets.push(node);
        }
        edge_count += targets.len();
        cited.push(targets);
    }
    let mut citing = vec![Vec::new(); n_docs as usize + phantoms.len()];
    for (doc, targets) in cited.iter().enumerate() {
        for t in targets {
            citing[t.0 as usize].push(DocId(doc as u32));
        }
    }
    CitationGraph {
        n_docs,
        phantoms,
        cited,
        citing,
        edge_count,
    }
}
