//! Topical delineation: a wildcard phrase query selects the core set, one or
//! more layers of direct citations expand it, and year/organization filters
//! produce the final analysis set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{filter, CitationGraph, Corpus, DocId, OrgFilter, PubIdSet, PublicationRecord, YearRange};
use crate::text;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryErrorKind {
    #[error("query is empty")]
    Empty,
    #[error("unbalanced quote")]
    UnbalancedQuote,
    #[error("empty phrase")]
    EmptyPhrase,
    #[error("wildcard `*` is only allowed at the end of the last word of a phrase")]
    InteriorWildcard,
    #[error("expected a quoted phrase")]
    ExpectedPhrase,
    #[error("expected OR between phrases")]
    ExpectedOr,
}

/// Parse failure with the byte offset in the query text where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query parse error at position {position}: {kind}")]
pub struct QueryError {
    pub position: usize,
    pub kind: QueryErrorKind,
}

fn qerr<T>(position: usize, kind: QueryErrorKind) -> Result<T, QueryError> {
    Err(QueryError { position, kind })
}

/// An ordered run of normalized words; the last word may carry a trailing
/// wildcard that matches any word starting with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhrasePattern {
    tokens: Vec<String>,
    wildcard: bool,
}

impl PhrasePattern {
    pub fn new(tokens: Vec<String>, wildcard: bool) -> Option<Self> {
        if tokens.is_empty() || tokens.iter().any(|t| t.is_empty()) {
            return None;
        }
        Some(PhrasePattern { tokens, wildcard })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn has_wildcard(&self) -> bool {
        self.wildcard
    }

    fn token_matches(&self, i: usize, word: &str) -> bool {
        let pat = &self.tokens[i];
        if self.wildcard && i + 1 == self.tokens.len() {
            word.starts_with(pat.as_str())
        } else {
            word == pat
        }
    }

    fn matches_at(&self, words: &[&str]) -> bool {
        words.iter().enumerate().all(|(i, w)| self.token_matches(i, w))
    }

    /// Contiguous phrase occurrence anywhere in `words`.
    pub fn matches_text(&self, words: &[&str]) -> bool {
        let n = self.tokens.len();
        words.len() >= n && words.windows(n).any(|w| self.matches_at(w))
    }

    /// Whole-keyword match: same number of words, each matching.
    pub fn matches_keyword(&self, words: &[&str]) -> bool {
        words.len() == self.tokens.len() && self.matches_at(words)
    }
}

impl fmt::Display for PhrasePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))?;
        if self.wildcard {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// Disjunction of phrase clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicQuery {
    clauses: Vec<PhrasePattern>,
}

impl TopicQuery {
    pub fn new(clauses: Vec<PhrasePattern>) -> Option<Self> {
        (!clauses.is_empty()).then_some(TopicQuery { clauses })
    }

    pub fn clauses(&self) -> &[PhrasePattern] {
        &self.clauses
    }

    pub fn matches(&self, text: &RecordText) -> bool {
        let title = text.title_words();
        let abstract_words = text.abstract_words();
        let keywords: Vec<Vec<&str>> = text.keywords.iter().map(|k| text::tokens(k).collect()).collect();
        self.clauses.iter().any(|c| {
            c.matches_text(&title) || c.matches_text(&abstract_words) || keywords.iter().any(|k| c.matches_keyword(k))
        })
    }
}

impl fmt::Display for TopicQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" OR ")?;
            }
            write!(f, "TS=\"{c}\"")?;
        }
        Ok(())
    }
}

/// Normalized searchable text of one record.
#[derive(Debug, Clone)]
pub struct RecordText {
    title: String,
    abstract_text: String,
    keywords: Vec<String>,
}

impl RecordText {
    pub fn new(record: &PublicationRecord) -> Self {
        RecordText {
            title: text::normalize(&record.title),
            abstract_text: text::normalize(&record.abstract_text),
            keywords: record
                .keywords()
                .map(text::normalize)
                .filter(|k| !k.is_empty())
                .collect(),
        }
    }

    fn title_words(&self) -> Vec<&str> {
        text::tokens(&self.title).collect()
    }

    fn abstract_words(&self) -> Vec<&str> {
        text::tokens(&self.abstract_text).collect()
    }
}

/// Parses `TS="phrase" OR TS="phrase*" ...`. The `TS=` field tag is optional,
/// and `OR`/`TS` are case-insensitive.
pub fn parse_query(input: &str) -> Result<TopicQuery, QueryError> {
    let bytes = input.as_bytes();
    let skip_ws = |mut i: usize| {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        i
    };
    let mut pos = skip_ws(0);
    if pos == bytes.len() {
        return qerr(0, QueryErrorKind::Empty);
    }
    let mut clauses = Vec::new();
    loop {
        // optional field tag
        if bytes.len() >= pos + 2 && bytes[pos..pos + 2].eq_ignore_ascii_case(b"TS") {
            let after = skip_ws(pos + 2);
            if after < bytes.len() && bytes[after] == b'=' {
                pos = skip_ws(after + 1);
            }
        }
        if pos >= bytes.len() || bytes[pos] != b'"' {
            return qerr(pos, QueryErrorKind::ExpectedPhrase);
        }
        let open = pos;
        let close = match input[open + 1..].find('"') {
            Some(rel) => open + 1 + rel,
            None => return qerr(open, QueryErrorKind::UnbalancedQuote),
        };
        clauses.push(parse_phrase(&input[open + 1..close], open + 1)?);
        pos = skip_ws(close + 1);
        if pos == bytes.len() {
            break;
        }
        let is_or = bytes.len() >= pos + 2
            && bytes[pos..pos + 2].eq_ignore_ascii_case(b"OR")
            && bytes
                .get(pos + 2)
                .is_some_and(|b| b.is_ascii_whitespace() || *b == b'"');
        if !is_or {
            if bytes[pos] == b'"' && input[pos + 1..].find('"').is_none() {
                return qerr(pos, QueryErrorKind::UnbalancedQuote);
            }
            return qerr(pos, QueryErrorKind::ExpectedOr);
        }
        pos = skip_ws(pos + 2);
    }
    Ok(TopicQuery { clauses })
}

fn parse_phrase(phrase: &str, offset: usize) -> Result<PhrasePattern, QueryError> {
    let raw: Vec<(usize, &str)> = phrase
        .split_whitespace()
        .map(|w| (w.as_ptr() as usize - phrase.as_ptr() as usize, w))
        .collect();
    if raw.is_empty() {
        return qerr(offset, QueryErrorKind::EmptyPhrase);
    }
    let mut tokens = Vec::new();
    let mut wildcard = false;
    for (k, &(start, word)) in raw.iter().enumerate() {
        if let Some(star) = word.find('*') {
            let trailing = star + 1 == word.len();
            if !trailing || k + 1 != raw.len() {
                return qerr(offset + start + star, QueryErrorKind::InteriorWildcard);
            }
            let body = text::normalize(&word[..star]);
            if body.is_empty() {
                return qerr(offset + start + star, QueryErrorKind::InteriorWildcard);
            }
            tokens.extend(text::tokens(&body).map(str::to_owned));
            wildcard = true;
        } else {
            tokens.extend(text::tokens(&text::normalize(word)).map(str::to_owned));
        }
    }
    if tokens.is_empty() {
        return qerr(offset, QueryErrorKind::EmptyPhrase);
    }
    Ok(PhrasePattern { tokens, wildcard })
}

/// True iff some clause matches the normalized title, abstract, or a whole keyword.
pub fn match_record(query: &TopicQuery, record: &PublicationRecord) -> bool {
    query.matches(&RecordText::new(record))
}

/// Records in `years` matched by `query`. Record-parallel; output order is
/// independent of the worker count.
pub fn select_core(corpus: &Corpus, query: &TopicQuery, years: YearRange) -> PubIdSet {
    let hits: Vec<DocId> = corpus
        .records()
        .par_iter()
        .enumerate()
        .filter(|(_, r)| years.contains(r.year) && match_record(query, r))
        .map(|(i, _)| DocId(i as u32))
        .collect();
    hits.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Core,
    CitedOnly,
    CitingOnly,
    Both,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Core => "core",
            Provenance::CitedOnly => "cited_only",
            Provenance::CitingOnly => "citing_only",
            Provenance::Both => "both",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetLabels {
    pub core: PubIdSet,
    pub expanded: PubIdSet,
    pub final_set: PubIdSet,
    pub provenance: BTreeMap<DocId, Provenance>,
    /// Distinct out-of-corpus ids cited by the traversed records.
    pub phantoms: usize,
}

impl DatasetLabels {
    pub fn provenance_of(&self, doc: DocId) -> Option<Provenance> {
        self.provenance.get(&doc).copied()
    }

    pub fn cited_count(&self) -> usize {
        self.provenance
            .values()
            .filter(|p| matches!(p, Provenance::CitedOnly | Provenance::Both))
            .count()
    }

    pub fn citing_count(&self) -> usize {
        self.provenance
            .values()
            .filter(|p| matches!(p, Provenance::CitingOnly | Provenance::Both))
            .count()
    }

    pub fn report(&self) -> DelineationReport {
        DelineationReport {
            schema_version: SCHEMA_VERSION,
            core: self.core.len(),
            cited: self.cited_count(),
            citing: self.citing_count(),
            expanded: self.expanded.len(),
            final_count: self.final_set.len(),
            phantoms: self.phantoms,
        }
    }
}

/// Cardinalities of each delineation step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelineationReport {
    pub schema_version: u32,
    pub core: usize,
    /// Non-core records cited by the traversed set (cited_only + both).
    pub cited: usize,
    /// Non-core records citing the traversed set (citing_only + both).
    pub citing: usize,
    pub expanded: usize,
    #[serde(rename = "final")]
    pub final_count: usize,
    pub phantoms: usize,
}

/// Adds every record cited by, or citing, the core set. With `layers > 1`
/// the records reached in the previous layer are expanded again; provenance
/// records the relation to the layer that first reached an id. Phantom
/// targets are counted but never join the expanded set.
pub fn expand_direct_citations(core: &PubIdSet, graph: &CitationGraph, layers: u32) -> DatasetLabels {
    let mut expanded = core.clone();
    let mut provenance: BTreeMap<DocId, Provenance> = core.iter().map(|d| (d, Provenance::Core)).collect();
    let mut phantoms = BTreeSet::new();
    let mut frontier = core.clone();
    for _ in 0..layers {
        let mut cited = BTreeSet::new();
        let mut citing = BTreeSet::new();
        for doc in frontier.iter() {
            for &target in graph.cited_by(doc) {
                match graph.doc(target) {
                    Some(t) if !expanded.contains(t) => {
                        cited.insert(t);
                    }
                    Some(_) => {}
                    None => {
                        phantoms.insert(target);
                    }
                }
            }
            for &source in graph.citing(graph.node_of(doc)) {
                if !expanded.contains(source) {
                    citing.insert(source);
                }
            }
        }
        let mut next = PubIdSet::new();
        for &d in cited.union(&citing) {
            let p = match (cited.contains(&d), citing.contains(&d)) {
                (true, true) => Provenance::Both,
                (true, false) => Provenance::CitedOnly,
                _ => Provenance::CitingOnly,
            };
            provenance.insert(d, p);
            next.insert(d);
        }
        if next.is_empty() {
            break;
        }
        expanded.extend(next.iter());
        frontier = next;
    }
    DatasetLabels {
        core: core.clone(),
        expanded,
        final_set: PubIdSet::new(),
        provenance,
        phantoms: phantoms.len(),
    }
}

/// final = expanded ∩ filter(corpus, years, org_types).
pub fn finalize(mut labels: DatasetLabels, corpus: &Corpus, years: YearRange, org_types: &OrgFilter) -> DatasetLabels {
    labels.final_set = labels.expanded.intersection(&filter(corpus, years, org_types));
    labels
}

/// `pub_id,provenance` rows for every expanded record, sorted by pub_id.
pub fn write_provenance_csv(labels: &DatasetLabels, corpus: &Corpus, out: impl Write) -> io::Result<()> {
    let mut rows: Vec<(&str, Provenance)> = labels
        .provenance
        .iter()
        .map(|(&d, &p)| (corpus.record(d).pub_id.as_str(), p))
        .collect();
    rows.sort_unstable();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pub_id", "provenance"])?;
    for (id, p) in rows {
        w.write_record([id, p.as_str()])?;
    }
    w.flush()
}
