//! Production and specialization indicators: yearly series, growth and CAGR,
//! the Activity Index, and actor tables over period blocks.
//!
//! The Activity Index is the ratio of an actor's share of the topical output
//! to its share of the whole database over the same period:
//!
//! ```text
//! AI = (actor_topic / topic_total) / (actor_all / all_total)
//! ```
//!
//! Parity is 1. Reports multiply by a display factor (100 by default).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, PubIdSet, YearRange};
use crate::numfmt::{self, Percent};

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("growth is undefined: start year {year} has zero output")]
    ZeroStart { year: i32 },
    #[error("end year {end} must be after start year {start}")]
    BadInterval { start: i32, end: i32 },
    #[error("invalid activity index input: {0}")]
    ActivityInput(String),
    #[error("block length must be at least 1")]
    BlockLength,
}

/// Publications per year. With `years`, every year of the range is present
/// (zero-filled) and members outside it are ignored.
pub fn yearly_counts(set: &PubIdSet, corpus: &Corpus, years: Option<YearRange>) -> BTreeMap<i32, u64> {
    let mut counts: BTreeMap<i32, u64> = years.map(|r| r.years().map(|y| (y, 0)).collect()).unwrap_or_default();
    for doc in set {
        let year = corpus.record(doc).year;
        if years.is_none_or(|r| r.contains(year)) {
            *counts.entry(year).or_default() += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    pub growth_pct: f64,
    pub cagr_pct: f64,
}

/// Overall growth and compound annual growth between two counts separated
/// by `intervals` years.
pub fn growth_between(c_start: f64, c_end: f64, intervals: u32) -> Result<Growth, IndicatorError> {
    if intervals == 0 {
        return Err(IndicatorError::BadInterval { start: 0, end: 0 });
    }
    if c_start <= 0.0 {
        return Err(IndicatorError::ZeroStart { year: 0 });
    }
    let ratio = c_end / c_start;
    Ok(Growth {
        growth_pct: 100.0 * (c_end - c_start) / c_start,
        cagr_pct: 100.0 * (ratio.powf(1.0 / intervals as f64) - 1.0),
    })
}

/// Growth from `start_year` to `end_year` of a yearly series; missing years
/// count as zero.
pub fn growth_and_cagr(series: &BTreeMap<i32, u64>, start_year: i32, end_year: i32) -> Result<Growth, IndicatorError> {
    if end_year <= start_year {
        return Err(IndicatorError::BadInterval {
            start: start_year,
            end: end_year,
        });
    }
    let c_start = series.get(&start_year).copied().unwrap_or(0);
    if c_start == 0 {
        return Err(IndicatorError::ZeroStart { year: start_year });
    }
    let c_end = series.get(&end_year).copied().unwrap_or(0);
    growth_between(c_start as f64, c_end as f64, (end_year - start_year) as u32)
}

/// The four counts entering the Activity Index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityIndexInput {
    actor_topic_count: u64,
    topic_total: u64,
    actor_all_count: u64,
    all_total: u64,
}

impl ActivityIndexInput {
    pub fn new(
        actor_topic_count: u64,
        topic_total: u64,
        actor_all_count: u64,
        all_total: u64,
    ) -> Result<Self, IndicatorError> {
        let bad = |m: &str| Err(IndicatorError::ActivityInput(m.to_owned()));
        if topic_total == 0 || actor_all_count == 0 || all_total == 0 {
            return bad("topic_total, actor_all_count and all_total must be positive");
        }
        if actor_topic_count > actor_all_count {
            return bad("actor topic output exceeds actor total output");
        }
        if actor_topic_count > topic_total {
            return bad("actor topic output exceeds topic total");
        }
        if actor_all_count > all_total {
            return bad("actor total output exceeds database total");
        }
        Ok(ActivityIndexInput {
            actor_topic_count,
            topic_total,
            actor_all_count,
            all_total,
        })
    }

    pub fn actor_topic_count(&self) -> u64 {
        self.actor_topic_count
    }

    pub fn topic_total(&self) -> u64 {
        self.topic_total
    }

    pub fn actor_all_count(&self) -> u64 {
        self.actor_all_count
    }

    pub fn all_total(&self) -> u64 {
        self.all_total
    }
}

/// Activity Index as a pure ratio (parity = 1).
///
/// Evaluated as `(actor_topic * all_total) / (topic_total * actor_all)` with
/// exact integer products, so parity inputs give exactly 1.0 and the only
/// rounding is in the final conversion and division.
pub fn activity_index(input: &ActivityIndexInput) -> f64 {
    let num = input.actor_topic_count as u128 * input.all_total as u128;
    let den = input.topic_total as u128 * input.actor_all_count as u128;
    if num == den {
        return 1.0;
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    Institution,
    Country,
    Continent,
}

impl ActorKind {
    pub const ALL: [ActorKind; 3] = [ActorKind::Institution, ActorKind::Country, ActorKind::Continent];

    pub fn as_str(self) -> &'static str {
        match self {
            ActorKind::Institution => "institution",
            ActorKind::Country => "country",
            ActorKind::Continent => "continent",
        }
    }
}

impl fmt::Display for ActorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActorKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown actor kind `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum TotalsError {
    #[error("external totals: {0}")]
    Io(#[from] io::Error),
    #[error("external totals line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Whole-database output per actor plus the whole-database total; the
/// denominators of the Activity Index that the corpus cannot provide.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalTotals {
    pub all_total: u64,
    counts: HashMap<(ActorKind, String), u64>,
}

impl ExternalTotals {
    pub fn new(all_total: u64) -> Self {
        ExternalTotals {
            all_total,
            counts: HashMap::new(),
        }
    }

    pub fn insert(&mut self, kind: ActorKind, actor_id: impl Into<String>, all_count: u64) {
        self.counts.insert((kind, actor_id.into()), all_count);
    }

    pub fn get(&self, kind: ActorKind, actor_id: &str) -> Option<u64> {
        self.counts.get(&(kind, actor_id.to_owned())).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Parses the totals file:
    ///
    /// ```text
    /// all_total,30549291
    /// actor_kind,actor_id,all_count
    /// institution,org-lshtm,41234
    /// country,GB,1893455
    /// ```
    pub fn read(reader: impl BufRead) -> Result<Self, TotalsError> {
        let mut lines = reader.lines().enumerate();
        let perr = |line: usize, message: String| TotalsError::Parse { line, message };
        let (_, first) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        let first = first?;
        let all_total = match first.trim().split_once(',') {
            Some(("all_total", n)) => n
                .trim()
                .parse::<u64>()
                .map_err(|_| perr(1, format!("bad all_total `{n}`")))?,
            _ => return Err(perr(1, "expected `all_total,<count>`".into())),
        };
        if all_total == 0 {
            return Err(perr(1, "all_total must be positive".into()));
        }
        let (_, header) = lines.next().ok_or_else(|| perr(2, "missing column header".into()))?;
        let header = header?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["actor_kind", "actor_id", "all_count"] {
            return Err(perr(
                2,
                format!("expected header actor_kind,actor_id,all_count, got `{header}`"),
            ));
        }
        let mut totals = ExternalTotals::new(all_total);
        for (i, line) in lines {
            let line = line?;
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(perr(line_no, "expected 3 columns".into()));
            }
            let kind = parts[0].parse().map_err(|e| perr(line_no, e))?;
            let count = parts[2]
                .parse::<u64>()
                .map_err(|_| perr(line_no, format!("bad all_count `{}`", parts[2])))?;
            totals.insert(kind, parts[1], count);
        }
        Ok(totals)
    }

    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "all_total,{}", self.all_total)?;
        writeln!(out, "actor_kind,actor_id,all_count")?;
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort();
        for ((kind, id), count) in rows {
            writeln!(out, "{kind},{id},{count}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActorRow {
    pub actor_id: String,
    pub actor_name: String,
    pub actor_kind: ActorKind,
    pub period: YearRange,
    pub topic_count: u64,
    /// Publications of the set inside the period.
    pub period_total: u64,
    /// Pure ratio; `None` when the external total is missing or inconsistent.
    pub activity_index: Option<f64>,
}

impl ActorRow {
    pub fn topic_share(&self) -> Percent {
        Percent::of_or_zero(self.topic_count, self.period_total)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActorTable {
    /// Every actor, sorted by count descending then id.
    pub raw: Vec<ActorRow>,
    /// Rows with `topic_count >= min_count`.
    pub ranked: Vec<ActorRow>,
}

/// Full-counting actor table: each publication counts once for every
/// distinct actor among its affiliations.
pub fn actor_table(
    set: &PubIdSet,
    corpus: &Corpus,
    kind: ActorKind,
    period: YearRange,
    totals: Option<&ExternalTotals>,
    min_count: u64,
) -> ActorTable {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut names: HashMap<String, String> = HashMap::new();
    let mut period_total = 0u64;
    for doc in set {
        let record = corpus.record(doc);
        if !period.contains(record.year) {
            continue;
        }
        period_total += 1;
        let mut actors: BTreeSet<&str> = BTreeSet::new();
        for a in &record.affiliations {
            let id = match kind {
                ActorKind::Institution => {
                    names.entry(a.org_id.clone()).or_insert_with(|| a.org_name.clone());
                    a.org_id.as_str()
                }
                ActorKind::Country => a.country.as_str(),
                ActorKind::Continent => a.continent.as_str(),
            };
            actors.insert(id);
        }
        for id in actors {
            *counts.entry(id.to_owned()).or_default() += 1;
        }
    }
    let mut raw: Vec<ActorRow> = counts
        .into_iter()
        .map(|(id, topic_count)| {
            let activity_index = totals.and_then(|t| {
                let all = t.get(kind, &id)?;
                ActivityIndexInput::new(topic_count, period_total, all, t.all_total)
                    .ok()
                    .map(|input| activity_index(&input))
            });
            ActorRow {
                actor_name: names.get(&id).cloned().unwrap_or_else(|| id.clone()),
                actor_id: id,
                actor_kind: kind,
                period,
                topic_count,
                period_total,
                activity_index,
            }
        })
        .collect();
    raw.sort_by(|a, b| {
        b.topic_count
            .cmp(&a.topic_count)
            .then_with(|| a.actor_id.cmp(&b.actor_id))
    });
    let ranked = raw.iter().filter(|r| r.topic_count >= min_count).cloned().collect();
    ActorTable { raw, ranked }
}

/// Splits `range` into consecutive blocks of `block_len` years (the last one
/// possibly shorter) and assigns each publication in range to its block.
pub fn period_blocks(
    set: &PubIdSet,
    corpus: &Corpus,
    range: YearRange,
    block_len: u32,
) -> Result<Vec<(YearRange, PubIdSet)>, IndicatorError> {
    if block_len == 0 {
        return Err(IndicatorError::BlockLength);
    }
    let mut blocks: Vec<(YearRange, PubIdSet)> = Vec::new();
    let mut lo = range.lo();
    while lo <= range.hi() {
        let hi = (lo + block_len as i32 - 1).min(range.hi());
        blocks.push((YearRange::new(lo, hi).expect("lo <= hi"), PubIdSet::new()));
        lo = hi + 1;
    }
    for doc in set {
        let year = corpus.record(doc).year;
        if range.contains(year) {
            let idx = ((year - range.lo()) / block_len as i32) as usize;
            blocks[idx].1.insert(doc);
        }
    }
    Ok(blocks)
}

pub const ACTOR_CSV_HEADER: [&str; 9] = [
    "actor_kind",
    "actor_id",
    "actor_name",
    "period",
    "topic_count",
    "period_total",
    "topic_share_pct",
    "activity_index",
    "activity_index_display",
];

/// Writes actor rows; the AI columns are empty when unavailable.
pub fn write_actor_csv(rows: &[ActorRow], display_multiplier: f64, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACTOR_CSV_HEADER)?;
    for r in rows {
        let (ai, shown) = match r.activity_index {
            Some(ai) => (numfmt::ratio(ai), numfmt::pct(ai * display_multiplier)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.actor_kind.as_str(),
            &r.actor_id,
            &r.actor_name,
            &r.period.to_string(),
            &r.topic_count.to_string(),
            &r.period_total.to_string(),
            &r.topic_share().to_string(),
            &ai,
            &shown,
        ])?;
    }
    w.flush()
}
