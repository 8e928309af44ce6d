//! Two-state burst detection over yearly keyword streams (Kleinberg's
//! batched automaton).
//!
//! For a term, year `t` has `r_t` publications carrying the term out of
//! `d_t` publications in total. The base state emits at rate
//! `p0 = Σr / Σd` and the burst state at `p1 = min(s · p0, 1)`. Being in
//! state `q` at year `t` costs
//!
//! ```text
//! cost_q(t) = −ln[ C(d_t, r_t) · p_q^r_t · (1 − p_q)^(d_t − r_t) ]
//! ```
//!
//! (zero when `d_t = 0`), and every move from the base state up to the burst
//! state costs `γ · ln T` with `T` the number of years; moving down is free.
//! The automaton starts in the base state. A dynamic program finds the
//! cheapest state sequence, preferring the base state on exact ties, and
//! each maximal run of burst years is reported with strength
//! `Σ (cost_low(t) − cost_high(t))` over the run.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::cooccur::extract_terms;
use crate::corpus::{Corpus, PubIdSet, YearRange};
use crate::numfmt;

#[derive(Debug, Error, PartialEq)]
pub enum BurstError {
    #[error("burst scaling s must be > 1, got {0}")]
    Scaling(f64),
    #[error("transition weight gamma must be >= 0, got {0}")]
    Gamma(f64),
    #[error("stream has {years} years but {relevant} relevant and {totals} total counts")]
    Length {
        years: usize,
        relevant: usize,
        totals: usize,
    },
    #[error("year {year}: relevant count {relevant} exceeds total {total}")]
    Count { year: i32, relevant: u64, total: u64 },
    #[error("top-k must be at least 1")]
    TopK,
}

/// Yearly counts of one term over a contiguous range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermYearStream {
    pub term: String,
    pub years: YearRange,
    relevant: Vec<u64>,
    totals: Vec<u64>,
}

impl TermYearStream {
    pub fn new(
        term: impl Into<String>,
        years: YearRange,
        relevant: Vec<u64>,
        totals: Vec<u64>,
    ) -> Result<Self, BurstError> {
        if relevant.len() != years.len() || totals.len() != years.len() {
            return Err(BurstError::Length {
                years: years.len(),
                relevant: relevant.len(),
                totals: totals.len(),
            });
        }
        for ((year, &r), &d) in years.years().zip(&relevant).zip(&totals) {
            if r > d {
                return Err(BurstError::Count {
                    year,
                    relevant: r,
                    total: d,
                });
            }
        }
        Ok(TermYearStream {
            term: term.into(),
            years,
            relevant,
            totals,
        })
    }

    pub fn relevant(&self) -> &[u64] {
        &self.relevant
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }
}

/// Stream for one normalized term.
pub fn term_year_stream(set: &PubIdSet, corpus: &Corpus, term: &str, years: YearRange) -> TermYearStream {
    term_year_streams(set, corpus, &[term.to_owned()], years)
        .pop()
        .expect("one stream per term")
}

/// Streams for many terms in one pass over the set, in the order given.
pub fn term_year_streams(set: &PubIdSet, corpus: &Corpus, terms: &[String], years: YearRange) -> Vec<TermYearStream> {
    let n = years.len();
    let index: HashMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut relevant = vec![vec![0u64; n]; terms.len()];
    let mut totals = vec![0u64; n];
    for doc in set {
        let record = corpus.record(doc);
        if !years.contains(record.year) {
            continue;
        }
        let y = (record.year - years.lo()) as usize;
        totals[y] += 1;
        for t in extract_terms(record) {
            if let Some(&i) = index.get(t.as_str()) {
                relevant[i][y] += 1;
            }
        }
    }
    terms
        .iter()
        .zip(relevant)
        .map(|(term, r)| TermYearStream {
            term: term.clone(),
            years,
            relevant: r,
            totals: totals.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurstParams {
    pub s: f64,
    pub gamma: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        BurstParams { s: 2.0, gamma: 1.0 }
    }
}

impl BurstParams {
    pub fn validate(&self) -> Result<(), BurstError> {
        if self.s.is_nan() || self.s <= 1.0 {
            return Err(BurstError::Scaling(self.s));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(BurstError::Gamma(self.gamma));
        }
        Ok(())
    }
}

/// Why a stream cannot burst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BurstDiagnostic {
    /// No publications at all, or the term never occurs (p0 = 0).
    NoSignal,
    /// `s · p0` clamps to `p0` (the term is in every publication).
    NoElevatedRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Low,
    High,
}

/// Per-year state costs and the up-transition cost of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstCosts {
    pub base_rate: f64,
    pub burst_rate: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub transition: f64,
}

impl BurstCosts {
    pub fn emit(&self, state: State, t: usize) -> f64 {
        match state {
            State::Low => self.low[t],
            State::High => self.high[t],
        }
    }

    /// Cost of moving from `from` to `to`.
    pub fn step(&self, from: State, to: State) -> f64 {
        match (from, to) {
            (State::Low, State::High) => self.transition,
            _ => 0.0,
        }
    }
}

fn emission_cost(r: u64, d: u64, p: f64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let mut ll = ln_binomial(d, r);
    if r > 0 {
        ll += r as f64 * p.ln();
    }
    if d > r {
        ll += (d - r) as f64 * (1.0 - p).ln();
    }
    -ll
}

pub fn burst_costs(stream: &TermYearStream, params: &BurstParams) -> Result<BurstCosts, BurstDiagnostic> {
    let r_sum: u64 = stream.relevant.iter().sum();
    let d_sum: u64 = stream.totals.iter().sum();
    if d_sum == 0 || r_sum == 0 {
        return Err(BurstDiagnostic::NoSignal);
    }
    let p0 = r_sum as f64 / d_sum as f64;
    let p1 = (params.s * p0).min(1.0);
    if p1 <= p0 {
        return Err(BurstDiagnostic::NoElevatedRate);
    }
    let cost = |p: f64| -> Vec<f64> {
        stream
            .relevant
            .iter()
            .zip(&stream.totals)
            .map(|(&r, &d)| emission_cost(r, d, p))
            .collect()
    };
    Ok(BurstCosts {
        base_rate: p0,
        burst_rate: p1,
        low: cost(p0),
        high: cost(p1),
        transition: params.gamma * (stream.len() as f64).ln(),
    })
}

/// Minimum-cost state sequence by dynamic programming. Costs accumulate in
/// time order as `(previous + step) + emit`; exact ties prefer `Low`.
pub fn optimal_states(costs: &BurstCosts) -> (Vec<State>, f64) {
    let n = costs.low.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut back: Vec<[State; 2]> = Vec::with_capacity(n);
    let mut acc = [0.0, f64::INFINITY]; // [low, high], starting in Low
    for t in 0..n {
        let mut next = [0.0; 2];
        let mut ptr = [State::Low; 2];
        for (k, to) in [State::Low, State::High].into_iter().enumerate() {
            let via_low = acc[0] + costs.step(State::Low, to);
            let via_high = acc[1] + costs.step(State::High, to);
            let (best, from) = if via_high < via_low {
                (via_high, State::High)
            } else {
                (via_low, State::Low)
            };
            next[k] = best + costs.emit(to, t);
            ptr[k] = from;
        }
        back.push(ptr);
        acc = next;
    }
    let (mut state, total) = if acc[1] < acc[0] {
        (State::High, acc[1])
    } else {
        (State::Low, acc[0])
    };
    let mut states = vec![State::Low; n];
    for t in (0..n).rev() {
        states[t] = state;
        state = back[t][state as usize];
    }
    (states, total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurstInterval {
    pub term: String,
    pub begin: i32,
    /// Inclusive.
    pub end: i32,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurstDetection {
    pub intervals: Vec<BurstInterval>,
    pub states: Vec<State>,
    /// Total cost of the optimal sequence; `None` when no costs were defined.
    pub cost: Option<f64>,
    pub diagnostic: Option<BurstDiagnostic>,
}

/// Maximal runs of `High` as (start, end) indices, inclusive.
pub fn high_runs(states: &[State]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (t, &s) in states.iter().enumerate() {
        match (s, start) {
            (State::High, None) => start = Some(t),
            (State::Low, Some(b)) => {
                runs.push((b, t - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        runs.push((b, states.len() - 1));
    }
    runs
}

pub fn detect_bursts(stream: &TermYearStream, params: &BurstParams) -> Result<BurstDetection, BurstError> {
    params.validate()?;
    let costs = match burst_costs(stream, params) {
        Ok(c) => c,
        Err(diagnostic) => {
            return Ok(BurstDetection {
                intervals: Vec::new(),
                states: vec![State::Low; stream.len()],
                cost: None,
                diagnostic: Some(diagnostic),
            })
        }
    };
    let (states, cost) = optimal_states(&costs);
    let intervals = high_runs(&states)
        .into_iter()
        .map(|(b, e)| BurstInterval {
            term: stream.term.clone(),
            begin: stream.years.lo() + b as i32,
            end: stream.years.lo() + e as i32,
            strength: (b..=e).map(|t| costs.low[t] - costs.high[t]).sum(),
        })
        .collect();
    Ok(BurstDetection {
        intervals,
        states,
        cost: Some(cost),
        diagnostic: None,
    })
}

/// Orders intervals by strength descending, then earlier begin, then term.
pub fn rank_order(a: &BurstInterval, b: &BurstInterval) -> Ordering {
    b.strength
        .total_cmp(&a.strength)
        .then(a.begin.cmp(&b.begin))
        .then_with(|| a.term.cmp(&b.term))
        .then(a.end.cmp(&b.end))
}

/// Detects bursts for every term and returns the `k` strongest intervals.
pub fn top_bursts(
    set: &PubIdSet,
    corpus: &Corpus,
    terms: &[String],
    years: YearRange,
    k: usize,
    params: &BurstParams,
) -> Result<Vec<BurstInterval>, BurstError> {
    if k == 0 {
        return Err(BurstError::TopK);
    }
    params.validate()?;
    let streams = term_year_streams(set, corpus, terms, years);
    let mut all: Vec<BurstInterval> = streams
        .par_iter()
        .map(|s| detect_bursts(s, params).map(|d| d.intervals))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    all.sort_by(rank_order);
    all.truncate(k);
    Ok(all)
}

pub fn write_bursts_csv(intervals: &[BurstInterval], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term", "strength", "begin", "end"])?;
    for b in intervals {
        w.write_record([
            b.term.clone(),
            numfmt::ratio(b.strength),
            b.begin.to_string(),
            b.end.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PublicationRecord;

    fn stream(relevant: &[u64], totals: &[u64]) -> TermYearStream {
        let years = YearRange::new(2000, 2000 + relevant.len() as i32 - 1).unwrap();
        TermYearStream::new("t", years, relevant.to_vec(), totals.to_vec()).unwrap()
    }

    #[test]
    fn uniform_stream_has_no_burst() {
        let s = stream(&[2; 10], &[20; 10]);
        let d = detect_bursts(&s, &BurstParams::default()).unwrap();
        assert!(d.intervals.is_empty());
        assert!(d.states.iter().all(|&s| s == State::Low));
    }

    #[test]
    fn middle_burst_is_found() {
        let mut r = vec![1; 6];
        r.extend([5; 3]);
        r.extend([1; 6]);
        let s = stream(&r, &[10; 15]);
        let d = detect_bursts(&s, &BurstParams::default()).unwrap();
        assert_eq!(d.intervals.len(), 1);
        assert_eq!((d.intervals[0].begin, d.intervals[0].end), (2006, 2008));
        assert!(d.intervals[0].strength > 0.0);
    }

    #[test]
    fn degenerate_streams() {
        let zero = stream(&[0; 5], &[10; 5]);
        let d = detect_bursts(&zero, &BurstParams::default()).unwrap();
        assert_eq!(d.diagnostic, Some(BurstDiagnostic::NoSignal));
        let full = stream(&[4, 3, 7], &[4, 3, 7]);
        let d = detect_bursts(&full, &BurstParams::default()).unwrap();
        assert_eq!(d.diagnostic, Some(BurstDiagnostic::NoElevatedRate));
        assert!(d.intervals.is_empty());
        let empty = stream(&[0, 0], &[0, 0]);
        assert_eq!(
            detect_bursts(&empty, &BurstParams::default()).unwrap().diagnostic,
            Some(BurstDiagnostic::NoSignal)
        );
    }

    #[test]
    fn rejects_bad_parameters_and_counts() {
        let s = stream(&[1, 2], &[5, 5]);
        assert_eq!(
            detect_bursts(&s, &BurstParams { s: 1.0, gamma: 1.0 }),
            Err(BurstError::Scaling(1.0))
        );
        assert_eq!(
            detect_bursts(&s, &BurstParams { s: 2.0, gamma: -0.5 }),
            Err(BurstError::Gamma(-0.5))
        );
        let years = YearRange::new(2000, 2001).unwrap();
        assert!(matches!(
            TermYearStream::new("t", years, vec![3, 0], vec![2, 0]),
            Err(BurstError::Count { .. })
        ));
        assert!(matches!(
            TermYearStream::new("t", years, vec![0], vec![2, 0]),
            Err(BurstError::Length { .. })
        ));
    }

    #[test]
    fn zero_total_years_cost_nothing() {
        let s = stream(&[0, 3, 0], &[0, 6, 0]);
        let c = burst_costs(&s, &BurstParams::default());
        // p0 = 0.5, p1 = 1 -> high state infinite where d > r
        let c = c.unwrap();
        assert_eq!((c.low[0], c.high[0], c.low[2], c.high[2]), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(c.high[1], f64::INFINITY);
    }

    #[test]
    fn emission_cost_matches_binomial_pmf() {
        // C(10,3) 0.2^3 0.8^7
        let pmf: f64 = 120.0 * 0.2f64.powi(3) * 0.8f64.powi(7);
        assert!((emission_cost(3, 10, 0.2) + pmf.ln()).abs() < 1e-12);
        assert!((emission_cost(0, 4, 0.5) - 4.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(emission_cost(5, 5, 1.0), 0.0);
    }

    #[test]
    fn high_runs_are_maximal() {
        use State::*;
        assert_eq!(high_runs(&[Low, High, High, Low, High]), vec![(1, 2), (4, 4)]);
        assert!(high_runs(&[Low, Low]).is_empty());
    }

    #[test]
    fn stream_from_corpus() {
        let mk = |id: &str, year, kws: &[&str]| {
            let mut r = PublicationRecord::new(id, year);
            r.author_keywords = kws.iter().map(|s| s.to_string()).collect();
            r
        };
        let corpus = Corpus::from_records([
            mk("a", 2000, &["Malaria"]),
            mk("b", 2000, &["hiv"]),
            mk("c", 2002, &["malaria", "hiv"]),
        ]);
        let years = YearRange::new(2000, 2002).unwrap();
        let s = term_year_stream(&corpus.all(), &corpus, "malaria", years);
        assert_eq!(s.relevant(), &[1, 0, 1]);
        assert_eq!(s.totals(), &[2, 0, 1]);
        let absent = term_year_stream(&corpus.all(), &corpus, "tb", years);
        assert!(absent.relevant().iter().all(|&r| r == 0));
        let all = mk("d", 2001, &["x"]);
        let c2 = Corpus::from_records([all]);
        let s = term_year_stream(&c2.all(), &c2, "x", years);
        assert_eq!(s.relevant(), s.totals());
    }

    #[test]
    fn ranking_ties_prefer_earlier_begin() {
        let a = BurstInterval {
            term: "b".into(),
            begin: 2005,
            end: 2006,
            strength: 3.0,
        };
        let b = BurstInterval {
            term: "a".into(),
            begin: 2007,
            end: 2008,
            strength: 3.0,
        };
        let c = BurstInterval {
            term: "c".into(),
            begin: 2010,
            end: 2010,
            strength: 4.0,
        };
        let mut v = vec![b.clone(), a.clone(), c.clone()];
        v.sort_by(rank_order);
        assert_eq!(v, vec![c, a, b]);
    }
}
