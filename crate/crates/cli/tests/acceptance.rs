//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not a recorded known deviation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdgscope_cli::synth::{write_fixture, SynthOptions};
use sdgscope_cli::{run_pipeline, Overrides, PipelineConfig};
use sdgscope_core::burst::{burst_costs, detect_bursts, high_runs, optimal_states, BurstParams, State, TermYearStream};
use sdgscope_core::cooccur::{self, modularity, ClusterParams, WeightedGraph};
use sdgscope_core::corpus::build_citation_graph;
use sdgscope_core::indicators::{activity_index, growth_between, ActivityIndexInput};
use sdgscope_core::interlink::{sdg_cocitation_matrix, sdg_coclassification_matrix};
use sdgscope_core::numfmt::pct;
use sdgscope_core::sdg::{
    continent_tables, write_institutions_csv, write_prevalence_csv, InstitutionsPerSdg, Prevalence, SdgAssignment,
    SdgId, SdgSet, N_SDGS,
};
use sdgscope_core::{Affiliation, Corpus, DocId, OrgType, PubIdSet, PublicationRecord, YearRange};

struct Outcome {
    pass: bool,
    detail: String,
    known_deviation: Option<&'static str>,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            known_deviation: None,
        }
    }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "cagr_consistency",
            budget: Duration::from_millis(1),
            run: cagr_consistency,
        },
        Criterion {
            name: "activity_index_oracle",
            budget: Duration::from_secs(1),
            run: activity_index_oracle,
        },
        Criterion {
            name: "classification_arithmetic",
            budget: Duration::from_secs(1),
            run: classification_arithmetic,
        },
        Criterion {
            name: "burst_dp_optimality",
            budget: Duration::from_secs(30),
            run: burst_dp_optimality,
        },
        Criterion {
            name: "cooccurrence_oracle",
            budget: Duration::from_secs(10),
            run: cooccurrence_oracle,
        },
        Criterion {
            name: "planted_partition",
            budget: Duration::from_secs(5),
            run: planted_partition,
        },
        Criterion {
            name: "sdg_matrix_oracle",
            budget: Duration::from_secs(5),
            run: sdg_matrix_oracle,
        },
        Criterion {
            name: "continent_table_normalization",
            budget: Duration::from_secs(1),
            run: continent_table_normalization,
        },
        Criterion {
            name: "end_to_end_determinism",
            budget: Duration::from_secs(10),
            run: end_to_end_determinism,
        },
        Criterion {
            name: "scale_smoke",
            budget: Duration::from_secs(60),
            run: scale_smoke,
        },
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for c in &criteria {
        if !only.is_empty() && !only.iter().any(|o| c.name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let pass = outcome.pass && in_budget;
        let mut detail = outcome.detail;
        if !in_budget {
            detail.push_str(&format!("; over budget {:?}", c.budget));
        }
        let status = match (pass, outcome.known_deviation) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known deviation)",
            (false, None) => {
                unexpected += 1;
                "FAIL"
            }
        };
        if let (false, Some(why)) = (pass, outcome.known_deviation) {
            detail.push_str(&format!("; {why}"));
        }
        println!("{status} {} [{:.3} s] {detail}", c.name, elapsed.as_secs_f64());
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn cagr_consistency() -> Outcome {
    let g = growth_between(1.0, 9.2865, 17).expect("valid inputs");
    let ok = (g.cagr_pct - 14.01).abs() <= 0.01
        && (g.growth_pct - 828.65).abs() <= 0.01
        && pct(g.cagr_pct) == "14.01"
        && pct(g.growth_pct) == "828.65";
    Outcome::check(
        ok,
        format!("cagr {} %, growth {} % (tol 0.01)", pct(g.cagr_pct), pct(g.growth_pct)),
    )
}

fn rational_ai(a: u64, b: u64, c: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(a) * BigInt::from(d), BigInt::from(b) * BigInt::from(c))
}

fn activity_index_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000_000u64));
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let scale = 10u64.pow(rng.random_range(1..10));
        let a = rng.random_range(0..scale);
        let b = a + rng.random_range(1..scale);
        let c = a + rng.random_range(1..scale);
        let d = c.max(b) + rng.random_range(0..scale.saturating_mul(100));
        let input = ActivityIndexInput::new(a, b, c, d).expect("consistent counts");
        let got = activity_index(&input);
        let exact = rational_ai(a, b, c, d);
        let got_exact = BigRational::from_float(got).expect("finite");
        let err = (got_exact - &exact).abs();
        if err > &exact * &tol {
            return Outcome::check(
                false,
                format!("instance {i} ({a},{b},{c},{d}): {got} off by more than 1e-12"),
            );
        }
        if a > 0 {
            worst = worst.max(((got - a as f64 * d as f64 / (b as f64 * c as f64)) / got).abs());
        }
    }
    let mut parity_ok = true;
    for _ in 0..1000 {
        let a = rng.random_range(1..1000u64);
        let b = a + rng.random_range(0..1000);
        let m = rng.random_range(1..10_000u64);
        let input = ActivityIndexInput::new(a, b, a * m, b * m).expect("consistent counts");
        parity_ok &= activity_index(&input) == 1.0;
    }
    Outcome::check(
        parity_ok,
        format!("10000 instances within 1e-12 relative of exact rationals; parity exact: {parity_ok}; naive-float spread {worst:.1e}"),
    )
}

fn classification_arithmetic() -> Outcome {
    let mut counts = [0u64; N_SDGS];
    counts[2] = 20_749;
    let prev = Prevalence::from_counts(25_299, 20_749, counts);
    let mut buf = Vec::new();
    write_prevalence_csv(&prev, &mut buf).expect("in-memory write");
    let prevalence_text = String::from_utf8(buf).expect("utf8");
    let classified = prev.classified_pct().to_string();

    let mut inst = [0u64; N_SDGS];
    inst[2] = 1_670;
    let mut buf = Vec::new();
    write_institutions_csv(&InstitutionsPerSdg::from_counts(1_968, inst), &mut buf).expect("in-memory write");
    let inst_text = String::from_utf8(buf).expect("utf8");
    let inst_ok = inst_text.lines().any(|l| l == "3,1670,84.86");

    let prev_ok = classified == "82.01" && prevalence_text.contains(",82.01");
    Outcome {
        pass: prev_ok && inst_ok,
        detail: format!(
            "20749/25299 prints {classified} (expected 82.01); 1670/1968 prints {}",
            if inst_ok { "84.86" } else { "a different value" }
        ),
        known_deviation: (!prev_ok && inst_ok && classified == "82.02").then_some(
            "20749/25299 = 82.0151 rounds half-up to 82.02; truncating would print 82.01 but turn 84.8577 into 84.85",
        ),
    }
}

fn path_cost(costs: &sdgscope_core::burst::BurstCosts, states: &[State]) -> f64 {
    let mut acc = 0.0;
    let mut prev = State::Low;
    for (t, &s) in states.iter().enumerate() {
        acc = (acc + costs.step(prev, s)) + costs.emit(s, t);
        prev = s;
    }
    acc
}

fn burst_dp_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut unique = 0;
    while checked < 500 {
        let len = rng.random_range(1..=12usize);
        let totals: Vec<u64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0
                } else {
                    rng.random_range(1..60)
                }
            })
            .collect();
        let relevant: Vec<u64> = totals.iter().map(|&d| rng.random_range(0..=d)).collect();
        let years = YearRange::new(2000, 2000 + len as i32 - 1).expect("valid range");
        let stream = TermYearStream::new("t", years, relevant, totals).expect("valid stream");
        let params = BurstParams {
            s: rng.random_range(1.2..4.0),
            gamma: rng.random_range(0.0..2.0),
        };
        let Ok(costs) = burst_costs(&stream, &params) else {
            continue;
        };
        checked += 1;
        let (states, dp_cost) = optimal_states(&costs);
        let mut best = f64::INFINITY;
        let mut argmins: Vec<Vec<State>> = Vec::new();
        for mask in 0u32..(1 << len) {
            let seq: Vec<State> = (0..len)
                .map(|t| if mask >> t & 1 == 1 { State::High } else { State::Low })
                .collect();
            let c = path_cost(&costs, &seq);
            if c < best {
                best = c;
                argmins.clear();
            }
            if c == best {
                argmins.push(seq);
            }
        }
        if dp_cost != best {
            return Outcome::check(false, format!("stream {checked}: dp {dp_cost} vs enumeration {best}"));
        }
        let detected: Vec<(i32, i32)> = detect_bursts(&stream, &params)
            .expect("valid params")
            .intervals
            .iter()
            .map(|b| (b.begin, b.end))
            .collect();
        let runs = |s: &[State]| -> Vec<(i32, i32)> {
            high_runs(s)
                .into_iter()
                .map(|(b, e)| (2000 + b as i32, 2000 + e as i32))
                .collect()
        };
        if !argmins.iter().any(|seq| runs(seq) == detected) || runs(&states) != detected {
            return Outcome::check(
                false,
                format!("stream {checked}: intervals {detected:?} are not an optimum's runs"),
            );
        }
        if argmins.len() == 1 {
            unique += 1;
        }
    }
    Outcome::check(
        true,
        format!("500 streams, T <= 12: costs equal exactly; {unique} with a unique optimum"),
    )
}

const WORDS: &[&str] = &[
    "water", "health", "poverty", "energy", "soil", "climate", "urban", "gender", "food", "ocean", "trade", "peace",
];

fn cooccurrence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..200 {
        let n = rng.random_range(1..=50usize);
        let records: Vec<PublicationRecord> = (0..n)
            .map(|i| {
                let mut r = PublicationRecord::new(format!("P{i}"), 2010);
                for _ in 0..rng.random_range(0..=10) {
                    let w = WORDS[rng.random_range(0..WORDS.len())].to_owned();
                    if rng.random_bool(0.5) {
                        r.author_keywords.push(w);
                    } else {
                        r.index_keywords.push(w.to_uppercase());
                    }
                }
                r
            })
            .collect();
        let corpus = Corpus::from_records(records);
        let min_occ = rng.random_range(1..4u64);
        let net = cooccur::build_network(&corpus.all(), &corpus, min_occ).expect("valid threshold");

        let sets: Vec<BTreeSet<String>> = corpus
            .records()
            .iter()
            .map(|r| r.keywords().map(|k| k.to_lowercase()).collect())
            .collect();
        let mut occ: BTreeMap<String, u64> = BTreeMap::new();
        for s in &sets {
            for t in s {
                *occ.entry(t.clone()).or_default() += 1;
            }
        }
        occ.retain(|_, c| *c >= min_occ);
        let terms: Vec<&String> = occ.keys().collect();
        let mut expected = Vec::new();
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let c = sets
                    .iter()
                    .filter(|s| s.contains(terms[i]) && s.contains(terms[j]))
                    .count() as u64;
                if c > 0 {
                    let w = (2 * n as u64 * c) as f64 / (occ[terms[i]] * occ[terms[j]]) as f64;
                    expected.push((terms[i].as_str(), terms[j].as_str(), c, w));
                }
            }
        }
        let got: Vec<(&str, &str, u64, f64)> = net
            .edges()
            .iter()
            .map(|e| {
                (
                    net.term(e.source as usize),
                    net.term(e.target as usize),
                    e.count,
                    e.weight,
                )
            })
            .collect();
        let got_occ: Vec<(&str, u64)> = (0..net.len()).map(|i| (net.term(i), net.occurrence(i))).collect();
        let want_occ: Vec<(&str, u64)> = occ.iter().map(|(t, &c)| (t.as_str(), c)).collect();
        if got != expected || got_occ != want_occ {
            return Outcome::check(false, format!("mini-corpus {case} differs from the pairwise oracle"));
        }
    }
    Outcome::check(
        true,
        "200 mini-corpora: terms, counts and association strengths identical",
    )
}

fn two_cliques() -> WeightedGraph {
    let mut edges = Vec::new();
    for block in [0usize, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((block + i, block + j, 1.0));
            }
        }
    }
    edges.push((3, 4, 1.0));
    WeightedGraph::new(8, edges)
}

fn best_partition(g: &WeightedGraph) -> (f64, usize) {
    fn visit(g: &WeightedGraph, labels: &mut Vec<u32>, max: u32, best: &mut f64, count: &mut usize) {
        if labels.len() == g.node_count() {
            *count += 1;
            *best = best.max(modularity(g, labels, 1.0));
            return;
        }
        for l in 0..=max + 1 {
            labels.push(l);
            visit(g, labels, max.max(l), best, count);
            labels.pop();
        }
    }
    let (mut best, mut count) = (f64::NEG_INFINITY, 0);
    let mut labels = vec![0];
    visit(g, &mut labels, 0, &mut best, &mut count);
    (best, count)
}

fn planted_partition() -> Outcome {
    let g = two_cliques();
    let planted = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let (best, partitions) = best_partition(&g);
    for seed in 0..10 {
        let a = cooccur::cluster_graph(
            &g,
            &ClusterParams {
                seed: seed * 7919,
                ..ClusterParams::default()
            },
        );
        if a.membership != planted || (a.quality - best).abs() > 1e-12 {
            return Outcome::check(
                false,
                format!("seed {}: {:?} q={}", seed * 7919, a.membership, a.quality),
            );
        }
    }
    Outcome::check(
        true,
        format!("10 seeds recover the bipartition; Q = {best:.6} equals the maximum over all {partitions} partitions (tol 1e-12)"),
    )
}

fn random_sdgs(rng: &mut ChaCha8Rng) -> SdgSet {
    (0..rng.random_range(0..4))
        .map(|_| SdgId::from_index(rng.random_range(0..N_SDGS)))
        .collect()
}

fn sdg_matrix_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..100 {
        let n = rng.random_range(1..=20usize);
        let records: Vec<PublicationRecord> = (0..n)
            .map(|i| {
                let mut r = PublicationRecord::new(format!("P{i}"), rng.random_range(2000..2018));
                for _ in 0..rng.random_range(0..8) {
                    r.references.push(format!("P{}", rng.random_range(0..n + 3)));
                }
                r
            })
            .collect();
        let corpus = Corpus::from_records(records);
        let set: PubIdSet = corpus.docs().filter(|_| rng.random_bool(0.85)).collect();
        let mut assignments = Vec::new();
        for doc in corpus.docs() {
            if rng.random_bool(0.9) {
                assignments.push(SdgAssignment {
                    doc,
                    sdgs: random_sdgs(&mut rng),
                });
            }
        }
        let labels: HashMap<DocId, SdgSet> = assignments.iter().map(|a| (a.doc, a.sdgs)).collect();
        let label = |d: DocId| labels.get(&d).copied().unwrap_or_default();

        let mut cocit = [[0u64; N_SDGS]; N_SDGS];
        for c in corpus.docs().filter(|&c| set.contains(c)) {
            let refs: BTreeSet<&str> = corpus.record(c).references.iter().map(String::as_str).collect();
            let cites = |d: DocId| d != c && set.contains(d) && refs.contains(corpus.record(d).pub_id.as_str());
            for i in corpus.docs() {
                for j in corpus.docs().filter(|&j| j > i) {
                    if !(cites(i) && cites(j)) {
                        continue;
                    }
                    let mut pairs = BTreeSet::new();
                    for s in label(i).iter() {
                        for t in label(j).iter() {
                            if s != t {
                                pairs.insert((s.index().min(t.index()), s.index().max(t.index())));
                            }
                        }
                    }
                    for (s, t) in pairs {
                        cocit[s][t] += 1;
                        cocit[t][s] += 1;
                    }
                }
            }
        }
        let mut coclass = [[0u64; N_SDGS]; N_SDGS];
        for a in &assignments {
            for s in a.sdgs.iter() {
                for t in a.sdgs.iter().filter(|&t| t != s) {
                    coclass[s.index()][t.index()] += 1;
                }
            }
        }
        let graph = build_citation_graph(&corpus);
        let m1 = sdg_cocitation_matrix(&assignments, &corpus, &graph, &set);
        let m2 = sdg_coclassification_matrix(&assignments, &corpus);
        let diag_zero = (0..N_SDGS).all(|i| m1.cells[i][i] == 0 && m2.cells[i][i] == 0);
        if m1.cells != cocit || m2.cells != coclass || !m1.is_symmetric() || !m2.is_symmetric() || !diag_zero {
            return Outcome::check(false, format!("fixture {case} differs from the brute-force oracle"));
        }
    }
    Outcome::check(
        true,
        "100 fixtures: both matrices equal brute force; symmetric with zero diagonal",
    )
}

const COUNTRY_BY_CONTINENT: [&str; 5] = ["KE", "BR", "IN", "DE", "AU"];

fn continent_table_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst = 0i64;
    let mut lines = 0;
    for _ in 0..300 {
        let n = rng.random_range(1..400usize);
        let corpus = Corpus::from_records((0..n).map(|i| {
            let mut r = PublicationRecord::new(format!("P{i}"), 2010);
            if rng.random_bool(0.95) {
                let country = COUNTRY_BY_CONTINENT[rng.random_range(0..5)];
                r.affiliations
                    .push(Affiliation::new("o", "Org", OrgType::Hei, country).expect("known country"));
            }
            r
        }));
        let assignments: Vec<SdgAssignment> = corpus
            .docs()
            .map(|doc| SdgAssignment {
                doc,
                sdgs: random_sdgs(&mut rng),
            })
            .collect();
        let t = continent_tables(&assignments, &corpus);
        for s in 0..N_SDGS {
            if t.counts[s].iter().sum::<u64>() > 0 {
                let sum: u64 = t.row_pct[s].iter().map(|p| p.hundredths()).sum();
                worst = worst.max((sum as i64 - 10_000).abs());
                lines += 1;
            }
        }
        for c in 0..5 {
            if t.counts.iter().map(|row| row[c]).sum::<u64>() > 0 {
                let sum: u64 = t.col_pct.iter().map(|row| row[c].hundredths()).sum();
                worst = worst.max((sum as i64 - 10_000).abs());
                lines += 1;
            }
        }
    }
    Outcome::check(
        worst <= 5,
        format!(
            "{lines} non-empty rows/columns; largest deviation from 100 is {:.2} (tol 0.05)",
            worst as f64 / 100.0
        ),
    )
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned();
                files.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    files
}

fn run_with_threads(config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let mut cfg = PipelineConfig::load(config).map_err(|e| e.to_string())?;
    cfg.apply(&Overrides {
        output_dir: Some(out.to_path_buf()),
        ..Overrides::default()
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| run_pipeline(&cfg)).map_err(|e| e.to_string())
}

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let config = fixture_dir().join("config.toml");
    let mut bundles = Vec::new();
    for (i, threads) in [1, 1, 8].into_iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        if let Err(e) = run_with_threads(&config, &out, threads) {
            return Outcome::check(false, format!("run {i}: {e}"));
        }
        bundles.push(snapshot(&out));
    }
    let golden = snapshot(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden"));
    let same = bundles.iter().all(|b| *b == golden);
    Outcome::check(
        same,
        format!(
            "{} files; two 1-thread runs and one 8-thread run byte-identical to the golden bundle: {same}",
            golden.len()
        ),
    )
}

fn peak_rss_mib() -> Option<f64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib / 1024.0)
}

fn scale_smoke() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let input = tmp.path().join("input");
    if let Err(e) = write_fixture(
        &input,
        SynthOptions {
            records: 100_000,
            seed: 1,
        },
    ) {
        return Outcome::check(false, format!("generation: {e}"));
    }
    let start = Instant::now();
    let result = run_with_threads(&input.join("config.toml"), &tmp.path().join("out"), 0);
    let elapsed = start.elapsed().as_secs_f64();
    let peak = peak_rss_mib();
    match result {
        Err(e) => Outcome::check(false, e),
        Ok(()) => Outcome::check(
            elapsed < 60.0 && peak.is_some_and(|p| p < 2048.0),
            format!(
                "100000 records: pipeline {elapsed:.1} s (limit 60), process peak RSS {} MiB (limit 2048)",
                peak.map_or("unknown".into(), |p| format!("{p:.0}"))
            ),
        ),
    }
}
