//! Deterministic synthetic corpora for demos, tests and scale checks.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdgscope_core::corpus::write_jsonl;
use sdgscope_core::indicators::{actor_table, ActorKind, ExternalTotals};
use sdgscope_core::{Affiliation, Corpus, OrgFilter, OrgType, PublicationRecord, YearRange};

pub const QUERY: &str = r#"TS="sustainable development goal*" OR TS="millennium development goal*""#;

const CORE_PHRASES: &[&str] = &[
    "the sustainable development goals",
    "the millennium development goals",
    "a sustainable development goal",
    "millennium development goal targets",
];

/// Keyword themes and the SDGs their terms map to.
const THEMES: &[(&[&str], &[u8])] = &[
    (
        &[
            "maternal health",
            "child mortality",
            "malaria",
            "hiv",
            "universal health coverage",
            "vaccination",
        ],
        &[3],
    ),
    (
        &[
            "poverty",
            "hunger",
            "food security",
            "social protection",
            "microfinance",
        ],
        &[1, 2],
    ),
    (&["water", "sanitation", "hygiene", "drinking water"], &[6]),
    (
        &["climate change", "renewable energy", "adaptation", "carbon emissions"],
        &[7, 13],
    ),
    (
        &["gender equality", "education", "girls schooling", "women empowerment"],
        &[4, 5],
    ),
    (&["urbanization", "slums", "urban planning", "cities"], &[11]),
    (&["biodiversity", "forests", "fisheries", "land degradation"], &[14, 15]),
    (
        &[
            "governance",
            "partnerships",
            "official development assistance",
            "inequality",
        ],
        &[10, 16, 17],
    ),
];

/// Terms with no glossary entry.
const NEUTRAL: &[&str] = &[
    "indicators",
    "monitoring",
    "policy",
    "developing countries",
    "evaluation",
];

const ORGS: &[(&str, &str, OrgType, &str)] = &[
    (
        "org-lshtm",
        "London School of Hygiene and Tropical Medicine",
        OrgType::Hei,
        "GB",
    ),
    ("org-oxford", "University of Oxford", OrgType::Hei, "GB"),
    ("org-harvard", "Harvard University", OrgType::Hei, "US"),
    ("org-jhu", "Johns Hopkins University", OrgType::Hei, "US"),
    ("org-uw", "University of Washington", OrgType::Hei, "US"),
    ("org-toronto", "University of Toronto", OrgType::Hei, "CA"),
    ("org-usp", "University of Sao Paulo", OrgType::Hei, "BR"),
    (
        "org-unam",
        "National Autonomous University of Mexico",
        OrgType::Hei,
        "MX",
    ),
    ("org-nairobi", "University of Nairobi", OrgType::Hei, "KE"),
    ("org-uct", "University of Cape Town", OrgType::Hei, "ZA"),
    ("org-makerere", "Makerere University", OrgType::Hei, "UG"),
    ("org-delhi", "University of Delhi", OrgType::Hei, "IN"),
    ("org-tsinghua", "Tsinghua University", OrgType::Hei, "CN"),
    ("org-anu", "Australian National University", OrgType::Hei, "AU"),
    ("org-melbourne", "University of Melbourne", OrgType::Hei, "AU"),
    ("org-wageningen", "Wageningen University", OrgType::Hei, "NL"),
    (
        "org-cgiar",
        "International Food Policy Research Institute",
        OrgType::Rc,
        "US",
    ),
    ("org-icddrb", "icddr,b", OrgType::Rc, "BD"),
    (
        "org-cnrs",
        "French National Centre for Scientific Research",
        OrgType::Rc,
        "FR",
    ),
    (
        "org-csir",
        "Council for Scientific and Industrial Research",
        OrgType::Rc,
        "ZA",
    ),
    ("org-who", "World Health Organization", OrgType::Gov, "CH"),
    ("org-moh-ke", "Ministry of Health Kenya", OrgType::Gov, "KE"),
    ("org-nhs", "National Health Service", OrgType::Hospital, "GB"),
    ("org-brac", "BRAC", OrgType::Ngo, "BD"),
];

/// Number of leading entries of [`ORGS`] that are HEI or RC.
const ACADEMIC_ORGS: usize = 20;

const FIRST_YEAR: i32 = 2000;
const LAST_YEAR: i32 = 2017;

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub records: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { records: 200, seed: 7 }
    }
}

fn is_core(i: usize) -> bool {
    i % 20 < 3
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn affiliation(i: usize) -> Affiliation {
    let (id, name, kind, country) = ORGS[i];
    Affiliation::new(id, name, kind, country).expect("known country")
}

fn record<R: Rng>(rng: &mut R, i: usize, years: &WeightedIndex<f64>, core_before: &[usize]) -> PublicationRecord {
    let year = match i % 50 {
        _ if i < 6 => FIRST_YEAR,
        49 => 1998,
        24 => 2019,
        _ => FIRST_YEAR + years.sample(rng) as i32,
    };
    let mut r = PublicationRecord::new(format!("SYN{i:06}"), year);
    let theme = &THEMES[rng.random_range(0..THEMES.len())];
    let mut keywords: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(2..5) {
        let term = if rng.random_bool(0.85) {
            pick(rng, theme.0)
        } else {
            pick(rng, NEUTRAL)
        };
        if !keywords.iter().any(|k| k == term) {
            keywords.push(term.to_owned());
        }
    }
    let sdg_era = (2015..=LAST_YEAR).contains(&year);
    let mdg_era = (2005..=2009).contains(&year);
    if rng.random_bool(if sdg_era { 0.6 } else { 0.02 }) {
        keywords.push("sdg indicators".into());
    }
    if rng.random_bool(if mdg_era { 0.5 } else { 0.02 }) {
        keywords.push("millennium villages".into());
    }
    r.title = format!("{} and {} in low-income settings", keywords[0], pick(rng, NEUTRAL));
    r.abstract_text = if is_core(i) {
        format!(
            "We assess progress towards {} using {} data.",
            pick(rng, CORE_PHRASES),
            keywords[0]
        )
    } else if rng.random_bool(0.2) {
        format!(
            "We discuss sustainable development and {}.",
            keywords[keywords.len() - 1]
        )
    } else {
        format!("We study {} with observational data.", keywords[keywords.len() - 1])
    };
    let split = rng.random_range(0..=keywords.len());
    r.index_keywords = keywords.split_off(split);
    r.author_keywords = keywords;

    let roll: f64 = rng.random();
    r.affiliations = if roll < 0.06 {
        Vec::new()
    } else if roll < 0.12 {
        vec![affiliation(
            ACADEMIC_ORGS + rng.random_range(0..ORGS.len() - ACADEMIC_ORGS),
        )]
    } else {
        let mut affs: Vec<Affiliation> = Vec::new();
        for _ in 0..rng.random_range(1..4) {
            let idx = if rng.random_bool(0.85) {
                rng.random_range(0..ACADEMIC_ORGS)
            } else {
                rng.random_range(0..ORGS.len())
            };
            if !affs.iter().any(|a| a.org_id == ORGS[idx].0) {
                affs.push(affiliation(idx));
            }
        }
        affs
    };

    if i > 0 {
        for _ in 0..rng.random_range(0..5) {
            let target = if !core_before.is_empty() && rng.random_bool(0.4) {
                core_before[rng.random_range(0..core_before.len())]
            } else {
                rng.random_range(0..i)
            };
            let id = format!("SYN{target:06}");
            if !r.references.contains(&id) {
                r.references.push(id);
            }
        }
    }
    if rng.random_bool(0.2) {
        r.references.push(format!("EXT{:05}", rng.random_range(0..500)));
    }
    r
}

/// Builds a corpus whose topical core, citation structure, keyword themes
/// and bursts are all planted.
pub fn generate(options: SynthOptions) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let weights: Vec<f64> = (FIRST_YEAR..=LAST_YEAR).map(|y| 1.15f64.powi(y - FIRST_YEAR)).collect();
    let years = WeightedIndex::new(weights).expect("positive weights");
    let mut core_before = Vec::new();
    let mut records = Vec::with_capacity(options.records);
    for i in 0..options.records {
        records.push(record(&mut rng, i, &years, &core_before));
        if is_core(i) {
            core_before.push(i);
        }
    }
    Corpus::from_records(records)
}

/// `term,sdg_id` rows for every themed term.
pub fn glossary_csv() -> String {
    let mut out = String::from("term,sdg_id\n");
    for (terms, sdgs) in THEMES {
        for term in *terms {
            for sdg in *sdgs {
                out.push_str(&format!("{term},{sdg}\n"));
            }
        }
    }
    out.push_str("sdg indicators,17\n");
    out.push_str("millennium villages,1\n");
    out
}

/// World totals that are a fixed multiple of each actor's corpus count.
pub fn external_totals(corpus: &Corpus) -> ExternalTotals {
    let all = corpus.all();
    let range = YearRange::new(FIRST_YEAR, LAST_YEAR).expect("valid range");
    let mut totals = ExternalTotals::new(corpus.len() as u64 * 50);
    for kind in ActorKind::ALL {
        for (i, row) in actor_table(&all, corpus, kind, range, None, 1).raw.iter().enumerate() {
            totals.insert(kind, row.actor_id.clone(), row.topic_count * (20 + (i as u64 % 7) * 10));
        }
    }
    totals
}

fn config_toml() -> String {
    format!(
        r#"output_dir = "out"

[corpus]
path = "corpus.jsonl"

[delineate]
query = '{QUERY}'
years = [{FIRST_YEAR}, {LAST_YEAR}]
org_types = ["HEI", "RC"]

[indicators]
external_totals = "totals.csv"

[cooccur]
min_occurrence = 8

[burst]
top_k = 20

[sdg]
glossary = "glossary.csv"
"#
    )
}

/// Writes `corpus.jsonl`, `glossary.csv`, `totals.csv` and `config.toml`.
pub fn write_fixture(dir: &Path, options: SynthOptions) -> io::Result<Corpus> {
    fs::create_dir_all(dir)?;
    let corpus = generate(options);
    let mut out = BufWriter::new(File::create(dir.join("corpus.jsonl"))?);
    write_jsonl(&corpus, &mut out).map_err(io::Error::other)?;
    out.flush()?;
    fs::write(dir.join("glossary.csv"), glossary_csv())?;
    let mut out = BufWriter::new(File::create(dir.join("totals.csv"))?);
    external_totals(&corpus).write(&mut out)?;
    out.flush()?;
    fs::write(dir.join("config.toml"), config_toml())?;
    Ok(corpus)
}

/// Share of records matched by the org filter, for sanity checks.
pub fn org_share(corpus: &Corpus, filter: &OrgFilter) -> f64 {
    let n = corpus.records().iter().filter(|r| filter.accepts(r)).count();
    n as f64 / corpus.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdgscope_core::delineate::{parse_query, select_core};
    use sdgscope_core::sdg::read_glossary;

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(SynthOptions { records: 120, seed: 3 });
        let b = generate(SynthOptions { records: 120, seed: 3 });
        let c = generate(SynthOptions { records: 120, seed: 4 });
        assert_eq!(a.records(), b.records());
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn core_is_exactly_the_planted_records() {
        let corpus = generate(SynthOptions::default());
        let query = parse_query(QUERY).unwrap();
        let years = YearRange::new(FIRST_YEAR, LAST_YEAR).unwrap();
        let core = select_core(&corpus, &query, years);
        let expected: Vec<String> = (0..200)
            .filter(|&i| is_core(i) && (FIRST_YEAR..=LAST_YEAR).contains(&corpus.records()[i].year))
            .map(|i| format!("SYN{i:06}"))
            .collect();
        assert_eq!(core.sorted_ids(&corpus), expected);
    }

    #[test]
    fn glossary_parses_and_orgs_are_mostly_academic() {
        let g = read_glossary(glossary_csv().as_bytes()).unwrap();
        assert!(g.term_count() > 30);
        let share = org_share(&generate(SynthOptions::default()), &OrgFilter::hei_rc());
        assert!((0.7..0.95).contains(&share), "{share}");
    }
}
