//! Pipeline configuration: one TOML file, overridable from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdgscope_core::burst::BurstParams;
use sdgscope_core::cooccur::ClusterParams;
use sdgscope_core::delineate::{parse_query, TopicQuery};
use sdgscope_core::interlink::MatrixMode;
use sdgscope_core::{CorpusFormat, OrgFilter, OrgType, YearRange};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Bundle directory; not part of the config digest.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub corpus: CorpusSection,
    pub delineate: DelineateSection,
    #[serde(default)]
    pub indicators: IndicatorsSection,
    #[serde(default)]
    pub cooccur: CooccurSection,
    #[serde(default)]
    pub burst: BurstSection,
    pub sdg: SdgSection,
    #[serde(default)]
    pub interlink: InterlinkSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    /// `jsonl` or `csv`; inferred from the extension when absent.
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelineateSection {
    pub query: String,
    #[serde(default = "default_years")]
    pub years: [i32; 2],
    /// Org types defining the final set, or `["any"]`.
    #[serde(default = "default_org_types")]
    pub org_types: Vec<String>,
    #[serde(default = "default_layers")]
    pub expansion_layers: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicatorsSection {
    pub block_len: u32,
    pub external_totals: Option<PathBuf>,
    pub ai_display_multiplier: f64,
    pub min_count_institution: u64,
    pub min_count_country: u64,
    pub min_count_continent: u64,
}

impl Default for IndicatorsSection {
    fn default() -> Self {
        IndicatorsSection {
            block_len: 6,
            external_totals: None,
            ai_display_multiplier: 100.0,
            min_count_institution: 1,
            min_count_country: 1,
            min_count_continent: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CooccurSection {
    pub min_occurrence: u64,
    pub resolution: f64,
    pub min_cluster_size: usize,
    pub seed: u64,
    pub restarts: u32,
    pub top_terms: usize,
}

impl Default for CooccurSection {
    fn default() -> Self {
        CooccurSection {
            min_occurrence: 50,
            resolution: 1.0,
            min_cluster_size: 1,
            seed: 0,
            restarts: 10,
            top_terms: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BurstSection {
    pub s: f64,
    pub gamma: f64,
    pub top_k: usize,
}

impl Default for BurstSection {
    fn default() -> Self {
        BurstSection {
            s: 2.0,
            gamma: 1.0,
            top_k: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdgSection {
    pub glossary: PathBuf,
    #[serde(default)]
    pub scan_text: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterlinkSection {
    pub mode: String,
    pub resolution: f64,
    pub seed: u64,
    pub restarts: u32,
}

impl Default for InterlinkSection {
    fn default() -> Self {
        InterlinkSection {
            mode: "cocitation".into(),
            resolution: 1.0,
            seed: 0,
            restarts: 10,
        }
    }
}

fn default_years() -> [i32; 2] {
    [2000, 2017]
}

fn default_org_types() -> Vec<String> {
    vec!["HEI".into(), "RC".into()]
}

fn default_layers() -> u32 {
    1
}

/// Command-line overrides; any flag given wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Output bundle directory
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Corpus file (JSONL or CSV)
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Topical query, e.g. 'TS="sustainable development goal*"'
    #[arg(long)]
    pub query: Option<String>,
    /// First year of the analysis range [default: 2000]
    #[arg(long)]
    pub from_year: Option<i32>,
    /// Last year of the analysis range [default: 2017]
    #[arg(long)]
    pub to_year: Option<i32>,
    /// Comma-separated org types for the final set, or `any` [default: HEI,RC]
    #[arg(long, value_delimiter = ',')]
    pub org_types: Option<Vec<String>>,
    /// Direct-citation expansion layers [default: 1]
    #[arg(long)]
    pub layers: Option<u32>,
    /// Period block length in years [default: 6]
    #[arg(long)]
    pub block_len: Option<u32>,
    /// External totals CSV for the Activity Index
    #[arg(long, value_name = "FILE")]
    pub external_totals: Option<PathBuf>,
    /// Display multiplier for the Activity Index [default: 100]
    #[arg(long)]
    pub ai_multiplier: Option<f64>,
    /// Minimum keyword occurrence for network terms [default: 50]
    #[arg(long)]
    pub min_occurrence: Option<u64>,
    /// Modularity resolution for keyword clustering [default: 1]
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Minimum keyword cluster size [default: 1]
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// Clustering seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Clustering restarts [default: 10]
    #[arg(long)]
    pub restarts: Option<u32>,
    /// Burst rate multiplier s > 1 [default: 2]
    #[arg(long)]
    pub s: Option<f64>,
    /// Burst transition cost gamma >= 0 [default: 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of bursts reported [default: 60]
    #[arg(long)]
    pub top_k: Option<usize>,
    /// SDG glossary CSV (term,sdg_id)
    #[arg(long, value_name = "FILE")]
    pub glossary: Option<PathBuf>,
    /// Also match glossary terms in titles and abstracts
    #[arg(long)]
    pub scan_text: bool,
    /// SDG matrix used for clustering: cocitation or coclassification [default: cocitation]
    #[arg(long)]
    pub mode: Option<String>,
}

fn absolute(path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        return path;
    }
    std::env::current_dir().map(|d| d.join(&path)).unwrap_or(path)
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.base_dir = base_dir.to_owned();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.output_dir {
            self.output_dir = absolute(v.clone());
        }
        if let Some(v) = &o.corpus {
            self.corpus.path = absolute(v.clone());
        }
        if let Some(v) = &o.query {
            self.delineate.query = v.clone();
        }
        if let Some(v) = o.from_year {
            self.delineate.years[0] = v;
        }
        if let Some(v) = o.to_year {
            self.delineate.years[1] = v;
        }
        if let Some(v) = &o.org_types {
            self.delineate.org_types = v.clone();
        }
        if let Some(v) = o.layers {
            self.delineate.expansion_layers = v;
        }
        if let Some(v) = o.block_len {
            self.indicators.block_len = v;
        }
        if let Some(v) = &o.external_totals {
            self.indicators.external_totals = Some(absolute(v.clone()));
        }
        if let Some(v) = o.ai_multiplier {
            self.indicators.ai_display_multiplier = v;
        }
        if let Some(v) = o.min_occurrence {
            self.cooccur.min_occurrence = v;
        }
        if let Some(v) = o.resolution {
            self.cooccur.resolution = v;
        }
        if let Some(v) = o.min_cluster_size {
            self.cooccur.min_cluster_size = v;
        }
        if let Some(v) = o.seed {
            self.cooccur.seed = v;
        }
        if let Some(v) = o.restarts {
            self.cooccur.restarts = v;
        }
        if let Some(v) = o.s {
            self.burst.s = v;
        }
        if let Some(v) = o.gamma {
            self.burst.gamma = v;
        }
        if let Some(v) = o.top_k {
            self.burst.top_k = v;
        }
        if let Some(v) = &o.glossary {
            self.sdg.glossary = absolute(v.clone());
        }
        if o.scan_text {
            self.sdg.scan_text = true;
        }
        if let Some(v) = &o.mode {
            self.interlink.mode = v.clone();
        }
    }

    /// Checks every parameter against its documented range.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.corpus_format()?;
        self.query()?;
        self.years()?;
        self.org_filter()?;
        self.interlink_mode()?;
        if self.indicators.block_len == 0 {
            return bad("indicators.block_len must be at least 1".into());
        }
        if !self.indicators.ai_display_multiplier.is_finite() || self.indicators.ai_display_multiplier <= 0.0 {
            return bad("indicators.ai_display_multiplier must be positive".into());
        }
        if self.cooccur.min_occurrence == 0 {
            return bad("cooccur.min_occurrence must be at least 1".into());
        }
        for (name, r) in [
            ("cooccur.resolution", self.cooccur.resolution),
            ("interlink.resolution", self.interlink.resolution),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.cooccur.min_cluster_size == 0 {
            return bad("cooccur.min_cluster_size must be at least 1".into());
        }
        if self.cooccur.restarts == 0 || self.interlink.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        self.burst_params().validate().or_else(|e| bad(format!("burst: {e}")))?;
        if self.burst.top_k == 0 {
            return bad("burst.top_k must be at least 1".into());
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.corpus.path)
    }

    pub fn glossary_path(&self) -> PathBuf {
        self.resolve(&self.sdg.glossary)
    }

    pub fn external_totals_path(&self) -> Option<PathBuf> {
        self.indicators.external_totals.as_deref().map(|p| self.resolve(p))
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat, CliError> {
        match &self.corpus.format {
            Some(f) => f.parse().map_err(|e| CliError::Config(format!("corpus.format: {e}"))),
            None => CorpusFormat::from_path(&self.corpus.path).ok_or_else(|| {
                CliError::Config(format!(
                    "cannot infer corpus format from `{}`; set corpus.format",
                    self.corpus.path.display()
                ))
            }),
        }
    }

    pub fn query(&self) -> Result<TopicQuery, CliError> {
        parse_query(&self.delineate.query).map_err(|e| CliError::Config(format!("delineate.query: {e}")))
    }

    pub fn years(&self) -> Result<YearRange, CliError> {
        let [lo, hi] = self.delineate.years;
        YearRange::new(lo, hi).map_err(|e| CliError::Config(format!("delineate.years: {e}")))
    }

    pub fn org_filter(&self) -> Result<OrgFilter, CliError> {
        let types = &self.delineate.org_types;
        if types.iter().any(|t| t.eq_ignore_ascii_case("any")) {
            return Ok(OrgFilter::Any);
        }
        if types.is_empty() {
            return Err(CliError::Config("delineate.org_types is empty".into()));
        }
        types
            .iter()
            .map(|t| t.parse::<OrgType>())
            .collect::<Result<Vec<_>, _>>()
            .map(OrgFilter::only)
            .map_err(|e| CliError::Config(format!("delineate.org_types: {e}")))
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            resolution: self.cooccur.resolution,
            min_cluster_size: self.cooccur.min_cluster_size,
            seed: self.cooccur.seed,
            restarts: self.cooccur.restarts,
        }
    }

    pub fn interlink_cluster_params(&self) -> ClusterParams {
        ClusterParams {
            resolution: self.interlink.resolution,
            min_cluster_size: 1,
            seed: self.interlink.seed,
            restarts: self.interlink.restarts,
        }
    }

    pub fn burst_params(&self) -> BurstParams {
        BurstParams {
            s: self.burst.s,
            gamma: self.burst.gamma,
        }
    }

    pub fn interlink_mode(&self) -> Result<MatrixMode, CliError> {
        self.interlink
            .mode
            .parse()
            .map_err(|e| CliError::Config(format!("interlink.mode: {e}")))
    }

    /// SHA-256 of the effective configuration, excluding the output directory.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
