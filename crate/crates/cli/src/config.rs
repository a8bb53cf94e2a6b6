//! Run configuration (TOML, schema version 1).
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every seed is either given explicitly or derived from the master
//! `seed` with a fixed tag, so nothing depends on wall-clock entropy.

use std::path::{Path, PathBuf};

use earnings_distill::analytics::{FilterTarget, Grouping, IcMethod, Thresholds};
use earnings_distill::distill::SentimentApproach;
use earnings_distill::embedding::MockMode;
use earnings_distill::features::{FeatureOptions, PropensityMode, SentimentMode};
use earnings_distill::nn::{Averaging, MlpConfig, SearchSpace};
use earnings_distill::rng::derive_seed;
use earnings_distill::teacher::{MockConfig, RetryPolicy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Master seed; sub-seeds not set below derive from it.
    pub seed: u64,
    pub paths: Paths,
    pub teacher: TeacherSection,
    pub sample: SampleSection,
    pub reduction: ReductionSection,
    pub embedding: EmbeddingSection,
    pub search: SearchSection,
    pub sentiment: SentimentSection,
    pub features: FeatureSection,
    pub ic: IcSection,
    pub filter: FilterSection,
    pub trends: TrendSection,
    pub validate: ValidateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            seed: 0,
            paths: Paths::default(),
            teacher: TeacherSection::default(),
            sample: SampleSection::default(),
            reduction: ReductionSection::default(),
            embedding: EmbeddingSection::default(),
            search: SearchSection::default(),
            sentiment: SentimentSection::default(),
            features: FeatureSection::default(),
            ic: IcSection::default(),
            filter: FilterSection::default(),
            trends: TrendSection::default(),
            validate: ValidateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Transcript records, one JSON object per line.
    pub corpus: PathBuf,
    /// Embedding store (binary or CSV). Required when `embedding.provider = "file"`.
    pub embeddings: Option<PathBuf>,
    /// Returns CSV for the `ic` subcommand.
    pub returns: Option<PathBuf>,
    /// Expert-labeled sentences (labels JSONL, `source = human`).
    pub benchmark: Option<PathBuf>,
    /// Completed review sheet for `validate-sample`.
    pub review: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: PathBuf::from("transcripts.jsonl"),
            embeddings: None,
            returns: None,
            benchmark: None,
            review: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherSection {
    /// `mock:` or an http(s) URL.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: u64,
    pub policy: RetryPolicy,
    pub mock: MockConfig,
}

impl Default for TeacherSection {
    fn default() -> Self {
        TeacherSection {
            endpoint: "mock:".into(),
            model: "gpt-3.5-turbo".into(),
            token_env: "TEACHER_API_TOKEN".into(),
            timeout_secs: 60,
            policy: RetryPolicy::default(),
            mock: MockConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    /// Share of sentences shown to the teacher for topic discovery.
    pub discovery_fraction: f64,
    /// Share of sentences labeled for training, drawn from the remainder.
    pub label_fraction: f64,
    pub discovery_seed: Option<u64>,
    pub label_seed: Option<u64>,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            discovery_fraction: 0.01,
            label_fraction: 0.1,
            discovery_seed: None,
            label_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    #[default]
    Threshold,
    Coverage,
    Clustering,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSection {
    pub method: ReductionMethod,
    pub threshold: f64,
    pub coverage: f64,
    pub k: usize,
    /// Sentences per topic in the expert review sheet.
    pub review_per_topic: usize,
    pub seed: Option<u64>,
}

impl Default for ReductionSection {
    fn default() -> Self {
        ReductionSection {
            method: ReductionMethod::Threshold,
            threshold: 0.02,
            coverage: 0.9,
            k: 10,
            review_per_topic: 5,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    File,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub provider: ProviderKind,
    pub dim: usize,
    pub mock_mode: MockMode,
    pub url: Option<String>,
    pub timeout_secs: u64,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub seed: Option<u64>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: ProviderKind::Mock,
            dim: earnings_distill::embedding::DEFAULT_DIM,
            mock_mode: MockMode::BagOfWords,
            url: None,
            timeout_secs: 30,
            batch_size: 64,
            max_in_flight: 4,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub trials: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub averaging: Averaging,
    pub parallel: bool,
    /// Share of labeled data kept aside as the teacher holdout.
    pub holdout_fraction: f64,
    pub split_seed: Option<u64>,
    pub search_seed: Option<u64>,
    pub space: SearchSpace,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            trials: 50,
            patience: 5,
            max_epochs: 100,
            averaging: Averaging::Macro,
            parallel: true,
            holdout_fraction: 0.2,
            split_seed: None,
            search_seed: None,
            space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentimentSection {
    pub approach: SentimentApproach,
    /// Teacher producing the pretraining labels for the transfer approach.
    pub preliminary_endpoint: String,
    pub preliminary_mock: MockConfig,
    /// Share of sentences labeled by the preliminary teacher, drawn outside
    /// the primary label sample.
    pub preliminary_fraction: f64,
    /// Network used for the sentiment head.
    pub model: MlpConfig,
    pub seed: Option<u64>,
}

impl Default for SentimentSection {
    fn default() -> Self {
        SentimentSection {
            approach: SentimentApproach::Transfer,
            preliminary_endpoint: "mock:".into(),
            preliminary_mock: MockConfig {
                seed: 101,
                bad_format_rate: 0.1,
                ..MockConfig::default()
            },
            preliminary_fraction: 0.1,
            model: MlpConfig::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub propensity: PropensityMode,
    pub sentiment: SentimentMode,
    pub hard_sentiment: bool,
}

impl Default for FeatureSection {
    fn default() -> Self {
        let o = FeatureOptions::default();
        FeatureSection {
            propensity: o.propensity,
            sentiment: o.sentiment,
            hard_sentiment: o.hard_sentiment,
        }
    }
}

impl FeatureSection {
    pub fn options(&self) -> FeatureOptions {
        FeatureOptions {
            propensity: self.propensity,
            sentiment: self.sentiment,
            hard_sentiment: self.hard_sentiment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcSection {
    pub method: IcMethod,
    pub horizon: u32,
    pub min_obs: usize,
    /// Panel columns to evaluate; empty means every column.
    pub columns: Vec<String>,
}

impl Default for IcSection {
    fn default() -> Self {
        IcSection {
            method: IcMethod::Spearman,
            horizon: 1,
            min_obs: 10,
            columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
    pub targets: Vec<FilterTarget>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let t = Thresholds::default();
        FilterSection {
            high: t.high,
            medium: t.medium,
            low: t.low,
            targets: FilterTarget::ALL.to_vec(),
        }
    }
}

impl FilterSection {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            high: self.high,
            medium: self.medium,
            low: self.low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendSection {
    pub groupings: Vec<Grouping>,
}

impl Default for TrendSection {
    fn default() -> Self {
        TrendSection {
            groupings: vec![Grouping::Market, Grouping::Sector],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Sentences per filter target in the review sample.
    pub size: usize,
    pub seed: Option<u64>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { size: 30, seed: None }
    }
}

/// Tags for seeds derived from the master seed.
pub mod tag {
    pub const DISCOVERY_SAMPLE: u64 = 1;
    pub const LABEL_SAMPLE: u64 = 2;
    pub const REDUCTION: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const SEARCH: u64 = 5;
    pub const SENTIMENT: u64 = 6;
    pub const VALIDATE: u64 = 7;
    pub const EMBEDDING: u64 = 8;
    pub const PRELIMINARY_SAMPLE: u64 = 9;
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.out);
        for p in [
            &mut self.paths.embeddings,
            &mut self.paths.returns,
            &mut self.paths.benchmark,
            &mut self.paths.review,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn seed_for(&self, explicit: Option<u64>, tag: u64) -> u64 {
        explicit.unwrap_or_else(|| derive_seed(self.seed, tag))
    }

    /// Structural checks that do not depend on which subcommand runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.version != SCHEMA_VERSION {
            return bad(format!("unsupported config version {} (expected {SCHEMA_VERSION})", self.version));
        }
        let unit = |name: &str, v: f64| -> Result<(), CliError> {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        unit("sample.discovery_fraction", self.sample.discovery_fraction)?;
        unit("sample.label_fraction", self.sample.label_fraction)?;
        unit("sentiment.preliminary_fraction", self.sentiment.preliminary_fraction)?;
        if !(self.search.holdout_fraction > 0.0 && self.search.holdout_fraction < 1.0) {
            return bad(format!("search.holdout_fraction must lie in (0, 1), got {}", self.search.holdout_fraction));
        }
        if !(self.reduction.threshold > 0.0 && self.reduction.threshold < 1.0) {
            return bad(format!("reduction.threshold must lie in (0, 1), got {}", self.reduction.threshold));
        }
        unit("reduction.coverage", self.reduction.coverage)?;
        if self.reduction.method == ReductionMethod::Clustering && self.reduction.k == 0 {
            return bad("reduction.k must be positive".into());
        }
        if self.embedding.dim == 0 {
            return bad("embedding.dim must be positive".into());
        }
        if self.embedding.provider == ProviderKind::Http && self.embedding.url.is_none() {
            return bad("embedding.url is required for the http provider".into());
        }
        if self.search.trials == 0 || self.search.max_epochs == 0 {
            return bad("search.trials and search.max_epochs must be positive".into());
        }
        if self.search.space.is_empty() {
            return bad("search.space has an empty field".into());
        }
        if self.ic.horizon == 0 {
            return bad("ic.horizon must be positive".into());
        }
        let t = self.filter.thresholds();
        for (name, v) in [("filter.high", t.high), ("filter.medium", t.medium), ("filter.low", t.low)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.teacher.mock.noise_rate() > 1.0 || self.sentiment.preliminary_mock.noise_rate() > 1.0 {
            return bad("mock noise rates must sum to at most 1".into());
        }
        if self.validate.size == 0 {
            return bad("validate.size must be positive".into());
        }
        Ok(())
    }
}
