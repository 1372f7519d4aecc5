//! Run configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use legis_core::corpus::SynthParams;
use legis_core::models::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Remote,
    Replay,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub bills: PathBuf,
    pub legislators: PathBuf,
    pub constituencies: PathBuf,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            bills: "data/bills.csv".into(),
            legislators: "data/legislators.csv".into(),
            constituencies: "data/constituencies.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub endpoint: String,
    pub model: String,
    pub concurrency: usize,
    pub timeout_secs: u64,
    /// Defaults to `transcript.jsonl` in the output directory.
    pub transcript: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
    pub max_attempts: usize,
    pub base_delay_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Mock,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            concurrency: 4,
            timeout_secs: 120,
            transcript: None,
            temperature: 0.2,
            max_tokens: 256,
            top_p: 1.0,
            max_attempts: 3,
            base_delay_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub translate: bool,
    /// Judge translated summaries in the sentence and context stages.
    pub use_translated: bool,
    pub prompts_dir: Option<PathBuf>,
    pub keyword_batch_size: usize,
    pub provider_keyword_mode: bool,
    pub audit_fraction: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            translate: true,
            use_translated: true,
            prompts_dir: None,
            keyword_batch_size: 20,
            provider_keyword_mode: false,
            audit_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub include_approval: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { include_approval: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub n_runs: usize,
    /// Model configurations; each model label is tuned over its own entries.
    pub grid: Vec<TrainConfig>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            test_fraction: 0.15,
            cv_folds: 5,
            n_runs: 10,
            grid: vec![
                TrainConfig::mlp(),
                TrainConfig::rf(),
                TrainConfig::gbdt_leaf_wise(),
                TrainConfig::gbdt_level_wise(),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplainDataset {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Label of the trained model to explain.
    pub model: String,
    pub dataset: ExplainDataset,
    pub dependence_features: Vec<String>,
    pub dependence_buckets: usize,
    pub correlation_threshold: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            model: "gbdt-leafwise".into(),
            dataset: ExplainDataset::Test,
            dependence_features: vec![
                "pct_conservative_sponsors".into(),
                "pct_progressive_sponsors".into(),
                "n_sponsors".into(),
                "terms_elected".into(),
            ],
            dependence_buckets: 10,
            correlation_threshold: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub synth: u64,
    pub audit: u64,
    pub split: u64,
    pub cv: u64,
    pub training: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { synth: 7, audit: 7, split: 42, cv: 42, training: 42 }
    }
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self { synth: seed, audit: seed, split: seed, cv: seed, training: seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_bills: usize,
    pub n_legislators: usize,
    pub transport_fraction: f64,
    pub ideology_clustering: f64,
    pub mean_cosponsors: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            n_bills: p.n_bills,
            n_legislators: p.n_legislators,
            transport_fraction: p.transport_fraction,
            ideology_clustering: p.ideology_clustering,
            mean_cosponsors: p.mean_cosponsors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: Option<PathBuf>,
    pub input: InputConfig,
    pub provider: ProviderConfig,
    pub filter: FilterConfig,
    pub features: FeatureConfig,
    pub train: TrainSection,
    pub explain: ExplainConfig,
    pub seeds: Seeds,
    pub synth: SynthSection,
}

impl RunConfig {
    /// Parses a config file; relative input paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.input.bills);
        rebase(&mut cfg.input.legislators);
        rebase(&mut cfg.input.constituencies);
        if let Some(p) = cfg.provider.transcript.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.filter.prompts_dir.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.output.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn synth_params(&self) -> SynthParams {
        SynthParams {
            seed: self.seeds.synth,
            n_bills: self.synth.n_bills,
            n_legislators: self.synth.n_legislators,
            transport_fraction: self.synth.transport_fraction,
            ideology_clustering: self.synth.ideology_clustering,
            mean_cosponsors: self.synth.mean_cosponsors,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.provider.concurrency == 0 {
            return bad("provider.concurrency must be at least 1".into());
        }
        if self.provider.max_attempts == 0 {
            return bad("provider.max_attempts must be at least 1".into());
        }
        if !(self.filter.audit_fraction > 0.0 && self.filter.audit_fraction <= 1.0) {
            return bad(format!("filter.audit_fraction {} must lie in (0, 1]", self.filter.audit_fraction));
        }
        if self.filter.keyword_batch_size == 0 || self.filter.keyword_batch_size > 20 {
            return bad("filter.keyword_batch_size must lie in 1..=20".into());
        }
        if !(self.train.test_fraction > 0.0 && self.train.test_fraction < 1.0) {
            return bad(format!("train.test_fraction {} must lie in (0, 1)", self.train.test_fraction));
        }
        if self.train.cv_folds < 2 {
            return bad("train.cv_folds must be at least 2".into());
        }
        if self.train.n_runs < 2 {
            return bad("train.n_runs must be at least 2".into());
        }
        if self.train.grid.is_empty() {
            return bad("train.grid is empty".into());
        }
        for c in &self.train.grid {
            c.validate().map_err(|e| CliError::Config(format!("train.grid ({}): {e}", c.label())))?;
        }
        if self.explain.dependence_buckets == 0 {
            return bad("explain.dependence_buckets must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.train.grid.len(), 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn sections_and_grid_parse() {
        let text = r#"
            [provider]
            mode = "replay"
            concurrency = 2

            [seeds]
            split = 3

            [[train.grid]]
            kind = "gbdt"
            growth_policy = "leaf_wise"
            n_estimators = 20
            learning_rate = 0.1
            num_leaves = 4
            min_child_weight = 1.0
            l2_regularization = 1.0
            histogram_bins = 64
            subsample = 1.0
            colsample = 1.0
            bootstrap = false
            hidden_units = 0
            batch_size = 1
            max_epochs = 1
            patience = 1
            seed = 1
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.provider.mode, ProviderMode::Replay);
        assert_eq!(cfg.seeds.split, 3);
        assert_eq!(cfg.seeds.audit, 7);
        assert_eq!(cfg.train.grid[0].num_leaves, Some(4));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[provider]\napi_key = \"x\"\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "output = \"out\"\n[input]\nbills = \"b.csv\"\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.input.bills, dir.path().join("b.csv"));
        assert_eq!(cfg.output, Some(dir.path().join("out")));
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = RunConfig::default();
        cfg.filter.audit_fraction = 0.0;
        match cfg.validate() {
            Err(CliError::Config(m)) => assert!(m.contains("audit_fraction")),
            other => panic!("{other:?}"),
        }
    }
}
