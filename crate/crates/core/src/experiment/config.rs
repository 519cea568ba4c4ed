//! Experiment configuration: a TOML file mapping onto every knob of the
//! pipeline, with the conventional defaults baked in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CorrKind, FeatureParams, PloDistStat};
use crate::perfmodel::ForestConfig;
use crate::saea::SaeaConfig;
use crate::seeding;
use crate::surrogates::SurrogateKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "defaults::workers")]
    pub workers: usize,
    pub suite: SuiteSpec,
    #[serde(default = "defaults::surrogates")]
    pub surrogates: Vec<String>,
    #[serde(default = "defaults::repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub saea: SaeaSettings,
    #[serde(default)]
    pub features: FeatureSettings,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub static_sample: StaticSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub bases: Vec<String>,
    pub dim: usize,
    #[serde(default)]
    pub same_base_pairs: bool,
    #[serde(default = "defaults::anchor_samples")]
    pub anchor_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaeaSettings {
    pub n_init: usize,
    pub fe_max_true: usize,
    pub fe_max_surrogate: usize,
    pub mu: usize,
    pub pop_size: usize,
    pub checkpoints: Vec<usize>,
    pub sample_budget: usize,
    pub lr_knn_k: usize,
    pub eta_c: f64,
    pub eta_m: f64,
    pub p_m: Option<f64>,
    pub alpha: f64,
    pub global_t: bool,
}

impl Default for SaeaSettings {
    fn default() -> Self {
        let d = SaeaConfig::default();
        Self {
            n_init: d.n_init,
            fe_max_true: d.fe_max_true,
            fe_max_surrogate: d.fe_max_surrogate,
            mu: d.mu,
            pop_size: d.pop_size,
            checkpoints: d.checkpoints,
            sample_budget: d.sample_budget,
            lr_knn_k: d.lr_knn_k,
            eta_c: d.eta_c,
            eta_m: d.eta_m,
            p_m: d.p_m,
            alpha: d.alpha,
            global_t: d.global_t,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSettings {
    /// neighbourhood size; omitted derives min(2 * dim, m - 1)
    pub k_neig: Option<usize>,
    pub n_walks: usize,
    /// "spearman" or "pearson"
    pub corr: String,
    /// "max" or "avg"
    pub plo_dist: String,
    pub exact_walks: bool,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            k_neig: None,
            n_walks: 30,
            corr: "spearman".into(),
            plo_dist: "max".into(),
            exact_walks: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub rfe_iterations: usize,
    pub eval_iterations: usize,
    pub max_features: usize,
    pub n_trees: usize,
    pub min_node: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            rfe_iterations: 1000,
            eval_iterations: 1000,
            max_features: 5,
            n_trees: 500,
            min_node: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticSettings {
    /// static sample holds multiplier * dim points
    pub multiplier: usize,
}

impl Default for StaticSettings {
    fn default() -> Self {
        Self { multiplier: 100 }
    }
}

mod defaults {
    use crate::surrogates::SurrogateKind;

    pub fn workers() -> usize {
        8
    }

    pub fn repeats() -> u32 {
        15
    }

    pub fn anchor_samples() -> usize {
        10_000
    }

    pub fn surrogates() -> Vec<String> {
        SurrogateKind::ALL.iter().map(|k| k.id().to_string()).collect()
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// The desk-scale reference experiment: 4 bases in 5 dimensions, all
    /// five surrogates, 5 repeats, 256 true evaluations with checkpoints
    /// every 64.
    pub fn desk(master_seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            master_seed,
            out_dir: out_dir.into(),
            workers: 8,
            suite: SuiteSpec {
                bases: crate::problems::BaseKind::DEFAULT
                    .iter()
                    .map(|k| k.id().to_string())
                    .collect(),
                dim: 5,
                same_base_pairs: false,
                anchor_samples: 10_000,
            },
            surrogates: defaults::surrogates(),
            repeats: 5,
            saea: SaeaSettings {
                fe_max_true: 256,
                checkpoints: vec![64, 128, 192, 256],
                ..Default::default()
            },
            features: FeatureSettings::default(),
            model: ModelSettings::default(),
            static_sample: StaticSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        self.surrogate_kinds()?;
        self.feature_params()?;
        self.saea_config(0, 0).validate()?;
        if self.model.max_features == 0 || self.model.n_trees == 0 {
            return Err(Error::Config("model settings must be positive".into()));
        }
        if self.static_sample.multiplier == 0 {
            return Err(Error::Config("static sample multiplier must be positive".into()));
        }
        Ok(())
    }

    pub fn surrogate_kinds(&self) -> Result<Vec<SurrogateKind>> {
        self.surrogates.iter().map(|s| SurrogateKind::from_id(s)).collect()
    }

    pub fn feature_params(&self) -> Result<FeatureParams> {
        let corr = match self.features.corr.as_str() {
            "spearman" => CorrKind::Spearman,
            "pearson" => CorrKind::Pearson,
            other => return Err(Error::Config(format!("unknown correlation kind `{other}`"))),
        };
        let plo_dist = match self.features.plo_dist.as_str() {
            "max" => PloDistStat::Max,
            "avg" => PloDistStat::Avg,
            other => return Err(Error::Config(format!("unknown plo distance stat `{other}`"))),
        };
        if self.features.n_walks == 0 && !self.features.exact_walks {
            return Err(Error::Config("sampled walks need n_walks >= 1".into()));
        }
        Ok(FeatureParams {
            k_neig: self.features.k_neig,
            n_walks: self.features.n_walks,
            corr,
            plo_dist,
            exact_walks: self.features.exact_walks,
        })
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.model.n_trees,
            mtry: None,
            min_node: self.model.min_node,
        }
    }

    /// Per-run seed: a stable hash of the master seed and the unit key, so
    /// execution order and worker count never matter.
    pub fn run_seed(&self, problem: &str, surrogate: SurrogateKind, repeat: u32) -> u64 {
        seeding::derive_seed(
            self.master_seed,
            &["run", problem, surrogate.id(), &repeat.to_string()],
        )
    }

    pub fn saea_config(&self, seed: u64, repeat: u32) -> SaeaConfig {
        SaeaConfig {
            n_init: self.saea.n_init,
            fe_max_true: self.saea.fe_max_true,
            fe_max_surrogate: self.saea.fe_max_surrogate,
            mu: self.saea.mu,
            pop_size: self.saea.pop_size,
            checkpoints: self.saea.checkpoints.clone(),
            sample_budget: self.saea.sample_budget,
            seed,
            repeat,
            lr_knn_k: self.saea.lr_knn_k,
            eta_c: self.saea.eta_c,
            eta_m: self.saea.eta_m,
            p_m: self.saea.p_m,
            alpha: self.saea.alpha,
            global_t: self.saea.global_t,
        }
    }

    pub fn static_size(&self) -> usize {
        self.static_sample.multiplier * self.suite.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_preset_is_valid() {
        let config = ExperimentConfig::desk(42, "/tmp/out");
        config.validate().unwrap();
        assert_eq!(config.surrogate_kinds().unwrap().len(), 5);
        assert_eq!(config.static_size(), 500);
        assert_eq!(config.saea.checkpoints, vec![64, 128, 192, 256]);
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            master_seed = 7
            out_dir = "results"

            [suite]
            bases = ["sphere", "rastrigin"]
            dim = 3
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(config.repeats, 15);
        assert_eq!(config.saea.fe_max_true, 8192);
        assert_eq!(config.saea.checkpoints, vec![256, 1280, 1792, 8192]);
        assert_eq!(config.model.rfe_iterations, 1000);
        assert_eq!(config.static_sample.multiplier, 100);
        assert_eq!(config.surrogates.len(), 5);
    }

    #[test]
    fn bad_settings_are_rejected() {
        let mut config = ExperimentConfig::desk(1, "/tmp/x");
        config.surrogates = vec!["kriging".into()];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::desk(1, "/tmp/x");
        config.features.corr = "kendall".into();
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::desk(1, "/tmp/x");
        config.saea.checkpoints = vec![512];
        assert!(config.validate().is_err());
    }

    #[test]
    fn run_seeds_are_stable_and_distinct() {
        let config = ExperimentConfig::desk(9, "/tmp/x");
        let a = config.run_seed("p", SurrogateKind::Knn, 0);
        assert_eq!(a, config.run_seed("p", SurrogateKind::Knn, 0));
        assert_ne!(a, config.run_seed("p", SurrogateKind::Knn, 1));
        assert_ne!(a, config.run_seed("p", SurrogateKind::Idw, 0));
        assert_ne!(a, config.run_seed("q", SurrogateKind::Knn, 0));
    }
}
