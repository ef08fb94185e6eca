//! Pipeline configuration: named presets, TOML files layered on top of a
//! preset, and command-line overrides on top of both.

use std::path::{Path, PathBuf};

use rotor_vrae::clustering::Linkage;
use rotor_vrae::dataset::{FleetSpec, SynthConfig, BLADE_FEATURES};
use rotor_vrae::projection::TsneConfig;
use rotor_vrae::vrae::{AnnealSchedule, VraeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Normal versus any ice.
    TwoClass,
    /// Normal versus each of the three ice zones.
    MultiClass,
}

impl Task {
    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            Task::TwoClass => &["normal", "iced"],
            Task::MultiClass => &["normal", "zone 1", "zone 2", "zone 3"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Maps a window's zone tag (0 normal, 1..=3 zone) to this task's class.
    pub fn class_of(self, zone_tag: usize) -> usize {
        match self {
            Task::TwoClass => usize::from(zone_tag > 0),
            Task::MultiClass => zone_tag,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// Generated by `generate` into `<out_dir>/data`.
    Synthetic,
    /// An existing directory of simulation CSVs plus `metadata.csv`.
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_dir: Option<PathBuf>,
    pub synth: SynthConfig,
    pub fleet: FleetSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSplit {
    Train,
    Test,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    pub features: Vec<String>,
    pub window_length: usize,
    pub stride: usize,
    pub train_fraction: f64,
    /// Which windows `encode` embeds for the downstream stages.
    pub evaluate_on: EvalSplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_units: usize,
    pub latent_dim: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Arithmetic used for training and encoding.
    pub precision: Precision,
    /// Score the test split every this many epochs; 0 disables it.
    pub validation_interval: usize,
    pub anneal: AnnealSchedule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMethod {
    Pca,
    KernelPca,
    Tsne,
    Spectral,
}

impl ProjectionMethod {
    pub fn display_name(self) -> &'static str {
        match self {
            ProjectionMethod::Pca => "PCA",
            ProjectionMethod::KernelPca => "Kernel PCA",
            ProjectionMethod::Tsne => "t-SNE",
            ProjectionMethod::Spectral => "Spectral",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    pub components: usize,
    /// RBF width for kernel PCA; derived from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub tsne_learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub neighbors: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Kmeans,
    Hierarchical,
    Dbscan,
}

impl ClusterMethod {
    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::Kmeans => "kmeans",
            ClusterMethod::Hierarchical => "hierarchical",
            ClusterMethod::Dbscan => "dbscan",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ClusterMethod::Kmeans => "KMeans++",
            ClusterMethod::Hierarchical => "Hierarchical",
            ClusterMethod::Dbscan => "DBSCAN",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterInput {
    /// The projected points.
    Embedding,
    /// The full latent vectors.
    Latents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    pub methods: Vec<ClusterMethod>,
    pub k: usize,
    pub on: ClusterInput,
    pub linkage: Linkage,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// DBSCAN radius; the median `min_pts`-NN distance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub min_pts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub preset: String,
    /// Root seed; every stage derives its randomness from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub task: Task,
    pub data: DataConfig,
    pub preprocess: PreprocessConfig,
    pub model: ModelConfig,
    pub projection: ProjectionConfig,
    pub clustering: ClusteringConfig,
}

pub const PRESETS: [&str; 2] = ["two-class", "multi-class"];

impl PipelineConfig {
    pub fn preset(name: &str) -> CliResult<Self> {
        let base = PipelineConfig {
            preset: name.to_string(),
            seed: 0,
            out_dir: PathBuf::from(format!("runs/{name}")),
            task: Task::TwoClass,
            data: DataConfig {
                source: DataSource::Synthetic,
                csv_dir: None,
                synth: SynthConfig::default(),
                fleet: FleetSpec::default(),
            },
            preprocess: PreprocessConfig {
                features: BLADE_FEATURES.iter().map(|s| s.to_string()).collect(),
                window_length: 200,
                stride: 200,
                train_fraction: 0.7,
                evaluate_on: EvalSplit::Test,
            },
            model: ModelConfig {
                hidden_units: 90,
                latent_dim: 20,
                learning_rate: 0.0005,
                dropout_rate: 0.2,
                clip_norm: 5.0,
                batch_size: 64,
                epochs: 200,
                precision: Precision::F32,
                validation_interval: 10,
                // reconstruction is a mean over every entry of a window, so
                // a unit KL weight swamps it; 1e-4 is close to 1 / (L * D)
                anneal: AnnealSchedule::constant(1e-4),
            },
            projection: ProjectionConfig {
                method: ProjectionMethod::Pca,
                components: 2,
                gamma: None,
                perplexity: 30.0,
                tsne_iterations: 1000,
                tsne_learning_rate: 200.0,
                early_exaggeration: 12.0,
                exaggeration_iterations: 250,
                neighbors: 10,
            },
            clustering: ClusteringConfig {
                methods: vec![ClusterMethod::Kmeans, ClusterMethod::Hierarchical, ClusterMethod::Dbscan],
                k: 2,
                on: ClusterInput::Embedding,
                linkage: Linkage::Ward,
                restarts: 10,
                max_iter: 300,
                tol: 1e-8,
                eps: None,
                min_pts: 4,
            },
        };
        match name {
            "two-class" => Ok(base),
            "multi-class" => {
                let mut c = base;
                c.task = Task::MultiClass;
                c.model.hidden_units = 128;
                c.model.latent_dim = 5;
                c.model.anneal = AnnealSchedule::cyclical(4, 0.5, 1e-4);
                c.projection.method = ProjectionMethod::Tsne;
                c.clustering.k = 4;
                Ok(c)
            }
            other => Err(CliError::Usage(format!(
                "unknown preset '{other}' (expected one of: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    /// A preset with a TOML document layered on top. The document may name
    /// its own base with a top-level `preset` key; `preset_override` wins.
    pub fn from_toml(text: &str, preset_override: Option<&str>, origin: &Path) -> CliResult<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        let name = preset_override
            .map(str::to_string)
            .or_else(|| user.get("preset").and_then(|v| v.as_str()).map(str::to_string))
            .unwrap_or_else(|| "two-class".to_string());
        let base = Self::preset(&name)?;
        let mut merged = toml::Table::try_from(&base)
            .map_err(|e| CliError::Usage(format!("cannot encode preset: {e}")))?;
        merge(&mut merged, user);
        merged.insert("preset".into(), toml::Value::String(name));
        let config: PipelineConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, preset_override: Option<&str>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, preset_override, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config is representable as TOML")
    }

    pub fn class_names(&self) -> Vec<String> {
        self.task.class_names()
    }

    /// Model hyperparameters in the form the trainer takes.
    pub fn vrae_config(&self) -> VraeConfig {
        let m = &self.model;
        VraeConfig {
            input_dim: self.preprocess.features.len(),
            hidden_units: m.hidden_units,
            latent_dim: m.latent_dim,
            learning_rate: m.learning_rate,
            dropout_rate: m.dropout_rate,
            clip_norm: m.clip_norm,
            batch_size: m.batch_size,
            epochs: m.epochs,
            anneal: m.anneal.clone(),
            seed: self.seed,
        }
    }

    pub fn tsne_config(&self) -> TsneConfig {
        let p = &self.projection;
        TsneConfig {
            perplexity: p.perplexity,
            iterations: p.tsne_iterations,
            learning_rate: p.tsne_learning_rate,
            early_exaggeration: p.early_exaggeration,
            exaggeration_iterations: p.exaggeration_iterations,
            seed: self.seed,
            ..TsneConfig::default()
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.data.synth.clone()
        }
    }

    /// Checks that do not need any file to exist.
    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.data.source == DataSource::Csv && self.data.csv_dir.is_none() {
            return usage("data.source = \"csv\" needs data.csv_dir".into());
        }
        let p = &self.preprocess;
        if p.features.is_empty() {
            return usage("preprocess.features must name at least one column".into());
        }
        if p.window_length == 0 || p.stride == 0 {
            return usage("window_length and stride must be positive".into());
        }
        if !(p.train_fraction > 0.0 && p.train_fraction <= 1.0) {
            return usage(format!("train_fraction must lie in (0, 1], got {}", p.train_fraction));
        }
        if p.train_fraction == 1.0 && p.evaluate_on == EvalSplit::Test {
            return usage("train_fraction = 1 leaves no test split to evaluate".into());
        }
        self.vrae_config().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.clustering.methods.is_empty() {
            return usage("clustering.methods must list at least one method".into());
        }
        if self.clustering.k == 0 {
            return usage("clustering.k must be positive".into());
        }
        if self.projection.components < 2 {
            return usage("projection.components must be at least 2 for plotting".into());
        }
        if self.projection.gamma.is_some_and(|g| !(g > 0.0)) {
            return usage("projection.gamma must be positive".into());
        }
        if self.clustering.eps.is_some_and(|e| !(e > 0.0)) {
            return usage("clustering.eps must be positive".into());
        }
        Ok(())
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESETS {
            let c = PipelineConfig::preset(name).unwrap();
            c.validate().unwrap();
            let back = PipelineConfig::from_toml(&c.to_toml(), None, Path::new("x.toml")).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn file_overrides_merge_into_preset() {
        let text = "preset = \"multi-class\"\nseed = 9\n[model]\nepochs = 3\n";
        let c = PipelineConfig::from_toml(text, None, Path::new("x.toml")).unwrap();
        assert_eq!(c.task, Task::MultiClass);
        assert_eq!(c.seed, 9);
        assert_eq!(c.model.epochs, 3);
        assert_eq!(c.model.hidden_units, 128);
    }

    #[test]
    fn typos_are_usage_errors() {
        let err = PipelineConfig::from_toml("[model]\nhiden_units = 3\n", None, Path::new("x.toml")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(PipelineConfig::preset("three-class").is_err());
    }

    #[test]
    fn task_class_mapping() {
        assert_eq!(Task::TwoClass.class_of(3), 1);
        assert_eq!(Task::MultiClass.class_of(3), 3);
        assert_eq!(Task::MultiClass.class_names().len(), 4);
    }
}
