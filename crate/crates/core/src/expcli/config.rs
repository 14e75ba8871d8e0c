//! Experiment configuration files.
//!
//! A config is TOML. An optional `preset = "<name>"` line pulls in a full
//! named configuration first; every other table in the file is laid over it.
//! Tables carrying a `kind` or `mode` tag are replaced rather than merged when
//! the tag changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::crawler::observation_dim;
use crate::envs::track::TrackParams;
use crate::envs::{CrawlerParams, EnvConfig};
use crate::error::{Error, Result};
use crate::es::{EsConfig, EvolutionConfig, SeedMode, Shaping};
use crate::genome::GenomeMode;
use crate::net::{ConvFrontendSpec, LifetimeConfig, NetworkTopology, Normalization, PlasticityVariant};

pub const PRESETS: [&str; 4] = ["paper-quadruped", "paper-vision", "desk-crawler", "desk-track"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generations: u64,
    pub master_seed: u64,
    pub eval_seed: u64,
    pub seed_mode: SeedMode,
    /// Episodes per seen scenario for each candidate.
    pub train_episodes: usize,
    /// Episodes per seen scenario for the per-generation evaluation.
    pub eval_episodes: usize,
    /// Episodes per scenario in evaluation reports.
    pub report_episodes: usize,
    /// Checkpoint period in generations; 0 keeps only the final one.
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            generations: 300,
            master_seed: 0,
            eval_seed: 1_000,
            seed_mode: SeedMode::Fresh,
            train_episodes: 1,
            eval_episodes: 5,
            report_episodes: 100,
            checkpoint_every: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub name: String,
    pub topology: NetworkTopology,
    pub genome: GenomeMode,
    pub env: EnvConfig,
    #[serde(default)]
    pub es: EsConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub lifetime: LifetimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let hebbian = GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta);
        let cfg = match name {
            "paper-quadruped" => ExperimentConfig {
                preset: Some(name.into()),
                name: name.into(),
                topology: NetworkTopology::quadruped(),
                genome: hebbian,
                env: EnvConfig::Crawler { horizon: 1_000, params: CrawlerParams { legs: 8, ..CrawlerParams::default() } },
                es: EsConfig { population: 500, ..EsConfig::default() },
                run: RunConfig { generations: 1_000, ..RunConfig::default() },
                lifetime: LifetimeConfig::default(),
                output_dir: None,
            },
            "paper-vision" => ExperimentConfig {
                preset: Some(name.into()),
                name: name.into(),
                topology: NetworkTopology::vision(),
                genome: hebbian,
                env: EnvConfig::Track { horizon: 1_000, params: TrackParams { rgb_frames: true, ..TrackParams::default() } },
                es: EsConfig { population: 200, ..EsConfig::default() },
                run: RunConfig { generations: 300, ..RunConfig::default() },
                lifetime: LifetimeConfig { normalization: Normalization::LayerMaxAbs, ..LifetimeConfig::default() },
                output_dir: None,
            },
            "desk-crawler" => ExperimentConfig {
                preset: Some(name.into()),
                name: name.into(),
                topology: NetworkTopology::desk_crawler(4),
                genome: hebbian,
                env: EnvConfig::desk_crawler(),
                es: EsConfig { population: 100, shaping: Shaping::CenteredRank, ..EsConfig::default() },
                run: RunConfig::default(),
                lifetime: LifetimeConfig::default(),
                output_dir: None,
            },
            "desk-track" => ExperimentConfig {
                preset: Some(name.into()),
                name: name.into(),
                topology: NetworkTopology::desk_track(),
                genome: hebbian,
                env: EnvConfig::desk_track(),
                es: EsConfig { population: 50, shaping: Shaping::CenteredRank, ..EsConfig::default() },
                run: RunConfig { generations: 100, eval_episodes: 3, report_episodes: 20, ..RunConfig::default() },
                lifetime: LifetimeConfig { normalization: Normalization::LayerMaxAbs, ..LifetimeConfig::default() },
                output_dir: None,
            },
            other => {
                return Err(Error::config("preset", format!("unknown preset `{other}`; expected one of {}", PRESETS.join(", "))))
            }
        };
        Ok(cfg)
    }

    /// Parses config text, expanding a preset if one is named.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(error_path(&e), e.message().to_string()))?;
        let merged = match user.get("preset") {
            Some(toml::Value::String(name)) => {
                let base = toml::Table::try_from(Self::preset(name)?).map_err(|e| Error::config("preset", e.to_string()))?;
                merge(base, user)
            }
            Some(_) => return Err(Error::config("preset", "must be a string")),
            None => user,
        };
        let cfg: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::config(error_path(&e), e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Fully expanded form with fields in declaration order.
    pub fn canonical(&self) -> Result<String> {
        self.check_seed()?;
        toml::to_string(self).map_err(|e| Error::config("", e.to_string()))
    }

    pub fn hash(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(self.canonical()?.as_bytes())))
    }

    /// Checks that sizes and parameters agree with each other.
    /// TOML integers are signed, so larger seeds could not be read back.
    fn check_seed(&self) -> Result<()> {
        if self.run.master_seed > i64::MAX as u64 {
            return Err(Error::config("run.master_seed", "must fit in a signed 64-bit integer"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_seed()?;
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("name", "must be a non-empty file name"));
        }
        self.es.validate().map_err(|e| Error::config("es", e.to_string()))?;
        if self.lifetime.floor_fitness.is_nan() {
            return Err(Error::config("lifetime.floor_fitness", "must be a number"));
        }
        if self.run.train_episodes == 0 {
            return Err(Error::config("run.train_episodes", "must be at least 1"));
        }
        if self.run.eval_episodes == 0 {
            return Err(Error::config("run.eval_episodes", "must be at least 1"));
        }
        if self.run.report_episodes == 0 {
            return Err(Error::config("run.report_episodes", "must be at least 1"));
        }
        if let EnvConfig::Sphere { dim, center, start } = self.env {
            if dim == 0 {
                return Err(Error::config("env.dim", "must be at least 1"));
            }
            if !center.is_finite() || !start.is_finite() {
                return Err(Error::config("env", "center and start must be finite"));
            }
            return Ok(());
        }
        self.topology.validate().map_err(|e| Error::config("topology", e.to_string()))?;
        let (obs, act) = match &self.env {
            EnvConfig::Crawler { horizon, params } => {
                if *horizon == 0 {
                    return Err(Error::config("env.horizon", "must be at least 1"));
                }
                crate::envs::crawler::MorphologySet::generate(params).map_err(|e| Error::config("env", e.to_string()))?;
                (Some(observation_dim(params.legs)), params.legs)
            }
            EnvConfig::Track { horizon, params } => {
                if *horizon == 0 {
                    return Err(Error::config("env.horizon", "must be at least 1"));
                }
                let frame = if params.rgb_frames { (3, 84, 84) } else { (1, params.patch, params.patch) };
                match &self.topology.conv {
                    Some(ConvFrontendSpec { input_channels, input_height, input_width, .. })
                        if (*input_channels, *input_height, *input_width) == frame => {}
                    Some(_) => {
                        return Err(Error::config("topology.conv", format!("frontend input must be {}x{}x{} for this track", frame.0, frame.1, frame.2)))
                    }
                    None => return Err(Error::config("topology.conv", "pixel tasks need a conv frontend")),
                }
                (None, 3)
            }
            EnvConfig::Sphere { .. } => unreachable!(),
        };
        if let Some(obs) = obs {
            if self.topology.conv.is_some() {
                return Err(Error::config("topology.conv", "state-vector tasks take no conv frontend"));
            }
            if self.topology.input_dim != obs {
                return Err(Error::config("topology.input_dim", format!("environment observes {obs} values, network takes {}", self.topology.input_dim)));
            }
        }
        if self.topology.output_dim() != act {
            return Err(Error::config(
                "topology.fc_layer_sizes",
                format!("environment takes {act} actions, network emits {}", self.topology.output_dim()),
            ));
        }
        Ok(())
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            generations: self.run.generations,
            workers: 1,
            shaping: self.es.shaping,
            seed_mode: self.run.seed_mode,
            eval_seed: self.run.eval_seed,
            floor_fitness: self.lifetime.floor_fitness,
        }
    }

    /// `output_dir`, else `$HEBBIAN_ES_OUT/<name>`, else `runs/<name>`.
    pub fn resolve_output(&self) -> PathBuf {
        if let Some(d) = &self.output_dir {
            return d.clone();
        }
        let root = std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
        root.join(&self.name)
    }
}

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "HEBBIAN_ES_OUT";

fn tag_of(t: &toml::Table) -> Option<&toml::Value> {
    t.get("kind").or_else(|| t.get("mode"))
}

fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if k != "topology" => {
                let same_tag = match (tag_of(b), tag_of(&o)) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                };
                if same_tag {
                    let merged = merge(std::mem::take(b), o);
                    *b = merged;
                } else {
                    *b = o;
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

fn error_path(e: &toml::de::Error) -> String {
    e.span().map(|s| format!("byte {}", s.start)).unwrap_or_default()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
