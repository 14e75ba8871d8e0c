//! Deterministic desk-scale environments.
//!
//! * [`crawler`]: a limbed walker driven through a leg response matrix, with
//!   parametric per-leg damage. Fitness is distance travelled.
//! * [`track`]: a procedurally generated closed grid track driven by a
//!   kinematic car seen through an egocentric pixel patch. Fitness is the
//!   tile formula in [`track::tile_fitness`].
//! * [`objective`]: analytic objectives used as optimizer oracles.

pub mod crawler;
pub mod objective;
pub mod track;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use crawler::{Crawler, CrawlerMorphology, CrawlerParams, MorphologySet};
pub use track::{Track, TrackEnv, TrackParams};

/// Pixel tensor, `channels x height x width`, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Image {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Vector(Vec<f64>),
    Image(Image),
}

impl Observation {
    pub fn as_flat(&self) -> &[f64] {
        match self {
            Observation::Vector(v) => v,
            Observation::Image(img) => &img.data,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// A single-writer episodic environment.
pub trait Environment: Send {
    fn action_dim(&self) -> usize;

    /// Starts a new episode. The same seed always yields the same episode.
    fn reset(&mut self, seed: u64) -> Result<Observation>;

    /// Advances one timestep. Fails if the episode already ended.
    fn step(&mut self, action: &[f64]) -> Result<Transition>;
}

/// Environment description as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    Crawler {
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(flatten)]
        params: CrawlerParams,
    },
    Track {
        #[serde(default = "default_horizon")]
        horizon: usize,
        #[serde(flatten)]
        params: TrackParams,
    },
    /// `-|h - center|^2` over a plain parameter vector, for optimizer checks.
    Sphere {
        dim: usize,
        /// Every coordinate of the optimum.
        center: f64,
        /// Every coordinate of the starting point.
        #[serde(default)]
        start: f64,
    },
}

fn default_horizon() -> usize {
    1_000
}

impl EnvConfig {
    pub fn horizon(&self) -> usize {
        match self {
            EnvConfig::Crawler { horizon, .. } | EnvConfig::Track { horizon, .. } => *horizon,
            EnvConfig::Sphere { .. } => 1,
        }
    }

    pub fn desk_crawler() -> Self {
        EnvConfig::Crawler {
            horizon: default_horizon(),
            params: CrawlerParams::default(),
        }
    }

    pub fn desk_track() -> Self {
        EnvConfig::Track {
            horizon: default_horizon(),
            params: TrackParams::default(),
        }
    }

    pub fn with_horizon(mut self, h: usize) -> Self {
        match &mut self {
            EnvConfig::Crawler { horizon, .. } | EnvConfig::Track { horizon, .. } => *horizon = h,
            EnvConfig::Sphere { .. } => {}
        }
        self
    }
}
