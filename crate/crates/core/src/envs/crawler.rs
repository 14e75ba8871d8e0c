//! Limbed crawler with a linear leg-response model.
//!
//! This is not a physics simulation. Each leg's load is a row of a response
//! matrix applied to the action vector and scaled by that leg's health
//! `delta_k` in `[0, 1]`:
//!
//! ```text
//! load     = diag(delta) * M * a
//! v_target = mean(load) - c * |a|^2 / L - s * sum_k (1 - delta_k) * a_k^2 / L
//! v       <- (1 - rho) * v + rho * v_target
//! d       <- d + v
//! ```
//!
//! The last term (strain) makes driving a damaged leg costly, so the best
//! action pattern depends on which leg is hurt. The observation is
//! `[v, load_1..load_L, sin(phase), cos(phase)]` and the reward is `v`, so the
//! episode return equals the distance travelled.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Observation, Transition};
use crate::error::{Error, Result};
use crate::seed;

/// Length of the crawler observation for `legs` legs.
pub fn observation_dim(legs: usize) -> usize {
    legs + 3
}

/// Distance a crawler must cover to count as walking.
pub const SOLVED_DISTANCE: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlerParams {
    pub legs: usize,
    pub energy_cost: f64,
    pub smoothing: f64,
    pub coupling: f64,
    pub damage_severity: f64,
    pub strain_cost: f64,
    pub phase_period: usize,
    pub morphology_seed: u64,
    /// Leg damaged in the seen training morphology.
    pub seen_damaged_leg: usize,
    /// Leg damaged in the held-out morphology.
    pub unseen_damaged_leg: usize,
}

impl Default for CrawlerParams {
    fn default() -> Self {
        CrawlerParams {
            legs: 4,
            energy_cost: 0.1,
            smoothing: 0.2,
            coupling: 0.1,
            damage_severity: 0.2,
            strain_cost: 4.0,
            phase_period: 25,
            morphology_seed: 0,
            seen_damaged_leg: 0,
            unseen_damaged_leg: 1,
        }
    }
}

/// One body: response matrix plus per-leg health.
#[derive(Debug, Serialize, Deserialize)]
pub struct CrawlerMorphology {
    pub name: String,
    pub legs: usize,
    /// `legs x legs`, row-major.
    pub response: Vec<f64>,
    /// Per-leg health; 1 is intact.
    pub damage: Vec<f64>,
    pub energy_cost: f64,
    pub smoothing: f64,
    pub strain_cost: f64,
    #[serde(skip)]
    steps: AtomicU64,
}

impl Clone for CrawlerMorphology {
    /// Clones get a fresh step counter.
    fn clone(&self) -> Self {
        CrawlerMorphology {
            name: self.name.clone(),
            legs: self.legs,
            response: self.response.clone(),
            damage: self.damage.clone(),
            energy_cost: self.energy_cost,
            smoothing: self.smoothing,
            strain_cost: self.strain_cost,
            steps: AtomicU64::new(0),
        }
    }
}

impl PartialEq for CrawlerMorphology {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.legs == other.legs
            && self.response == other.response
            && self.damage == other.damage
            && self.energy_cost == other.energy_cost
            && self.smoothing == other.smoothing
            && self.strain_cost == other.strain_cost
    }
}

impl CrawlerMorphology {
    pub fn new(name: impl Into<String>, response: Vec<f64>, damage: Vec<f64>, energy_cost: f64, smoothing: f64) -> Result<Self> {
        let legs = damage.len();
        if response.len() != legs * legs {
            return Err(Error::shape("response matrix", legs * legs, response.len()));
        }
        if damage.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(Error::Invalid("damage entries must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&smoothing) {
            return Err(Error::Invalid("smoothing must lie in [0, 1]".into()));
        }
        Ok(CrawlerMorphology {
            name: name.into(),
            legs,
            response,
            damage,
            energy_cost,
            smoothing,
            strain_cost: 0.0,
            steps: AtomicU64::new(0),
        })
    }

    pub fn with_strain_cost(mut self, s: f64) -> Self {
        self.strain_cost = s;
        self
    }

    pub fn is_healthy(&self) -> bool {
        self.damage.iter().all(|&d| d == 1.0)
    }

    /// Copy of this body with leg `leg` set to health `delta`.
    pub fn damaged(&self, name: impl Into<String>, leg: usize, delta: f64) -> Self {
        let mut m = self.clone();
        m.name = name.into();
        m.damage[leg] = delta;
        m
    }

    /// Total `step` calls made on environments built from this morphology.
    pub fn step_count(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    /// Leg loads `diag(delta) * M * a`.
    pub fn loads(&self, action: &[f64], out: &mut [f64]) {
        let l = self.legs;
        for (k, slot) in out.iter_mut().enumerate().take(l) {
            let row = &self.response[k * l..(k + 1) * l];
            let drive: f64 = row.iter().zip(action).map(|(m, a)| m * a).sum();
            *slot = self.damage[k] * drive;
        }
    }

    /// Instantaneous target velocity for an action, given its loads.
    pub fn target_velocity(&self, action: &[f64], loads: &[f64]) -> f64 {
        let l = self.legs as f64;
        let thrust = loads.iter().sum::<f64>() / l;
        let energy = self.energy_cost * action.iter().map(|a| a * a).sum::<f64>() / l;
        let strain = self.strain_cost
            * self
                .damage
                .iter()
                .zip(action)
                .map(|(d, a)| (1.0 - d) * a * a)
                .sum::<f64>()
            / l;
        thrust - energy - strain
    }
}

/// Morphologies used for training and those held out from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphologySet {
    pub seen: Vec<Arc<CrawlerMorphology>>,
    pub unseen: Vec<Arc<CrawlerMorphology>>,
}

impl MorphologySet {
    /// Healthy and one damaged leg seen; a different damaged leg unseen. All
    /// three share one response matrix sampled from `params.morphology_seed`
    /// with unit-mean positive diagonal and off-diagonal coupling in
    /// `[-coupling, coupling]`.
    pub fn generate(params: &CrawlerParams) -> Result<Self> {
        let l = params.legs;
        if l < 3 {
            return Err(Error::Invalid(format!("crawler needs at least 3 legs, got {l}")));
        }
        if params.seen_damaged_leg >= l || params.unseen_damaged_leg >= l || params.seen_damaged_leg == params.unseen_damaged_leg {
            return Err(Error::Invalid("seen and unseen damaged legs must be distinct legs".into()));
        }
        let mut rng = seed::rng(seed::derive(&[seed::tag::MORPH, params.morphology_seed]));
        let mut response = vec![0.0; l * l];
        let mut diag: Vec<f64> = (0..l).map(|_| rng.random_range(0.8..1.2)).collect();
        let mean = diag.iter().sum::<f64>() / l as f64;
        diag.iter_mut().for_each(|d| *d /= mean);
        for i in 0..l {
            for j in 0..l {
                response[i * l + j] = if i == j {
                    diag[i]
                } else if params.coupling > 0.0 {
                    rng.random_range(-params.coupling..=params.coupling)
                } else {
                    0.0
                };
            }
        }
        let healthy = CrawlerMorphology::new("healthy", response, vec![1.0; l], params.energy_cost, params.smoothing)?
            .with_strain_cost(params.strain_cost);
        let seen_damaged = healthy.damaged(leg_name(params.seen_damaged_leg), params.seen_damaged_leg, params.damage_severity);
        let unseen_damaged = healthy.damaged(leg_name(params.unseen_damaged_leg), params.unseen_damaged_leg, params.damage_severity);
        Ok(MorphologySet {
            seen: vec![Arc::new(healthy), Arc::new(seen_damaged)],
            unseen: vec![Arc::new(unseen_damaged)],
        })
    }

    pub fn all(&self) -> impl Iterator<Item = (&Arc<CrawlerMorphology>, bool)> {
        self.seen.iter().map(|m| (m, true)).chain(self.unseen.iter().map(|m| (m, false)))
    }
}

fn leg_name(leg: usize) -> String {
    match leg {
        0 => "right-front-damaged".into(),
        1 => "left-front-damaged".into(),
        2 => "right-hind-damaged".into(),
        3 => "left-hind-damaged".into(),
        k => format!("leg{k}-damaged"),
    }
}

/// Crawler episode state.
#[derive(Debug)]
pub struct Crawler {
    morphology: Arc<CrawlerMorphology>,
    horizon: usize,
    phase_period: usize,
    velocity: f64,
    distance: f64,
    t: usize,
    loads: Vec<f64>,
}

impl Crawler {
    pub fn new(morphology: Arc<CrawlerMorphology>, horizon: usize, phase_period: usize) -> Self {
        let legs = morphology.legs;
        Crawler {
            morphology,
            horizon,
            phase_period: phase_period.max(1),
            velocity: 0.0,
            distance: 0.0,
            t: 0,
            loads: vec![0.0; legs],
        }
    }

    pub fn morphology(&self) -> &Arc<CrawlerMorphology> {
        &self.morphology
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    fn observe(&self) -> Observation {
        let phase = TAU * (self.t % self.phase_period) as f64 / self.phase_period as f64;
        let mut obs = Vec::with_capacity(observation_dim(self.morphology.legs));
        obs.push(self.velocity);
        obs.extend_from_slice(&self.loads);
        obs.push(phase.sin());
        obs.push(phase.cos());
        Observation::Vector(obs)
    }
}

impl Environment for Crawler {
    fn action_dim(&self) -> usize {
        self.morphology.legs
    }

    /// The crawler has no stochastic state; `seed` is accepted for interface
    /// uniformity and ignored.
    fn reset(&mut self, _seed: u64) -> Result<Observation> {
        self.velocity = 0.0;
        self.distance = 0.0;
        self.t = 0;
        self.loads.iter_mut().for_each(|v| *v = 0.0);
        Ok(self.observe())
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        if self.t >= self.horizon {
            return Err(Error::EpisodeDone);
        }
        if action.len() != self.morphology.legs {
            return Err(Error::shape("crawler action", self.morphology.legs, action.len()));
        }
        self.morphology.steps.fetch_add(1, Ordering::Relaxed);
        let m = &self.morphology;
        m.loads(action, &mut self.loads);
        let target = m.target_velocity(action, &self.loads);
        self.velocity = (1.0 - m.smoothing) * self.velocity + m.smoothing * target;
        self.distance += self.velocity;
        self.t += 1;
        Ok(Transition {
            observation: self.observe(),
            reward: self.velocity,
            done: self.t >= self.horizon,
        })
    }
}
