//! Evolution strategies over flat parameter vectors.
//!
//! Each generation samples `n` Gaussian perturbations of the current
//! solution, scores them, and moves the solution along the fitness-weighted
//! sum of the noise:
//!
//! ```text
//! h <- h + alpha / (n * sigma) * sum_i F_i * eps_i
//! ```
//!
//! after which `alpha` and `sigma` decay geometrically. Noise vectors are
//! never stored; a [`CandidateTicket`] and the master seed regenerate them.

mod evolution;

pub use evolution::{read_curve_csv, run_evolution, write_curve_csv, CurveRow, EsCheckpoint, EvolutionConfig, EvolutionResult, Progress, SeedMode};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::envs::objective::{Linear, Sphere};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shaping {
    #[default]
    Raw,
    CenteredRank,
    ZScore,
}

/// Hyperparameters. Defaults are the reference settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsConfig {
    pub population: usize,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub sigma: f64,
    pub sigma_decay: f64,
    pub mirrored: bool,
    pub shaping: Shaping,
}

impl Default for EsConfig {
    fn default() -> Self {
        EsConfig {
            population: 200,
            alpha: 0.2,
            alpha_decay: 0.995,
            sigma: 0.1,
            sigma_decay: 0.999,
            mirrored: true,
            shaping: Shaping::Raw,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::EsParams(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::EsParams(format!("sigma must be positive, got {}", self.sigma)));
        }
        for (name, d) in [("alpha_decay", self.alpha_decay), ("sigma_decay", self.sigma_decay)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::EsParams(format!("{name} must be positive, got {d}")));
            }
        }
        if self.population < 2 && self.mirrored {
            return Err(Error::EsParams("mirrored sampling needs a population of at least 2".into()));
        }
        if self.population == 0 {
            return Err(Error::EsParams("population must be positive".into()));
        }
        if self.mirrored && self.population % 2 != 0 {
            return Err(Error::EsParams(format!("mirrored sampling needs an even population, got {}", self.population)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsState {
    pub h: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub alpha_decay: f64,
    pub sigma_decay: f64,
    pub n: usize,
    pub mirrored: bool,
    pub generation: u64,
    pub master_seed: u64,
}

impl EsState {
    pub fn new(h0: Vec<f64>, config: &EsConfig, master_seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(EsState {
            h: h0,
            alpha: config.alpha,
            sigma: config.sigma,
            alpha_decay: config.alpha_decay,
            sigma_decay: config.sigma_decay,
            n: config.population,
            mirrored: config.mirrored,
            generation: 0,
            master_seed,
        })
    }

    /// Distinct noise vectors per generation.
    pub fn noise_count(&self) -> usize {
        if self.mirrored {
            self.n / 2
        } else {
            self.n
        }
    }
}

/// Everything needed to rebuild one candidate's noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTicket {
    pub index: usize,
    pub generation: u64,
    pub noise_index: usize,
    pub sign: i8,
}

impl CandidateTicket {
    pub fn noise_seed(&self, master_seed: u64) -> u64 {
        noise_seed(master_seed, self.generation, self.noise_index)
    }
}

fn noise_seed(master_seed: u64, generation: u64, noise_index: usize) -> u64 {
    seed::derive(&[seed::tag::NOISE, master_seed, generation, noise_index as u64])
}

/// Fills `out` with standard normal draws from `seed`.
pub fn fill_noise(seed: u64, out: &mut [f64]) {
    let mut rng = seed::rng(seed);
    for v in out {
        *v = StandardNormal.sample(&mut rng);
    }
}

/// With mirroring, tickets `i` and `i + n/2` share noise with opposite signs.
pub fn sample_population(state: &EsState) -> Vec<CandidateTicket> {
    let half = state.noise_count();
    (0..state.n)
        .map(|i| {
            let (noise_index, sign) = if state.mirrored && i >= half { (i - half, -1) } else { (i, 1) };
            CandidateTicket { index: i, generation: state.generation, noise_index, sign }
        })
        .collect()
}

/// `h + sign * sigma * eps` for the ticket's noise.
pub fn materialize(ticket: &CandidateTicket, state: &EsState) -> Vec<f64> {
    let mut eps = vec![0.0; state.h.len()];
    fill_noise(ticket.noise_seed(state.master_seed), &mut eps);
    let s = ticket.sign as f64 * state.sigma;
    state.h.iter().zip(&eps).map(|(h, e)| h + s * e).collect()
}

/// Raw score of one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub index: usize,
    pub fitness: f64,
    pub diverged: bool,
}

/// Replaces fitnesses by the chosen shaping. Ties share their mean rank.
pub fn shape(fitness: &[f64], shaping: Shaping) -> Vec<f64> {
    let n = fitness.len();
    match shaping {
        Shaping::Raw => fitness.to_vec(),
        Shaping::CenteredRank => {
            if n < 2 {
                return vec![0.0; n];
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
            let mut ranks = vec![0.0; n];
            let mut i = 0;
            while i < n {
                let mut j = i;
                while j + 1 < n && fitness[order[j + 1]] == fitness[order[i]] {
                    j += 1;
                }
                let r = (i + j) as f64 / 2.0;
                for &k in &order[i..=j] {
                    ranks[k] = r;
                }
                i = j + 1;
            }
            ranks.iter().map(|r| r / (n - 1) as f64 - 0.5).collect()
        }
        Shaping::ZScore => {
            let mean = fitness.iter().sum::<f64>() / n as f64;
            let std = (fitness.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            if std == 0.0 {
                vec![0.0; n]
            } else {
                fitness.iter().map(|f| (f - mean) / std).collect()
            }
        }
    }
}

/// Direct form of the update for explicit noise vectors.
pub fn weighted_noise_step(h: &[f64], alpha: f64, sigma: f64, fitness: &[f64], noise: &[&[f64]]) -> Vec<f64> {
    let n = fitness.len() as f64;
    let mut out = h.to_vec();
    for (f, eps) in fitness.iter().zip(noise) {
        for (o, e) in out.iter_mut().zip(eps.iter()) {
            *o += alpha / (n * sigma) * f * e;
        }
    }
    out
}

/// Multiplies alpha and sigma by their decays; advances the generation.
pub fn decay_step(state: &EsState) -> EsState {
    let mut s = state.clone();
    s.alpha *= s.alpha_decay;
    s.sigma *= s.sigma_decay;
    s.generation += 1;
    s
}

/// Sum over tickets of `shaped_i * sign_i * eps_i`, accumulated in noise
/// index order.
pub fn update_direction(state: &EsState, reports: &[FitnessReport], shaping: Shaping) -> Result<Vec<f64>> {
    if reports.len() != state.n {
        return Err(Error::MissingReports { expected: state.n, actual: reports.len() });
    }
    let mut by_index = vec![None; state.n];
    for r in reports {
        match by_index.get_mut(r.index) {
            Some(slot @ None) => *slot = Some(r.fitness),
            _ => return Err(Error::Invalid(format!("duplicate or out-of-range report index {}", r.index))),
        }
    }
    let raw: Vec<f64> = by_index.into_iter().map(|f| f.expect("all indices present")).collect();
    let shaped = shape(&raw, shaping);
    let tickets = sample_population(state);
    let mut weights = vec![0.0; state.noise_count()];
    for t in &tickets {
        weights[t.noise_index] += t.sign as f64 * shaped[t.index];
    }
    let mut dir = vec![0.0; state.h.len()];
    let mut eps = vec![0.0; state.h.len()];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        fill_noise(noise_seed(state.master_seed, state.generation, k), &mut eps);
        for (d, e) in dir.iter_mut().zip(&eps) {
            *d += w * e;
        }
    }
    Ok(dir)
}

/// One full generation update followed by the decay.
pub fn es_update(state: &EsState, reports: &[FitnessReport], shaping: Shaping) -> Result<EsState> {
    let dir = update_direction(state, reports, shaping)?;
    let scale = state.alpha / (state.n as f64 * state.sigma);
    let mut next = decay_step(state);
    for (h, d) in next.h.iter_mut().zip(&dir) {
        *h += scale * d;
    }
    Ok(next)
}

// ---------------------------------------------------------------------------
// Fitness functions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Train,
    Eval,
}

/// How a candidate evaluation is keyed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalContext {
    pub generation: u64,
    pub index: usize,
    /// Seed-bank base for the episodes of this evaluation.
    pub seed: u64,
    pub purpose: Purpose,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mean: f64,
    pub std: f64,
    pub diverged: bool,
}

impl Score {
    pub fn single(value: f64) -> Self {
        Score { mean: value, std: 0.0, diverged: false }
    }
}

/// Deterministic in `(candidate, ctx)`. Failures must be folded into the
/// returned score.
pub trait Fitness: Sync {
    fn evaluate(&self, candidate: &[f64], ctx: &EvalContext) -> Score;
}

impl Fitness for Sphere {
    fn evaluate(&self, candidate: &[f64], _ctx: &EvalContext) -> Score {
        Score::single(self.value(candidate))
    }
}

impl Fitness for Linear {
    fn evaluate(&self, candidate: &[f64], _ctx: &EvalContext) -> Score {
        Score::single(self.value(candidate))
    }
}
