//! The generation loop: sample, evaluate in parallel, update, record.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{es_update, materialize, sample_population, EsState, EvalContext, Fitness, FitnessReport, Purpose, Score, Shaping};
use crate::error::{Error, Result};
use crate::format;
use crate::seed;

/// How candidate episodes are seeded within a generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Every candidate gets its own seeds.
    #[default]
    Fresh,
    /// All candidates of a generation share seeds.
    Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Generation count at which the run stops.
    pub generations: u64,
    pub workers: usize,
    pub shaping: Shaping,
    pub seed_mode: SeedMode,
    /// Base of the fixed evaluation seed bank.
    pub eval_seed: u64,
    /// Stand-in for non-finite fitness values.
    pub floor_fitness: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            generations: 300,
            workers: 1,
            shaping: Shaping::Raw,
            seed_mode: SeedMode::Fresh,
            eval_seed: 1,
            floor_fitness: -1_000.0,
        }
    }
}

/// One training-curve line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub generation: u64,
    pub pop_mean: f64,
    pub pop_max: f64,
    pub eval_mean: f64,
    pub eval_std: f64,
    pub alpha: f64,
    pub sigma: f64,
}

/// Writes rows as CSV with a header line.
pub fn write_curve_csv<W: Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Run state between generations; also the final result.
#[derive(Clone, Debug, PartialEq)]
pub struct Progress {
    pub state: EsState,
    pub best: Vec<f64>,
    pub best_generation: u64,
    pub best_eval: Option<Score>,
    pub curve: Vec<CurveRow>,
}

pub type EvolutionResult = Progress;

impl Progress {
    pub fn new(state: EsState) -> Self {
        Progress {
            best: state.h.clone(),
            best_generation: state.generation,
            best_eval: None,
            curve: Vec::new(),
            state,
        }
    }

    fn offer(&mut self, generation: u64, h: &[f64], score: Score) {
        if self.best_eval.is_none_or(|b| score.mean > b.mean) {
            self.best = h.to_vec();
            self.best_generation = generation;
            self.best_eval = Some(score);
        }
    }
}

fn train_seed(state: &EsState, mode: SeedMode, index: usize) -> u64 {
    match mode {
        SeedMode::Fresh => seed::derive(&[seed::tag::TRAIN, state.master_seed, state.generation, index as u64]),
        SeedMode::Common => seed::derive(&[seed::tag::TRAIN, state.master_seed, state.generation]),
    }
}

fn eval_context(config: &EvolutionConfig, generation: u64) -> EvalContext {
    EvalContext {
        generation,
        index: 0,
        seed: seed::derive(&[seed::tag::EVAL, config.eval_seed]),
        purpose: Purpose::Eval,
    }
}

/// Runs generations until `config.generations`, calling `on_generation`
/// after each one. Results do not depend on `config.workers`.
pub fn run_evolution(
    start: Progress,
    config: &EvolutionConfig,
    fitness: &dyn Fitness,
    on_generation: &mut dyn FnMut(&Progress) -> Result<()>,
) -> Result<Progress> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let mut progress = start;
    while progress.state.generation < config.generations {
        let state = &progress.state;
        let tickets = sample_population(state);
        let scores: Vec<Score> = pool.install(|| {
            tickets
                .par_iter()
                .map(|t| {
                    let candidate = materialize(t, state);
                    let ctx = EvalContext {
                        generation: state.generation,
                        index: t.index,
                        seed: train_seed(state, config.seed_mode, t.index),
                        purpose: Purpose::Train,
                    };
                    fitness.evaluate(&candidate, &ctx)
                })
                .collect()
        });
        let reports: Vec<FitnessReport> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| FitnessReport {
                index: i,
                fitness: if s.mean.is_finite() { s.mean } else { config.floor_fitness },
                diverged: s.diverged,
            })
            .collect();
        let n = reports.len() as f64;
        let pop_mean = reports.iter().map(|r| r.fitness).sum::<f64>() / n;
        let pop_max = reports.iter().map(|r| r.fitness).fold(f64::NEG_INFINITY, f64::max);
        let eval = pool.install(|| fitness.evaluate(&state.h, &eval_context(config, state.generation)));
        progress.curve.push(CurveRow {
            generation: state.generation,
            pop_mean,
            pop_max,
            eval_mean: eval.mean,
            eval_std: eval.std,
            alpha: state.alpha,
            sigma: state.sigma,
        });
        let generation = state.generation;
        let h = state.h.clone();
        progress.offer(generation, &h, eval);
        progress.state = es_update(&progress.state, &reports, config.shaping)?;
        log::info!("generation {generation}: pop mean {pop_mean:.3}, max {pop_max:.3}, eval {:.3}", eval.mean);
        on_generation(&progress)?;
    }
    let g = progress.state.generation;
    let final_eval = pool.install(|| fitness.evaluate(&progress.state.h, &eval_context(config, g)));
    let h = progress.state.h.clone();
    progress.offer(g, &h, final_eval);
    Ok(progress)
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"HBES";
const CHECKPOINT_VERSION: u32 = 1;

/// Resumable snapshot of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct EsCheckpoint {
    pub progress: Progress,
    pub config: EvolutionConfig,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    alpha: f64,
    sigma: f64,
    alpha_decay: f64,
    sigma_decay: f64,
    n: usize,
    mirrored: bool,
    generation: u64,
    master_seed: u64,
    best_generation: u64,
    best_eval: Option<Score>,
    curve: Vec<CurveRow>,
    config: EvolutionConfig,
}

impl EsCheckpoint {
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let s = &self.progress.state;
        let meta = CheckpointMeta {
            alpha: s.alpha,
            sigma: s.sigma,
            alpha_decay: s.alpha_decay,
            sigma_decay: s.sigma_decay,
            n: s.n,
            mirrored: s.mirrored,
            generation: s.generation,
            master_seed: s.master_seed,
            best_generation: self.progress.best_generation,
            best_eval: self.progress.best_eval,
            curve: self.progress.curve.clone(),
            config: self.config.clone(),
        };
        format::write_record(w, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, &meta, &[&s.h, &self.progress.best])
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let (m, mut payloads): (CheckpointMeta, _) = format::read_record(r, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, "ES checkpoint")?;
        if payloads.len() != 2 {
            return Err(Error::Format(format!("ES checkpoint has {} payloads, expected 2", payloads.len())));
        }
        let best = payloads.pop().expect("two payloads");
        let h = payloads.pop().expect("two payloads");
        if best.len() != h.len() {
            return Err(Error::Format("ES checkpoint vectors differ in length".into()));
        }
        let state = EsState {
            h,
            alpha: m.alpha,
            sigma: m.sigma,
            alpha_decay: m.alpha_decay,
            sigma_decay: m.sigma_decay,
            n: m.n,
            mirrored: m.mirrored,
            generation: m.generation,
            master_seed: m.master_seed,
        };
        Ok(EsCheckpoint {
            progress: Progress {
                state,
                best,
                best_generation: m.best_generation,
                best_eval: m.best_eval,
                curve: m.curve,
            },
            config: m.config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        // write then rename so an interrupted save keeps the old file
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        self.write_to(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
