//! The harness commands. Each one reads its inputs, writes its outputs
//! below an output directory and returns a summary value.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::manifest::{list_files, FinalMetrics, RunManifest};
use crate::analysis::{coefficient_histogram, convergence_sweep, pca3, pca3_joint, plateau_onset, weight_frame, SweepPoint, WeightTrajectory};
use crate::envs::crawler::MorphologySet;
use crate::envs::objective::Sphere;
use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::es::{run_evolution, write_curve_csv, EsCheckpoint, EsState, Fitness, Progress};
use crate::genome::{init_genome, layout_for, Genome, GenomeLayout, Provenance};
use crate::net::{CoefficientClass, LifetimeConfig, WeightState};
use crate::rollout::{
    evaluate, run_perturbed, Agent, EpisodeOutcome, PerturbationEvent, PerturbationKind, PerturbationSchedule, Scenario, SeedBank, Task,
    TaskFitness, ZeroMode,
};

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train / resume

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub progress: Progress,
}

enum Objective {
    Sphere(Sphere),
    Task(Box<TaskFitness>),
}

impl Objective {
    fn fitness(&self) -> &dyn Fitness {
        match self {
            Objective::Sphere(s) => s,
            Objective::Task(t) => t.as_ref(),
        }
    }
}

fn objective(config: &ExperimentConfig) -> Result<(Objective, Vec<f64>, Option<GenomeLayout>)> {
    match config.env {
        EnvConfig::Sphere { dim, center, start } => Ok((Objective::Sphere(Sphere::new(vec![center; dim])), vec![start; dim], None)),
        _ => {
            let layout = layout_for(&config.topology, config.genome);
            let fitness = TaskFitness {
                topology: config.topology.clone(),
                layout: layout.clone(),
                task: Task::from_config(&config.env)?,
                lifetime: config.lifetime.clone(),
                train_episodes: config.run.train_episodes,
                eval_episodes: config.run.eval_episodes,
            };
            let h0 = init_genome(&layout, config.run.master_seed).values;
            Ok((Objective::Task(Box::new(fitness)), h0, Some(layout)))
        }
    }
}

fn checkpoint_name(generation: u64) -> String {
    format!("gen_{generation:06}.hbes")
}

/// Runs (or continues) an evolution and writes curve, checkpoints, best
/// genome and manifest.
pub fn cmd_train(config: &ExperimentConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    config.validate()?;
    let started = unix_now();
    let clock = Instant::now();
    let out = opts.out_dir.clone().unwrap_or_else(|| config.resolve_output());
    let ckpt_dir = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    std::fs::write(out.join("config.toml"), config.canonical()?)?;

    let (objective, h0, layout) = objective(config)?;
    let evo = config.evolution();
    let start = match &opts.resume {
        Some(path) => {
            let cp = EsCheckpoint::load(path)?;
            let s = &cp.progress.state;
            if s.master_seed != config.run.master_seed || s.n != config.es.population || s.h.len() != h0.len() {
                return Err(Error::config("resume", format!("checkpoint {} was not produced by this config", path.display())));
            }
            cp.progress
        }
        None => Progress::new(EsState::new(h0, &config.es, config.run.master_seed)?),
    };
    let mut run_cfg = evo.clone();
    run_cfg.workers = opts.workers.max(1);
    let every = config.run.checkpoint_every;
    let mut on_generation = |p: &Progress| -> Result<()> {
        let g = p.state.generation;
        if every > 0 && g % every == 0 {
            EsCheckpoint { progress: p.clone(), config: evo.clone() }.save(ckpt_dir.join(checkpoint_name(g)))?;
        }
        Ok(())
    };
    let progress = run_evolution(start, &run_cfg, objective.fitness(), &mut on_generation)?;
    let last = ckpt_dir.join(checkpoint_name(progress.state.generation));
    EsCheckpoint { progress: progress.clone(), config: evo.clone() }.save(&last)?;

    write_curve_csv(&progress.curve, std::io::BufWriter::new(std::fs::File::create(out.join("curve.csv"))?))?;
    match &layout {
        Some(layout) => {
            let genome = Genome::new(layout.clone(), progress.best.clone())?
                .with_provenance(Provenance { generation: progress.best_generation, seed: config.run.master_seed });
            genome.save(out.join("best.hbgn"))?;
        }
        None => write_json(&out.join("best.json"), &progress.best)?,
    }
    if let EnvConfig::Crawler { params, .. } = &config.env {
        write_json(&out.join("morphologies.json"), &MorphologySet::generate(params)?)?;
    }

    let mut checkpoints: Vec<String> = std::fs::read_dir(&ckpt_dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.ends_with(".hbes"))
        .map(|n| format!("checkpoints/{n}"))
        .collect();
    checkpoints.sort();
    let manifest = RunManifest {
        config_hash: config.hash()?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.run.master_seed,
        eval_seed: config.run.eval_seed,
        started_unix: started,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        resumed_from: opts.resume.as_ref().map(|p| p.display().to_string()),
        checkpoints,
        files: list_files(&out)?,
        metrics: FinalMetrics {
            generations: progress.state.generation,
            best_generation: progress.best_generation,
            best_eval_mean: progress.best_eval.map(|s| s.mean),
            best_eval_std: progress.best_eval.map(|s| s.std),
            last_pop_mean: progress.curve.last().map(|r| r.pop_mean),
        },
    };
    manifest.save(&out)?;
    Ok(TrainOutcome { out_dir: out, manifest, progress })
}

/// Continues from a checkpoint inside a run directory, using the run's
/// `config.toml` unless another config is given.
pub fn cmd_resume(checkpoint: &Path, config: Option<&ExperimentConfig>, workers: usize) -> Result<TrainOutcome> {
    let run_dir = checkpoint
        .parent()
        .and_then(Path::parent)
        .ok_or_else(|| Error::Invalid(format!("{} is not inside a run directory", checkpoint.display())))?
        .to_path_buf();
    let config = match config {
        Some(c) => c.clone(),
        None => ExperimentConfig::load(run_dir.join("config.toml"))?,
    };
    cmd_train(&config, &TrainOptions { workers, out_dir: Some(run_dir), resume: Some(checkpoint.to_path_buf()) })
}

// ---------------------------------------------------------------------------
// genome loading

/// Reads a genome file, or the best genome stored in an ES checkpoint.
pub fn load_genome(path: &Path, config: &ExperimentConfig) -> Result<Genome> {
    let mut magic = [0u8; 4];
    std::fs::File::open(path)?.read_exact(&mut magic)?;
    match &magic {
        b"HBGN" => Genome::load(path, Some(&config.topology)),
        b"HBES" => {
            let cp = EsCheckpoint::load(path)?;
            let layout = layout_for(&config.topology, config.genome);
            Ok(Genome::new(layout, cp.progress.best)?
                .with_provenance(Provenance { generation: cp.progress.best_generation, seed: cp.progress.state.master_seed }))
        }
        _ => Err(Error::Format(format!("{} is neither a genome nor a checkpoint", path.display()))),
    }
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub morphology: String,
    pub seen: bool,
    pub rule: String,
    pub mean: f64,
    pub std: f64,
    pub solved_episodes: Option<usize>,
    pub solved: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub seed: u64,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:<8} {:<24} {:>16} {:>8}", "Morphology", "Training", "Rule", "Distance", "Solved");
        for r in &self.rows {
            let solved = match (r.solved, r.solved_episodes) {
                (Some(f), Some(k)) => format!("{} ({k}/{})", if f { "yes" } else { "no" }, self.episodes),
                _ => "-".into(),
            };
            let _ = writeln!(
                s,
                "{:<24} {:<8} {:<24} {:>16} {:>8}",
                r.morphology,
                if r.seen { "seen" } else { "unseen" },
                r.rule,
                format!("{:.0} ± {:.0}", r.mean, r.std),
                solved
            );
        }
        s
    }
}

/// Table-style report over every scenario of the config's task. A scenario
/// counts as solved when its mean reaches the threshold.
pub fn cmd_evaluate(config: &ExperimentConfig, genome: &Genome, episodes: Option<usize>, seed: u64, out_dir: Option<&Path>) -> Result<EvalReport> {
    config.validate()?;
    let episodes = episodes.unwrap_or(config.run.report_episodes);
    let agent = Agent::new(genome, &config.topology)?;
    let task = Task::from_config(&config.env)?;
    let rule = genome.layout.mode.describe();
    let mut rows = Vec::new();
    for s in task.all() {
        let e = evaluate(&agent, s, episodes, SeedBank::new(seed), &config.lifetime)?;
        let threshold = s.solved_threshold();
        rows.push(EvalRow {
            morphology: s.name.clone(),
            seen: s.seen,
            rule: rule.clone(),
            mean: e.mean,
            std: e.std,
            solved_episodes: threshold.map(|t| e.solved_count(t)),
            solved: threshold.map(|t| e.mean >= t),
        });
    }
    let report = EvalReport { episodes, seed, rows };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("evaluation.json"), &report)?;
        let mut w = csv::Writer::from_path(dir.join("evaluation.csv"))?;
        for r in &report.rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// perturb

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbRequest {
    /// More than zero entries runs a freeze sweep.
    pub freeze_at: Vec<usize>,
    /// `(at_step, fraction)`.
    pub zero: Option<(usize, f64)>,
    /// `[start, end)`.
    pub saturate: Option<(usize, usize)>,
    pub band: bool,
    pub scenario: Option<String>,
    pub episodes: usize,
    pub seed: u64,
    pub record_weights: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub unperturbed: f64,
    pub onset: Option<usize>,
    pub tolerance: f64,
    pub points: Vec<SweepPoint>,
}

#[derive(Clone, Debug)]
pub enum PerturbOutput {
    Sweep(SweepReport),
    Trace(EpisodeOutcome),
}

/// Relative band used to call a freeze-sweep point converged.
pub const SWEEP_TOLERANCE: f64 = 0.05;

fn pick_scenario(task: &Task, name: Option<&str>) -> Result<Scenario> {
    match name {
        None => Ok(task.seen[0].clone()),
        Some(n) => task
            .all()
            .find(|s| s.name == n)
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("no scenario named `{n}`"))),
    }
}

pub fn cmd_perturb(config: &ExperimentConfig, genome: &Genome, req: &PerturbRequest, out_dir: &Path) -> Result<PerturbOutput> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let agent = Agent::new(genome, &config.topology)?;
    let task = Task::from_config(&config.env)?;
    let scenario = pick_scenario(&task, req.scenario.as_deref())?;
    let bank = SeedBank::new(req.seed);
    let episodes = req.episodes.max(1);

    if !req.freeze_at.is_empty() {
        let mut steps = req.freeze_at.clone();
        steps.sort_unstable();
        steps.dedup();
        let points = convergence_sweep(&agent, &scenario, &steps, episodes, bank, &config.lifetime)?;
        let unperturbed = evaluate(&agent, &scenario, episodes, bank, &config.lifetime)?.mean;
        let report = SweepReport {
            scenario: scenario.name.clone(),
            unperturbed,
            onset: plateau_onset(&points, unperturbed, SWEEP_TOLERANCE),
            tolerance: SWEEP_TOLERANCE,
            points,
        };
        let mut w = csv::Writer::from_path(out_dir.join("sweep.csv"))?;
        for p in &report.points {
            w.serialize(p)?;
        }
        w.flush()?;
        write_json(&out_dir.join("sweep.json"), &report)?;
        return Ok(PerturbOutput::Sweep(report));
    }

    let mut events = Vec::new();
    if let Some((at, fraction)) = req.zero {
        events.push(PerturbationEvent::zero(at, fraction));
    }
    if let Some((a, b)) = req.saturate {
        events.push(PerturbationEvent::saturate(a, b));
    }
    let windows: Vec<(usize, usize)> = events
        .iter()
        .filter(|e| e.kind == PerturbationKind::SaturateActions)
        .map(|e| (e.at_step, e.duration.map_or(usize::MAX, |d| e.at_step + d)))
        .collect();
    let schedule = PerturbationSchedule::new(events)?.with_zero_mode(if req.band { ZeroMode::Band } else { ZeroMode::Random });
    let mut lifetime: LifetimeConfig = config.lifetime.clone();
    lifetime.record.steps = true;
    lifetime.record.weight_stride = req.record_weights.then_some(1);
    let outcome = run_perturbed(&agent, &scenario, &schedule, bank.episode(0), &lifetime)?;

    let mut w = csv::Writer::from_path(out_dir.join("trace.csv"))?;
    let dim = outcome.records.first().map_or(0, |r| r.action.len());
    let mut header = vec!["step".to_string(), "reward".into(), "event".into()];
    header.extend((0..dim).map(|k| format!("action_{k}")));
    header.extend((0..dim).map(|k| format!("output_{k}")));
    w.write_record(&header)?;
    for r in &outcome.records {
        let event = outcome
            .perturbations
            .iter()
            .filter(|p| p.step == r.step)
            .map(|p| event_name(p.kind))
            .collect::<Vec<_>>()
            .join("+");
        // Saturation is marked on every step of its window.
        let event = if event.is_empty() && windows.iter().any(|&(a, b)| (a..b).contains(&r.step)) { "saturated".to_string() } else { event };
        let mut row = vec![r.step.to_string(), r.reward.to_string(), event];
        row.extend(r.action.iter().map(f64::to_string));
        row.extend(r.network_output.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    if req.record_weights {
        WeightTrajectory::from_outcome(&outcome, &config.topology, 1)?.save(out_dir.join("trajectory.hbwt"))?;
    }
    let summary = EpisodeOutcome { records: Vec::new(), snapshots: Vec::new(), final_weights: None, ..outcome.clone() };
    write_json(&out_dir.join("outcome.json"), &summary)?;
    Ok(PerturbOutput::Trace(outcome))
}

fn event_name(kind: PerturbationKind) -> &'static str {
    match kind {
        PerturbationKind::FreezePlasticity => "freeze_plasticity",
        PerturbationKind::ZeroWeights => "zero_weights",
        PerturbationKind::SaturateActions => "saturate_actions",
    }
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Clone, Debug, PartialEq)]
pub enum AnalysisKind {
    /// Per-trajectory fits unless `joint`.
    Pca { joint: bool },
    Histogram { bins: usize },
    /// Weight grids from a trajectory (snapshot index, default last) or
    /// from a genome (static weights, evolved initial weights, or a random
    /// start drawn from `seed`).
    Frames { index: Option<usize>, seed: u64 },
}

pub fn cmd_analyze(kind: &AnalysisKind, inputs: &[PathBuf], config: Option<&ExperimentConfig>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(Error::Invalid("no input files".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let need_config = || config.ok_or_else(|| Error::Invalid("this analysis needs a config for the network topology".into()));
    let mut written = Vec::new();
    match kind {
        AnalysisKind::Pca { joint } => {
            let trajs = inputs.iter().map(WeightTrajectory::load).collect::<Result<Vec<_>>>()?;
            let fits = if *joint {
                vec![("".to_string(), pca3_joint(&trajs.iter().collect::<Vec<_>>())?)]
            } else {
                let single = trajs.len() == 1;
                trajs
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Ok((if single { String::new() } else { format!("_{i}") }, pca3(t)?)))
                    .collect::<Result<Vec<_>>>()?
            };
            for (suffix, fit) in fits {
                let json = out_dir.join(format!("pca{suffix}.json"));
                write_json(&json, &fit)?;
                let csv_path = out_dir.join(format!("projection{suffix}.csv"));
                let mut w = csv::Writer::from_path(&csv_path)?;
                let k = fit.components.len();
                w.write_record((0..k).map(|i| format!("pc{}", i + 1)))?;
                for row in &fit.projection {
                    w.write_record(row.iter().map(f64::to_string))?;
                }
                w.flush()?;
                written.extend([json, csv_path]);
            }
        }
        AnalysisKind::Histogram { bins } => {
            let cfg = need_config()?;
            let genome = load_genome(&inputs[0], cfg)?;
            for h in coefficient_histogram(&genome, &cfg.topology, *bins)? {
                let p = out_dir.join(format!("histogram_{}.csv", class_file(h.class)));
                h.write_csv(std::fs::File::create(&p)?)?;
                written.push(p);
            }
        }
        AnalysisKind::Frames { index, seed } => {
            let input = &inputs[0];
            let mut magic = [0u8; 4];
            std::fs::File::open(input)?.read_exact(&mut magic)?;
            let weights = if &magic == b"HBWT" {
                let t = WeightTrajectory::load(input)?;
                let i = index.unwrap_or(t.len().saturating_sub(1));
                let row = t.rows.get(i).ok_or_else(|| Error::Invalid(format!("trajectory has {} snapshots", t.len())))?;
                let mut w = Vec::new();
                let mut off = 0;
                for &(r, c) in &t.layer_shapes {
                    w.push(crate::net::Matrix::from_vec(r, c, row[off..off + r * c].to_vec())?);
                    off += r * c;
                }
                WeightState { layers: w, normalization: Default::default() }
            } else {
                let cfg = need_config()?;
                let genome = load_genome(input, cfg)?;
                let agent = Agent::new(&genome, &cfg.topology)?;
                let d = agent.decoded();
                match (&d.direct, &d.init_weights) {
                    (Some(w), _) | (None, Some(w)) => w.clone(),
                    (None, None) => WeightState::init(&cfg.topology, *seed, cfg.lifetime.init),
                }
            };
            for l in 1..=weights.layers.len() {
                let grid = weight_frame(&weights, l)?;
                let p = out_dir.join(format!("frame_layer{l}.csv"));
                grid.write_csv(std::fs::File::create(&p)?)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

fn class_file(c: CoefficientClass) -> &'static str {
    match c {
        CoefficientClass::A => "A",
        CoefficientClass::B => "B",
        CoefficientClass::C => "C",
        CoefficientClass::D => "D",
        CoefficientClass::Eta => "eta",
    }
}

