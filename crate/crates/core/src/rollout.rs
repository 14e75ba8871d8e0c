//! Fitness evaluation: binding genomes to environments, multi-morphology
//! averaging, held-out evaluation and the perturbation experiments.

use std::sync::Arc;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::crawler::{Crawler, CrawlerMorphology, MorphologySet, SOLVED_DISTANCE};
use crate::envs::track::{TrackEnv, TrackParams};
use crate::envs::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::es::{EvalContext, Fitness, Purpose, Score};
use crate::genome::{decode, Decoded, Genome, GenomeLayout, GenomeMode};
use crate::net::{run_lifetime, Controller, LifetimeConfig, LifetimeHooks, NetworkTopology, NoHooks, WeightState};
use crate::seed;

/// Result of one lifetime.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub fitness: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<Snapshot>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<PerturbationRecord>,
    pub diverged: bool,
    #[serde(skip)]
    pub final_weights: Option<WeightState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Action the environment received.
    pub action: Vec<f64>,
    /// Action the network produced.
    pub network_output: Vec<f64>,
    pub reward: f64,
}

/// Flattened fc weights at the start of `step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub step: usize,
    pub kind: PerturbationKind,
    /// Connections zeroed, or steps affected.
    pub affected: usize,
}

/// Distance-type outcome reaches `threshold`.
pub fn solved(outcome: &EpisodeOutcome, threshold: f64) -> bool {
    !outcome.diverged && outcome.fitness >= threshold
}

// ---------------------------------------------------------------------------
// Perturbations

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    FreezePlasticity,
    ZeroWeights,
    SaturateActions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    /// Uniform draw over all fc connections.
    #[default]
    Random,
    /// The middle rows of every layer, as one contiguous band.
    Band,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEvent {
    pub kind: PerturbationKind,
    pub at_step: usize,
    /// Unset means until the end of the episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    /// Saturation level; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl PerturbationEvent {
    pub fn freeze(at_step: usize) -> Self {
        PerturbationEvent { kind: PerturbationKind::FreezePlasticity, at_step, duration: None, fraction: None, value: None }
    }

    pub fn zero(at_step: usize, fraction: f64) -> Self {
        PerturbationEvent { kind: PerturbationKind::ZeroWeights, at_step, duration: None, fraction: Some(fraction), value: None }
    }

    /// Actions forced to one on `[start, end)`.
    pub fn saturate(start: usize, end: usize) -> Self {
        PerturbationEvent {
            kind: PerturbationKind::SaturateActions,
            at_step: start,
            duration: Some(end.saturating_sub(start)),
            fraction: None,
            value: None,
        }
    }

    fn active_at(&self, t: usize) -> bool {
        t >= self.at_step && self.duration.is_none_or(|d| t < self.at_step + d)
    }
}

/// Default share of weights removed by a zeroing event.
pub const DEFAULT_ZERO_FRACTION: f64 = 1.0 / 3.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub events: Vec<PerturbationEvent>,
    #[serde(default)]
    pub zero_mode: ZeroMode,
}

impl PerturbationSchedule {
    /// Validates and sorts by `at_step` (stable).
    pub fn new(mut events: Vec<PerturbationEvent>) -> Result<Self> {
        for (k, e) in events.iter().enumerate() {
            if let Some(f) = e.fraction {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Invalid(format!("event {k}: fraction {f} outside (0, 1]")));
                }
            }
            if e.duration == Some(0) {
                return Err(Error::Invalid(format!("event {k}: duration must be at least 1")));
            }
            if let Some(v) = e.value {
                if !v.is_finite() {
                    return Err(Error::Invalid(format!("event {k}: value must be finite")));
                }
            }
        }
        events.sort_by_key(|e| e.at_step);
        Ok(PerturbationSchedule { events, zero_mode: ZeroMode::Random })
    }

    pub fn with_zero_mode(mut self, mode: ZeroMode) -> Self {
        self.zero_mode = mode;
        self
    }

    pub fn first_step(&self) -> Option<usize> {
        self.events.first().map(|e| e.at_step)
    }
}

/// Lifetime hooks carrying out a schedule. Events starting at or beyond the
/// horizon are dropped with a warning.
pub struct PerturbationHooks {
    events: Vec<PerturbationEvent>,
    zero_mode: ZeroMode,
    seed: u64,
}

impl PerturbationHooks {
    pub fn new(schedule: &PerturbationSchedule, horizon: usize, seed: u64) -> Self {
        let events = schedule
            .events
            .iter()
            .filter(|e| {
                let keep = e.at_step < horizon;
                if !keep {
                    log::warn!("ignoring {:?} at step {} beyond horizon {horizon}", e.kind, e.at_step);
                }
                keep
            })
            .cloned()
            .collect();
        PerturbationHooks { events, zero_mode: schedule.zero_mode, seed }
    }
}

/// Zeroes `fraction` of all fc connections; returns how many.
pub fn zero_weights(weights: &mut WeightState, fraction: f64, mode: ZeroMode, seed: u64) -> usize {
    match mode {
        ZeroMode::Random => {
            let total = weights.synapse_count();
            let count = ((fraction * total as f64).round() as usize).min(total);
            let mut rng = seed::rng(seed);
            let mut picked: Vec<usize> = sample(&mut rng, total, count).into_iter().collect();
            picked.sort_unstable();
            let mut base = 0;
            let mut it = picked.into_iter().peekable();
            for layer in &mut weights.layers {
                let n = layer.len();
                let data = layer.as_mut_slice();
                while let Some(&k) = it.peek() {
                    if k >= base + n {
                        break;
                    }
                    data[k - base] = 0.0;
                    it.next();
                }
                base += n;
            }
            count
        }
        ZeroMode::Band => {
            let mut count = 0;
            for layer in &mut weights.layers {
                let rows = layer.rows();
                let band = ((fraction * rows as f64).round() as usize).min(rows);
                let start = (rows - band) / 2;
                let cols = layer.cols();
                layer.as_mut_slice()[start * cols..(start + band) * cols].fill(0.0);
                count += band * cols;
            }
            count
        }
    }
}

impl LifetimeHooks for PerturbationHooks {
    fn on_step_start(&mut self, step: usize, weights: &mut WeightState, log: &mut Vec<PerturbationRecord>) {
        for (k, e) in self.events.iter().enumerate() {
            if e.at_step != step {
                continue;
            }
            let affected = match e.kind {
                PerturbationKind::ZeroWeights => {
                    let fraction = e.fraction.unwrap_or(DEFAULT_ZERO_FRACTION);
                    zero_weights(weights, fraction, self.zero_mode, seed::derive(&[seed::tag::PERTURB, self.seed, k as u64]))
                }
                _ => e.duration.unwrap_or(0),
            };
            log.push(PerturbationRecord { step, kind: e.kind, affected });
        }
    }

    fn plasticity_enabled(&mut self, step: usize) -> bool {
        !self.events.iter().any(|e| e.kind == PerturbationKind::FreezePlasticity && e.active_at(step))
    }

    fn env_action(&mut self, step: usize, network_action: &[f64]) -> Option<Vec<f64>> {
        self.events
            .iter()
            .rev()
            .find(|e| e.kind == PerturbationKind::SaturateActions && e.active_at(step))
            .map(|e| vec![e.value.unwrap_or(1.0); network_action.len()])
    }
}

// ---------------------------------------------------------------------------
// Agents and scenarios

/// A genome decoded for a topology, ready to drive episodes.
#[derive(Clone, Debug)]
pub struct Agent {
    pub topology: NetworkTopology,
    pub mode: GenomeMode,
    decoded: Decoded,
}

impl Agent {
    pub fn new(genome: &Genome, topology: &NetworkTopology) -> Result<Self> {
        Ok(Agent {
            topology: topology.clone(),
            mode: genome.layout.mode,
            decoded: decode(genome, topology)?,
        })
    }

    pub fn decoded(&self) -> &Decoded {
        &self.decoded
    }

    pub fn is_plastic(&self) -> bool {
        self.decoded.coeffs.is_some()
    }

    fn controller(&self) -> Controller<'_> {
        match (&self.decoded.coeffs, &self.decoded.direct) {
            (Some(coeffs), _) => Controller::Hebbian { coeffs, initial: self.decoded.init_weights.as_ref() },
            (None, Some(weights)) => Controller::Static { weights },
            (None, None) => unreachable!("decode always yields coefficients or weights"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioKind {
    Crawler { morphology: Arc<CrawlerMorphology>, phase_period: usize },
    Track { params: TrackParams },
}

/// One environment instance description plus whether training may see it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seen: bool,
    pub horizon: usize,
    pub kind: ScenarioKind,
}

impl Scenario {
    pub fn crawler(morphology: Arc<CrawlerMorphology>, seen: bool, horizon: usize, phase_period: usize) -> Self {
        Scenario {
            name: morphology.name.clone(),
            seen,
            horizon,
            kind: ScenarioKind::Crawler { morphology, phase_period },
        }
    }

    pub fn build(&self) -> Box<dyn Environment> {
        match &self.kind {
            ScenarioKind::Crawler { morphology, phase_period } => Box::new(Crawler::new(morphology.clone(), self.horizon, *phase_period)),
            ScenarioKind::Track { params } => Box::new(TrackEnv::new(params.clone(), self.horizon)),
        }
    }

    /// Fitness at which an episode counts as solved, for distance tasks.
    pub fn solved_threshold(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::Crawler { .. } => Some(SOLVED_DISTANCE),
            ScenarioKind::Track { .. } => None,
        }
    }
}

/// Training and held-out scenarios for one environment config.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub seen: Vec<Scenario>,
    pub unseen: Vec<Scenario>,
}

impl Task {
    pub fn from_config(config: &EnvConfig) -> Result<Self> {
        match config {
            EnvConfig::Crawler { horizon, params } => {
                let set = MorphologySet::generate(params)?;
                Ok(Task::from_morphologies(&set, *horizon, params.phase_period))
            }
            EnvConfig::Track { horizon, params } => Ok(Task {
                seen: vec![Scenario {
                    name: "track".into(),
                    seen: true,
                    horizon: *horizon,
                    kind: ScenarioKind::Track { params: params.clone() },
                }],
                unseen: Vec::new(),
            }),
            EnvConfig::Sphere { .. } => Err(Error::Invalid("the sphere objective has no episodes".into())),
        }
    }

    pub fn from_morphologies(set: &MorphologySet, horizon: usize, phase_period: usize) -> Self {
        Task {
            seen: set.seen.iter().map(|m| Scenario::crawler(m.clone(), true, horizon, phase_period)).collect(),
            unseen: set.unseen.iter().map(|m| Scenario::crawler(m.clone(), false, horizon, phase_period)).collect(),
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Scenario> {
        self.seen.iter().chain(&self.unseen)
    }
}

/// Source of per-episode (weight init, environment) seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedBank {
    pub base: u64,
}

impl SeedBank {
    pub fn new(base: u64) -> Self {
        SeedBank { base }
    }

    /// `(init_seed, env_seed)` for episode `i`.
    pub fn episode(&self, i: usize) -> (u64, u64) {
        (
            seed::derive(&[seed::tag::INIT, self.base, i as u64]),
            seed::derive(&[seed::tag::ENV, self.base, i as u64]),
        )
    }
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_episode: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over episodes.
    pub std: f64,
    pub diverged: usize,
}

impl Evaluation {
    pub fn from_fitnesses(per_episode: Vec<f64>, diverged: usize) -> Self {
        let (mean, std) = mean_std(&per_episode);
        Evaluation { per_episode, mean, std, diverged }
    }

    pub fn solved_count(&self, threshold: f64) -> usize {
        self.per_episode.iter().filter(|&&f| f >= threshold).count()
    }

    /// "mean ± std" with no decimals.
    pub fn summary(&self) -> String {
        format!("{:.0} ± {:.0}", self.mean, self.std)
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn lifetime_for(config: &LifetimeConfig, scenario: &Scenario) -> LifetimeConfig {
    LifetimeConfig { steps: scenario.horizon, ..config.clone() }
}

/// A single episode with arbitrary hooks.
pub fn run_episode(
    agent: &Agent,
    scenario: &Scenario,
    seeds: (u64, u64),
    config: &LifetimeConfig,
    hooks: &mut dyn LifetimeHooks,
) -> Result<EpisodeOutcome> {
    let mut env = scenario.build();
    let (init_seed, env_seed) = seeds;
    let config = lifetime_for(config, scenario);
    run_lifetime(
        &agent.topology,
        agent.controller(),
        agent.decoded.conv.as_deref(),
        env.as_mut(),
        env_seed,
        init_seed,
        &config,
        hooks,
    )
}

/// Episodes with fresh initial weights from `bank`, run in parallel and
/// reduced in episode order.
pub fn evaluate(agent: &Agent, scenario: &Scenario, episodes: usize, bank: SeedBank, config: &LifetimeConfig) -> Result<Evaluation> {
    if episodes == 0 {
        return Err(Error::Invalid("evaluation needs at least one episode".into()));
    }
    let config = LifetimeConfig { record: Default::default(), ..config.clone() };
    let outcomes: Vec<Result<EpisodeOutcome>> = (0..episodes)
        .into_par_iter()
        .map(|i| run_episode(agent, scenario, bank.episode(i), &config, &mut NoHooks))
        .collect();
    let mut fitness = Vec::with_capacity(episodes);
    let mut diverged = 0;
    for o in outcomes {
        let o = o?;
        diverged += o.diverged as usize;
        fitness.push(o.fitness);
    }
    Ok(Evaluation::from_fitnesses(fitness, diverged))
}

/// Mean over `seen` of the mean episode fitness. Scenarios not marked seen
/// are refused.
pub fn multi_morphology_fitness(
    agent: &Agent,
    seen: &[Scenario],
    episodes_per_morph: usize,
    bank: SeedBank,
    config: &LifetimeConfig,
) -> Result<f64> {
    if seen.is_empty() {
        return Err(Error::Invalid("no seen scenarios to train on".into()));
    }
    if let Some(s) = seen.iter().find(|s| !s.seen) {
        return Err(Error::Invalid(format!("scenario `{}` is held out from training", s.name)));
    }
    let mut total = 0.0;
    for s in seen {
        total += evaluate(agent, s, episodes_per_morph, bank, config)?.mean;
    }
    Ok(total / seen.len() as f64)
}

/// One episode under a perturbation schedule. Perturbation randomness is
/// keyed by the episode's init seed.
pub fn run_perturbed(
    agent: &Agent,
    scenario: &Scenario,
    schedule: &PerturbationSchedule,
    seeds: (u64, u64),
    config: &LifetimeConfig,
) -> Result<EpisodeOutcome> {
    let mut hooks = PerturbationHooks::new(schedule, scenario.horizon, seeds.0);
    run_episode(agent, scenario, seeds, config, &mut hooks)
}

/// Mean fitness under a schedule over `episodes` seeds.
pub fn evaluate_perturbed(
    agent: &Agent,
    scenario: &Scenario,
    schedule: &PerturbationSchedule,
    episodes: usize,
    bank: SeedBank,
    config: &LifetimeConfig,
) -> Result<Evaluation> {
    let config = LifetimeConfig { record: Default::default(), ..config.clone() };
    let outcomes: Vec<Result<EpisodeOutcome>> = (0..episodes)
        .into_par_iter()
        .map(|i| run_perturbed(agent, scenario, schedule, bank.episode(i), &config))
        .collect();
    let mut fitness = Vec::with_capacity(episodes);
    let mut diverged = 0;
    for o in outcomes {
        let o = o?;
        diverged += o.diverged as usize;
        fitness.push(o.fitness);
    }
    Ok(Evaluation::from_fitnesses(fitness, diverged))
}

// ---------------------------------------------------------------------------
// ES binding

/// Fitness of a flat genome on a task: training uses the seen scenarios
/// only; evaluation pools every seen-scenario episode.
#[derive(Clone, Debug)]
pub struct TaskFitness {
    pub topology: NetworkTopology,
    pub layout: GenomeLayout,
    pub task: Task,
    pub lifetime: LifetimeConfig,
    pub train_episodes: usize,
    pub eval_episodes: usize,
}

impl TaskFitness {
    fn score(&self, candidate: &[f64], ctx: &EvalContext) -> Result<Score> {
        let genome = Genome::new(self.layout.clone(), candidate.to_vec())?;
        let agent = Agent::new(&genome, &self.topology)?;
        let bank = SeedBank::new(ctx.seed);
        match ctx.purpose {
            Purpose::Train => {
                let f = multi_morphology_fitness(&agent, &self.task.seen, self.train_episodes, bank, &self.lifetime)?;
                Ok(Score::single(f))
            }
            Purpose::Eval => {
                let mut pooled = Vec::new();
                let mut diverged = 0;
                for s in &self.task.seen {
                    let e = evaluate(&agent, s, self.eval_episodes, bank, &self.lifetime)?;
                    pooled.extend(e.per_episode);
                    diverged += e.diverged;
                }
                let (mean, std) = mean_std(&pooled);
                Ok(Score { mean, std, diverged: diverged > 0 })
            }
        }
    }
}

impl Fitness for TaskFitness {
    fn evaluate(&self, candidate: &[f64], ctx: &EvalContext) -> Score {
        match self.score(candidate, ctx) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("candidate {} of generation {} failed: {e}", ctx.index, ctx.generation);
                Score { mean: self.lifetime.floor_fitness, std: 0.0, diverged: true }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::CrawlerParams;
    use crate::genome::{init_genome, layout_for};
    use crate::net::PlasticityVariant;

    fn crawler_task() -> Task {
        Task::from_config(&EnvConfig::desk_crawler().with_horizon(200)).unwrap()
    }

    fn hebbian_agent(seed: u64) -> Agent {
        let topo = NetworkTopology::desk_crawler(4);
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        Agent::new(&init_genome(&layout, seed), &topo).unwrap()
    }

    fn zero_agent() -> Agent {
        let topo = NetworkTopology::desk_crawler(4);
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = Genome::new(layout.clone(), vec![0.0; layout.total_len]).unwrap();
        Agent::new(&g, &topo).unwrap()
    }

    fn recorded() -> LifetimeConfig {
        let mut c = LifetimeConfig::default();
        c.record.steps = true;
        c.record.weight_stride = Some(1);
        c
    }

    #[test]
    fn solved_boundary() {
        let at = |d| EpisodeOutcome { fitness: d, ..Default::default() };
        assert!(solved(&at(100.0), SOLVED_DISTANCE));
        assert!(!solved(&at(99.9), SOLVED_DISTANCE));
        assert!(!solved(&at(-50.0), SOLVED_DISTANCE));
    }

    #[test]
    fn null_genome_barely_moves() {
        let task = crawler_task();
        let e = evaluate(&zero_agent(), &task.seen[0], 100, SeedBank::new(1), &LifetimeConfig::default()).unwrap();
        assert!(e.mean.abs() < 5.0, "{}", e.mean);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let task = crawler_task();
        let a = hebbian_agent(2);
        let c = LifetimeConfig::default();
        let e1 = evaluate(&a, &task.seen[1], 8, SeedBank::new(5), &c).unwrap();
        let e2 = evaluate(&a, &task.seen[1], 8, SeedBank::new(5), &c).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.summary().contains(" ± "));
    }

    #[test]
    fn multi_morph_is_mean_of_seen() {
        let task = crawler_task();
        let a = hebbian_agent(3);
        let c = LifetimeConfig::default();
        let bank = SeedBank::new(9);
        let per: Vec<f64> = task.seen.iter().map(|s| evaluate(&a, s, 4, bank, &c).unwrap().mean).collect();
        let f = multi_morphology_fitness(&a, &task.seen, 4, bank, &c).unwrap();
        assert!((f - (per[0] + per[1]) / 2.0).abs() < 1e-12);
        let one = multi_morphology_fitness(&a, &task.seen[..1], 4, bank, &c).unwrap();
        assert_eq!(one, per[0]);
        assert!(multi_morphology_fitness(&a, &task.unseen, 4, bank, &c).is_err());
    }

    #[test]
    fn training_fitness_never_touches_unseen() {
        let params = CrawlerParams::default();
        let set = MorphologySet::generate(&params).unwrap();
        let task = Task::from_morphologies(&set, 100, params.phase_period);
        let topo = NetworkTopology::desk_crawler(4);
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::AD));
        let fit = TaskFitness { topology: topo, layout: layout.clone(), task, lifetime: LifetimeConfig::default(), train_episodes: 2, eval_episodes: 2 };
        let g = init_genome(&layout, 0);
        for purpose in [Purpose::Train, Purpose::Eval] {
            let ctx = EvalContext { generation: 0, index: 0, seed: 1, purpose };
            fit.evaluate(&g.values, &ctx);
        }
        assert!(set.seen.iter().all(|m| m.step_count() > 0));
        assert_eq!(set.unseen[0].step_count(), 0);
    }

    #[test]
    fn freeze_at_zero_is_static_random_policy() {
        let task = crawler_task();
        let a = hebbian_agent(4);
        let seeds = SeedBank::new(1).episode(0);
        let frozen = run_perturbed(&a, &task.seen[0], &PerturbationSchedule::new(vec![PerturbationEvent::freeze(0)]).unwrap(), seeds, &recorded()).unwrap();
        let w0 = WeightState::init(&a.topology, seeds.0, Default::default());
        let static_agent = {
            let layout = layout_for(&a.topology, GenomeMode::StaticWeights);
            Agent::new(&Genome::new(layout, w0.flatten()).unwrap(), &a.topology).unwrap()
        };
        let base = run_episode(&static_agent, &task.seen[0], seeds, &recorded(), &mut NoHooks).unwrap();
        assert_eq!(frozen.fitness, base.fitness);
        assert!(frozen.snapshots.iter().all(|s| s.weights == w0.flatten()));
    }

    #[test]
    fn freeze_invariance_and_locality() {
        let task = crawler_task();
        let a = hebbian_agent(5);
        let seeds = SeedBank::new(2).episode(3);
        let plain = run_episode(&a, &task.seen[0], seeds, &recorded(), &mut NoHooks).unwrap();
        let t = 60;
        let sched = PerturbationSchedule::new(vec![PerturbationEvent::freeze(t)]).unwrap();
        let out = run_perturbed(&a, &task.seen[0], &sched, seeds, &recorded()).unwrap();
        assert_eq!(&out.records[..t], &plain.records[..t]);
        assert_eq!(&out.snapshots[..=t], &plain.snapshots[..=t]);
        assert!(out.snapshots[t..].iter().all(|s| s.weights == out.snapshots[t].weights));
    }

    #[test]
    fn zeroing_everything_gives_zero_snapshot() {
        let task = crawler_task();
        let a = hebbian_agent(6);
        let sched = PerturbationSchedule::new(vec![PerturbationEvent::zero(40, 1.0)]).unwrap();
        let out = run_perturbed(&a, &task.seen[0], &sched, (1, 1), &recorded()).unwrap();
        assert!(out.snapshots[40].weights.iter().all(|&w| w == 0.0));
        assert_eq!(out.perturbations[0].affected, a.topology.synapse_count());
    }

    #[test]
    fn zero_fraction_counts() {
        let topo = NetworkTopology::quadruped();
        let mut w = WeightState::init(&topo, 1, Default::default());
        let n = zero_weights(&mut w, DEFAULT_ZERO_FRACTION, ZeroMode::Random, 3);
        assert_eq!(n, 4_096);
        assert_eq!(w.flatten().iter().filter(|&&v| v == 0.0).count(), 4_096);
        let mut b = WeightState::init(&topo, 1, Default::default());
        zero_weights(&mut b, 0.5, ZeroMode::Band, 0);
        assert!(b.layers[2].row(32).iter().all(|&v| v == 0.0));
        assert!(b.layers[2].row(0).iter().all(|&v| v != 0.0));
    }

    #[test]
    fn saturation_window_in_log() {
        let task = crawler_task();
        let a = hebbian_agent(7);
        let mut c = recorded();
        c.record.weight_stride = None;
        let long = Scenario { horizon: 500, ..task.seen[0].clone() };
        let out = run_perturbed(&a, &long, &PerturbationSchedule::new(vec![PerturbationEvent::saturate(300, 400)]).unwrap(), (2, 2), &c).unwrap();
        for r in &out.records {
            let ones = r.action.iter().all(|&v| v == 1.0);
            assert_eq!(ones, (300..400).contains(&r.step), "step {}", r.step);
        }
    }

    #[test]
    fn events_past_horizon_ignored() {
        let task = crawler_task();
        let a = hebbian_agent(8);
        let sched = PerturbationSchedule::new(vec![PerturbationEvent::zero(5_000, 0.5)]).unwrap();
        let out = run_perturbed(&a, &task.seen[0], &sched, (1, 2), &LifetimeConfig::default()).unwrap();
        let plain = run_episode(&a, &task.seen[0], (1, 2), &LifetimeConfig::default(), &mut NoHooks).unwrap();
        assert_eq!(out.fitness, plain.fitness);
        assert!(out.perturbations.is_empty());
    }

    #[test]
    fn schedule_validation() {
        assert!(PerturbationSchedule::new(vec![PerturbationEvent::zero(1, 0.0)]).is_err());
        assert!(PerturbationSchedule::new(vec![PerturbationEvent::zero(1, 1.5)]).is_err());
        assert!(PerturbationSchedule::new(vec![PerturbationEvent::saturate(3, 3)]).is_err());
        let s = PerturbationSchedule::new(vec![PerturbationEvent::freeze(9), PerturbationEvent::freeze(2)]).unwrap();
        assert_eq!(s.first_step(), Some(2));
    }

    #[test]
    fn outcome_json_round_trip() {
        let task = crawler_task();
        let out = run_episode(&hebbian_agent(1), &task.seen[0], (0, 0), &recorded(), &mut NoHooks).unwrap();
        let text = serde_json::to_string(&out).unwrap();
        let back: EpisodeOutcome = serde_json::from_str(&text).unwrap();
        assert_eq!(back.records, out.records);
        assert_eq!(back.fitness, out.fitness);
    }
}
