//! One agent lifetime: forward, act, update, repeated until the horizon.

use serde::{Deserialize, Serialize};

use super::{
    forward_features, forward_update_sequential, hebbian_step, preprocess, ActivationTrace, HebbianCoefficients,
    InitDistribution, NetworkTopology, Normalization, UpdateOrder, WeightState,
};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::rollout::{EpisodeOutcome, PerturbationRecord, Snapshot, StepRecord};

/// What drives the weights during an episode.
#[derive(Clone, Copy, Debug)]
pub enum Controller<'a> {
    /// Weights start random (or from `initial`) and follow the rule.
    Hebbian {
        coeffs: &'a HebbianCoefficients,
        initial: Option<&'a WeightState>,
    },
    /// Fixed weights, no plasticity.
    Static { weights: &'a WeightState },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordOptions {
    /// Keep per-step actions and rewards.
    pub steps: bool,
    /// Keep a flattened weight snapshot every `n` steps.
    pub weight_stride: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifetimeConfig {
    /// Episode length. Rollouts overwrite it with the scenario horizon.
    #[serde(skip)]
    pub steps: usize,
    pub init: InitDistribution,
    pub normalization: Normalization,
    pub update_order: UpdateOrder,
    /// Fitness assigned when the weights blow up.
    pub floor_fitness: f64,
    pub record: RecordOptions,
}

impl Default for LifetimeConfig {
    fn default() -> Self {
        LifetimeConfig {
            steps: 1_000,
            init: InitDistribution::default(),
            normalization: Normalization::None,
            update_order: UpdateOrder::Synchronous,
            floor_fitness: -1_000.0,
            record: RecordOptions::default(),
        }
    }
}

/// Per-step callbacks into a running lifetime. All methods default to no-ops.
pub trait LifetimeHooks {
    /// Called before the forward pass of `step`; may edit the weights.
    fn on_step_start(&mut self, _step: usize, _weights: &mut WeightState, _log: &mut Vec<PerturbationRecord>) {}

    /// Whether the rule runs after the forward pass of `step`.
    fn plasticity_enabled(&mut self, _step: usize) -> bool {
        true
    }

    /// Replacement for the action sent to the environment, if any. The
    /// network's own output and update are unaffected.
    fn env_action(&mut self, _step: usize, _network_action: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn on_step_end(&mut self, _step: usize, _weights: &WeightState, _reward: f64) {}
}

pub struct NoHooks;

impl LifetimeHooks for NoHooks {}

/// Runs one episode. The environment is reset with `env_seed`; a Hebbian
/// controller without explicit initial weights samples them from
/// `init_seed`. The reward only accumulates into the returned fitness and is
/// never shown to the network.
#[allow(clippy::too_many_arguments)]
pub fn run_lifetime(
    topology: &NetworkTopology,
    controller: Controller<'_>,
    conv_params: Option<&[f64]>,
    env: &mut dyn Environment,
    env_seed: u64,
    init_seed: u64,
    config: &LifetimeConfig,
    hooks: &mut dyn LifetimeHooks,
) -> Result<EpisodeOutcome> {
    if env.action_dim() != topology.output_dim() {
        return Err(Error::shape("environment action", topology.output_dim(), env.action_dim()));
    }
    let (mut weights, rule) = match controller {
        Controller::Hebbian { coeffs, initial } => {
            let w = match initial {
                Some(w) => w.clone(),
                None => WeightState::init(topology, init_seed, config.init),
            };
            (w.with_normalization(config.normalization), Some(coeffs))
        }
        Controller::Static { weights } => (weights.clone(), None),
    };
    if !weights.matches(topology) {
        return Err(Error::shape(
            "initial weights",
            format!("{:?}", topology.layer_shapes()),
            format!("{:?}", weights.shapes()),
        ));
    }

    let mut outcome = EpisodeOutcome::default();
    let mut trace = ActivationTrace::for_topology(topology);
    let mut features = Vec::with_capacity(topology.input_dim);
    let mut obs = env.reset(env_seed)?;

    for t in 0..config.steps {
        hooks.on_step_start(t, &mut weights, &mut outcome.perturbations);
        if let Some(stride) = config.record.weight_stride {
            if stride > 0 && t % stride == 0 {
                outcome.snapshots.push(Snapshot { step: t, weights: weights.flatten() });
            }
        }
        preprocess(topology, conv_params, &obs, &mut features)?;
        let plastic = rule.is_some() && hooks.plasticity_enabled(t);
        let sequential = plastic && config.update_order == UpdateOrder::Sequential;
        let mut diverged = false;
        if sequential {
            let coeffs = rule.expect("plastic implies rule");
            match forward_update_sequential(&mut weights, coeffs, &features, &mut trace) {
                Ok(()) => {}
                Err(Error::Divergence { .. }) => diverged = true,
                Err(e) => return Err(e),
            }
        } else {
            forward_features(&weights, &features, &mut trace)?;
        }

        let network_action = trace.output();
        let replaced = hooks.env_action(t, network_action);
        let sent: &[f64] = replaced.as_deref().unwrap_or(network_action);
        let transition = env.step(sent)?;
        outcome.fitness += transition.reward;
        outcome.steps = t + 1;
        if config.record.steps {
            outcome.records.push(StepRecord {
                step: t,
                action: sent.to_vec(),
                network_output: network_action.to_vec(),
                reward: transition.reward,
            });
        }

        if plastic && !sequential {
            match hebbian_step(&mut weights, rule.expect("plastic implies rule"), &trace) {
                Ok(()) => {}
                Err(Error::Divergence { .. }) => diverged = true,
                Err(e) => return Err(e),
            }
        }
        if diverged {
            log::debug!("weights diverged at step {t}; scoring floor fitness");
            outcome.diverged = true;
            outcome.fitness = config.floor_fitness;
            break;
        }
        hooks.on_step_end(t, &weights, transition.reward);
        obs = transition.observation;
        if transition.done {
            break;
        }
    }
    outcome.final_weights = Some(weights);
    Ok(outcome)
}
