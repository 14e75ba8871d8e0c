mod common;

use common::{scalar_hebbian, to_nested};
use hebbian_es::envs::{Environment, Observation, Transition};
use hebbian_es::net::{
    hebbian_step, normalize_layer, run_lifetime, ActivationTrace, CoefficientClass, Controller, HebbianCoefficients, LayerTrace,
    LifetimeConfig, Matrix, NetworkTopology, NoHooks, Normalization, PlasticityVariant, WeightState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_coeffs(topology: &NetworkTopology, variant: PlasticityVariant, rng: &mut ChaCha8Rng) -> HebbianCoefficients {
    let mut c = HebbianCoefficients::zeros(topology, variant);
    for class in CoefficientClass::ALL {
        for m in c.tensor_mut(class) {
            m.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
    }
    c
}

fn random_trace(topology: &NetworkTopology, rng: &mut ChaCha8Rng) -> ActivationTrace {
    ActivationTrace {
        layers: topology
            .layer_shapes()
            .into_iter()
            .map(|(r, c)| LayerTrace {
                pre: (0..r).map(|_| rng.random_range(-1.0..1.0)).collect(),
                post: (0..c).map(|_| rng.random_range(-0.999..0.999)).collect(),
            })
            .collect(),
    }
}

fn random_topology(rng: &mut ChaCha8Rng) -> NetworkTopology {
    let depth = rng.random_range(1..=3);
    let sizes = (0..depth).map(|_| rng.random_range(1..=9)).collect();
    NetworkTopology::new(rng.random_range(1..=9), sizes).unwrap()
}

#[test]
fn vectorized_rule_matches_scalar_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let variant = PlasticityVariant::ALL[case % 5];
        let topology = random_topology(&mut rng);
        let normalize = case % 3 == 0;
        let mut w = WeightState::init(&topology, rng.random(), Default::default());
        for m in &mut w.layers {
            m.as_mut_slice().iter_mut().for_each(|v| *v *= 20.0);
        }
        let w = w.with_normalization(if normalize { Normalization::LayerMaxAbs } else { Normalization::None });
        let coeffs = random_coeffs(&topology, variant, &mut rng);
        let trace = random_trace(&topology, &mut rng);
        let nested: Vec<_> = w.layers.iter().map(to_nested).collect();
        let expected = scalar_hebbian(&nested, &coeffs, &trace.layers, normalize);
        let mut got = w.clone();
        hebbian_step(&mut got, &coeffs, &trace).unwrap();
        for (l, m) in got.layers.iter().enumerate() {
            for (i, row) in expected[l].iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    assert!((m.get(i, j) - e).abs() <= 1e-12, "case {case} {variant:?} layer {l} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn worked_single_synapse_example() {
    let topology = NetworkTopology::new(1, vec![1]).unwrap();
    let mut coeffs = HebbianCoefficients::zeros(&topology, PlasticityVariant::ABCDPlusEta);
    coeffs.eta[0].set(0, 0, 0.5);
    coeffs.a[0].set(0, 0, 1.0);
    coeffs.b[0].set(0, 0, -1.0);
    coeffs.c[0].set(0, 0, 2.0);
    coeffs.d[0].set(0, 0, 0.25);
    let trace = ActivationTrace { layers: vec![LayerTrace { pre: vec![0.2], post: vec![-0.5] }] };
    let mut w = WeightState::zeros(&topology);
    hebbian_step(&mut w, &coeffs, &trace).unwrap();
    assert!((w.layers[0].get(0, 0) - -0.525).abs() < 1e-15);
}

/// Emits observation `sin(t)`-like values regardless of action; the reward is
/// a free parameter.
struct Scripted {
    t: usize,
    reward_scale: f64,
}

impl Environment for Scripted {
    fn action_dim(&self) -> usize {
        2
    }
    fn reset(&mut self, _seed: u64) -> hebbian_es::Result<Observation> {
        self.t = 0;
        Ok(self.obs())
    }
    fn step(&mut self, action: &[f64]) -> hebbian_es::Result<Transition> {
        self.t += 1;
        Ok(Transition { observation: self.obs(), reward: self.reward_scale * (action[0] + self.t as f64), done: self.t >= 60 })
    }
}

impl Scripted {
    fn obs(&self) -> Observation {
        let t = self.t as f64;
        Observation::Vector(vec![(0.3 * t).sin(), (0.7 * t).cos(), 0.5])
    }
}

fn trajectory(topology: &NetworkTopology, coeffs: &HebbianCoefficients, reward_scale: f64, init_seed: u64) -> Vec<Vec<f64>> {
    let mut env = Scripted { t: 0, reward_scale };
    let mut cfg = LifetimeConfig { steps: 60, ..Default::default() };
    cfg.record.weight_stride = Some(1);
    let out = run_lifetime(topology, Controller::Hebbian { coeffs, initial: None }, None, &mut env, 0, init_seed, &cfg, &mut NoHooks).unwrap();
    out.snapshots.into_iter().map(|s| s.weights).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_never_see_the_reward(seed in any::<u64>(), scale in -100.0f64..100.0) {
        let topology = NetworkTopology::new(3, vec![4, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = random_coeffs(&topology, PlasticityVariant::ABCDPlusEta, &mut rng);
        let a = trajectory(&topology, &coeffs, 1.0, seed);
        let b = trajectory(&topology, &coeffs, scale, seed);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn inactive_classes_are_ignored(seed in any::<u64>()) {
        let topology = NetworkTopology::new(3, vec![4, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = HebbianCoefficients::zeros(&topology, PlasticityVariant::AOnly);
        for m in &mut coeffs.a {
            m.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
        let base = trajectory(&topology, &coeffs, 1.0, seed);
        let mut noisy = coeffs.clone();
        for class in [CoefficientClass::B, CoefficientClass::C, CoefficientClass::D, CoefficientClass::Eta] {
            for m in noisy.tensor_mut(class) {
                m.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-5.0..5.0));
            }
        }
        prop_assert_eq!(base, trajectory(&topology, &noisy, 1.0, seed));
    }

    #[test]
    fn normalization_is_idempotent(values in prop::collection::vec(-50.0f64..50.0, 1..40)) {
        let mut m = Matrix::from_vec(1, values.len(), values).unwrap();
        normalize_layer(&mut m);
        let once = m.clone();
        normalize_layer(&mut m);
        prop_assert_eq!(once, m);
    }

    #[test]
    fn shapes_are_conserved(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topology = NetworkTopology::new(3, vec![rng.random_range(1..6), 2]).unwrap();
        let coeffs = random_coeffs(&topology, PlasticityVariant::ABCD, &mut rng);
        let mut env = Scripted { t: 0, reward_scale: 1.0 };
        let mut cfg = LifetimeConfig { steps: 60, normalization: Normalization::LayerMaxAbs, ..Default::default() };
        cfg.record.weight_stride = Some(1);
        let out = run_lifetime(&topology, Controller::Hebbian { coeffs: &coeffs, initial: None }, None, &mut env, 0, seed, &cfg, &mut NoHooks).unwrap();
        prop_assert!(!out.snapshots.is_empty());
        for s in &out.snapshots {
            prop_assert_eq!(s.weights.len(), topology.synapse_count());
            prop_assert!(s.weights.iter().all(|v| v.abs() <= 1.0));
        }
        let last = out.final_weights.expect("final weights kept");
        prop_assert_eq!(last.shapes(), topology.layer_shapes());
    }
}
