use hebbian_es::envs::objective::{Linear, Sphere};
use hebbian_es::es::{
    es_update, materialize, run_evolution, sample_population, shape, update_direction, EsConfig, EsState, EvolutionConfig, FitnessReport,
    Progress, Shaping,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reports(state: &EsState, f: impl Fn(&[f64]) -> f64) -> Vec<FitnessReport> {
    sample_population(state)
        .iter()
        .map(|t| FitnessReport { index: t.index, fitness: f(&materialize(t, state)), diverged: false })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn state(h: Vec<f64>, n: usize, mirrored: bool, seed: u64) -> EsState {
    EsState::new(h, &EsConfig { population: n, mirrored, ..EsConfig::default() }, seed).unwrap()
}

#[test]
fn linear_fitness_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
    let lin = Linear { g: g.clone() };
    // Without mirroring the baseline F(h) * eps term only adds noise, so the
    // plain estimator is checked at the origin.
    for (mirrored, h) in [(true, h), (false, vec![0.0; 50])] {
        let s = state(h, 10_000, mirrored, 1);
        let dir = update_direction(&s, &reports(&s, |x| lin.value(x)), Shaping::Raw).unwrap();
        let c = cosine(&dir, &g);
        assert!(c > 0.99, "mirrored={mirrored}: cosine {c}");
    }
}

#[test]
fn quadratic_fitness_follows_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sphere = Sphere::new((0..20).map(|_| rng.random_range(-1.0..1.0)).collect());
    let h: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
    let s = state(h.clone(), 10_000, true, 4);
    let dir = update_direction(&s, &reports(&s, |x| sphere.value(x)), Shaping::Raw).unwrap();
    let c = cosine(&dir, &sphere.gradient(&h));
    assert!(c > 0.99, "cosine {c}");
}

#[test]
fn sphere_converges_for_three_seeds() {
    // start at distance 5 from the optimum
    let start = vec![5.0 / 10f64.sqrt(); 10];
    let sphere = Sphere::new(vec![0.0; 10]);
    for seed in 0..3 {
        let es = EsConfig { population: 100, ..EsConfig::default() };
        let s = EsState::new(start.clone(), &es, seed).unwrap();
        assert!((sphere.distance(&s.h) - 5.0).abs() < 1e-12);
        let config = EvolutionConfig { generations: 300, ..EvolutionConfig::default() };
        let out = run_evolution(Progress::new(s), &config, &sphere, &mut |_| Ok(())).unwrap();
        assert!(sphere.distance(&out.state.h) < 0.1, "seed {seed}: {}", sphere.distance(&out.state.h));
    }
}

fn step(s: &EsState, f: &[f64], shaping: Shaping) -> Vec<f64> {
    let reports: Vec<FitnessReport> = f.iter().enumerate().map(|(i, &v)| FitnessReport { index: i, fitness: v, diverged: false }).collect();
    let next = es_update(s, &reports, shaping).unwrap();
    next.h.iter().zip(&s.h).map(|(a, b)| a - b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raw_update_is_linear_in_fitness(seed in any::<u64>(), f in prop::collection::vec(-10.0f64..10.0, 8)) {
        let s = state(vec![0.5; 6], 8, true, seed);
        let single = step(&s, &f, Shaping::Raw);
        let doubled = step(&s, &f.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), Shaping::Raw);
        for (a, b) in single.iter().zip(&doubled) {
            prop_assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn rank_update_ignores_monotone_transforms(seed in any::<u64>(), f in prop::collection::vec(-10.0f64..10.0, 10)) {
        let s = state(vec![0.0; 5], 10, true, seed);
        let base = step(&s, &f, Shaping::CenteredRank);
        let warped: Vec<f64> = f.iter().map(|v| (v / 3.0).exp() * 7.0 - 2.0).collect();
        prop_assert_eq!(base, step(&s, &warped, Shaping::CenteredRank));
    }

    #[test]
    fn pair_constant_fitness_gives_no_step(seed in any::<u64>(), f in prop::collection::vec(-10.0f64..10.0, 6)) {
        let s = state(vec![1.0; 4], 12, true, seed);
        let full: Vec<f64> = f.iter().chain(f.iter()).copied().collect();
        prop_assert!(step(&s, &full, Shaping::Raw).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn update_is_pure(seed in any::<u64>(), f in prop::collection::vec(-10.0f64..10.0, 4)) {
        let s = state(vec![0.1, 0.2, 0.3], 4, false, seed);
        let r: Vec<FitnessReport> = f.iter().enumerate().map(|(i, &v)| FitnessReport { index: i, fitness: v, diverged: false }).collect();
        prop_assert_eq!(es_update(&s, &r, Shaping::ZScore).unwrap(), es_update(&s.clone(), &r, Shaping::ZScore).unwrap());
    }

    #[test]
    fn shaped_values_are_centered(f in prop::collection::vec(-1e3f64..1e3, 2..60)) {
        let ranks = shape(&f, Shaping::CenteredRank);
        prop_assert!(ranks.iter().sum::<f64>().abs() < 1e-9);
        prop_assert!(ranks.iter().all(|r| (-0.5..=0.5).contains(r)));
        let z = shape(&f, Shaping::ZScore);
        prop_assert!(z.iter().sum::<f64>().abs() < 1e-8 * f.len() as f64);
    }
}
