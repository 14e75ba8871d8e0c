mod common;

use std::sync::Arc;

use common::is_nearest_double;
use hebbian_es::envs::crawler::{Crawler, CrawlerMorphology};
use hebbian_es::envs::track::{generate_track, tile_fitness, TrackEnv, TrackParams};
use hebbian_es::envs::{Environment, Observation};
use proptest::prelude::*;

#[test]
fn nearest_double_oracle_self_check() {
    assert!(is_nearest_double(0.1, 1, 10));
    assert!(!is_nearest_double(0.1 + f64::EPSILON / 8.0 + 1e-17, 1, 10));
    assert!(is_nearest_double(926.8, 9268, 10));
    assert!(!is_nearest_double(926.8000000000001, 9268, 10));
    assert!(is_nearest_double(-5.0, -50, 10));
    assert!(is_nearest_double(1.0, 1, 1));
    assert!(!is_nearest_double(1.0 - f64::EPSILON, 1, 1));
}

#[test]
fn tile_fitness_is_the_correctly_rounded_formula() {
    for n in 1..=50usize {
        for v in 0..=n {
            for frames in (0..=2_000usize).step_by(7) {
                let num = 10_000 * v as i128 - (n * frames) as i128;
                assert!(is_nearest_double(tile_fitness(v, n, frames), num, 10 * n as i128), "v={v} n={n} frames={frames}");
            }
        }
    }
}

/// Independent closed-loop check: consecutive tiles 4-adjacent (wrapping),
/// no repeats, and no two non-consecutive tiles touching.
fn brute_simple_loop(tiles: &[(i32, i32)]) -> bool {
    let n = tiles.len();
    let touch = |a: (i32, i32), b: (i32, i32)| (a.0 - b.0).abs() + (a.1 - b.1).abs();
    for i in 0..n {
        for j in i + 1..n {
            let d = touch(tiles[i], tiles[j]);
            let consecutive = j == i + 1 || (i == 0 && j == n - 1);
            if d == 0 || (consecutive && d != 1) || (!consecutive && d == 1) {
                return false;
            }
        }
    }
    n >= 4
}

#[test]
fn thousand_tracks_are_simple_closed_loops() {
    let params = TrackParams::default();
    for seed in 0..1_000 {
        let t = generate_track(seed, &params).unwrap();
        assert!(brute_simple_loop(&t.tiles), "seed {seed}");
        assert!(t.tiles.iter().all(|&(x, y)| x >= 0 && y >= 0 && x < t.grid_size && y < t.grid_size));
    }
    assert_ne!(generate_track(1, &params).unwrap().tiles, generate_track(2, &params).unwrap().tiles);
}

fn diag_morphology(damage: Vec<f64>) -> Arc<CrawlerMorphology> {
    let l = damage.len();
    let mut m = vec![0.0; l * l];
    for k in 0..l {
        m[k * l + k] = 0.8 + 0.1 * k as f64;
    }
    Arc::new(CrawlerMorphology::new("diag", m, damage, 0.1, 0.2).unwrap())
}

fn distance(m: Arc<CrawlerMorphology>, action: &[f64], steps: usize) -> f64 {
    let mut env = Crawler::new(m, steps, 25);
    env.reset(0).unwrap();
    let mut total = 0.0;
    for _ in 0..steps {
        total += env.step(action).unwrap().reward;
    }
    assert!((total - env.distance()).abs() < 1e-9);
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_damage_never_helps(damage in prop::collection::vec(0.0f64..=1.0, 4), leg in 0usize..4, worse in 0.0f64..=1.0) {
        let ones = vec![1.0; 4];
        let before = distance(diag_morphology(damage.clone()), &ones, 200);
        let mut d = damage.clone();
        d[leg] *= worse;
        prop_assert!(distance(diag_morphology(d), &ones, 200) <= before + 1e-9);
    }

    #[test]
    fn crawler_is_a_function_of_its_inputs(actions in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..50)) {
        let m = diag_morphology(vec![1.0, 0.2, 1.0, 1.0]);
        let run = || {
            let mut env = Crawler::new(m.clone(), 100, 25);
            let mut seen = vec![env.reset(3).unwrap()];
            let mut rewards = Vec::new();
            for a in &actions {
                let tr = env.step(a).unwrap();
                seen.push(tr.observation);
                rewards.push(tr.reward);
            }
            (seen, rewards)
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn track_is_a_function_of_its_inputs(seed in 0u64..200, actions in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..40)) {
        let run = || {
            let mut env = TrackEnv::new(TrackParams::default(), 100);
            let mut out = vec![env.reset(seed).unwrap()];
            let mut rewards = Vec::new();
            for a in &actions {
                let tr = env.step(a).unwrap();
                out.push(tr.observation);
                rewards.push(tr.reward);
            }
            (out, rewards)
        };
        let (frames, rewards) = run();
        for f in &frames {
            if let Observation::Image(img) = f {
                prop_assert!(img.data.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
        prop_assert_eq!((frames, rewards), run());
    }
}
