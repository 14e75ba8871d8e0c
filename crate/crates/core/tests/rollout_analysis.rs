use hebbian_es::analysis::{coefficient_histogram, convergence_sweep, weight_frame};
use hebbian_es::envs::EnvConfig;
use hebbian_es::genome::{init_genome, layout_for, Genome, GenomeMode, SegmentKind};
use hebbian_es::net::{LifetimeConfig, NetworkTopology, PlasticityVariant, WeightState};
use hebbian_es::rollout::{evaluate, run_perturbed, Agent, PerturbationEvent, PerturbationSchedule, SeedBank, Task, ZeroMode};
use proptest::prelude::*;

fn crawler_setup(seed: u64) -> (NetworkTopology, Genome, Task) {
    let topology = NetworkTopology::desk_crawler(4);
    let layout = layout_for(&topology, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
    let mut g = init_genome(&layout, seed);
    // small coefficients keep random genomes from diverging
    g.values.iter_mut().for_each(|v| *v *= 0.05);
    let task = Task::from_config(&EnvConfig::desk_crawler().with_horizon(200)).unwrap();
    (topology, g, task)
}

#[test]
fn evaluation_leaves_the_genome_alone_and_is_order_free() {
    let (topology, genome, task) = crawler_setup(1);
    let before = genome.clone();
    let agent = Agent::new(&genome, &topology).unwrap();
    let cfg = LifetimeConfig::default();
    let s = &task.seen[1];
    let a1 = evaluate(&agent, s, 6, SeedBank::new(10), &cfg).unwrap();
    let b1 = evaluate(&agent, s, 6, SeedBank::new(20), &cfg).unwrap();
    let b2 = evaluate(&agent, s, 6, SeedBank::new(20), &cfg).unwrap();
    let a2 = evaluate(&agent, s, 6, SeedBank::new(10), &cfg).unwrap();
    assert_eq!(a1, a2);
    assert_eq!(b1, b2);
    assert_eq!(genome, before);
}

#[test]
fn sweep_past_horizon_is_the_plain_evaluation() {
    let (topology, genome, task) = crawler_setup(2);
    let agent = Agent::new(&genome, &topology).unwrap();
    let cfg = LifetimeConfig::default();
    let s = &task.seen[0];
    let sweep = convergence_sweep(&agent, s, &[0, s.horizon, s.horizon + 50], 4, SeedBank::new(3), &cfg).unwrap();
    let plain = evaluate(&agent, s, 4, SeedBank::new(3), &cfg).unwrap();
    assert_eq!(sweep[1].mean.to_bits(), plain.mean.to_bits());
    assert_eq!(sweep[2].mean.to_bits(), plain.mean.to_bits());
}

#[test]
fn band_zeroing_shows_as_zero_rows() {
    let (topology, genome, task) = crawler_setup(3);
    let agent = Agent::new(&genome, &topology).unwrap();
    let schedule = PerturbationSchedule::new(vec![PerturbationEvent::zero(50, 1.0 / 3.0)]).unwrap().with_zero_mode(ZeroMode::Band);
    let mut cfg = LifetimeConfig::default();
    cfg.record.weight_stride = Some(1);
    let out = run_perturbed(&agent, &task.seen[0], &schedule, (4, 4), &cfg).unwrap();
    let snap = out.snapshots.iter().find(|s| s.step == 50).expect("snapshot at the event");
    let w = WeightState::from_flat(&topology, &snap.weights).unwrap();
    for l in 1..=w.layers.len() {
        let grid = weight_frame(&w, l).unwrap();
        let zero_rows: Vec<usize> = (0..grid.rows).filter(|&r| (0..grid.cols).all(|c| grid.get(r, c) == 0.0)).collect();
        assert!(!zero_rows.is_empty(), "layer {l}");
        assert!(zero_rows.windows(2).all(|p| p[1] == p[0] + 1), "layer {l} band not contiguous: {zero_rows:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn histograms_ignore_order_within_a_class(seed in any::<u64>(), rot in 1usize..100) {
        let topology = NetworkTopology::desk_crawler(4);
        let layout = layout_for(&topology, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = init_genome(&layout, seed);
        let seg = layout.segment(SegmentKind::Plasticity).unwrap().clone();
        let per_class = topology.synapse_count();
        let mut shuffled = g.values.clone();
        for c in 0..5 {
            let lo = seg.offset + c * per_class;
            shuffled[lo..lo + per_class].rotate_left(rot % per_class);
        }
        let h1 = coefficient_histogram(&g, &topology, 17).unwrap();
        let h2 = coefficient_histogram(&Genome::new(layout, shuffled).unwrap(), &topology, 17).unwrap();
        prop_assert_eq!(h1.clone(), h2);
        for h in &h1 {
            prop_assert_eq!(h.total(), per_class);
            prop_assert!(h.lo >= -1.0 && h.hi <= 1.0);
        }
    }
}
