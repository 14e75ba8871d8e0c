use hebbian_es::genome::{decode, encode, init_genome, layout_for, Genome, GenomeMode, SegmentKind};
use hebbian_es::net::{ConvFrontendSpec, NetworkTopology, PlasticityVariant};
use proptest::prelude::*;

fn all_modes() -> Vec<GenomeMode> {
    let mut modes = vec![GenomeMode::StaticWeights];
    for variant in PlasticityVariant::ALL {
        for coevolve_init in [false, true] {
            modes.push(GenomeMode::Hebbian { variant, coevolve_init });
        }
    }
    modes
}

fn topologies() -> Vec<NetworkTopology> {
    vec![
        NetworkTopology::new(3, vec![4, 2]).unwrap(),
        NetworkTopology::desk_crawler(4),
        NetworkTopology::with_conv(ConvFrontendSpec::desk(), vec![5, 3]).unwrap(),
    ]
}

#[test]
fn segments_tile_the_genome() {
    for topology in topologies() {
        for mode in all_modes() {
            let layout = layout_for(&topology, mode);
            let mut cursor = 0;
            for s in &layout.segments {
                assert_eq!(s.offset, cursor, "{mode:?}");
                assert!(s.len > 0);
                cursor += s.len;
            }
            assert_eq!(cursor, layout.total_len);
            let has = |k| layout.segment(k).is_some();
            match mode {
                GenomeMode::StaticWeights => assert!(!has(SegmentKind::Plasticity) && has(SegmentKind::DirectWeights)),
                GenomeMode::Hebbian { coevolve_init, .. } => {
                    assert!(has(SegmentKind::Plasticity));
                    assert_eq!(has(SegmentKind::InitWeights), coevolve_init);
                    if coevolve_init {
                        assert_eq!(layout.len_of(SegmentKind::InitWeights), topology.synapse_count());
                    }
                }
            }
        }
    }
}

#[test]
fn reduced_variants_scale_with_synapses() {
    for topology in [NetworkTopology::quadruped(), NetworkTopology::desk_crawler(4)] {
        let s = topology.synapse_count();
        for (variant, k) in PlasticityVariant::ALL.into_iter().zip([1, 2, 2, 4, 5]) {
            assert_eq!(layout_for(&topology, GenomeMode::hebbian(variant)).len_of(SegmentKind::Plasticity), k * s);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_inverts_decode(t in 0usize..3, m in 0usize..11, seed in any::<u64>()) {
        let topology = &topologies()[t];
        let layout = layout_for(topology, all_modes()[m]);
        // spread values well past the init ranges
        let mut g = init_genome(&layout, seed);
        for (k, v) in g.values.iter_mut().enumerate() {
            *v *= 1.0 + (k % 7) as f64 * 1e3;
        }
        let g = Genome::new(layout.clone(), g.values).unwrap();
        let back = encode(&decode(&g, topology).unwrap(), &layout).unwrap();
        prop_assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), g.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn init_respects_segment_ranges(m in 0usize..11, seed in any::<u64>()) {
        let topology = NetworkTopology::with_conv(ConvFrontendSpec::desk(), vec![5, 3]).unwrap();
        let layout = layout_for(&topology, all_modes()[m]);
        let g = init_genome(&layout, seed);
        prop_assert_eq!(&g, &init_genome(&layout, seed));
        for s in &layout.segments {
            let bound = if s.kind == SegmentKind::Plasticity { 1.0 } else { 0.1 };
            prop_assert!(g.values[s.range()].iter().all(|v| v.abs() <= bound));
        }
    }
}

#[test]
fn thousand_random_round_trips() {
    let topology = NetworkTopology::desk_crawler(4);
    let layout = layout_for(&topology, GenomeMode::Hebbian { variant: PlasticityVariant::ABCDPlusEta, coevolve_init: true });
    for seed in 0..1_000 {
        let g = init_genome(&layout, seed);
        assert_eq!(encode(&decode(&g, &topology).unwrap(), &layout).unwrap().values, g.values);
    }
}
