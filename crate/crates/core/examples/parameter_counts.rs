//! Genome sizes for the full-scale networks under every rule variant.

use hebbian_es::genome::{layout_for, GenomeMode, SegmentKind};
use hebbian_es::net::{NetworkTopology, PlasticityVariant};

fn main() {
    for (name, topology) in [("quadruped", NetworkTopology::quadruped()), ("vision", NetworkTopology::vision())] {
        println!("{name}: fc layers {:?}", topology.layer_shapes());
        println!("  synapses {:>8}  conv params {:>6}", topology.synapse_count(), topology.conv_param_count());
        for variant in PlasticityVariant::ALL {
            let layout = layout_for(&topology, GenomeMode::hebbian(variant));
            println!(
                "  {:<16} plasticity {:>8}  genome {:>8}",
                variant.name(),
                layout.len_of(SegmentKind::Plasticity),
                layout.total_len
            );
        }
        let coevolved = layout_for(
            &topology,
            GenomeMode::Hebbian { variant: PlasticityVariant::ABCDPlusEta, coevolve_init: true },
        );
        println!("  ABCD_plus_eta with evolved initial weights: genome {}", coevolved.total_len);
        let fixed = layout_for(&topology, GenomeMode::StaticWeights);
        println!("  static weights: genome {}", fixed.total_len);
    }
}
