//! Flat search vectors and their mapping onto network parameters.
//!
//! Segment order is fixed: `[conv_static, plasticity, init_weights]` for
//! Hebbian genomes and a single `direct_weights` segment (conv parameters
//! first, then fc weights) for the static-weights baseline. Inside the
//! plasticity segment the active coefficient classes follow `A, B, C, D, eta`
//! order; each class holds every fc layer row-major.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::net::{HebbianCoefficients, InitDistribution, NetworkTopology, PlasticityVariant, WeightState};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GenomeMode {
    Hebbian {
        variant: PlasticityVariant,
        #[serde(default)]
        coevolve_init: bool,
    },
    StaticWeights,
}

impl GenomeMode {
    pub fn hebbian(variant: PlasticityVariant) -> Self {
        GenomeMode::Hebbian { variant, coevolve_init: false }
    }

    pub fn describe(&self) -> String {
        match self {
            GenomeMode::Hebbian { variant, coevolve_init: false } => format!("Hebbian {}", variant.name()),
            GenomeMode::Hebbian { variant, coevolve_init: true } => format!("Hebbian {} + init", variant.name()),
            GenomeMode::StaticWeights => "static weights".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    ConvStatic,
    Plasticity,
    InitWeights,
    DirectWeights,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeLayout {
    pub mode: GenomeMode,
    pub topology_hash: u64,
    pub segments: Vec<Segment>,
    pub total_len: usize,
}

impl GenomeLayout {
    pub fn segment(&self, kind: SegmentKind) -> Option<&Segment> {
        self.segments.iter().find(|s| s.kind == kind)
    }

    pub fn len_of(&self, kind: SegmentKind) -> usize {
        self.segment(kind).map_or(0, |s| s.len)
    }
}

/// Deterministic segment map for a topology and genome mode.
pub fn layout_for(topology: &NetworkTopology, mode: GenomeMode) -> GenomeLayout {
    let synapses = topology.synapse_count();
    let conv = topology.conv_param_count();
    let mut lens = Vec::new();
    match mode {
        GenomeMode::Hebbian { variant, coevolve_init } => {
            if conv > 0 {
                lens.push((SegmentKind::ConvStatic, conv));
            }
            lens.push((SegmentKind::Plasticity, variant.coefficients_per_synapse() * synapses));
            if coevolve_init {
                lens.push((SegmentKind::InitWeights, synapses));
            }
        }
        GenomeMode::StaticWeights => lens.push((SegmentKind::DirectWeights, conv + synapses)),
    }
    let mut offset = 0;
    let segments = lens
        .into_iter()
        .map(|(kind, len)| {
            let s = Segment { kind, offset, len };
            offset += len;
            s
        })
        .collect();
    GenomeLayout {
        mode,
        topology_hash: topology.hash(),
        segments,
        total_len: offset,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generation: u64,
    pub seed: u64,
}

/// A point in the search space together with its layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub values: Vec<f64>,
    pub layout: GenomeLayout,
    pub provenance: Provenance,
}

impl Genome {
    pub fn new(layout: GenomeLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len {
            return Err(Error::GenomeLength { expected: layout.total_len, actual: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("genome entry {k} is not finite")));
        }
        Ok(Genome { values, layout, provenance: Provenance::default() })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn segment(&self, kind: SegmentKind) -> Option<&[f64]> {
        self.layout.segment(kind).map(|s| &self.values[s.range()])
    }
}

/// Structured parameters recovered from a genome.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub coeffs: Option<HebbianCoefficients>,
    pub direct: Option<WeightState>,
    pub conv: Option<Vec<f64>>,
    pub init_weights: Option<WeightState>,
}

fn check_topology(layout: &GenomeLayout, topology: &NetworkTopology) -> Result<()> {
    let expected = topology.hash();
    if layout.topology_hash != expected {
        return Err(Error::TopologyHash { expected, found: layout.topology_hash });
    }
    Ok(())
}

pub fn decode(genome: &Genome, topology: &NetworkTopology) -> Result<Decoded> {
    let layout = &genome.layout;
    check_topology(layout, topology)?;
    if genome.values.len() != layout.total_len {
        return Err(Error::GenomeLength { expected: layout.total_len, actual: genome.values.len() });
    }
    let mut out = Decoded { coeffs: None, direct: None, conv: None, init_weights: None };
    match layout.mode {
        GenomeMode::Hebbian { variant, .. } => {
            if let Some(conv) = genome.segment(SegmentKind::ConvStatic) {
                out.conv = Some(conv.to_vec());
            }
            let plastic = genome.segment(SegmentKind::Plasticity).expect("hebbian layout has plasticity");
            let mut coeffs = HebbianCoefficients::zeros(topology, variant);
            let mut cursor = 0;
            for &class in variant.active() {
                for m in coeffs.tensor_mut(class) {
                    let n = m.len();
                    m.as_mut_slice().copy_from_slice(&plastic[cursor..cursor + n]);
                    cursor += n;
                }
            }
            out.coeffs = Some(coeffs);
            if let Some(init) = genome.segment(SegmentKind::InitWeights) {
                out.init_weights = Some(WeightState::from_flat(topology, init)?);
            }
        }
        GenomeMode::StaticWeights => {
            let direct = genome.segment(SegmentKind::DirectWeights).expect("static layout has direct weights");
            let conv = topology.conv_param_count();
            if conv > 0 {
                out.conv = Some(direct[..conv].to_vec());
            }
            out.direct = Some(WeightState::from_flat(topology, &direct[conv..])?);
        }
    }
    Ok(out)
}

/// Inverse of [`decode`].
pub fn encode(decoded: &Decoded, layout: &GenomeLayout) -> Result<Genome> {
    let missing = |what: &str| Error::Invalid(format!("decoded parameters lack {what} required by the layout"));
    let mut values = Vec::with_capacity(layout.total_len);
    for seg in &layout.segments {
        match seg.kind {
            SegmentKind::ConvStatic => values.extend_from_slice(decoded.conv.as_ref().ok_or_else(|| missing("conv"))?),
            SegmentKind::Plasticity => {
                let coeffs = decoded.coeffs.as_ref().ok_or_else(|| missing("coefficients"))?;
                for &class in coeffs.variant.active() {
                    for m in coeffs.tensor(class) {
                        values.extend_from_slice(m.as_slice());
                    }
                }
            }
            SegmentKind::InitWeights => decoded.init_weights.as_ref().ok_or_else(|| missing("initial weights"))?.flatten_into(&mut values),
            SegmentKind::DirectWeights => {
                if let Some(conv) = &decoded.conv {
                    values.extend_from_slice(conv);
                }
                decoded.direct.as_ref().ok_or_else(|| missing("direct weights"))?.flatten_into(&mut values);
            }
        }
        if values.len() != seg.offset + seg.len {
            return Err(Error::GenomeLength { expected: seg.offset + seg.len, actual: values.len() });
        }
    }
    Genome::new(layout.clone(), values)
}

/// Random starting genome: plasticity coefficients uniform in `[-1, 1]`,
/// every weight-like segment uniform in `[-0.1, 0.1]`.
pub fn init_genome(layout: &GenomeLayout, seed: u64) -> Genome {
    let mut rng = seed::rng(seed::derive(&[seed::tag::INIT, seed]));
    let mut values = vec![0.0; layout.total_len];
    for seg in &layout.segments {
        let slot = &mut values[seg.range()];
        match seg.kind {
            SegmentKind::Plasticity => slot.iter_mut().for_each(|v| *v = rng.random_range(-1.0..=1.0)),
            _ => InitDistribution::Uniform { half_width: 0.1 }.fill(&mut rng, slot),
        }
    }
    Genome {
        values,
        layout: layout.clone(),
        provenance: Provenance { generation: 0, seed },
    }
}

const GENOME_MAGIC: &[u8; 4] = b"HBGN";
const GENOME_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GenomeMeta {
    layout: GenomeLayout,
    provenance: Provenance,
}

impl Genome {
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let meta = GenomeMeta { layout: self.layout.clone(), provenance: self.provenance };
        format::write_record(w, GENOME_MAGIC, GENOME_VERSION, &meta, &[&self.values])
    }

    /// Reads a genome record; with `topology` given, a record made for a
    /// different network is rejected.
    pub fn read_from<R: Read>(r: R, topology: Option<&NetworkTopology>) -> Result<Self> {
        let (meta, mut payloads): (GenomeMeta, _) = format::read_record(r, GENOME_MAGIC, GENOME_VERSION, "genome")?;
        if payloads.len() != 1 {
            return Err(Error::Format(format!("genome record has {} payloads", payloads.len())));
        }
        if let Some(t) = topology {
            check_topology(&meta.layout, t)?;
        }
        let genome = Genome::new(meta.layout, payloads.pop().expect("one payload"))?;
        Ok(genome.with_provenance(meta.provenance))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>, topology: Option<&NetworkTopology>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f), topology)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{forward, hebbian_step, CoefficientClass};
    use crate::envs::Observation;

    #[test]
    fn quadruped_counts() {
        let topo = NetworkTopology::quadruped();
        let l = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        assert_eq!(l.len_of(SegmentKind::Plasticity), 61_440);
        assert_eq!(l.total_len, 61_440);
        let s = layout_for(&topo, GenomeMode::StaticWeights);
        assert_eq!(s.len_of(SegmentKind::DirectWeights), 12_288);
    }

    #[test]
    fn vision_counts() {
        let topo = NetworkTopology::vision();
        let l = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        assert_eq!(l.len_of(SegmentKind::ConvStatic), 1_362);
        assert_eq!(l.len_of(SegmentKind::Plasticity), 456_640);
        assert_eq!(topo.synapse_count(), 91_328);
        let s = layout_for(&topo, GenomeMode::StaticWeights);
        assert_eq!(s.total_len, 92_690);
    }

    #[test]
    fn reduced_variants_shrink() {
        let topo = NetworkTopology::quadruped();
        let full = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta)).total_len;
        let a = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::AOnly)).total_len;
        assert_eq!(a * 5, full);
    }

    #[test]
    fn coevolved_init_segment() {
        let topo = NetworkTopology::new(3, vec![4, 2]).unwrap();
        let l = layout_for(&topo, GenomeMode::Hebbian { variant: PlasticityVariant::AD, coevolve_init: true });
        assert_eq!(l.len_of(SegmentKind::InitWeights), 20);
        assert_eq!(l.total_len, 60);
        assert_eq!(l.segments[1].offset, 40);
    }

    #[test]
    fn zero_genome_decodes_to_zero_tensors() {
        let topo = NetworkTopology::new(3, vec![4, 2]).unwrap();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = Genome::new(layout, vec![0.0; 100]).unwrap();
        let d = decode(&g, &topo).unwrap();
        let k = d.coeffs.unwrap();
        for class in CoefficientClass::ALL {
            assert!(k.tensor(class).iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn plain_hebb_from_genome() {
        let topo = NetworkTopology::new(1, vec![1]).unwrap();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = Genome::new(layout, vec![1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let k = decode(&g, &topo).unwrap().coeffs.unwrap();
        let mut w = WeightState::from_flat(&topo, &[0.7]).unwrap();
        let (out, trace) = forward(&topo, &w, None, &Observation::Vector(vec![0.4])).unwrap();
        hebbian_step(&mut w, &k, &trace).unwrap();
        let expected = 0.7 + 0.4 * out[0];
        assert!((w.layers[0].get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn inactive_classes_pinned() {
        let topo = NetworkTopology::new(2, vec![2]).unwrap();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::AOnly));
        let g = Genome::new(layout, vec![0.3; 4]).unwrap();
        let k = decode(&g, &topo).unwrap().coeffs.unwrap();
        assert!(k.eta.iter().all(|m| m.as_slice().iter().all(|&v| v == 1.0)));
        assert!(k.b.iter().chain(&k.c).chain(&k.d).all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn init_ranges_and_determinism() {
        let topo = NetworkTopology::desk_track();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = init_genome(&layout, 8);
        assert_eq!(g, init_genome(&layout, 8));
        assert!(g.segment(SegmentKind::Plasticity).unwrap().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(g.segment(SegmentKind::ConvStatic).unwrap().iter().all(|v| (-0.1..=0.1).contains(v)));
        let spread = g.segment(SegmentKind::Plasticity).unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(spread > 0.9);
    }

    #[test]
    fn length_mismatch_rejected() {
        let topo = NetworkTopology::new(2, vec![2]).unwrap();
        let layout = layout_for(&topo, GenomeMode::StaticWeights);
        assert!(matches!(Genome::new(layout.clone(), vec![0.0; 3]), Err(Error::GenomeLength { .. })));
        let mut g = Genome::new(layout, vec![0.0; 4]).unwrap();
        g.values.push(1.0);
        assert!(decode(&g, &topo).is_err());
    }

    #[test]
    fn checkpoint_rejects_other_topology() {
        let topo = NetworkTopology::new(2, vec![2]).unwrap();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::AD));
        let g = init_genome(&layout, 1).with_provenance(Provenance { generation: 12, seed: 1 });
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let back = Genome::read_from(&buf[..], Some(&topo)).unwrap();
        assert_eq!(back, g);
        let other = NetworkTopology::new(2, vec![3]).unwrap();
        assert!(matches!(Genome::read_from(&buf[..], Some(&other)), Err(Error::TopologyHash { .. })));
    }
}
