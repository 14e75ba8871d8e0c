use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::net::NetworkTopology;
use crate::rollout::EpisodeOutcome;

/// Flattened fc weights recorded over one lifetime.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTrajectory {
    pub topology_hash: u64,
    pub stride: usize,
    pub layer_shapes: Vec<(usize, usize)>,
    pub steps: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    topology_hash: u64,
    stride: usize,
    t: usize,
    d: usize,
    layer_shapes: Vec<(usize, usize)>,
    steps: Vec<usize>,
}

const MAGIC: &[u8; 4] = b"HBWT";
const VERSION: u32 = 1;

impl WeightTrajectory {
    pub fn new(
        topology_hash: u64,
        stride: usize,
        layer_shapes: Vec<(usize, usize)>,
        steps: Vec<usize>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let d: usize = layer_shapes.iter().map(|(r, c)| r * c).sum();
        if steps.len() != rows.len() {
            return Err(Error::shape("trajectory steps", rows.len(), steps.len()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::shape("trajectory row", d, bad.len()));
        }
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("trajectory steps must be strictly increasing".into()));
        }
        Ok(WeightTrajectory { topology_hash, stride, layer_shapes, steps, rows })
    }

    pub fn from_outcome(outcome: &EpisodeOutcome, topology: &NetworkTopology, stride: usize) -> Result<Self> {
        Self::new(
            topology.hash(),
            stride,
            topology.layer_shapes(),
            outcome.snapshots.iter().map(|s| s.step).collect(),
            outcome.snapshots.iter().map(|s| s.weights.clone()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layer_shapes.iter().map(|(r, c)| r * c).sum()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let header = Header {
            topology_hash: self.topology_hash,
            stride: self.stride,
            t: self.len(),
            d: self.dim(),
            layer_shapes: self.layer_shapes.clone(),
            steps: self.steps.clone(),
        };
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        format::write_record(w, MAGIC, VERSION, &header, &[&flat])
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let (h, payloads): (Header, _) = format::read_record(r, MAGIC, VERSION, "weight trajectory")?;
        let flat = payloads.into_iter().next().ok_or_else(|| Error::Format("trajectory has no payload".into()))?;
        if flat.len() != h.t * h.d {
            return Err(Error::Format(format!("trajectory payload has {} values, header says {}x{}", flat.len(), h.t, h.d)));
        }
        let rows = if h.d == 0 { vec![Vec::new(); h.t] } else { flat.chunks(h.d).map(<[f64]>::to_vec).collect() };
        Self::new(h.topology_hash, h.stride, h.layer_shapes, h.steps, rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
