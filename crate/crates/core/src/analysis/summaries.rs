use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{decode, Genome};
use crate::net::{CoefficientClass, LifetimeConfig, NetworkTopology, WeightState};
use crate::rollout::{evaluate, evaluate_perturbed, Agent, PerturbationEvent, PerturbationSchedule, Scenario, SeedBank};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub freeze_step: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean fitness with plasticity frozen from each step in `freeze_steps`.
/// Steps at or past the horizon run unperturbed.
pub fn convergence_sweep(
    agent: &Agent,
    scenario: &Scenario,
    freeze_steps: &[usize],
    episodes: usize,
    bank: SeedBank,
    config: &LifetimeConfig,
) -> Result<Vec<SweepPoint>> {
    freeze_steps
        .iter()
        .map(|&t| {
            let e = if t >= scenario.horizon {
                evaluate(agent, scenario, episodes, bank, config)?
            } else {
                let schedule = PerturbationSchedule::new(vec![PerturbationEvent::freeze(t)])?;
                evaluate_perturbed(agent, scenario, &schedule, episodes, bank, config)?
            };
            Ok(SweepPoint { freeze_step: t, mean: e.mean, std: e.std })
        })
        .collect()
}

/// First freeze step from which every later point stays within
/// `tolerance * |reference|` of `reference`.
pub fn plateau_onset(points: &[SweepPoint], reference: f64, tolerance: f64) -> Option<usize> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.freeze_step);
    let ok = |p: &SweepPoint| (p.mean - reference).abs() <= tolerance * reference.abs();
    let mut onset = None;
    for p in sorted.iter().rev() {
        if ok(p) {
            onset = Some(p.freeze_step);
        } else {
            break;
        }
    }
    onset
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: CoefficientClass,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl ClassHistogram {
    fn build(class: CoefficientClass, values: &[f64], bins: usize) -> Self {
        let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(lo < hi) {
            let c = if lo.is_finite() { lo } else { 0.0 };
            lo = c - 0.5;
            hi = c + 0.5;
        }
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        ClassHistogram { class, lo, hi, counts }
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin_lo", "bin_hi", "count"])?;
        let e = self.edges();
        for (i, c) in self.counts.iter().enumerate() {
            out.write_record([e[i].to_string(), e[i + 1].to_string(), c.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One histogram per coefficient class over all layers. Inactive classes
/// show their pinned value.
pub fn coefficient_histogram(genome: &Genome, topology: &NetworkTopology, bins: usize) -> Result<Vec<ClassHistogram>> {
    if bins == 0 {
        return Err(Error::Invalid("histogram needs at least one bin".into()));
    }
    let coeffs = decode(genome, topology)?
        .coeffs
        .ok_or_else(|| Error::Invalid("coefficient histograms need a Hebbian genome".into()))?;
    Ok(CoefficientClass::ALL
        .iter()
        .map(|&class| {
            let values: Vec<f64> = coeffs.tensor(class).iter().flat_map(|m| m.as_slice().iter().copied()).collect();
            ClassHistogram::build(class, &values, bins)
        })
        .collect())
}

/// A numeric image of one weight matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in 0..self.rows {
            out.write_record(self.values[r * self.cols..(r + 1) * self.cols].iter().map(f64::to_string))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Layer `layer` (counted from 1) as a pre-neuron by post-neuron grid.
pub fn weight_frame(weights: &WeightState, layer: usize) -> Result<Grid> {
    let m = layer
        .checked_sub(1)
        .and_then(|i| weights.layers.get(i))
        .ok_or_else(|| Error::Invalid(format!("layer {layer} out of range 1..={}", weights.layers.len())))?;
    Ok(Grid { rows: m.rows(), cols: m.cols(), values: m.as_slice().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{init_genome, layout_for, GenomeMode};
    use crate::net::PlasticityVariant;

    #[test]
    fn quadruped_frames() {
        let topo = NetworkTopology::quadruped();
        let w = WeightState::zeros(&topo);
        let shapes: Vec<_> = (1..=3).map(|l| weight_frame(&w, l).map(|g| (g.rows, g.cols)).unwrap()).collect();
        assert_eq!(shapes, vec![(28, 128), (128, 64), (64, 8)]);
        assert!(weight_frame(&w, 0).is_err());
        assert!(weight_frame(&w, 4).is_err());
    }

    #[test]
    fn zero_genome_histogram() {
        let topo = NetworkTopology::new(3, vec![4, 2]).unwrap();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let g = Genome::new(layout.clone(), vec![0.0; layout.total_len]).unwrap();
        for h in coefficient_histogram(&g, &topo, 11).unwrap() {
            assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
            assert_eq!(h.counts[5], 20);
        }
    }

    #[test]
    fn quadruped_histogram_counts() {
        let topo = NetworkTopology::quadruped();
        let layout = layout_for(&topo, GenomeMode::hebbian(PlasticityVariant::ABCDPlusEta));
        let hs = coefficient_histogram(&init_genome(&layout, 2), &topo, 20).unwrap();
        assert_eq!(hs.len(), 5);
        for h in &hs {
            assert_eq!(h.total(), 12_288);
            assert!(h.lo >= -1.0 && h.hi <= 1.0);
        }
    }

    #[test]
    fn onset_detection() {
        let pts: Vec<SweepPoint> = [(0, 10.0), (10, 80.0), (20, 97.0), (30, 99.0), (40, 100.0)]
            .iter()
            .map(|&(t, m)| SweepPoint { freeze_step: t, mean: m, std: 0.0 })
            .collect();
        assert_eq!(plateau_onset(&pts, 100.0, 0.05), Some(20));
        assert_eq!(plateau_onset(&pts, 100.0, 0.0), Some(40));
        assert_eq!(plateau_onset(&pts[..2], 100.0, 0.05), None);
    }
}
