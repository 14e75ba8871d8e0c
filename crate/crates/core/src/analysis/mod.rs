//! Post-hoc analysis: weight-trajectory PCA, freeze sweeps, coefficient
//! histograms and weight frames.

mod pca;
mod summaries;
mod trajectory;

pub use pca::{pca, pca3, pca3_joint, PcaResult, GRAM_THRESHOLD};
pub use summaries::{
    coefficient_histogram, convergence_sweep, plateau_onset, weight_frame, ClassHistogram, Grid, SweepPoint,
};
pub use trajectory::WeightTrajectory;
