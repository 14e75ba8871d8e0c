use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::WeightTrajectory;
use crate::error::{Error, Result};

/// Above this dimension the T x T Gram matrix is decomposed instead of the
/// D x D covariance.
pub const GRAM_THRESHOLD: usize = 2_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Unit vectors, strongest first. The largest-magnitude entry of each is
    /// positive.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (divisor `T - 1`) along each component.
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub total_variance: f64,
    /// Centered data times components, `T x k`.
    pub projection: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

pub fn pca3(trajectory: &WeightTrajectory) -> Result<PcaResult> {
    pca(&trajectory.rows, 3)
}

/// One fit over several trajectories stacked in time.
pub fn pca3_joint(trajectories: &[&WeightTrajectory]) -> Result<PcaResult> {
    let rows: Vec<Vec<f64>> = trajectories.iter().flat_map(|t| t.rows.iter().cloned()).collect();
    pca(&rows, 3)
}

/// Top-`k` principal components of `rows` (`k` is capped at the dimension).
pub fn pca(rows: &[Vec<f64>], k: usize) -> Result<PcaResult> {
    let gram = rows.first().is_some_and(|r| r.len() > GRAM_THRESHOLD);
    pca_route(rows, k, gram)
}

fn pca_route(rows: &[Vec<f64>], k: usize, use_gram: bool) -> Result<PcaResult> {
    let t = rows.len();
    if t < 2 {
        return Err(Error::Invalid(format!("PCA needs at least 2 timesteps, got {t}")));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::shape("PCA row", d, r.len()));
    }
    let k = k.min(d);
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let x = DMatrix::from_fn(t, d, |i, j| rows[i][j] - mean[j]);
    let denom = (t - 1) as f64;
    let total_variance = x.iter().map(|v| v * v).sum::<f64>() / denom;

    let (mut variances, mut components) = if !use_gram {
        let cov = (x.transpose() * &x) / denom;
        let (vals, vecs) = sorted_eigen(cov);
        let comps: Vec<DVector<f64>> = (0..k).map(|i| vecs.column(i).into_owned()).collect();
        (vals[..k].to_vec(), comps)
    } else {
        let gram = (&x * x.transpose()) / denom;
        let (vals, vecs) = sorted_eigen(gram);
        let tol = vals.first().copied().unwrap_or(0.0).max(0.0) * 1e-12;
        let mut comps = Vec::with_capacity(k);
        let mut out_vals = Vec::with_capacity(k);
        for i in 0..k.min(t) {
            if vals[i] <= tol || vals[i] <= 0.0 {
                break;
            }
            let v = x.transpose() * vecs.column(i);
            let n = v.norm();
            if n == 0.0 {
                break;
            }
            comps.push(v / n);
            out_vals.push(vals[i]);
        }
        (out_vals, comps)
    };
    complete_basis(&mut components, d, k);
    variances.resize(k, 0.0);
    for v in &mut variances {
        *v = v.max(0.0);
    }

    for c in &mut components {
        let lead = c.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > c[best].abs() { i } else { best });
        if c[lead] < 0.0 {
            *c = -c.clone();
        }
    }

    let projection = (0..t)
        .map(|i| components.iter().map(|c| x.row(i).iter().zip(c.iter()).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let explained_ratio = variances.iter().map(|v| if total_variance > 0.0 { v / total_variance } else { 0.0 }).collect();
    Ok(PcaResult {
        components: components.into_iter().map(|c| c.iter().copied().collect()).collect(),
        explained_variance: variances,
        explained_ratio,
        total_variance,
        projection,
        mean,
    })
}

/// Eigenpairs sorted by decreasing eigenvalue; ties keep column order.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

/// Extends `basis` with unit coordinate vectors, orthogonalized, until it has
/// `k` members. Used when the data span fewer than `k` directions.
fn complete_basis(basis: &mut Vec<DVector<f64>>, d: usize, k: usize) {
    let mut e = 0;
    while basis.len() < k && e < d {
        let mut v = DVector::zeros(d);
        v[e] = 1.0;
        for b in basis.iter() {
            let p = b.dot(&v);
            v -= b * p;
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / n);
        }
        e += 1;
    }
}
