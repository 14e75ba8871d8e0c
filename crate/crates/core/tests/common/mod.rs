//! Reference implementations used as oracles by the integration tests and
//! the acceptance run. None of them call into the library's numerics.

#![allow(dead_code)]

use hebbian_es::net::{HebbianCoefficients, LayerTrace, Matrix, PlasticityVariant};

/// Which of (A, B, C, D, eta) a variant evolves, from the rule table.
pub fn active_mask(variant: PlasticityVariant) -> [bool; 5] {
    match variant {
        PlasticityVariant::AOnly => [true, false, false, false, false],
        PlasticityVariant::APlusEta => [true, false, false, false, true],
        PlasticityVariant::AD => [true, false, false, true, false],
        PlasticityVariant::ABCD => [true, true, true, true, false],
        PlasticityVariant::ABCDPlusEta => [true, true, true, true, true],
    }
}

/// One rule application, one synapse at a time. Weights are plain nested
/// vectors `w[layer][i][j]`.
pub fn scalar_hebbian(
    w: &[Vec<Vec<f64>>],
    coeffs: &HebbianCoefficients,
    trace: &[LayerTrace],
    max_abs_normalize: bool,
) -> Vec<Vec<Vec<f64>>> {
    let mask = active_mask(coeffs.variant);
    let pick = |m: &[Matrix], l: usize, i: usize, j: usize, on: bool, off: f64| if on { m[l].get(i, j) } else { off };
    let mut out = w.to_vec();
    for l in 0..w.len() {
        for i in 0..w[l].len() {
            for j in 0..w[l][i].len() {
                let oi = trace[l].pre[i];
                let oj = trace[l].post[j];
                let a = pick(&coeffs.a, l, i, j, mask[0], 0.0);
                let b = pick(&coeffs.b, l, i, j, mask[1], 0.0);
                let c = pick(&coeffs.c, l, i, j, mask[2], 0.0);
                let d = pick(&coeffs.d, l, i, j, mask[3], 0.0);
                let eta = pick(&coeffs.eta, l, i, j, mask[4], 1.0);
                out[l][i][j] += eta * (a * oi * oj + b * oi + c * oj + d);
            }
        }
        if max_abs_normalize {
            let m = out[l].iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if m > 1.0 {
                for v in out[l].iter_mut().flatten() {
                    *v /= m;
                }
            }
        }
    }
    out
}

pub fn to_nested(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with unit eigenvectors as columns
/// `vecs[k]`.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vecs = order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    (values, vecs)
}

/// Sample covariance (divisor `T - 1`) of the rows.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / t as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= (t - 1) as f64;
        }
    }
    cov
}

/// Whether `r` is the double nearest to `num / den` (`den > 0`), decided in
/// exact integer arithmetic.
pub fn is_nearest_double(r: f64, num: i128, den: i128) -> bool {
    assert!(den > 0);
    if num == 0 {
        return r == 0.0;
    }
    if !r.is_finite() || r == 0.0 || (r < 0.0) != (num < 0) {
        return false;
    }
    let (num, r) = (num.abs(), r.abs());
    let bits = r.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    assert!(exp_bits > 0, "subnormals are out of range here");
    let mant = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as i128;
    let e = exp_bits - 1075; // r = mant * 2^e
    // Distances are compared in units of 2^e / den to stay integral.
    // |r - q| * den * 2^-e = |mant * den - num * 2^-e|
    assert!(e < 0 && e > -100);
    let k = -e as u32;
    let diff = (mant * den - (num << k)).abs();
    // Within half a gap of the neighbor on q's side; the gap below a power
    // of two is half as wide.
    let q_below = mant * den > (num << k);
    if q_below && mant == 1 << 52 {
        diff * 4 <= den
    } else {
        diff * 2 <= den
    }
}
