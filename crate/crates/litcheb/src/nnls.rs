//! Nonnegative linear least squares by active-set clipping, plus an SVD
//! condition estimate. Problem sizes here are tiny (tens of columns).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NnlsFit {
    pub coefficients: Vec<f64>,
    /// ||A x - b||.
    pub residual: f64,
    /// sigma_max / sigma_min of the full design matrix.
    pub condition: f64,
}

fn lstsq_on(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> Vec<f64> {
    if support.is_empty() {
        return Vec::new();
    }
    let sub = a.select_columns(support.iter());
    let svd = sub.svd(true, true);
    let x = svd.solve(b, 1e-12).expect("SVD solve cannot fail");
    x.iter().cloned().collect()
}

/// Solves min ||A x - b|| subject to x >= 0 by the Lawson-Hanson active-set
/// method: grow the passive set by the most positive gradient component,
/// shrink it whenever an unconstrained sub-solve turns a passive coefficient
/// negative.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsFit {
    let ncols = a.ncols();
    let svd_full = a.clone().svd(false, false);
    let smax = svd_full.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd_full
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let grad_tol = 1e-12 * smax.max(1.0) * b.norm().max(1.0);
    let mut passive: Vec<usize> = Vec::new();
    let mut x = DVector::<f64>::zeros(ncols);
    for _ in 0..(3 * ncols.max(10)) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..ncols)
            .filter(|j| !passive.contains(j))
            .map(|j| (j, w[j]))
            .max_by(|l, r| l.1.total_cmp(&r.1));
        match candidate {
            Some((j, wj)) if wj > grad_tol => passive.push(j),
            _ => break,
        }
        // Inner loop: restore feasibility on the passive set.
        loop {
            let z = lstsq_on(a, b, &passive);
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&col, &v) in passive.iter().zip(&z) {
                    x[col] = v;
                }
                break;
            }
            // Step toward z until the first passive coefficient hits zero.
            let mut alpha = 1.0f64;
            for (&col, &zv) in passive.iter().zip(&z) {
                if zv <= 0.0 {
                    let step = x[col] / (x[col] - zv);
                    alpha = alpha.min(step);
                }
            }
            for (&col, &zv) in passive.iter().zip(&z) {
                x[col] += alpha * (zv - x[col]);
            }
            let mut removed = false;
            let mut i = 0;
            while i < passive.len() {
                if x[passive[i]] <= 1e-14 {
                    x[passive[i]] = 0.0;
                    passive.remove(i);
                    removed = true;
                } else {
                    i += 1;
                }
            }
            if !removed || passive.is_empty() {
                break;
            }
        }
        if passive.is_empty() {
            break;
        }
    }
    let residual = (a * &x - b).norm();
    NnlsFit {
        coefficients: x.iter().cloned().collect(),
        residual,
        condition,
    }
}
