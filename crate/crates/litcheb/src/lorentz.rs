//! Lorentz integrals: assembly from Chebyshev moments (the moment-bilinear
//! form), the direct dense-resolvent oracle, and the discrete/continuum
//! split.
//!
//! All public L values are physical, in MeV^-2; the 1/s^2 Jacobian of the
//! spectral rescaling is applied internally.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{truncation_order, CoeffParams, MomentSet};
use crate::error::{LitError, Result};
use crate::fci::resolvent_solve;
use crate::fockbasis::{ConfigSpace, StateVector};
use crate::hamiltonian::{Rescaling, SecondQuantizedH, DEFAULT_DENSE_CAP};

/// One evaluation point sigma = x + sigma_R + i sigma_I (MeV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub sigma_r: f64,
    pub sigma_i: f64,
    /// Reference shift; 0 for absolute energies, E_0 for excitation energies.
    pub x: f64,
}

impl SigmaPoint {
    pub fn new(sigma_r: f64, sigma_i: f64, x: f64) -> Self {
        Self { sigma_r, sigma_i, x }
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.x + self.sigma_r, self.sigma_i)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_i <= 0.0 {
            return Err(LitError::NonPositiveSigmaI(self.sigma_i));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: SigmaPoint,
    pub l: f64,
    pub k_used: usize,
}

/// L(sigma) samples over a sigma_R grid, sorted ascending in sigma_R.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LorentzCurve {
    pub points: Vec<CurvePoint>,
}

impl LorentzCurve {
    pub fn new(mut points: Vec<CurvePoint>) -> Self {
        points.sort_by(|a, b| a.sigma.sigma_r.total_cmp(&b.sigma.sigma_r));
        Self { points }
    }

    pub fn sigma_r_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma.sigma_r).collect()
    }

    pub fn l_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.l).collect()
    }

    pub fn max_l(&self) -> f64 {
        self.points.iter().map(|p| p.l).fold(0.0, f64::max)
    }

    /// CSV columns `sigma_R,sigma_I,x,L,K_used`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma_R,sigma_I,x,L,K_used\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                p.sigma.sigma_r, p.sigma.sigma_i, p.sigma.x, p.l, p.k_used
            ));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }
}

/// Evaluates Eq. L = sum_{j,k < K} f*_k f_j (mu_{j+k} + mu_{|j-k|})/2 in the
/// direct O(K^2) form, then applies the 1/s^2 Jacobian. Requires moments up
/// to 2K-2.
pub fn li_from_moments(moments: &MomentSet, sigma: SigmaPoint, k_trunc: usize) -> Result<f64> {
    if k_trunc == 0 {
        return Err(LitError::Config("truncation order must be at least 1".into()));
    }
    let required = 2 * k_trunc - 2;
    if moments.k_max() < required {
        return Err(LitError::InsufficientMoments {
            needed: k_trunc,
            required,
            available: moments.k_max(),
        });
    }
    let params = CoeffParams::new(sigma, &moments.rescaling)?;
    let f = params.coeffs(k_trunc);
    let mu = &moments.moments;
    let mut acc = Complex64::ZERO;
    for k in 0..k_trunc {
        let fk = f[k].conj();
        for j in 0..k_trunc {
            acc += fk * f[j] * (mu[j + k] + mu[j.abs_diff(k)]) * 0.5;
        }
    }
    let s = moments.rescaling.scale;
    Ok(acc.re / (s * s))
}

/// First-order propagated shot-noise variance of L at one sigma point.
///
/// L is linear in the moments, L = Re sum_n w_n mu_n / s^2 with weights
/// collected from the double sum; each sampled quadrature of a normalized
/// moment has variance (1 - mu^2)/N. Returns 0 for noiseless moment sets.
pub fn li_shot_variance(moments: &MomentSet, sigma: SigmaPoint, k_trunc: usize) -> Result<f64> {
    let Some(shots) = moments.shots else {
        return Ok(0.0);
    };
    let required = 2 * k_trunc - 2;
    if moments.k_max() < required {
        return Err(LitError::InsufficientMoments {
            needed: k_trunc,
            required,
            available: moments.k_max(),
        });
    }
    let params = CoeffParams::new(sigma, &moments.rescaling)?;
    let f = params.coeffs(k_trunc);
    let mut w = vec![Complex64::ZERO; required + 1];
    for k in 0..k_trunc {
        let fk = f[k].conj();
        for j in 0..k_trunc {
            let prod = fk * f[j] * 0.5;
            w[j + k] += prod;
            w[j.abs_diff(k)] += prod;
        }
    }
    let norm = moments.source_norm_sq;
    let s = moments.rescaling.scale;
    let mut var = 0.0;
    for (n, &mu) in moments.moments.iter().enumerate().skip(1).take(required) {
        let unit = if norm > 0.0 { mu / norm } else { mu };
        let var_re = norm * norm * (1.0 - unit.re * unit.re).max(0.0) / shots as f64;
        let var_im = norm * norm * (1.0 - unit.im * unit.im).max(0.0) / shots as f64;
        var += w[n].re * w[n].re * var_re + w[n].im * w[n].im * var_im;
    }
    Ok(var / (s * s * s * s))
}

/// Largest truncation order needed over a grid; the moment budget is then
/// 2K - 2.
pub fn required_truncation(
    grid: &[SigmaPoint],
    rescaling: &Rescaling,
    tol: f64,
    k_cap: usize,
) -> Result<usize> {
    let mut k = 1;
    for &sigma in grid {
        k = k.max(truncation_order(sigma, rescaling, tol, k_cap)?);
    }
    Ok(k)
}

/// Builds a curve from one moment set over a sigma_R grid, choosing K per
/// point by the geometric truncation rule (capped by moment availability).
pub fn curve_from_moments(
    moments: &MomentSet,
    grid: &[SigmaPoint],
    tol: f64,
    k_cap: usize,
) -> Result<LorentzCurve> {
    let k_avail = moments.k_max() / 2 + 1;
    let points = grid
        .par_iter()
        .map(|&sigma| {
            let k = truncation_order(sigma, &moments.rescaling, tol, k_cap)?.min(k_avail);
            Ok(CurvePoint {
                sigma,
                l: li_from_moments(moments, sigma, k)?,
                k_used: k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LorentzCurve::new(points))
}

/// Direct oracle: solves (sigma - H)|psi> = |Omega> densely and returns
/// ||psi||^2. Second independent route for the moment bilinear form.
pub fn li_direct_solve(
    h: &SecondQuantizedH,
    space: &Arc<ConfigSpace>,
    omega: &StateVector,
    sigma: SigmaPoint,
) -> Result<f64> {
    sigma.validate()?;
    let mat = h.assemble_dense(space, DEFAULT_DENSE_CAP)?;
    let psi = resolvent_solve(&mat, omega, sigma.complex())?;
    Ok(psi.iter().map(|c| c.norm_sqr()).sum())
}

/// Bound-state part L_D = sum_n R_n / ((sigma_R - e_n)^2 + sigma_I^2) with
/// e_n = E_n - x.
pub fn discrete_part(energies: &[f64], amplitudes: &[f64], sigma: SigmaPoint) -> f64 {
    energies
        .iter()
        .zip(amplitudes)
        .map(|(&e, &r)| {
            let d = sigma.sigma_r - (e - sigma.x);
            r / (d * d + sigma.sigma_i * sigma.sigma_i)
        })
        .sum()
}

/// Pointwise L_C = L - L_D; small negatives are clipped at zero, values
/// below -10*tol (tol = 1e-8 * max L) are a hard error.
pub fn continuum_part(
    curve: &LorentzCurve,
    energies: &[f64],
    amplitudes: &[f64],
) -> Result<LorentzCurve> {
    let tol = 1e-8 * curve.max_l();
    let mut points = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        let lc = p.l - discrete_part(energies, amplitudes, p.sigma);
        if lc < -10.0 * tol {
            return Err(LitError::NegativeContinuum(lc.abs(), p.sigma.sigma_r));
        }
        points.push(CurvePoint {
            sigma: p.sigma,
            l: lc.max(0.0),
            k_used: p.k_used,
        });
    }
    Ok(LorentzCurve::new(points))
}
