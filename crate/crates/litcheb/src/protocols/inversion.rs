//! Regularized inversion of the continuum Lorentz integral.
//!
//! The continuum response is expanded in a small nonnegative basis of
//! threshold-power-times-exponential functions; the expansion coefficients
//! are fitted to the continuum curve through the forward Lorentzian
//! transform, and the basis size is chosen at the first stability plateau.
//! Repeating the fit for an ensemble of sigma_I widths gives a pointwise
//! uncertainty band.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LitError, Result};
use crate::lorentz::{discrete_part, LorentzCurve, SigmaPoint};
use crate::nnls::nnls;
use crate::quadrature::integrate;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InversionParams {
    /// Continuum threshold energy.
    pub e_th: f64,
    /// Upper edge of the reported energy grid.
    pub e_max: f64,
    /// Basis width scale; the m-th function decays on m * beta.
    pub beta: f64,
    /// Threshold power (3/2 for an s-wave-like two-body breakup).
    pub exponent: f64,
    /// Largest basis size scanned.
    pub m_max: usize,
    /// Relative change between consecutive basis sizes accepted as stable.
    pub plateau_tol: f64,
    /// Absolute tolerance passed to the forward-transform quadrature,
    /// relative to the basis-function scale.
    pub quad_tol: f64,
    /// Number of points in the reported energy grid.
    pub n_e_grid: usize,
}

impl InversionParams {
    pub fn new(e_th: f64, e_max: f64) -> Self {
        Self {
            e_th,
            e_max,
            beta: (e_max - e_th) / 10.0,
            exponent: 1.5,
            m_max: 12,
            plateau_tol: 0.02,
            quad_tol: 1e-10,
            n_e_grid: 200,
        }
    }

    fn e_grid(&self) -> Vec<f64> {
        let n = self.n_e_grid.max(2);
        (0..n)
            .map(|i| self.e_th + (self.e_max - self.e_th) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// One basis function chi_m(e) = (e - e_th)^p exp(-(e - e_th)/(m beta)).
fn basis_fn(params: &InversionParams, m: usize, e: f64) -> f64 {
    let t = e - params.e_th;
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(params.exponent) * (-t / (m as f64 * params.beta)).exp()
}

/// Forward transform of one basis function through the Lorentzian kernel.
fn forward_element(params: &InversionParams, m: usize, sigma: SigmaPoint) -> Result<f64> {
    let width = m as f64 * params.beta;
    let e_up = params.e_th + 60.0 * width;
    let scale = basis_fn(params, m, params.e_th + params.exponent * width).max(1e-300);
    // The energy variable lives on the same axis as sigma_r (both relative
    // to the same x reference).
    integrate(
        |e| {
            let d = sigma.sigma_r - e;
            basis_fn(params, m, e) / (d * d + sigma.sigma_i * sigma.sigma_i)
        },
        params.e_th,
        e_up,
        params.quad_tol * scale,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseFunction {
    pub e_grid: Vec<f64>,
    /// Central response values (from the first ensemble member).
    pub r: Vec<f64>,
    /// Pointwise ensemble envelope.
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    /// Basis size selected at the stability plateau of the central fit.
    pub m_star: usize,
    /// Central-fit expansion coefficients (for exact re-transformation).
    pub coefficients: Vec<f64>,
    pub params: InversionParams,
    pub fit_residual: f64,
}

impl ResponseFunction {
    pub fn evaluate(&self, e: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| c * basis_fn(&self.params, i + 1, e))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("e,R,R_lo,R_hi\n");
        for i in 0..self.e_grid.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.e_grid[i], self.r[i], self.band_lo[i], self.band_hi[i]
            ));
        }
        out
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }
}

/// Fits M basis coefficients to one continuum curve; returns the
/// coefficients and the fit residual. The design matrix is precomputed for
/// m_max columns and sliced.
fn fit_m(design: &DMatrix<f64>, b: &DVector<f64>, m: usize) -> (Vec<f64>, f64) {
    let a = design.columns(0, m).into_owned();
    let fit = nnls(&a, b);
    (fit.coefficients, fit.residual)
}

fn response_on_grid(params: &InversionParams, coeffs: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&e| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * basis_fn(params, i + 1, e))
                .sum()
        })
        .collect()
}

fn full_design(params: &InversionParams, curve: &LorentzCurve) -> Result<DMatrix<f64>> {
    let mut design = DMatrix::<f64>::zeros(curve.points.len(), params.m_max);
    for (i, p) in curve.points.iter().enumerate() {
        p.sigma.validate()?;
        for m in 1..=params.m_max {
            design[(i, m - 1)] = forward_element(params, m, p.sigma)?;
        }
    }
    Ok(design)
}

/// Scans the basis size until two consecutive fits agree pointwise to
/// plateau_tol (relative to the peak response) and returns (m_star, coeffs).
fn plateau_fit(
    params: &InversionParams,
    curve: &LorentzCurve,
    grid: &[f64],
) -> Result<(usize, Vec<f64>, f64)> {
    if params.m_max < 2 {
        return Err(LitError::Config("inversion needs m_max >= 2".into()));
    }
    // An identically vanishing curve inverts to the zero response.
    if curve.points.iter().all(|p| p.l == 0.0) {
        return Ok((1, vec![0.0], 0.0));
    }
    let design = full_design(params, curve)?;
    let b = DVector::from_vec(curve.l_values());
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for m in 1..=params.m_max {
        let (coeffs, residual) = fit_m(&design, &b, m);
        let r = response_on_grid(params, &coeffs, grid);
        if let Some((_, pr, _)) = &prev {
            let norm: f64 = pr.iter().map(|&v| v * v).sum::<f64>().sqrt();
            if norm <= 0.0 {
                return Err(LitError::InversionUnstable(params.m_max));
            }
            let dev: f64 = r
                .iter()
                .zip(pr.iter())
                .map(|(&a, &c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            if dev <= params.plateau_tol * norm {
                return Ok((m - 1, prev.take().unwrap().0, residual));
            }
        }
        prev = Some((coeffs, r, residual));
    }
    Err(LitError::InversionUnstable(params.m_max))
}

/// Inverts an ensemble of continuum curves (different sigma_I, same
/// underlying response). The first curve is the reference that provides the
/// central values and the plateau basis size; the remaining curves only
/// widen the uncertainty band.
pub fn invert_continuum(
    curves: &[LorentzCurve],
    params: &InversionParams,
) -> Result<ResponseFunction> {
    let Some(reference) = curves.first() else {
        return Err(LitError::Config("inversion needs at least one curve".into()));
    };
    let grid = params.e_grid();
    let (m_star, coeffs, residual) = plateau_fit(params, reference, &grid)?;
    let central = response_on_grid(params, &coeffs, &grid);
    let mut lo = central.clone();
    let mut hi = central.clone();
    for curve in &curves[1..] {
        let (_, c, _) = plateau_fit(params, curve, &grid)?;
        let r = response_on_grid(params, &c, &grid);
        for i in 0..grid.len() {
            lo[i] = lo[i].min(r[i]);
            hi[i] = hi[i].max(r[i]);
        }
    }
    Ok(ResponseFunction {
        e_grid: grid,
        r: central,
        band_lo: lo,
        band_hi: hi,
        m_star,
        coefficients: coeffs,
        params: *params,
        fit_residual: residual,
    })
}

/// Round-trip check: L reconstructed from the bound-state table plus the
/// inverted continuum response, evaluated at one sigma point.
pub fn reconstruct_li(
    response: &ResponseFunction,
    energies: &[f64],
    amplitudes: &[f64],
    sigma: SigmaPoint,
) -> Result<f64> {
    sigma.validate()?;
    let params = &response.params;
    let mut l = discrete_part(energies, amplitudes, sigma);
    for (i, &c) in response.coefficients.iter().enumerate() {
        if c != 0.0 {
            l += c * forward_element(params, i + 1, sigma)?;
        }
    }
    Ok(l)
}
