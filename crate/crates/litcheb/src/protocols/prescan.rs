//! Cascading-M_J spectral prescan and bound-state amplitude fitting.
//!
//! The prescan runs single-configuration source states block by block, in
//! descending M_J order. A state of total angular momentum J contributes to
//! every block with |M_J| <= J, so a peak appearing first at M_J = J carries
//! that J label. Peak positions are refined with a three-point parabola on
//! 1/L, which is exact for an isolated Lorentzian, after subtracting the
//! jointly fitted neighbor peaks.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockenc::{noisy_moments, ShotNoiseModel};
use crate::chebyshev::compute_moments;
use crate::error::{LitError, Result};
use crate::fockbasis::{enumerate_configs, single_config_state, SpBasis};
use crate::hamiltonian::{compute_rescaling, SecondQuantizedH};
use crate::lorentz::{
    curve_from_moments, discrete_part, li_shot_variance, required_truncation, LorentzCurve,
    SigmaPoint,
};
use crate::nnls::nnls;

/// Peaks under shot noise must exceed this many propagated standard
/// deviations of the accumulated curve to count as levels.
const NOISE_PEAK_SIGMA: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct PrescanParams {
    /// Lorentzian width, small compared to the level spacing.
    pub sigma_i: f64,
    pub sigma_r_min: f64,
    pub sigma_r_max: f64,
    pub sigma_r_step: f64,
    /// Peaks below this fraction of the block maximum are ignored.
    pub peak_rel_threshold: f64,
    /// Chebyshev truncation tolerance and cap.
    pub trunc_tol: f64,
    pub k_cap: usize,
    /// Max single-configuration sources per block; larger blocks are
    /// sampled deterministically with an even stride.
    pub source_budget: usize,
    pub noise: Option<ShotNoiseModel>,
}

impl PrescanParams {
    pub fn new(sigma_i: f64, sigma_r_min: f64, sigma_r_max: f64, sigma_r_step: f64) -> Self {
        Self {
            sigma_i,
            sigma_r_min,
            sigma_r_max,
            sigma_r_step,
            peak_rel_threshold: 1e-4,
            trunc_tol: 1e-9,
            k_cap: 500,
            source_budget: 64,
            noise: None,
        }
    }

    pub fn grid(&self) -> Vec<SigmaPoint> {
        let mut out = Vec::new();
        let mut sr = self.sigma_r_min;
        while sr <= self.sigma_r_max + 1e-12 {
            out.push(SigmaPoint::new(sr, self.sigma_i, 0.0));
            sr += self.sigma_r_step;
        }
        out
    }

    fn match_tol(&self) -> f64 {
        self.sigma_r_step.max(self.sigma_i / 5.0)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundState {
    pub energy: f64,
    pub two_j: i32,
    pub parity: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub states: Vec<BoundState>,
}

impl SpectrumResult {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,2J,parity\n");
        for s in &self.states {
            out.push_str(&format!("{:.12e},{},{}\n", s.energy, s.two_j, s.parity));
        }
        out
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Vertex of the parabola through (x0 - h, q-), (x0, q0), (x0 + h, q+).
fn parabola_vertex(x0: f64, h: f64, qm: f64, q0: f64, qp: f64) -> f64 {
    let denom = qm - 2.0 * q0 + qp;
    if denom.abs() < 1e-300 {
        return x0;
    }
    x0 + 0.5 * h * (qm - qp) / denom
}

/// Linear propagation of L standard errors through the 1/L parabola vertex.
pub fn vertex_error_estimate(h: f64, l: [f64; 3], sigma_l: [f64; 3]) -> f64 {
    let q: Vec<f64> = l.iter().map(|&v| 1.0 / v).collect();
    let dq: Vec<f64> = l
        .iter()
        .zip(&sigma_l)
        .map(|(&v, &s)| s / (v * v))
        .collect();
    let n = q[0] - q[2];
    let d = q[0] - 2.0 * q[1] + q[2];
    if d.abs() < 1e-300 {
        return f64::INFINITY;
    }
    let dv_dqm = 0.5 * h * (d - n) / (d * d);
    let dv_dq0 = h * n / (d * d);
    let dv_dqp = -0.5 * h * (d + n) / (d * d);
    (dv_dqm * dv_dqm * dq[0] * dq[0]
        + dv_dq0 * dv_dq0 * dq[1] * dq[1]
        + dv_dqp * dv_dqp * dq[2] * dq[2])
        .sqrt()
}

/// Lowest curve value between index i and higher ground in one direction
/// (the saddle), or the minimum up to the boundary if nothing is higher.
fn side_saddle(l: &[f64], i: usize, dir: isize) -> f64 {
    let mut low = l[i];
    let mut j = i as isize + dir;
    while j >= 0 && (j as usize) < l.len() {
        let v = l[j as usize];
        if v > l[i] {
            return low;
        }
        low = low.min(v);
        j += dir;
    }
    low
}

/// Topographic prominence of a local maximum: its height above the higher
/// of the two bounding saddles. A noise wiggle riding on a smooth tail has
/// prominence of order the noise amplitude regardless of the tail height.
fn prominence(l: &[f64], i: usize) -> f64 {
    l[i] - side_saddle(l, i, -1).max(side_saddle(l, i, 1))
}

fn local_maxima(curve: &LorentzCurve, rel_threshold: f64) -> Vec<usize> {
    let l = curve.l_values();
    let max_l = curve.max_l();
    let mut out = Vec::new();
    for i in 1..l.len().saturating_sub(1) {
        if l[i] > l[i - 1] && l[i] >= l[i + 1] && l[i] >= rel_threshold * max_l {
            out.push(i);
        }
    }
    out
}

/// Refines peak positions on a curve: joint NNLS amplitude fit, then a
/// per-peak 1/L parabola on the three nearest grid points with the other
/// peaks subtracted. Returns (energies, amplitudes).
pub fn refine_peaks(
    curve: &LorentzCurve,
    initial: &[f64],
    sigma_i: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut energies = initial.to_vec();
    let xs = curve.sigma_r_values();
    let ls = curve.l_values();
    let x_point = curve.points.first().map(|p| p.sigma.x).unwrap_or(0.0);
    let mut amps = vec![0.0; energies.len()];
    for _ in 0..4 {
        let fit = fit_amplitudes_curve(curve, &energies);
        amps = fit;
        for n in 0..energies.len() {
            let e_cur = energies[n];
            // Nearest interior grid index.
            let mut i = xs
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - e_cur).abs().total_cmp(&(b.1 - e_cur).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            i = i.clamp(1, xs.len() - 2);
            let h = xs[i + 1] - xs[i];
            let mut q = [0.0; 3];
            let mut ok = true;
            for (slot, &j) in q.iter_mut().zip(&[i - 1, i, i + 1]) {
                let others: f64 = energies
                    .iter()
                    .zip(&amps)
                    .enumerate()
                    .filter(|(m, _)| *m != n)
                    .map(|(_, (&em, &rm))| {
                        let d = xs[j] - (em - x_point);
                        rm / (d * d + sigma_i * sigma_i)
                    })
                    .sum();
                let cleaned = ls[j] - others;
                if cleaned <= 0.0 {
                    ok = false;
                    break;
                }
                *slot = 1.0 / cleaned;
            }
            if ok {
                let v = parabola_vertex(xs[i], h, q[0], q[1], q[2]);
                // Stay within one grid cell of the detected maximum.
                if (v - xs[i]).abs() <= h {
                    energies[n] = v + x_point;
                }
            }
        }
    }
    (energies, amps)
}

fn fit_amplitudes_curve(curve: &LorentzCurve, energies: &[f64]) -> Vec<f64> {
    if energies.is_empty() {
        return Vec::new();
    }
    let rows = curve.points.len();
    let mut a = DMatrix::<f64>::zeros(rows, energies.len());
    for (i, p) in curve.points.iter().enumerate() {
        for (n, &e) in energies.iter().enumerate() {
            let d = p.sigma.sigma_r - (e - p.sigma.x);
            a[(i, n)] = 1.0 / (d * d + p.sigma.sigma_i * p.sigma.sigma_i);
        }
    }
    let b = DVector::from_vec(curve.l_values());
    nnls(&a, &b).coefficients
}

/// Runs the cascading-M_J prescan and returns the bound-state table.
pub fn prescan(
    h: &SecondQuantizedH,
    basis: &Arc<SpBasis>,
    a: usize,
    params: &PrescanParams,
) -> Result<SpectrumResult> {
    let full_space = enumerate_configs(basis, a, None)?;
    let rescaling = compute_rescaling(h, &full_space, 0.02)?;
    let grid = params.grid();
    if grid.len() < 3 {
        return Err(LitError::Config("sigma_R grid must have at least 3 points".into()));
    }
    let max_two_mj: i32 = {
        let mut mjs: Vec<i32> = basis.orbitals().iter().map(|o| o.two_mj).collect();
        mjs.sort_unstable_by(|x, y| y.cmp(x));
        mjs.iter().take(a).sum()
    };
    let min_two_mj = if a.is_multiple_of(2) { 0 } else { 1 };

    let mut states: Vec<BoundState> = Vec::new();
    let mut two_mj = max_two_mj;
    while two_mj >= min_two_mj {
        let block = enumerate_configs(basis, a, Some(two_mj))?;
        if block.dim() == 0 {
            two_mj -= 2;
            continue;
        }
        let sources: Vec<usize> = if block.dim() <= params.source_budget {
            (0..block.dim()).collect()
        } else {
            (0..params.source_budget)
                .map(|i| i * block.dim() / params.source_budget)
                .collect()
        };
        let k = required_truncation(&grid, &rescaling, params.trunc_tol, params.k_cap)?;
        let mut total = vec![0.0f64; grid.len()];
        let mut var_total = vec![0.0f64; grid.len()];
        let mut by_parity = [vec![0.0f64; grid.len()], vec![0.0f64; grid.len()]];
        let source_curves: Vec<(LorentzCurve, usize, Vec<f64>)> = sources
            .par_iter()
            .enumerate()
            .map(|(si, &src)| {
                let omega = single_config_state(&block, block.config(src))?;
                let mut ms = compute_moments(h, &rescaling, &omega, 2 * k - 2)?;
                if let Some(noise) = &params.noise {
                    let derived = ShotNoiseModel {
                        shots_per_moment: noise.shots_per_moment,
                        seed: noise
                            .seed
                            .wrapping_add((two_mj as u64).wrapping_mul(0x51ed_270b))
                            .wrapping_add(si as u64),
                    };
                    ms = noisy_moments(&ms, &derived)?;
                }
                let curve = curve_from_moments(&ms, &grid, params.trunc_tol, params.k_cap)?;
                let var = if params.noise.is_some() {
                    curve
                        .points
                        .iter()
                        .map(|p| li_shot_variance(&ms, p.sigma, p.k_used))
                        .collect::<Result<Vec<f64>>>()?
                } else {
                    Vec::new()
                };
                let pslot = if basis.parity_of(block.config(src).0) > 0 { 0 } else { 1 };
                Ok((curve, pslot, var))
            })
            .collect::<Result<Vec<_>>>()?;
        for (curve, pslot, var) in source_curves {
            for (i, p) in curve.points.iter().enumerate() {
                total[i] += p.l;
                by_parity[pslot][i] += p.l;
            }
            for (i, v) in var.into_iter().enumerate() {
                var_total[i] += v;
            }
        }
        let curve = LorentzCurve::new(
            grid.iter()
                .zip(&total)
                .map(|(&sigma, &l)| crate::lorentz::CurvePoint { sigma, l, k_used: k })
                .collect(),
        );
        let maxima = local_maxima(&curve, params.peak_rel_threshold);
        // Under shot noise, wiggles riding on smooth tails form local maxima
        // whose absolute height can be large; keep only peaks whose
        // prominence above the local background exceeds the propagated
        // statistical error.
        let candidates: Vec<f64> = maxima
            .iter()
            .filter(|&&i| {
                params.noise.is_none()
                    || prominence(&total, i) > NOISE_PEAK_SIGMA * var_total[i].sqrt()
            })
            .map(|&i| grid[i].sigma_r)
            .collect();
        let (refined, _amps) = refine_peaks(&curve, &candidates, params.sigma_i);
        let mut new_peaks: Vec<f64> = Vec::new();
        for &e in &refined {
            let known = states.iter().any(|s| (s.energy - e).abs() <= params.match_tol());
            let dup = new_peaks.iter().any(|&p| (p - e).abs() <= params.match_tol());
            if !known && !dup {
                new_peaks.push(e);
            }
        }
        new_peaks.sort_by(|x, y| x.total_cmp(y));
        for w in new_peaks.windows(2) {
            if w[1] - w[0] < params.sigma_i {
                return Err(LitError::PeaksTooClose {
                    e1: w[0],
                    e2: w[1],
                    sigma_i: params.sigma_i,
                });
            }
        }
        for &e in &new_peaks {
            // Parity attribution: which parity sector dominates at the peak.
            let i = grid
                .iter()
                .enumerate()
                .min_by(|l, r| (l.1.sigma_r - e).abs().total_cmp(&(r.1.sigma_r - e).abs()))
                .map(|(i, _)| i)
                .unwrap();
            let parity = if by_parity[0][i] >= by_parity[1][i] { 1 } else { -1 };
            states.push(BoundState {
                energy: e,
                two_j: two_mj,
                parity,
            });
        }
        two_mj -= 2;
    }
    states.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    Ok(SpectrumResult { states })
}

/// Bound-state amplitudes from a measured curve at known energies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakFit {
    pub amplitudes: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
    pub condition_warning: bool,
}

/// Solves L(sigma_R) ~ sum_n R_n / ((sigma_R - e_n)^2 + sigma_I^2) for
/// nonnegative R_n by linear least squares with active-set clipping.
pub fn fit_bound_amplitudes(curve: &LorentzCurve, energies: &[f64]) -> Result<PeakFit> {
    if curve.points.is_empty() {
        return Err(LitError::Config("empty curve".into()));
    }
    let rows = curve.points.len();
    let mut a = DMatrix::<f64>::zeros(rows, energies.len());
    for (i, p) in curve.points.iter().enumerate() {
        for (n, &e) in energies.iter().enumerate() {
            let d = p.sigma.sigma_r - (e - p.sigma.x);
            a[(i, n)] = 1.0 / (d * d + p.sigma.sigma_i * p.sigma.sigma_i);
        }
    }
    let b = DVector::from_vec(curve.l_values());
    let fit = nnls(&a, &b);
    Ok(PeakFit {
        amplitudes: fit.coefficients,
        residual: fit.residual,
        condition: fit.condition,
        condition_warning: fit.condition > 1e8,
    })
}

/// Threshold energy e_th = E_0(A-1) - E_0(A) from two prescans.
pub fn neutron_threshold(
    h: &SecondQuantizedH,
    basis: &Arc<SpBasis>,
    a: usize,
    params_a: &PrescanParams,
    params_a1: &PrescanParams,
) -> Result<(f64, f64, f64)> {
    let sa = prescan(h, basis, a, params_a)?;
    let sa1 = prescan(h, basis, a - 1, params_a1)?;
    let e0_a = sa
        .states
        .first()
        .ok_or_else(|| LitError::Config("prescan found no states for the A system".into()))?
        .energy;
    let e0_a1 = sa1
        .states
        .first()
        .ok_or_else(|| LitError::Config("prescan found no states for the A-1 system".into()))?
        .energy;
    Ok((e0_a1 - e0_a, e0_a, e0_a1))
}

/// Synthetic-curve helper shared by tests: exact L_D samples for a given
/// spectrum.
pub fn synthetic_curve(
    energies: &[f64],
    amplitudes: &[f64],
    grid: &[SigmaPoint],
) -> LorentzCurve {
    LorentzCurve::new(
        grid.iter()
            .map(|&sigma| crate::lorentz::CurvePoint {
                sigma,
                l: discrete_part(energies, amplitudes, sigma),
                k_used: 0,
            })
            .collect(),
    )
}
