//! Chebyshev moments mu_k = <Omega|T_k(H')|Omega> by three-term recursion,
//! the complex expansion coefficients f_k(sigma) of the resolvent, and
//! truncation-order control.
//!
//! The moment JSON file is the interchange seam between the classical
//! recursion path and the walk-operator path: both emit the same schema, so
//! downstream consumers cannot tell the sources apart.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LitError, Result};
use crate::hamiltonian::{apply_h_prime, Rescaling, SecondQuantizedH};
use crate::fockbasis::StateVector;
use crate::lorentz::SigmaPoint;

pub const K_FLOOR: usize = 8;
pub const DEFAULT_K_CAP: usize = 800;

/// Chebyshev moments of a source state, plus the rescaling that defines H'.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub moments: Vec<Complex64>,
    pub rescaling: Rescaling,
    pub source_norm_sq: f64,
    /// Present when the moments came from the shot-noise sampler.
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

impl MomentSet {
    pub fn k_max(&self) -> usize {
        self.moments.len() - 1
    }

    /// Kernel-polynomial-method damping: returns a copy with Jackson factors
    /// applied through truncation order `big_k`. Off by default everywhere.
    pub fn with_jackson_damping(&self, big_k: usize) -> MomentSet {
        let mut out = self.clone();
        for (k, m) in out.moments.iter_mut().enumerate() {
            *m *= jackson_factor(k, big_k);
        }
        out
    }
}

/// Jackson kernel damping factor g_k for truncation order `big_k`.
pub fn jackson_factor(k: usize, big_k: usize) -> f64 {
    let n = (big_k + 1) as f64;
    let k = k as f64;
    use std::f64::consts::PI;
    ((n - k) * (PI * k / n).cos() + (PI * k / n).sin() / (PI / n).tan()) / n
}

/// Computes mu_0..mu_{k_max} via T_0 = I, T_1 = H', T_{k+1} = 2H'T_k - T_{k-1}.
pub fn compute_moments(
    h: &SecondQuantizedH,
    rescaling: &Rescaling,
    omega: &StateVector,
    k_max: usize,
) -> Result<MomentSet> {
    let source_norm_sq = omega.norm_sq();
    let mut moments = Vec::with_capacity(k_max + 1);
    let mut prev = omega.clone();
    moments.push(Complex64::new(source_norm_sq, 0.0));
    if k_max >= 1 {
        let mut cur = apply_h_prime(h, rescaling, omega)?;
        moments.push(omega.dot(&cur));
        for _ in 2..=k_max {
            let mut next = apply_h_prime(h, rescaling, &cur)?;
            for (n, p) in next.amplitudes.iter_mut().zip(&prev.amplitudes) {
                *n = *n * 2.0 - p;
            }
            moments.push(omega.dot(&next));
            prev = cur;
            cur = next;
        }
    }
    if moments
        .iter()
        .any(|m| !m.re.is_finite() || !m.im.is_finite())
    {
        return Err(LitError::NonFiniteAmplitude);
    }
    Ok(MomentSet {
        moments,
        rescaling: *rescaling,
        source_norm_sq,
        shots: None,
        seed: None,
    })
}

/// The recursion vectors t_0..t_{k_max}; test support for the product
/// identity 2<t_j|t_k> = mu_{j+k} + mu_{|j-k|}.
pub fn recursion_vectors(
    h: &SecondQuantizedH,
    rescaling: &Rescaling,
    omega: &StateVector,
    k_max: usize,
) -> Result<Vec<StateVector>> {
    let mut vecs = vec![omega.clone()];
    if k_max >= 1 {
        vecs.push(apply_h_prime(h, rescaling, omega)?);
        for k in 2..=k_max {
            let mut next = apply_h_prime(h, rescaling, &vecs[k - 1])?;
            for (n, p) in next.amplitudes.iter_mut().zip(&vecs[k - 2].amplitudes) {
                *n = *n * 2.0 - p;
            }
            vecs.push(next);
        }
    }
    Ok(vecs)
}

/// Coefficient geometry at one sigma point: the rescaled sigma', the
/// contracting branch root of sqrt(sigma'^2 - 1), and the geometric ratio.
#[derive(Debug, Clone, Copy)]
pub struct CoeffParams {
    pub sigma_rescaled: Complex64,
    pub root: Complex64,
    /// sigma' - root, modulus < 1.
    pub ratio: Complex64,
}

impl CoeffParams {
    pub fn new(sigma: SigmaPoint, rescaling: &Rescaling) -> Result<Self> {
        sigma.validate()?;
        let sp = rescaling.to_rescaled(sigma.complex());
        let mut root = (sp * sp - Complex64::ONE).sqrt();
        if (sp - root).norm() > 1.0 {
            root = -root;
        }
        let ratio = sp - root;
        // Contraction is guaranteed for Im(sigma') != 0.
        debug_assert!(ratio.norm() < 1.0);
        Ok(Self {
            sigma_rescaled: sp,
            root,
            ratio,
        })
    }

    /// f_k(sigma') = (2 - delta_{k,0}) / root * ratio^k.
    pub fn coeff(&self, k: usize) -> Complex64 {
        let pref = if k == 0 { 1.0 } else { 2.0 };
        pref / self.root * self.ratio.powu(k as u32)
    }

    /// All f_0..f_{k-1}, built iteratively.
    pub fn coeffs(&self, count: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        let mut cur = Complex64::ONE / self.root;
        for k in 0..count {
            out.push(if k == 0 { cur } else { 2.0 * cur });
            cur *= self.ratio;
        }
        out
    }
}

/// Evaluates f_k at a physical sigma point.
pub fn coeff_f(sigma: SigmaPoint, rescaling: &Rescaling, k: usize) -> Result<Complex64> {
    Ok(CoeffParams::new(sigma, rescaling)?.coeff(k))
}

/// Smallest K with ratio^K / |root| <= tol, clamped to [K_FLOOR, k_cap].
pub fn truncation_order(
    sigma: SigmaPoint,
    rescaling: &Rescaling,
    tol: f64,
    k_cap: usize,
) -> Result<usize> {
    if tol <= 0.0 {
        return Err(LitError::Config(format!("tolerance must be positive, got {tol}")));
    }
    let params = CoeffParams::new(sigma, rescaling)?;
    let r = params.ratio.norm();
    let pref = 1.0 / params.root.norm();
    let k = if r <= 0.0 {
        0
    } else {
        let need = (tol / pref).ln() / r.ln();
        if need.is_finite() && need > 0.0 {
            need.ceil() as usize
        } else {
            0
        }
    };
    Ok(k.clamp(K_FLOOR, k_cap.max(K_FLOOR)))
}

#[derive(Serialize, Deserialize)]
struct MomentEntry {
    k: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    rescaling: Rescaling,
    source_norm2: f64,
    k_max: usize,
    moments: Vec<MomentEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl MomentSet {
    pub fn to_json(&self) -> Result<String> {
        let file = MomentFile {
            rescaling: self.rescaling,
            source_norm2: self.source_norm_sq,
            k_max: self.k_max(),
            moments: self
                .moments
                .iter()
                .enumerate()
                .map(|(k, m)| MomentEntry { k, re: m.re, im: m.im })
                .collect(),
            shots: self.shots,
            seed: self.seed,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MomentFile = serde_json::from_str(text)?;
        let mut moments = vec![Complex64::ZERO; file.k_max + 1];
        for e in &file.moments {
            if e.k >= moments.len() {
                return Err(LitError::Config(format!(
                    "moment entry k = {} exceeds declared k_max = {}",
                    e.k, file.k_max
                )));
            }
            moments[e.k] = Complex64::new(e.re, e.im);
        }
        Ok(MomentSet {
            moments,
            rescaling: file.rescaling,
            source_norm_sq: file.source_norm2,
            shots: file.shots,
            seed: file.seed,
        })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Moments of a diagonal H' with a single entry eps and unit source: these
/// are just T_k(eps); scalar helper for oracles and tests.
pub fn chebyshev_t(k: usize, eps: f64) -> f64 {
    if eps.abs() <= 1.0 {
        (k as f64 * eps.acos()).cos()
    } else {
        // Outside [-1,1] use the hyperbolic continuation.
        let s = (k as f64 * eps.abs().acosh()).cosh();
        if eps < 0.0 && k % 2 == 1 {
            -s
        } else {
            s
        }
    }
}
