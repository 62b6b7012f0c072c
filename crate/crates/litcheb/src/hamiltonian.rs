//! Second-quantized Hamiltonians: monomial ingest, Hermitization, action on
//! state vectors, dense assembly, and the affine rescaling that puts the
//! spectrum inside [-1, 1].

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LitError, Result};
use crate::fockbasis::{ladder_on_word, ConfigSpace, Configuration, SpBasis, StateVector};

pub const DEFAULT_DENSE_CAP: usize = 4096;
const HERMITIZE_TOL: f64 = 1e-12;

/// One term value * b†_Q b_P of the Hamiltonian, with Q and P strictly
/// ascending index sets of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub creations: Vec<usize>,
    pub annihilations: Vec<usize>,
    /// Few-body matrix element in MeV.
    pub value: Complex64,
}

/// A many-fermion Hamiltonian as a list of ladder-string monomials.
#[derive(Debug, Clone)]
pub struct SecondQuantizedH {
    pub basis: Arc<SpBasis>,
    monomials: Vec<Monomial>,
}

impl SecondQuantizedH {
    pub fn new(basis: Arc<SpBasis>, monomials: Vec<Monomial>) -> Result<Self> {
        for m in &monomials {
            if m.creations.len() != m.annihilations.len() {
                return Err(LitError::RankMismatch {
                    nq: m.creations.len(),
                    np: m.annihilations.len(),
                });
            }
            for set in [&m.creations, &m.annihilations] {
                for &i in set.iter() {
                    if i >= basis.n_sp() {
                        return Err(LitError::IndexOutOfRange {
                            index: i,
                            n_sp: basis.n_sp(),
                        });
                    }
                }
                if set.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(LitError::NonAscendingIndices(set.to_vec()));
                }
            }
            if !m.value.re.is_finite() || !m.value.im.is_finite() {
                return Err(LitError::Config("non-finite monomial value".into()));
            }
        }
        Ok(Self { basis, monomials })
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Number of monomials (the symbol D of the block-encoding bookkeeping).
    pub fn d(&self) -> usize {
        self.monomials.len()
    }

    /// Max |value| over the monomials (the subnormalization bound Xi).
    pub fn xi(&self) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.value.norm())
            .fold(0.0, f64::max)
    }

    /// Adds every missing conjugate partner (P, Q, v*) and forces
    /// self-adjoint (Q = P) monomials real. Idempotent.
    pub fn hermitize(&self) -> Result<SecondQuantizedH> {
        let mut map: BTreeMap<(Vec<usize>, Vec<usize>), Complex64> = BTreeMap::new();
        for m in &self.monomials {
            *map.entry((m.creations.clone(), m.annihilations.clone()))
                .or_insert(Complex64::ZERO) += m.value;
        }
        let scale = self.xi().max(1.0);
        let mut out: BTreeMap<(Vec<usize>, Vec<usize>), Complex64> = BTreeMap::new();
        for ((q, p), &v) in &map {
            if q == p {
                if v.im.abs() > HERMITIZE_TOL * scale {
                    return Err(LitError::HermitizeConflict(format!(
                        "self-adjoint monomial Q=P={q:?} has imaginary value {v}"
                    )));
                }
                out.insert((q.clone(), p.clone()), Complex64::new(v.re, 0.0));
                continue;
            }
            match map.get(&(p.clone(), q.clone())) {
                Some(&w) => {
                    if (v - w.conj()).norm() > HERMITIZE_TOL * scale {
                        return Err(LitError::HermitizeConflict(format!(
                            "Q={q:?} P={p:?}: {v} vs conjugate partner {w}"
                        )));
                    }
                    // Symmetrize so hermitize is idempotent under rounding.
                    let sym = (v + w.conj()) * 0.5;
                    out.insert((q.clone(), p.clone()), sym);
                }
                None => {
                    out.insert((q.clone(), p.clone()), v);
                    out.insert((p.clone(), q.clone()), v.conj());
                }
            }
        }
        let monomials = out
            .into_iter()
            .map(|((q, p), value)| Monomial {
                creations: q,
                annihilations: p,
                value,
            })
            .collect();
        SecondQuantizedH::new(Arc::clone(&self.basis), monomials)
    }

    /// Applies H to a state: sum over monomials of value * b†_Q b_P |state>.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::zeros(&state.space);
        for m in &self.monomials {
            for (i, &amp) in state.amplitudes.iter().enumerate() {
                if amp == Complex64::ZERO {
                    continue;
                }
                let word = state.space.config(i).0;
                if let Some((new_word, sign)) =
                    ladder_on_word(word, &m.creations, &m.annihilations)
                {
                    match state.space.position(Configuration(new_word)) {
                        Some(j) => out.amplitudes[j] += amp * m.value * sign,
                        None => {
                            return Err(LitError::SymmetryEscape {
                                from: word,
                                to: new_word,
                            })
                        }
                    }
                }
            }
        }
        if out.amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LitError::NonFiniteAmplitude);
        }
        Ok(out)
    }

    /// Dense matrix M[g][f] = <config_g| H |config_f> on a space.
    pub fn assemble_dense(&self, space: &Arc<ConfigSpace>, cap: usize) -> Result<DMatrix<Complex64>> {
        let dim = space.dim();
        if dim > cap {
            return Err(LitError::DimCapExceeded { dim, cap });
        }
        let mut mat = DMatrix::<Complex64>::zeros(dim, dim);
        for m in &self.monomials {
            for f in 0..dim {
                let word = space.config(f).0;
                if let Some((new_word, sign)) =
                    ladder_on_word(word, &m.creations, &m.annihilations)
                {
                    match space.position(Configuration(new_word)) {
                        Some(g) => mat[(g, f)] += m.value * sign,
                        None => {
                            return Err(LitError::SymmetryEscape {
                                from: word,
                                to: new_word,
                            })
                        }
                    }
                }
            }
        }
        Ok(mat)
    }
}

/// Max |M - M†| entry, for Hermiticity checks.
pub fn hermiticity_defect(mat: &DMatrix<Complex64>) -> f64 {
    let mut defect = 0.0f64;
    for i in 0..mat.nrows() {
        for j in i..mat.ncols() {
            defect = defect.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    defect
}

/// Affine map H' = (H - c) / s with spectrum inside (-1, 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Rescaling {
    /// Spectral midpoint shift, MeV.
    pub shift: f64,
    /// Half-width scale, MeV.
    pub scale: f64,
    /// Relative safety margin keeping eigenvalues away from +-1.
    pub margin: f64,
    /// Reported physical subnormalization B*Xi of the block-encoding
    /// bookkeeping; plays no role in the numerics here.
    pub alpha: f64,
}

impl Rescaling {
    /// Physical sigma (MeV) to rescaled units.
    pub fn to_rescaled(&self, sigma: Complex64) -> Complex64 {
        (sigma - self.shift) / self.scale
    }

    pub fn to_physical_energy(&self, eps: f64) -> f64 {
        eps * self.scale + self.shift
    }
}

/// Applies H' = (H - c)/s to a state.
pub fn apply_h_prime(
    h: &SecondQuantizedH,
    rescaling: &Rescaling,
    state: &StateVector,
) -> Result<StateVector> {
    let mut out = h.apply(state)?;
    let inv_s = 1.0 / rescaling.scale;
    for (o, s) in out.amplitudes.iter_mut().zip(&state.amplitudes) {
        *o = (*o - s * rescaling.shift) * inv_s;
    }
    Ok(out)
}

/// Extremal-eigenvalue estimate used by `compute_rescaling` on spaces above
/// the dense cap: 200 power iterations on shifted operators, inflated by 5%.
fn power_extremal_estimates(h: &SecondQuantizedH, space: &Arc<ConfigSpace>) -> Result<(f64, f64)> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let dim = space.dim();
    let mut rng = StdRng::seed_from_u64(0x1057_c0de);
    let mut rayleigh = |h: &SecondQuantizedH, shift: f64| -> Result<f64> {
        let mut v = StateVector::zeros(space);
        for a in &mut v.amplitudes {
            *a = Complex64::new(rng.random::<f64>() - 0.5, 0.0);
        }
        let mut v = v.normalized();
        let mut lambda = 0.0;
        for _ in 0..200 {
            let mut w = h.apply(&v)?;
            for (wi, vi) in w.amplitudes.iter_mut().zip(&v.amplitudes) {
                *wi -= vi * shift;
            }
            let n = w.norm_sq().sqrt();
            if n == 0.0 {
                return Ok(shift);
            }
            w.scale(Complex64::new(1.0 / n, 0.0));
            lambda = n;
            v = w;
        }
        // Sign of the dominant shifted eigenvalue from a Rayleigh quotient.
        let hv = h.apply(&v)?;
        let rq = v.dot(&hv).re / v.norm_sq() - shift;
        Ok(shift + lambda.copysign(rq))
    };
    let _ = dim;
    let dominant = rayleigh(h, 0.0)?;
    let other = rayleigh(h, dominant)?;
    let (mut lo, mut hi) = if dominant < other {
        (dominant, other)
    } else {
        (other, dominant)
    };
    let pad = 0.05 * (hi - lo).max(1e-12);
    lo -= pad;
    hi += pad;
    Ok((lo, hi))
}

/// Computes (c, s) such that (H - c)/s has spectrum inside (-1, 1).
pub fn compute_rescaling(
    h: &SecondQuantizedH,
    space: &Arc<ConfigSpace>,
    margin: f64,
) -> Result<Rescaling> {
    let (lo, hi) = if space.dim() <= DEFAULT_DENSE_CAP {
        let mat = h.assemble_dense(space, DEFAULT_DENSE_CAP)?;
        let defect = hermiticity_defect(&mat);
        if defect > 1e-10 * h.xi().max(1.0) {
            return Err(LitError::NotHermitian(defect));
        }
        let eigs = mat.symmetric_eigenvalues();
        let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    } else {
        power_extremal_estimates(h, space)?
    };
    let width = hi - lo;
    let alpha = h.d() as f64 * h.xi();
    if width <= 1e-12 * hi.abs().max(1.0) {
        // Degenerate spectrum: any positive scale works.
        return Ok(Rescaling {
            shift: (hi + lo) / 2.0,
            scale: 1.0,
            margin,
            alpha,
        });
    }
    Ok(Rescaling {
        shift: (hi + lo) / 2.0,
        scale: (1.0 + margin) * width / 2.0,
        margin,
        alpha,
    })
}

/// Parses a monomial file: `rank | q1 q2 .. | p1 p2 .. | value_re [value_im]`,
/// MeV units, `#` comments. Duplicate (Q, P) lines are summed.
pub fn load_monomials(path: impl AsRef<Path>, basis: &Arc<SpBasis>) -> Result<SecondQuantizedH> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut map: BTreeMap<(Vec<usize>, Vec<usize>), Complex64> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| LitError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!(
                "expected 4 pipe-separated fields `rank | Q | P | value`, got {}",
                fields.len()
            )));
        }
        let rank: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad rank `{}`", fields[0])))?;
        let parse_set = |s: &str| -> Result<Vec<usize>> {
            s.split_whitespace()
                .map(|t| t.parse().map_err(|_| err(format!("bad index `{t}`"))))
                .collect()
        };
        let q = parse_set(fields[1])?;
        let p = parse_set(fields[2])?;
        if q.len() != rank || p.len() != rank {
            return Err(err(format!(
                "rank {rank} but |Q| = {} and |P| = {}",
                q.len(),
                p.len()
            )));
        }
        let vals: Vec<&str> = fields[3].split_whitespace().collect();
        let value = match vals.as_slice() {
            [re] => Complex64::new(
                re.parse().map_err(|_| err(format!("bad value `{re}`")))?,
                0.0,
            ),
            [re, im] => Complex64::new(
                re.parse().map_err(|_| err(format!("bad value `{re}`")))?,
                im.parse().map_err(|_| err(format!("bad value `{im}`")))?,
            ),
            _ => return Err(err("value field must be `re` or `re im`".into())),
        };
        *map.entry((q, p)).or_insert(Complex64::ZERO) += value;
    }
    let monomials = map
        .into_iter()
        .map(|((q, p), value)| Monomial {
            creations: q,
            annihilations: p,
            value,
        })
        .collect();
    SecondQuantizedH::new(Arc::clone(basis), monomials)
}
