//! Full-configuration-interaction oracle: dense diagonalization, exact
//! response amplitudes, and exact Lorentz integrals on small spaces.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LitError, Result};
use crate::fockbasis::{ConfigSpace, StateVector};
use crate::hamiltonian::{hermiticity_defect, SecondQuantizedH, DEFAULT_DENSE_CAP};
use crate::lorentz::SigmaPoint;

/// Energy window within which eigenvalues are treated as degenerate when
/// counting multiplet members.
pub const DEGENERACY_WINDOW: f64 = 1e-8;

/// Full spectrum with orthonormal eigenvectors, energies ascending.
#[derive(Debug)]
pub struct EigenDecomposition {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// Exact response amplitudes R_n = |<Psi_n|Omega>|^2 per eigenstate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactResponse {
    pub energies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

/// Dense Hermitian diagonalization of H on a space.
pub fn diagonalize(h: &SecondQuantizedH, space: &Arc<ConfigSpace>) -> Result<EigenDecomposition> {
    let mat = h.assemble_dense(space, DEFAULT_DENSE_CAP)?;
    let defect = hermiticity_defect(&mat);
    if defect > 1e-10 * h.xi().max(1.0) {
        return Err(LitError::NotHermitian(defect));
    }
    diagonalize_matrix(&mat, space)
}

pub fn diagonalize_matrix(
    mat: &DMatrix<Complex64>,
    space: &Arc<ConfigSpace>,
) -> Result<EigenDecomposition> {
    let dim = space.dim();
    let eig = mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut energies = Vec::with_capacity(dim);
    let mut states = Vec::with_capacity(dim);
    for &i in &order {
        energies.push(eig.eigenvalues[i]);
        let col = eig.eigenvectors.column(i);
        states.push(StateVector {
            space: Arc::clone(space),
            amplitudes: col.iter().cloned().collect(),
        });
    }
    Ok(EigenDecomposition { energies, states })
}

impl EigenDecomposition {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Groups eigenvalues into (energy, multiplicity) within the degeneracy
    /// window; the energy reported is the group mean.
    pub fn multiplets(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &e in &self.energies {
            match out.last_mut() {
                Some((e0, count)) if (e - *e0).abs() <= DEGENERACY_WINDOW.max(1e-8 * e0.abs()) => {
                    *e0 = (*e0 * *count as f64 + e) / (*count as f64 + 1.0);
                    *count += 1;
                }
                _ => out.push((e, 1)),
            }
        }
        out
    }
}

/// R_n = |<Psi_n|Omega>|^2 for every eigenstate.
pub fn exact_response(decomp: &EigenDecomposition, omega: &StateVector) -> Result<ExactResponse> {
    if decomp
        .states
        .first()
        .is_some_and(|s| !s.same_space(omega))
    {
        return Err(LitError::SpaceMismatch);
    }
    let amplitudes = decomp
        .states
        .iter()
        .map(|psi| psi.dot(omega).norm_sqr())
        .collect();
    Ok(ExactResponse {
        energies: decomp.energies.clone(),
        amplitudes,
    })
}

/// Spectral form of the Lorentz integral,
/// L = sum_n R_n / ((sigma_R - (E_n - x))^2 + sigma_I^2).
pub fn exact_lorentz(
    decomp: &EigenDecomposition,
    omega: &StateVector,
    sigma: SigmaPoint,
) -> Result<f64> {
    sigma.validate()?;
    let response = exact_response(decomp, omega)?;
    Ok(response
        .energies
        .iter()
        .zip(&response.amplitudes)
        .map(|(&e, &r)| {
            let d = sigma.sigma_r - (e - sigma.x);
            r / (d * d + sigma.sigma_i * sigma.sigma_i)
        })
        .sum())
}

impl ExactResponse {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_string_pretty(self)?)?)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Residual check ||H psi - E psi|| for a decomposition, used in tests.
pub fn max_residual(
    h: &SecondQuantizedH,
    decomp: &EigenDecomposition,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (e, psi) in decomp.energies.iter().zip(&decomp.states) {
        let hpsi = h.apply(psi)?;
        let res: f64 = hpsi
            .amplitudes
            .iter()
            .zip(&psi.amplitudes)
            .map(|(a, b)| (a - b * *e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Dense resolvent solve (sigma - H)|psi> = |omega>, returning |psi> as raw
/// amplitudes; shared by the direct Lorentz oracle.
pub fn resolvent_solve(
    mat: &DMatrix<Complex64>,
    omega: &StateVector,
    sigma: Complex64,
) -> Result<DVector<Complex64>> {
    let dim = mat.nrows();
    let mut a = -mat.clone();
    for i in 0..dim {
        a[(i, i)] += sigma;
    }
    let rhs = DVector::from_vec(omega.amplitudes.clone());
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| LitError::Config("resolvent system is singular".into()))
}
