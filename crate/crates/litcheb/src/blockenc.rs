//! Matrix-level stand-in for the quantum path: an exact unitary dilation of
//! the rescaled Hamiltonian, a qubitization-style walk operator whose powers
//! generate Chebyshev moments, and a Hadamard-test shot-noise sampler.
//!
//! Gate-level circuits are out of scope here; everything is checked against
//! the block-encoding contract directly on matrices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::chebyshev::MomentSet;
use crate::error::{LitError, Result};
use crate::fockbasis::{ConfigSpace, StateVector};
use crate::hamiltonian::{Rescaling, SecondQuantizedH, DEFAULT_DENSE_CAP};

const CONTRACT_TOL: f64 = 1e-8;

/// Exact unitary dilation U = [[H', S], [S, -H']] with S = sqrt(I - H'^2);
/// the top-left block is H' itself.
#[derive(Debug)]
pub struct BlockEncoding {
    pub dim: usize,
    pub unitary: DMatrix<Complex64>,
    pub h_prime: DMatrix<Complex64>,
    pub rescaling: Rescaling,
}

/// Walk operator W = [[H', -S], [S, H']]; on each eigenspace of H' with
/// eigenvalue cos(theta) it is a rotation by theta, so the top-left block of
/// W^k is T_k(H').
#[derive(Debug)]
pub struct WalkOperator {
    pub matrix: DMatrix<Complex64>,
    pub h_prime: DMatrix<Complex64>,
    pub rescaling: Rescaling,
}

/// Hadamard-test shot model: N Bernoulli outcomes per quadrature, seeded.
#[derive(Debug, Clone, Copy)]
pub struct ShotNoiseModel {
    pub shots_per_moment: u64,
    pub seed: u64,
}

fn h_prime_and_complement(
    h: &SecondQuantizedH,
    space: &Arc<ConfigSpace>,
    rescaling: &Rescaling,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let dim = space.dim();
    let mut hp = h.assemble_dense(space, DEFAULT_DENSE_CAP)?;
    for i in 0..dim {
        hp[(i, i)] -= Complex64::new(rescaling.shift, 0.0);
    }
    hp /= Complex64::new(rescaling.scale, 0.0);
    // S = sqrt(I - H'^2) via the eigendecomposition of H'.
    let eig = hp.clone().symmetric_eigen();
    for &lambda in eig.eigenvalues.iter() {
        if lambda.abs() >= 1.0 {
            return Err(LitError::Config(format!(
                "rescaled eigenvalue {lambda} has modulus >= 1; increase the rescaling margin"
            )));
        }
    }
    let v = &eig.eigenvectors;
    let sqrt_diag = DVector::from_iterator(
        dim,
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::new((1.0 - l * l).sqrt(), 0.0)),
    );
    let mut s = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        let col = v.column(j) * sqrt_diag[j];
        for i in 0..dim {
            s[(i, j)] = col[i];
        }
    }
    let s = &s * v.adjoint();
    Ok((hp, s))
}

fn two_block(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    d: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let dim = a.nrows();
    let mut m = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
    m.view_mut((0, 0), (dim, dim)).copy_from(a);
    m.view_mut((0, dim), (dim, dim)).copy_from(b);
    m.view_mut((dim, 0), (dim, dim)).copy_from(c);
    m.view_mut((dim, dim), (dim, dim)).copy_from(d);
    m
}

/// Builds the symmetric dilation satisfying the block-encoding contract:
/// the (0,0) block of the unitary equals H'.
pub fn build_dilation(
    h: &SecondQuantizedH,
    space: &Arc<ConfigSpace>,
    rescaling: &Rescaling,
) -> Result<BlockEncoding> {
    let (hp, s) = h_prime_and_complement(h, space, rescaling)?;
    let unitary = two_block(&hp, &s, &s, &(-&hp));
    Ok(BlockEncoding {
        dim: space.dim(),
        unitary,
        h_prime: hp,
        rescaling: *rescaling,
    })
}

/// Builds the walk operator whose k-th power reproduces T_k(H') in the
/// top-left block.
pub fn build_walk(
    h: &SecondQuantizedH,
    space: &Arc<ConfigSpace>,
    rescaling: &Rescaling,
) -> Result<WalkOperator> {
    let (hp, s) = h_prime_and_complement(h, space, rescaling)?;
    let matrix = two_block(&hp, &(-&s), &s, &hp);
    Ok(WalkOperator {
        matrix,
        h_prime: hp,
        rescaling: *rescaling,
    })
}

impl BlockEncoding {
    /// Max deviation of U†U from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.unitary.adjoint() * &self.unitary;
        let mut worst = 0.0f64;
        for i in 0..prod.nrows() {
            for j in 0..prod.ncols() {
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((prod[(i, j)] - expect).norm());
            }
        }
        worst
    }

    /// Matrix element <G,0|U|F,0> for basis states F, G of the system block.
    pub fn contract_element(&self, g: usize, f: usize) -> Complex64 {
        self.unitary[(g, f)]
    }
}

impl WalkOperator {
    /// mu_k = <Omega,0| W^k |Omega,0> by repeated matrix-vector application.
    ///
    /// The k = 1 value is cross-checked against <Omega|H'|Omega> from the
    /// dense block; a mismatch signals a dilation bug and is a hard error.
    pub fn moments(&self, omega: &StateVector, k_max: usize) -> Result<MomentSet> {
        let dim = self.h_prime.nrows();
        if omega.amplitudes.len() != dim {
            return Err(LitError::SpaceMismatch);
        }
        let source_norm_sq = omega.norm_sq();
        let mut v = DVector::<Complex64>::zeros(2 * dim);
        for (i, &a) in omega.amplitudes.iter().enumerate() {
            v[i] = a;
        }
        let v0 = v.clone();
        let mut moments = Vec::with_capacity(k_max + 1);
        moments.push(Complex64::new(source_norm_sq, 0.0));
        for k in 1..=k_max {
            v = &self.matrix * v;
            let mu = v0.dotc(&v);
            if k == 1 {
                let omega_vec = DVector::from_vec(omega.amplitudes.clone());
                let direct = omega_vec.dotc(&(&self.h_prime * &omega_vec));
                let dev = (mu - direct).norm();
                if dev > CONTRACT_TOL * source_norm_sq.max(1.0) {
                    return Err(LitError::ContractViolation(dev));
                }
            }
            moments.push(mu);
        }
        Ok(MomentSet {
            moments,
            rescaling: self.rescaling,
            source_norm_sq,
            shots: None,
            seed: None,
        })
    }
}

/// Hadamard-test estimate of one moment: the real and imaginary quadratures
/// are each estimated from N Bernoulli outcomes with success probability
/// (1 + mu)/2, drawn from a seeded stream.
pub fn hadamard_sample(mu_true: Complex64, model: &ShotNoiseModel) -> Result<Complex64> {
    let mut rng = ChaCha12Rng::seed_from_u64(model.seed);
    let n = model.shots_per_moment;
    let mut quadrature = |mu: f64| -> Result<f64> {
        let p = (1.0 + mu) / 2.0;
        if !(-1e-12..=1.0 + 1e-12).contains(&p) {
            return Err(LitError::ProbabilityOutOfRange(p));
        }
        let p = p.clamp(0.0, 1.0);
        let binom = Binomial::new(n, p)
            .map_err(|_| LitError::ProbabilityOutOfRange(p))?;
        let zeros = binom.sample(&mut rng);
        Ok(2.0 * (zeros as f64 / n as f64) - 1.0)
    };
    let re = quadrature(mu_true.re)?;
    let im = quadrature(mu_true.im)?;
    Ok(Complex64::new(re, im))
}

/// Applies the shot-noise model to a whole moment set. mu_0 is the exact
/// source norm (no circuit is needed for it); higher moments are sampled
/// per-k with derived seeds so the stream does not depend on evaluation
/// order. Unnormalized sources are sampled in normalized units and rescaled.
pub fn noisy_moments(ms: &MomentSet, model: &ShotNoiseModel) -> Result<MomentSet> {
    let norm = ms.source_norm_sq;
    let mut moments = Vec::with_capacity(ms.moments.len());
    moments.push(ms.moments[0]);
    for (k, &mu) in ms.moments.iter().enumerate().skip(1) {
        let per_k = ShotNoiseModel {
            shots_per_moment: model.shots_per_moment,
            seed: model
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(k as u64),
        };
        let unit = if norm > 0.0 { mu / norm } else { mu };
        moments.push(hadamard_sample(unit, &per_k)? * norm);
    }
    Ok(MomentSet {
        moments,
        rescaling: ms.rescaling,
        source_norm_sq: ms.source_norm_sq,
        shots: Some(model.shots_per_moment),
        seed: Some(model.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::{chebyshev_t, compute_moments};
    use crate::fockbasis::{enumerate_configs, single_config_state, Orbital, SpBasis};
    use crate::hamiltonian::{compute_rescaling, Monomial};

    fn toy_basis(n: usize) -> Arc<SpBasis> {
        let orbitals = (0..n)
            .map(|i| Orbital {
                index: i,
                n: 0,
                l: 0,
                two_j: 1,
                two_mj: if i % 2 == 0 { -1 } else { 1 },
            })
            .collect();
        Arc::new(SpBasis::new(orbitals).unwrap())
    }

    fn zero_h(basis: &Arc<SpBasis>) -> SecondQuantizedH {
        SecondQuantizedH::new(Arc::clone(basis), vec![]).unwrap()
    }

    #[test]
    fn zero_hamiltonian_dilation_is_swap() {
        let basis = toy_basis(2);
        let space = enumerate_configs(&basis, 1, None).unwrap();
        let h = zero_h(&basis);
        let r = Rescaling {
            shift: 0.0,
            scale: 1.0,
            margin: 0.0,
            alpha: 0.0,
        };
        let be = build_dilation(&h, &space, &r).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                assert!((be.unitary[(i, j)] - Complex64::ZERO).norm() < 1e-14);
                assert!((be.unitary[(i, j + 2)] - expect).norm() < 1e-14);
                assert!((be.unitary[(i + 2, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn one_dim_dilation_closed_form() {
        let basis = toy_basis(1);
        let space = enumerate_configs(&basis, 1, None).unwrap();
        let h = SecondQuantizedH::new(
            Arc::clone(&basis),
            vec![Monomial {
                creations: vec![0],
                annihilations: vec![0],
                value: Complex64::new(0.5, 0.0),
            }],
        )
        .unwrap();
        let r = Rescaling {
            shift: 0.0,
            scale: 1.0,
            margin: 0.0,
            alpha: 0.0,
        };
        let be = build_dilation(&h, &space, &r).unwrap();
        let root = 0.75f64.sqrt();
        assert!((be.unitary[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((be.unitary[(0, 1)].re - root).abs() < 1e-14);
        assert!((be.unitary[(1, 0)].re - root).abs() < 1e-14);
        assert!((be.unitary[(1, 1)].re + 0.5).abs() < 1e-14);
        assert!(be.unitarity_defect() < 1e-12);
    }

    #[test]
    fn walk_powers_reproduce_scalar_chebyshev() {
        let basis = toy_basis(1);
        let space = enumerate_configs(&basis, 1, None).unwrap();
        let eps = 0.37;
        let h = SecondQuantizedH::new(
            Arc::clone(&basis),
            vec![Monomial {
                creations: vec![0],
                annihilations: vec![0],
                value: Complex64::new(eps, 0.0),
            }],
        )
        .unwrap();
        let r = Rescaling {
            shift: 0.0,
            scale: 1.0,
            margin: 0.0,
            alpha: 0.0,
        };
        let walk = build_walk(&h, &space, &r).unwrap();
        let omega = single_config_state(&space, space.config(0)).unwrap();
        let ms = walk.moments(&omega, 30).unwrap();
        for k in 0..=30 {
            assert!(
                (ms.moments[k].re - chebyshev_t(k, eps)).abs() < 1e-12,
                "k = {k}"
            );
        }
    }

    #[test]
    fn walk_and_recursion_moments_agree_on_random_h() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let basis = toy_basis(6);
        let space = enumerate_configs(&basis, 3, None).unwrap();
        let mut rng = StdRng::seed_from_u64(99);
        let mut monomials = Vec::new();
        for p in 0..6usize {
            for q in p..6usize {
                monomials.push(Monomial {
                    creations: vec![q],
                    annihilations: vec![p],
                    value: Complex64::new(rng.random::<f64>() - 0.5, 0.0),
                });
            }
        }
        let h = SecondQuantizedH::new(Arc::clone(&basis), monomials)
            .unwrap()
            .hermitize()
            .unwrap();
        let r = compute_rescaling(&h, &space, 0.05).unwrap();
        let mut omega = StateVector::zeros(&space);
        for a in &mut omega.amplitudes {
            *a = Complex64::new(rng.random::<f64>() - 0.5, 0.0);
        }
        let omega = omega.normalized();
        let walk = build_walk(&h, &space, &r).unwrap();
        let ms_walk = walk.moments(&omega, 60).unwrap();
        let ms_rec = compute_moments(&h, &r, &omega, 60).unwrap();
        for k in 0..=60 {
            assert!(
                (ms_walk.moments[k] - ms_rec.moments[k]).norm() < 1e-10,
                "k = {k}"
            );
        }
    }

    #[test]
    fn contract_holds_for_basis_state_pairs() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let basis = toy_basis(5);
        let space = enumerate_configs(&basis, 2, None).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let mut monomials = Vec::new();
        for p in 0..5usize {
            for q in p..5usize {
                monomials.push(Monomial {
                    creations: vec![q],
                    annihilations: vec![p],
                    value: Complex64::new(rng.random::<f64>() - 0.5, 0.0),
                });
            }
        }
        let h = SecondQuantizedH::new(Arc::clone(&basis), monomials)
            .unwrap()
            .hermitize()
            .unwrap();
        let r = compute_rescaling(&h, &space, 0.02).unwrap();
        let be = build_dilation(&h, &space, &r).unwrap();
        assert!(be.unitarity_defect() < 1e-10);
        for g in 0..space.dim() {
            for f in 0..space.dim() {
                assert!((be.contract_element(g, f) - be.h_prime[(g, f)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hadamard_sample_exact_at_unit_moment() {
        let model = ShotNoiseModel {
            shots_per_moment: 100,
            seed: 1,
        };
        let est = hadamard_sample(Complex64::new(1.0, -1.0), &model).unwrap();
        assert_eq!(est.re, 1.0);
        assert_eq!(est.im, -1.0);
    }

    #[test]
    fn hadamard_sample_reproducible_under_seed() {
        let model = ShotNoiseModel {
            shots_per_moment: 1000,
            seed: 42,
        };
        let a = hadamard_sample(Complex64::new(0.3, 0.0), &model).unwrap();
        let b = hadamard_sample(Complex64::new(0.3, 0.0), &model).unwrap();
        assert_eq!(a, b);
        let c = hadamard_sample(
            Complex64::new(0.3, 0.0),
            &ShotNoiseModel {
                shots_per_moment: 1000,
                seed: 43,
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hadamard_sample_concentrates() {
        // At N = 1e6 the zero moment stays within 5e-3 (a >4 sigma window).
        let model = ShotNoiseModel {
            shots_per_moment: 1_000_000,
            seed: 7,
        };
        let est = hadamard_sample(Complex64::ZERO, &model).unwrap();
        assert!(est.re.abs() <= 5e-3);
        assert!(est.im.abs() <= 5e-3);
    }

    #[test]
    fn moment_bound_violation_rejected() {
        let model = ShotNoiseModel {
            shots_per_moment: 10,
            seed: 0,
        };
        assert!(hadamard_sample(Complex64::new(1.5, 0.0), &model).is_err());
    }
}
