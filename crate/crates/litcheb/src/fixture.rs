//! Synthetic sd-shell demonstration system: the 0d5/2 + 1s1/2 valence basis
//! (8 orbitals) with a rotationally invariant one- plus two-body interaction
//! built from coupled two-body matrix elements.
//!
//! Because the interaction is an exact angular-momentum scalar, FCI
//! eigenstates come in (2J+1)-fold multiplets, which is what the cascading
//! M_J prescan relies on. The shipped data files under `data/` are generated
//! from these functions and must stay bit-identical to them.

use std::sync::Arc;

use num_complex::Complex64;

use crate::angmom::clebsch_gordan;
use crate::fockbasis::{Orbital, SpBasis};
use crate::hamiltonian::{Monomial, SecondQuantizedH};

/// Single-particle energies, MeV.
pub const E_D52: f64 = -3.9257;
pub const E_S12: f64 = -3.2079;

/// Orbit descriptors: (n, l, 2j, first orbital index).
const ORBITS: [(u32, u32, i32, usize); 2] = [(0, 2, 5, 0), (1, 0, 1, 6)];

/// An (ab) pair of orbit labels.
type OrbitPair = (usize, usize);

/// Coupled two-body matrix elements V_J(ab; cd), MeV. Pair labels are orbit
/// indices into `ORBITS`; each entry is symmetric under (ab) <-> (cd).
/// Chosen to give a handful of well-separated bound multiplets.
const TBME: [(i32, OrbitPair, OrbitPair, f64); 8] = [
    (0, (0, 0), (0, 0), -3.30),
    (0, (0, 0), (1, 1), -3.20),
    (0, (1, 1), (1, 1), -2.05),
    (2, (0, 0), (0, 0), -0.94),
    (2, (0, 0), (0, 1), -0.85),
    (2, (0, 1), (0, 1), -1.17),
    (3, (0, 1), (0, 1), -0.71),
    (4, (0, 0), (0, 0), 0.30),
];

pub fn sd_basis() -> Arc<SpBasis> {
    let mut orbitals = Vec::new();
    for &(n, l, two_j, start) in &ORBITS {
        for (offset, two_mj) in (-two_j..=two_j).step_by(2).enumerate() {
            orbitals.push(Orbital {
                index: start + offset,
                n,
                l,
                two_j,
                two_mj,
            });
        }
    }
    Arc::new(SpBasis::new(orbitals).expect("fixture basis is valid"))
}

fn orbital_index(orbit: usize, two_mj: i32) -> usize {
    let (_, _, two_j, start) = ORBITS[orbit];
    start + ((two_mj + two_j) / 2) as usize
}

/// m-scheme monomials of the scalar two-body interaction, accumulated from
/// pair operators A†_{JM}(ab) A_{JM}(cd) expanded with Clebsch-Gordan
/// coefficients.
fn two_body_monomials() -> Vec<(OrbitPair, OrbitPair, f64)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(OrbitPair, OrbitPair), f64> = BTreeMap::new();
    for &(j, (a, b), (c, d), v) in &TBME {
        let two_j = 2 * j;
        // Both (ab;cd) and (cd;ab) when the pair labels differ.
        let blocks: Vec<((usize, usize), (usize, usize))> = if (a, b) == (c, d) {
            vec![((a, b), (c, d))]
        } else {
            vec![((a, b), (c, d)), ((c, d), (a, b))]
        };
        for ((a, b), (c, d)) in blocks {
            let n_ab = if a == b { 0.5f64.sqrt() } else { 1.0 };
            let n_cd = if c == d { 0.5f64.sqrt() } else { 1.0 };
            let (ja, jb) = (ORBITS[a].2, ORBITS[b].2);
            let (jc, jd) = (ORBITS[c].2, ORBITS[d].2);
            for two_m in (-two_j..=two_j).step_by(2) {
                for two_ma in (-ja..=ja).step_by(2) {
                    let two_mb = two_m - two_ma;
                    if two_mb.abs() > jb {
                        continue;
                    }
                    let cg1 = clebsch_gordan(ja, two_ma, jb, two_mb, two_j, two_m);
                    if cg1 == 0.0 {
                        continue;
                    }
                    for two_mc in (-jc..=jc).step_by(2) {
                        let two_md = two_m - two_mc;
                        if two_md.abs() > jd {
                            continue;
                        }
                        let cg2 = clebsch_gordan(jc, two_mc, jd, two_md, two_j, two_m);
                        if cg2 == 0.0 {
                            continue;
                        }
                        let p1 = orbital_index(a, two_ma);
                        let p2 = orbital_index(b, two_mb);
                        let q1 = orbital_index(c, two_mc);
                        let q2 = orbital_index(d, two_md);
                        if p1 == p2 || q1 == q2 {
                            continue;
                        }
                        // Creation string a†_{p1} a†_{p2}, annihilation
                        // string a_{q2} a_{q1}; reorder into ascending
                        // canonical sets with fermionic signs.
                        let mut sign = 1.0;
                        let (cr_lo, cr_hi) = if p1 < p2 {
                            (p1, p2)
                        } else {
                            sign = -sign;
                            (p2, p1)
                        };
                        let (an_lo, an_hi) = if q1 < q2 {
                            (q1, q2)
                        } else {
                            sign = -sign;
                            (q2, q1)
                        };
                        let value = sign * v * n_ab * n_cd * cg1 * cg2;
                        *acc.entry(((cr_lo, cr_hi), (an_lo, an_hi))).or_insert(0.0) += value;
                    }
                }
            }
        }
    }
    acc.retain(|_, v| v.abs() > 1e-12);
    acc.into_iter()
        .map(|((q, p), v)| (q, p, v))
        .collect()
}

/// The full fixture Hamiltonian (one-body + scalar two-body), Hermitized.
pub fn sd_hamiltonian() -> SecondQuantizedH {
    let basis = sd_basis();
    let mut monomials = Vec::new();
    for orb in basis.orbitals() {
        let e = if orb.index < 6 { E_D52 } else { E_S12 };
        monomials.push(Monomial {
            creations: vec![orb.index],
            annihilations: vec![orb.index],
            value: Complex64::new(e, 0.0),
        });
    }
    for ((q1, q2), (p1, p2), v) in two_body_monomials() {
        monomials.push(Monomial {
            creations: vec![q1, q2],
            annihilations: vec![p1, p2],
            value: Complex64::new(v, 0.0),
        });
    }
    SecondQuantizedH::new(basis, monomials)
        .expect("fixture monomials are valid")
        .hermitize()
        .expect("fixture interaction is Hermitian")
}

/// The three-configuration equal-weight test source (all in the 2M_J = 1
/// block): {s-1/2, s+1/2, d+1/2}, {s+1/2, d-5/2, d+5/2}, {d-5/2, d+1/2, d+5/2}.
pub const OMEGA_CONFIGS: [[usize; 3]; 3] = [[3, 6, 7], [0, 5, 7], [0, 3, 5]];

pub fn basis_file_text() -> String {
    let basis = sd_basis();
    let mut out = String::from("# index n l 2j 2mj\n");
    for orb in basis.orbitals() {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            orb.index, orb.n, orb.l, orb.two_j, orb.two_mj
        ));
    }
    out
}

pub fn monomial_file_text() -> String {
    let mut out = String::from(
        "# Synthetic sd-shell (0d5/2 + 1s1/2) valence Hamiltonian, MeV.\n\
         # rank | Q | P | value\n",
    );
    let basis = sd_basis();
    for orb in basis.orbitals() {
        let e = if orb.index < 6 { E_D52 } else { E_S12 };
        out.push_str(&format!("1 | {} | {} | {:.10}\n", orb.index, orb.index, e));
    }
    for ((q1, q2), (p1, p2), v) in two_body_monomials() {
        out.push_str(&format!("2 | {q1} {q2} | {p1} {p2} | {v:.10}\n"));
    }
    out
}

pub fn omega_file_text() -> String {
    let amp = 1.0 / 3.0f64.sqrt();
    let mut out = String::from("# Equal-weight three-configuration test source state.\n");
    for occ in OMEGA_CONFIGS {
        out.push_str(&format!(
            "{amp:.16} 0.0 | {} {} {}\n",
            occ[0], occ[1], occ[2]
        ));
    }
    out
}
