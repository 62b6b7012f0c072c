//! Single-particle basis, fixed-particle-number configuration spaces, and
//! fermionic ladder-operator action with Jordan-Wigner-style sign bookkeeping.
//!
//! Configurations are machine bit words (bit `q` set means orbital `q`
//! occupied), so the basis is limited to 64 orbitals. Angular-momentum
//! projections are tracked as doubled integers (`two_mj`) to keep all
//! arithmetic integral.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LitError, Result};

/// A single-particle state with harmonic-oscillator-style quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orbital {
    pub index: usize,
    /// Radial quantum number.
    pub n: u32,
    /// Orbital angular momentum.
    pub l: u32,
    /// Doubled total single-particle angular momentum (odd).
    pub two_j: i32,
    /// Doubled projection, |two_mj| <= two_j, same parity as two_j.
    pub two_mj: i32,
}

impl Orbital {
    pub fn parity(&self) -> i32 {
        if self.l.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// Ordered single-particle basis; orbital `index` equals its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpBasis {
    orbitals: Vec<Orbital>,
}

impl SpBasis {
    pub fn new(orbitals: Vec<Orbital>) -> Result<Self> {
        if orbitals.is_empty() {
            return Err(LitError::Config("basis must contain at least one orbital".into()));
        }
        if orbitals.len() > 64 {
            return Err(LitError::Config(format!(
                "basis size {} exceeds the 64-orbital bit-word limit",
                orbitals.len()
            )));
        }
        for (pos, orb) in orbitals.iter().enumerate() {
            if orb.index != pos {
                return Err(LitError::Config(format!(
                    "orbital index {} does not match its position {}",
                    orb.index, pos
                )));
            }
            if orb.two_j <= 0 || orb.two_j % 2 == 0 {
                return Err(LitError::Config(format!(
                    "orbital {}: 2j must be a positive odd integer, got {}",
                    pos, orb.two_j
                )));
            }
            if orb.two_mj.abs() > orb.two_j || (orb.two_mj - orb.two_j) % 2 != 0 {
                return Err(LitError::Config(format!(
                    "orbital {}: 2mj = {} invalid for 2j = {}",
                    pos, orb.two_mj, orb.two_j
                )));
            }
        }
        Ok(Self { orbitals })
    }

    pub fn n_sp(&self) -> usize {
        self.orbitals.len()
    }

    pub fn orbital(&self, index: usize) -> &Orbital {
        &self.orbitals[index]
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    /// Doubled M_J of a configuration word.
    pub fn two_mj_of(&self, word: u64) -> i32 {
        self.occupied(word).map(|q| self.orbitals[q].two_mj).sum()
    }

    /// Parity (-1)^(sum of l) of a configuration word.
    pub fn parity_of(&self, word: u64) -> i32 {
        let lsum: u32 = self.occupied(word).map(|q| self.orbitals[q].l).sum();
        if lsum.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn occupied(&self, word: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sp()).filter(move |q| word >> q & 1 == 1)
    }

    /// Parses a basis file with one orbital per line: `index n l 2j 2mj`.
    /// `#` starts a comment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut orbitals = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(LitError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("expected 5 fields `index n l 2j 2mj`, got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<i64> {
                s.parse().map_err(|_| LitError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("cannot parse {what}: `{s}`"),
                })
            };
            orbitals.push(Orbital {
                index: parse(fields[0], "index")? as usize,
                n: parse(fields[1], "n")? as u32,
                l: parse(fields[2], "l")? as u32,
                two_j: parse(fields[3], "2j")? as i32,
                two_mj: parse(fields[4], "2mj")? as i32,
            });
        }
        Self::new(orbitals)
    }
}

/// Occupation bit word; bit `q` set means orbital `q` is occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(pub u64);

impl Configuration {
    pub fn from_occupied(indices: &[usize]) -> Self {
        let mut w = 0u64;
        for &i in indices {
            w |= 1 << i;
        }
        Configuration(w)
    }

    pub fn popcount(&self) -> u32 {
        self.0.count_ones()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// All configurations of `a` particles in the basis, optionally restricted to
/// a fixed doubled-M_J block, sorted ascending by bit-word value.
#[derive(Debug)]
pub struct ConfigSpace {
    pub basis: Arc<SpBasis>,
    pub a: usize,
    pub two_mj_filter: Option<i32>,
    configs: Vec<Configuration>,
    index_of: HashMap<u64, usize>,
}

impl ConfigSpace {
    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn config(&self, i: usize) -> Configuration {
        self.configs[i]
    }

    pub fn position(&self, config: Configuration) -> Option<usize> {
        self.index_of.get(&config.0).copied()
    }
}

/// Enumerates all bit words with popcount `a` (and matching doubled M_J sum
/// when `two_mj` is given), in ascending bit-word order.
pub fn enumerate_configs(
    basis: &Arc<SpBasis>,
    a: usize,
    two_mj: Option<i32>,
) -> Result<Arc<ConfigSpace>> {
    let n_sp = basis.n_sp();
    if a > n_sp {
        return Err(LitError::EmptySpace { a, n_sp });
    }
    let mut configs = Vec::new();
    if a == 0 {
        if two_mj.unwrap_or(0) == 0 {
            configs.push(Configuration(0));
        }
    } else {
        // Gosper's hack walks same-popcount words in ascending order.
        let limit = if n_sp == 64 { u64::MAX } else { (1u64 << n_sp) - 1 };
        let mut w: u64 = (1 << a) - 1;
        loop {
            if two_mj.is_none_or(|m| basis.two_mj_of(w) == m) {
                configs.push(Configuration(w));
            }
            if w == 0 {
                break;
            }
            let c = w & w.wrapping_neg();
            let r = w + c;
            if r > limit || r < w {
                break;
            }
            w = (((r ^ w) >> 2) / c) | r;
            if w > limit {
                break;
            }
        }
    }
    let index_of = configs.iter().enumerate().map(|(i, c)| (c.0, i)).collect();
    Ok(Arc::new(ConfigSpace {
        basis: Arc::clone(basis),
        a,
        two_mj_filter: two_mj,
        configs,
        index_of,
    }))
}

/// Complex amplitudes over the configurations of a space.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub space: Arc<ConfigSpace>,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(space: &Arc<ConfigSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            amplitudes: vec![Complex64::ZERO; space.dim()],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn dot(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, s: Complex64) {
        for c in &mut self.amplitudes {
            *c *= s;
        }
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n, 0.0));
        }
        self
    }

    pub fn same_space(&self, other: &StateVector) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }
}

/// Unit vector on a single configuration.
pub fn single_config_state(space: &Arc<ConfigSpace>, occ: Configuration) -> Result<StateVector> {
    let pos = space
        .position(occ)
        .ok_or(LitError::ConfigNotInSpace { word: occ.0 })?;
    let mut v = StateVector::zeros(space);
    v.amplitudes[pos] = Complex64::ONE;
    Ok(v)
}

fn check_indices(basis: &SpBasis, set: &[usize]) -> Result<()> {
    for &i in set {
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
    Ok(())
}

/// Applies the ladder string b†_Q b_P to a single configuration word.
///
/// The annihilation string acts first, lowest index first; the creation
/// string then acts highest index first. Each elementary operator picks up
/// (-1)^(number of occupied orbitals below the acted index). Returns `None`
/// when the string annihilates an empty mode or creates an occupied one.
pub fn ladder_on_word(word: u64, creations: &[usize], annihilations: &[usize]) -> Option<(u64, f64)> {
    let mut w = word;
    let mut sign = 1.0f64;
    let parity_below = |w: u64, i: usize| -> f64 {
        if (w & ((1u64 << i) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    };
    for &i in annihilations {
        if w >> i & 1 == 0 {
            return None;
        }
        sign *= parity_below(w, i);
        w &= !(1u64 << i);
    }
    for &i in creations.iter().rev() {
        if w >> i & 1 == 1 {
            return None;
        }
        sign *= parity_below(w, i);
        w |= 1u64 << i;
    }
    Some((w, sign))
}

/// Returns b†_Q b_P |state>, with Q and P strictly ascending index sets.
pub fn apply_ladder_string(
    state: &StateVector,
    creations: &[usize],
    annihilations: &[usize],
) -> Result<StateVector> {
    let basis = &state.space.basis;
    check_indices(basis, creations)?;
    check_indices(basis, annihilations)?;
    let mut out = StateVector::zeros(&state.space);
    for (i, &amp) in state.amplitudes.iter().enumerate() {
        if amp == Complex64::ZERO {
            continue;
        }
        let word = state.space.config(i).0;
        if let Some((new_word, sign)) = ladder_on_word(word, creations, annihilations) {
            match state.space.position(Configuration(new_word)) {
                Some(j) => out.amplitudes[j] += amp * sign,
                None => {
                    return Err(LitError::SymmetryEscape {
                        from: word,
                        to: new_word,
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Parses a source-state file: lines `amp_re amp_im | occupied indices`.
pub fn load_source_state(path: impl AsRef<Path>, space: &Arc<ConfigSpace>) -> Result<StateVector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut v = StateVector::zeros(space);
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
        let (amp_part, occ_part) = line
            .split_once('|')
            .ok_or_else(|| err("expected `amp_re amp_im | indices`".into()))?;
        let amps: Vec<&str> = amp_part.split_whitespace().collect();
        if amps.len() != 2 {
            return Err(err(format!("expected 2 amplitude fields, got {}", amps.len())));
        }
        let re: f64 = amps[0].parse().map_err(|_| err(format!("bad amplitude `{}`", amps[0])))?;
        let im: f64 = amps[1].parse().map_err(|_| err(format!("bad amplitude `{}`", amps[1])))?;
        let mut occ: Vec<usize> = Vec::new();
        for tok in occ_part.split_whitespace() {
            occ.push(tok.parse().map_err(|_| err(format!("bad orbital index `{tok}`")))?);
        }
        occ.sort_unstable();
        let config = Configuration::from_occupied(&occ);
        if occ.len() != config.popcount() as usize {
            return Err(err("duplicate orbital index".into()));
        }
        let pos = space
            .position(config)
            .ok_or_else(|| err(format!("configuration {config} not in the space")))?;
        v.amplitudes[pos] += Complex64::new(re, im);
    }
    Ok(v)
}
