//! Adaptive Simpson quadrature on finite intervals.

use crate::error::{LitError, Result};

const MAX_DEPTH: u32 = 40;

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(LitError::QuadratureFailure(a, b));
    }
    Ok(adapt(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth + 1)?
        + adapt(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth + 1)?)
}

/// Integrates `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    adapt(&f, a, fa, b, fb, whole, m, fm, tol.max(f64::MIN_POSITIVE), 0)
}
