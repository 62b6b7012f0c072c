//! Clebsch-Gordan coefficients in doubled-integer convention.

/// Factorials up to 30! fit f64 exactly enough for j <= 9/2 couplings.
fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n as u64).map(|k| k as f64).product()
}

/// C(j1 m1 j2 m2 | J M) with all arguments doubled. Returns 0 for
/// non-coupling arguments.
pub fn clebsch_gordan(
    two_j1: i32,
    two_m1: i32,
    two_j2: i32,
    two_m2: i32,
    two_j: i32,
    two_m: i32,
) -> f64 {
    if two_m1 + two_m2 != two_m {
        return 0.0;
    }
    if two_m1.abs() > two_j1 || two_m2.abs() > two_j2 || two_m.abs() > two_j {
        return 0.0;
    }
    if two_j > two_j1 + two_j2 || two_j < (two_j1 - two_j2).abs() {
        return 0.0;
    }
    // All these combinations are integers for physical inputs.
    let half = |x: i32| -> i32 {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let a = half(two_j1 + two_j2 - two_j);
    let b = half(two_j1 - two_j2 + two_j);
    let c = half(-two_j1 + two_j2 + two_j);
    let d = half(two_j1 + two_j2 + two_j) + 1;
    let prefactor = ((two_j + 1) as f64 * factorial(a) * factorial(b) * factorial(c)
        / factorial(d))
    .sqrt()
        * (factorial(half(two_j1 + two_m1))
            * factorial(half(two_j1 - two_m1))
            * factorial(half(two_j2 + two_m2))
            * factorial(half(two_j2 - two_m2))
            * factorial(half(two_j + two_m))
            * factorial(half(two_j - two_m)))
        .sqrt();
    let k_min = 0
        .max(half(two_j2 - two_j - two_m1))
        .max(half(two_j1 + two_m2 - two_j));
    let k_max = a.min(half(two_j1 - two_m1)).min(half(two_j2 + two_m2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(a - k)
            * factorial(half(two_j1 - two_m1) - k)
            * factorial(half(two_j2 + two_m2) - k)
            * factorial(half(two_j - two_j2 + two_m1) + k)
            * factorial(half(two_j - two_j1 - two_m2) + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    prefactor * sum
}
