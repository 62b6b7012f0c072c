//! End-to-end acceptance suite on the bundled dim-56 sd-shell fixture.
//!
//! Each criterion prints one PASS/FAIL line (visible with `--nocapture`)
//! and fails the test on violation. Criterion 8 needs externally supplied
//! interaction files and reports SKIPPED when they are absent.

use std::sync::Arc;
use std::time::Instant;

use litcheb::blockenc::{build_walk, noisy_moments, ShotNoiseModel};
use litcheb::chebyshev::{compute_moments, recursion_vectors, truncation_order, MomentSet};
use litcheb::fci::{diagonalize, exact_lorentz, exact_response};
use litcheb::fixture::{sd_basis, sd_hamiltonian, OMEGA_CONFIGS};
use litcheb::fockbasis::{
    enumerate_configs, single_config_state, ConfigSpace, Configuration, SpBasis, StateVector,
};
use litcheb::hamiltonian::{compute_rescaling, load_monomials, SecondQuantizedH};
use litcheb::lorentz::{
    continuum_part, curve_from_moments, li_direct_solve, li_from_moments, li_shot_variance,
    LorentzCurve, SigmaPoint,
};
use litcheb::protocols::{
    fit_bound_amplitudes, invert_continuum, neutron_threshold, prescan, vertex_error_estimate,
    InversionParams, PrescanParams,
};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Frozen reference spectrum of the fixture (independent dense
/// diagonalization, cross-checked in the fci module tests).
const FCI_A3_BOUND: [(f64, i32); 4] = [
    (-16.873457, 5),
    (-16.162633, 1),
    (-15.241651, 3),
    (-14.012408, 5),
];
const FCI_A2_GROUND: f64 = -13.278919;

fn criterion(n: usize, ok: bool, detail: &str) {
    println!("ACCEPTANCE {n}: {} - {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance criterion {n} failed: {detail}");
}

fn fixture_omega(space: &Arc<ConfigSpace>) -> StateVector {
    let mut omega = StateVector::zeros(space);
    let amp = Complex64::new(1.0 / 3.0f64.sqrt(), 0.0);
    for occ in OMEGA_CONFIGS {
        let idx = space
            .position(Configuration::from_occupied(&occ))
            .expect("fixture source configuration missing from space");
        omega.amplitudes[idx] = amp;
    }
    omega
}

fn spectrum_window() -> PrescanParams {
    PrescanParams::new(0.1, -17.6, -13.4, 0.04)
}

fn threshold_window() -> PrescanParams {
    PrescanParams::new(0.1, -14.2, -12.2, 0.04)
}

fn extended_window() -> PrescanParams {
    PrescanParams::new(0.1, -17.6, -11.1, 0.04)
}

#[test]
fn criterion_1_triple_oracle_agreement() {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let space = enumerate_configs(&basis, 3, None).unwrap();
    assert_eq!(space.dim(), 56);
    let omega = fixture_omega(&space);
    let rescaling = compute_rescaling(&h, &space, 0.02).unwrap();
    let ms = compute_moments(&h, &rescaling, &omega, 1600).unwrap();
    let decomp = diagonalize(&h, &space).unwrap();

    let lo = rescaling.shift - rescaling.scale;
    let hi = rescaling.shift + rescaling.scale;
    let mut rng = StdRng::seed_from_u64(20260824);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let sigma = SigmaPoint::new(
            lo + (hi - lo) * rng.random::<f64>(),
            1.0 + 13.0 * rng.random::<f64>(),
            0.0,
        );
        let k = truncation_order(sigma, &rescaling, 1e-12, 800)
            .unwrap()
            .min(801);
        let l_mom = li_from_moments(&ms, sigma, k).unwrap();
        let l_dir = li_direct_solve(&h, &space, &omega, sigma).unwrap();
        let l_fci = exact_lorentz(&decomp, &omega, sigma).unwrap();
        let scale = l_fci.abs().max(1e-300);
        worst = worst
            .max((l_mom - l_fci).abs() / scale)
            .max((l_dir - l_fci).abs() / scale);
    }
    let elapsed = t0.elapsed();
    criterion(
        1,
        worst <= 1e-8 && elapsed.as_secs_f64() < 30.0,
        &format!(
            "three evaluation routes agree to {worst:.2e} relative over 100 sigma points in {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_walk_matches_recursion() {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let space = enumerate_configs(&basis, 3, None).unwrap();
    let omega = fixture_omega(&space);
    let rescaling = compute_rescaling(&h, &space, 0.02).unwrap();
    let ms_rec = compute_moments(&h, &rescaling, &omega, 200).unwrap();
    let walk = build_walk(&h, &space, &rescaling).unwrap();
    let ms_walk = walk.moments(&omega, 200).unwrap();
    let worst = (0..=200)
        .map(|k| (ms_walk.moments[k] - ms_rec.moments[k]).norm())
        .fold(0.0f64, f64::max);
    criterion(
        2,
        worst <= 1e-10,
        &format!("max |walk - recursion| moment deviation {worst:.2e} for k <= 200"),
    );
}

#[test]
fn criterion_3_moment_product_identity() {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let space = enumerate_configs(&basis, 3, None).unwrap();
    let omega = fixture_omega(&space);
    let rescaling = compute_rescaling(&h, &space, 0.02).unwrap();
    let ms = compute_moments(&h, &rescaling, &omega, 400).unwrap();
    let vectors = recursion_vectors(&h, &rescaling, &omega, 200).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let j = rng.random_range(0..=200usize);
        let k = rng.random_range(0..=200usize);
        let lhs = vectors[j].dot(&vectors[k]) * 2.0;
        let rhs = ms.moments[j + k] + ms.moments[j.abs_diff(k)];
        worst = worst.max((lhs - rhs).norm());
    }
    criterion(
        3,
        worst <= 1e-10,
        &format!("max defect of 2<t_j|t_k> = mu_(j+k) + mu_|j-k| is {worst:.2e} over 50 pairs"),
    );
}

#[test]
fn criterion_4_prescan_recovers_bound_spectrum() {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let params = spectrum_window();
    let spectrum = prescan(&h, &basis, 3, &params).unwrap();

    let space = enumerate_configs(&basis, 3, None).unwrap();
    let decomp = diagonalize(&h, &space).unwrap();
    let space2 = enumerate_configs(&basis, 2, None).unwrap();
    let threshold = diagonalize(&h, &space2).unwrap().ground_energy();
    assert!(
        (threshold - FCI_A2_GROUND).abs() < 2e-6,
        "frozen reference for the two-body ground state drifted: {threshold}"
    );

    let tol = params.sigma_i / 10.0;
    let mut worst_dev = 0.0f64;
    let mut ok = true;
    let mut n_bound = 0;
    for (i, (e, count)) in decomp
        .multiplets()
        .into_iter()
        .filter(|(e, _)| *e < threshold)
        .enumerate()
    {
        n_bound += 1;
        let (e_ref, two_j_ref) = FCI_A3_BOUND[i];
        assert!(
            (e - e_ref).abs() < 2e-6 && count - 1 == two_j_ref as usize,
            "frozen three-body reference spectrum drifted: {e} vs {e_ref}"
        );
        match spectrum
            .states
            .iter()
            .find(|s| (s.energy - e).abs() <= tol)
        {
            Some(s) => {
                worst_dev = worst_dev.max((s.energy - e).abs());
                // The multiplet has 2J + 1 members, so its degeneracy fixes J.
                if s.two_j as usize != count - 1 {
                    ok = false;
                }
            }
            None => ok = false,
        }
    }
    ok &= spectrum.states.len() == n_bound;
    criterion(
        4,
        ok,
        &format!(
            "{} bound multiplets recovered, worst energy deviation {worst_dev:.2e} MeV (tol {tol:.0e}), all J labels match",
            spectrum.states.len()
        ),
    );
}

/// Shared protocol-2/3 pipeline state for criteria 5-7.
struct Pipeline {
    bound_energies: Vec<f64>,
    amplitudes: Vec<f64>,
    e0: f64,
    e_th: f64,
    moments: MomentSet,
    omega_norm_sq: f64,
}

fn run_bound_fit() -> Pipeline {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let spectrum = prescan(&h, &basis, 3, &spectrum_window()).unwrap();
    let e0 = spectrum.states[0].energy;
    let bound_energies = spectrum.energies();
    let (e_th, _, _) =
        neutron_threshold(&h, &basis, 3, &spectrum_window(), &threshold_window()).unwrap();
    // Discretized strength just above threshold would contaminate the bound
    // fit; the extended window supplies those energies as nuisance terms.
    let model_energies = prescan(&h, &basis, 3, &extended_window()).unwrap().energies();

    let space = enumerate_configs(&basis, 3, None).unwrap();
    let omega = fixture_omega(&space);
    let rescaling = compute_rescaling(&h, &space, 0.02).unwrap();
    let moments = compute_moments(&h, &rescaling, &omega, 1600).unwrap();

    let grid: Vec<SigmaPoint> = (0..326)
        .map(|i| SigmaPoint::new(-17.6 + 0.02 * i as f64, 0.068, 0.0))
        .collect();
    let curve = curve_from_moments(&moments, &grid, 1e-10, 800).unwrap();
    let fit = fit_bound_amplitudes(&curve, &model_energies).unwrap();
    Pipeline {
        amplitudes: fit.amplitudes[..bound_energies.len()].to_vec(),
        bound_energies,
        e0,
        e_th,
        moments,
        omega_norm_sq: omega.norm_sq(),
    }
}

#[test]
fn criterion_5_bound_amplitudes_match_fci() {
    let pipeline = run_bound_fit();
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let space = enumerate_configs(&basis, 3, None).unwrap();
    let decomp = diagonalize(&h, &space).unwrap();
    let exact = exact_response(&decomp, &fixture_omega(&space)).unwrap();

    let mut worst = 0.0f64;
    for (e, r_fit) in pipeline.bound_energies.iter().zip(&pipeline.amplitudes) {
        let r_fci: f64 = exact
            .energies
            .iter()
            .zip(&exact.amplitudes)
            .filter(|(ee, _)| (**ee - e).abs() < 5e-3)
            .map(|(_, s)| s)
            .sum();
        assert!(r_fci > 0.0, "no matching reference state at {e}");
        worst = worst.max((r_fit - r_fci).abs() / r_fci);
    }
    criterion(
        5,
        worst <= 0.01,
        &format!(
            "fitted bound amplitudes within {:.2}% of the exact overlaps (limit 1%)",
            100.0 * worst
        ),
    );
}

fn continuum_curves(pipeline: &Pipeline, ensemble: &[f64]) -> Vec<(LorentzCurve, LorentzCurve)> {
    ensemble
        .iter()
        .map(|&si| {
            let grid: Vec<SigmaPoint> = (0..81)
                .map(|i| SigmaPoint::new(pipeline.e_th + 0.5 * i as f64, si, pipeline.e0))
                .collect();
            let full = curve_from_moments(&pipeline.moments, &grid, 1e-10, 800).unwrap();
            let cont =
                continuum_part(&full, &pipeline.bound_energies, &pipeline.amplitudes).unwrap();
            (full, cont)
        })
        .collect()
}

fn inversion_params(pipeline: &Pipeline) -> InversionParams {
    let mut params = InversionParams::new(pipeline.e_th, pipeline.e_th + 40.0);
    params.beta = 0.3;
    params
}

#[test]
fn criterion_6_round_trip_and_band_stability() {
    let pipeline = run_bound_fit();
    let ensemble = [8.0, 5.0, 11.0, 14.0];
    let curves = continuum_curves(&pipeline, &ensemble);
    let params = inversion_params(&pipeline);
    let lcs: Vec<LorentzCurve> = curves.iter().map(|(_, lc)| lc.clone()).collect();
    let response = invert_continuum(&lcs, &params).unwrap();

    // Round trip against the reference sigma_I = 8 MeV input curve.
    let reference = &curves[0].0;
    let max_l = reference.max_l();
    let mut worst_rt = 0.0f64;
    for p in &reference.points {
        let rec = litcheb::protocols::reconstruct_li(
            &response,
            &pipeline.bound_energies,
            &pipeline.amplitudes,
            p.sigma,
        )
        .unwrap();
        worst_rt = worst_rt.max((rec - p.l).abs() / max_l);
    }

    // Band overlap: each single-width fit carries a model uncertainty of
    // plateau_tol (the accepted change at the stability plateau), so two
    // fits are consistent when they differ by less than the sum of their
    // half-widths pointwise.
    let fits: Vec<Vec<f64>> = lcs
        .iter()
        .map(|c| {
            let r = invert_continuum(std::slice::from_ref(c), &params).unwrap();
            r.e_grid.iter().map(|&e| r.evaluate(e)).collect()
        })
        .collect();
    let peaks: Vec<f64> = fits
        .iter()
        .map(|f| f.iter().fold(0.0f64, |a, &v| a.max(v)))
        .collect();
    let mut bands_overlap = true;
    let mut worst_gap = 0.0f64;
    for i in 0..fits.len() {
        for j in (i + 1)..fits.len() {
            let allowance = params.plateau_tol * (peaks[i] + peaks[j]);
            for (a, b) in fits[i].iter().zip(&fits[j]) {
                let gap = (a - b).abs();
                worst_gap = worst_gap.max(gap / allowance);
                if gap > allowance {
                    bands_overlap = false;
                }
            }
        }
    }

    criterion(
        6,
        worst_rt <= 0.02 && bands_overlap,
        &format!(
            "round-trip deviation {:.2}% (limit 2%); width-ensemble bands overlap pointwise (worst gap {:.2} of allowance)",
            100.0 * worst_rt, worst_gap
        ),
    );
}

#[test]
fn criterion_7_sum_rule() {
    let pipeline = run_bound_fit();
    let ensemble = [8.0, 5.0, 11.0, 14.0];
    let curves = continuum_curves(&pipeline, &ensemble);
    let params = inversion_params(&pipeline);
    let lcs: Vec<LorentzCurve> = curves.iter().map(|(_, lc)| lc.clone()).collect();
    let response = invert_continuum(&lcs, &params).unwrap();

    let bound_sum: f64 = pipeline.amplitudes.iter().sum();
    // Each basis function integrates to Gamma(5/2) (m beta)^(5/2).
    let gamma_5_2 = 0.75 * std::f64::consts::PI.sqrt();
    let continuum_sum: f64 = response
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| c * gamma_5_2 * ((i + 1) as f64 * params.beta).powf(2.5))
        .sum();
    let total = bound_sum + continuum_sum;
    let rel = (total - pipeline.omega_norm_sq).abs() / pipeline.omega_norm_sq;
    criterion(
        7,
        rel <= 0.03,
        &format!(
            "sum rule: bound {bound_sum:.4} + continuum {continuum_sum:.4} = {total:.4} vs source norm {:.4} ({:.2}% off, limit 3%)",
            pipeline.omega_norm_sq,
            100.0 * rel
        ),
    );
}

#[test]
fn criterion_8_external_interaction_reproduction() {
    let basis_path = std::env::var("LITCHEB_TABLE_BASIS")
        .unwrap_or_else(|_| "data/external_basis.txt".to_string());
    let mono_path = std::env::var("LITCHEB_TABLE_MONOMIALS")
        .unwrap_or_else(|_| "data/external_monomials.txt".to_string());
    if !std::path::Path::new(&basis_path).is_file()
        || !std::path::Path::new(&mono_path).is_file()
    {
        println!(
            "ACCEPTANCE 8: SKIPPED - external interaction files not supplied ({basis_path}, {mono_path})"
        );
        return;
    }
    let basis = Arc::new(SpBasis::load(&basis_path).unwrap());
    let h: SecondQuantizedH = load_monomials(&mono_path, &basis)
        .unwrap()
        .hermitize()
        .unwrap();
    let space3 = enumerate_configs(&basis, 3, None).unwrap();
    let space2 = enumerate_configs(&basis, 2, None).unwrap();
    let e0_3 = diagonalize(&h, &space3).unwrap().ground_energy();
    let e0_2 = diagonalize(&h, &space2).unwrap().ground_energy();
    let e_th = e0_2 - e0_3;
    let ok = (e0_3 - (-15.074)).abs() <= 1e-3
        && (e0_2 - (-11.155)).abs() <= 1e-3
        && (e_th - 3.919).abs() <= 1e-3;
    criterion(
        8,
        ok,
        &format!("E0(3-body) = {e0_3:.4}, E0(2-body) = {e0_2:.4}, e_th = {e_th:.4} (1 keV tolerance)"),
    );
}

#[test]
fn criterion_9_shot_noise_sanity() {
    let h = sd_hamiltonian();
    let basis = sd_basis();
    let shots = 1_000_000u64;

    // Part 1: noisy prescan peak shifts vs the propagated error estimate.
    let clean = prescan(&h, &basis, 3, &spectrum_window()).unwrap();
    let mut noisy_params = spectrum_window();
    noisy_params.noise = Some(ShotNoiseModel {
        shots_per_moment: shots,
        seed: 2026,
    });
    let noisy = prescan(&h, &basis, 3, &noisy_params).unwrap();
    assert_eq!(clean.states.len(), noisy.states.len());

    let full_space = enumerate_configs(&basis, 3, None).unwrap();
    let rescaling = compute_rescaling(&h, &full_space, 0.02).unwrap();
    let params = spectrum_window();
    let step = params.sigma_r_step;
    let mut worst_ratio = 0.0f64;
    let mut shifts_ok = true;
    for (cs, ns) in clean.states.iter().zip(&noisy.states) {
        let shift = (cs.energy - ns.energy).abs();
        // Accumulate the same per-source curves the prescan used in the
        // block where this state first appeared, at the three grid points
        // bracketing the peak, and propagate the per-point shot variance
        // through the parabola vertex.
        let block = enumerate_configs(&basis, 3, Some(cs.two_j)).unwrap();
        let center = ((cs.energy - params.sigma_r_min) / step).round();
        let grid: [SigmaPoint; 3] = [
            SigmaPoint::new(params.sigma_r_min + step * (center - 1.0), params.sigma_i, 0.0),
            SigmaPoint::new(params.sigma_r_min + step * center, params.sigma_i, 0.0),
            SigmaPoint::new(params.sigma_r_min + step * (center + 1.0), params.sigma_i, 0.0),
        ];
        let k = truncation_order(grid[1], &rescaling, params.trunc_tol, params.k_cap).unwrap();
        let mut l = [0.0f64; 3];
        let mut var = [0.0f64; 3];
        for src in 0..block.dim() {
            let omega = single_config_state(&block, block.config(src)).unwrap();
            let mut ms = compute_moments(&h, &rescaling, &omega, 2 * k - 2).unwrap();
            ms.shots = Some(shots);
            for (i, &sigma) in grid.iter().enumerate() {
                l[i] += li_from_moments(&ms, sigma, k).unwrap();
                var[i] += li_shot_variance(&ms, sigma, k).unwrap();
            }
        }
        let sigma_l = [var[0].sqrt(), var[1].sqrt(), var[2].sqrt()];
        let delta_e = vertex_error_estimate(step, l, sigma_l);
        worst_ratio = worst_ratio.max(shift / delta_e);
        if shift > 3.0 * delta_e {
            shifts_ok = false;
        }
    }

    // Part 2: empirical moment scatter vs the binomial prediction.
    let omega = fixture_omega(&full_space);
    let ms = compute_moments(&h, &rescaling, &omega, 60).unwrap();
    let picks: Vec<usize> = (2..=60)
        .filter(|&k| ms.moments[k].re.abs() < 0.8)
        .step_by(9)
        .take(4)
        .collect();
    let n_seeds = 100;
    let mut scatter_ok = true;
    let mut scatter_detail = String::new();
    for &k in &picks {
        let samples: Vec<f64> = (0..n_seeds)
            .map(|seed| {
                let model = ShotNoiseModel {
                    shots_per_moment: shots,
                    seed: 1000 + seed,
                };
                noisy_moments(&ms, &model).unwrap().moments[k].re
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n_seeds as f64;
        let emp_var =
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n_seeds - 1) as f64;
        let emp_std = emp_var.sqrt();
        let mu = ms.moments[k].re;
        let theory = ((1.0 - mu * mu) / shots as f64).sqrt();
        let ratio = emp_std / theory;
        scatter_detail.push_str(&format!("k={k}: {ratio:.3} "));
        if !(0.8..=1.2).contains(&ratio) {
            scatter_ok = false;
        }
    }

    criterion(
        9,
        shifts_ok && scatter_ok,
        &format!(
            "peak shifts at most {worst_ratio:.2}x the propagated error (limit 3x); empirical/predicted moment scatter {scatter_detail}over {n_seeds} seeds"
        ),
    );
}
