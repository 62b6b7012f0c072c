//! Subcommand implementations: spectrum, response, moments, validate.
//!
//! Every command writes a JSON manifest (config echo, package version,
//! seeds, and the truncation orders actually used) next to its outputs so a
//! run can be reproduced bit-exactly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::blockenc::{build_walk, noisy_moments, ShotNoiseModel};
use crate::chebyshev::{compute_moments, MomentSet};
use crate::error::{LitError, Result};
use crate::fci::{diagonalize, exact_lorentz};
use crate::fockbasis::{enumerate_configs, load_source_state, ConfigSpace, SpBasis, StateVector};
use crate::hamiltonian::{
    compute_rescaling, hermiticity_defect, load_monomials, SecondQuantizedH, DEFAULT_DENSE_CAP,
};
use crate::lorentz::{
    continuum_part, curve_from_moments, li_direct_solve, li_from_moments, LorentzCurve, SigmaPoint,
};
use crate::protocols::{
    fit_bound_amplitudes, invert_continuum, neutron_threshold, prescan, reconstruct_li,
    InversionParams, PrescanParams,
};

use super::config::{MomentSource, RunConfig};

const RESCALE_MARGIN: f64 = 0.02;

pub struct Problem {
    pub basis: Arc<SpBasis>,
    pub h: SecondQuantizedH,
}

pub fn load_problem(config: &RunConfig) -> Result<Problem> {
    let basis = Arc::new(SpBasis::load(&config.basis_path)?);
    let h = load_monomials(&config.monomials_path, &basis)?.hermitize()?;
    if config.a > basis.n_sp() {
        return Err(LitError::Config(format!(
            "particle number {} exceeds basis size {}",
            config.a,
            basis.n_sp()
        )));
    }
    Ok(Problem { basis, h })
}

fn noise_model(config: &RunConfig) -> Option<ShotNoiseModel> {
    match config.moment_source {
        MomentSource::WalkNoise => Some(ShotNoiseModel {
            shots_per_moment: config.shots,
            seed: config.seed,
        }),
        _ => None,
    }
}

/// Moments via the configured source path: classical recursion, the
/// walk-operator emulation, or the walk with Hadamard-test shot noise.
fn moments_for(
    config: &RunConfig,
    problem: &Problem,
    space: &Arc<ConfigSpace>,
    omega: &StateVector,
    k_max: usize,
) -> Result<MomentSet> {
    let rescaling = compute_rescaling(&problem.h, space, RESCALE_MARGIN)?;
    match config.moment_source {
        MomentSource::Recursion => compute_moments(&problem.h, &rescaling, omega, k_max),
        MomentSource::Walk => build_walk(&problem.h, space, &rescaling)?.moments(omega, k_max),
        MomentSource::WalkNoise => {
            let ms = build_walk(&problem.h, space, &rescaling)?.moments(omega, k_max)?;
            noisy_moments(
                &ms,
                &ShotNoiseModel {
                    shots_per_moment: config.shots,
                    seed: config.seed,
                },
            )
        }
    }
}

fn prescan_params(config: &RunConfig) -> PrescanParams {
    let mut p = PrescanParams::new(
        config.spectrum.sigma_i,
        config.spectrum.sigma_r_min,
        config.spectrum.sigma_r_max,
        config.spectrum.sigma_r_step,
    );
    p.noise = noise_model(config);
    p
}

fn threshold_params(config: &RunConfig) -> PrescanParams {
    let mut p = PrescanParams::new(
        config.spectrum.sigma_i,
        config.threshold_min,
        config.threshold_max,
        config.spectrum.sigma_r_step,
    );
    p.noise = noise_model(config);
    p
}

#[derive(Serialize)]
struct Manifest {
    package: &'static str,
    version: &'static str,
    command: &'static str,
    config_path: String,
    config_echo: String,
    moment_source: String,
    shots: Option<u64>,
    seed: Option<u64>,
    /// Truncation orders actually used, per labelled output curve:
    /// [min over grid, max over grid].
    k_used: std::collections::BTreeMap<String, [usize; 2]>,
    outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &'static str, config_path: &Path, config: &RunConfig) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_path: config_path.display().to_string(),
            config_echo: config.raw_text.clone(),
            moment_source: config.moment_source.label().to_string(),
            shots: matches!(config.moment_source, MomentSource::WalkNoise)
                .then_some(config.shots),
            seed: matches!(config.moment_source, MomentSource::WalkNoise).then_some(config.seed),
            k_used: Default::default(),
            outputs: Vec::new(),
        }
    }

    fn record_curve(&mut self, label: &str, curve: &LorentzCurve) {
        let lo = curve.points.iter().map(|p| p.k_used).min().unwrap_or(0);
        let hi = curve.points.iter().map(|p| p.k_used).max().unwrap_or(0);
        self.k_used.insert(label.to_string(), [lo, hi]);
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        self.outputs.push(path.display().to_string());
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn write_output(manifest: &mut Manifest, dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    manifest.outputs.push(path.display().to_string());
    Ok(path)
}

pub fn cmd_spectrum(config: &RunConfig, config_path: &Path) -> Result<()> {
    let problem = load_problem(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut manifest = Manifest::new("spectrum", config_path, config);

    let params = prescan_params(config);
    let spectrum = prescan(&problem.h, &problem.basis, config.a, &params)?;
    write_output(&mut manifest, &config.output_dir, "spectrum.csv", &spectrum.to_csv())?;
    let json_path = config.output_dir.join("spectrum.json");
    spectrum.save_json(&json_path)?;
    manifest.outputs.push(json_path.display().to_string());
    manifest.write(&config.output_dir)?;

    println!("spectrum: {} bound states", spectrum.states.len());
    for s in &spectrum.states {
        println!(
            "  E = {:+.11e}  2J = {}  parity = {:+}",
            s.energy, s.two_j, s.parity
        );
    }
    Ok(())
}

pub fn cmd_response(config: &RunConfig, config_path: &Path) -> Result<()> {
    let problem = load_problem(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut manifest = Manifest::new("response", config_path, config);

    // Protocol 1: bound spectrum, threshold, and the extended model window
    // whose extra states absorb near-threshold strength during the bound fit.
    let spectrum_path = config.output_dir.join("spectrum.json");
    let spectrum = if spectrum_path.is_file() {
        crate::protocols::SpectrumResult::load_json(&spectrum_path)?
    } else {
        let s = prescan(&problem.h, &problem.basis, config.a, &prescan_params(config))?;
        s.save_json(&spectrum_path)?;
        manifest.outputs.push(spectrum_path.display().to_string());
        s
    };
    if spectrum.states.is_empty() {
        return Err(LitError::Config(
            "prescan found no bound states in the [spectrum] window".into(),
        ));
    }
    let e0 = spectrum.states[0].energy;
    let bound_energies = spectrum.energies();
    let (e_th, _, _) = neutron_threshold(
        &problem.h,
        &problem.basis,
        config.a,
        &prescan_params(config),
        &threshold_params(config),
    )?;
    let mut ext_params = prescan_params(config);
    ext_params.sigma_r_max = config.model_max;
    let model_energies = prescan(&problem.h, &problem.basis, config.a, &ext_params)?.energies();

    // One moment set serves both the bound fit and the continuum curves.
    let space = enumerate_configs(&problem.basis, config.a, None)?;
    let omega = load_source_state(&config.source_path, &space)?;
    let ms = moments_for(config, &problem, &space, &omega, config.k_max)?;

    // Protocol 2: bound amplitudes from a narrow curve over the model window.
    let fit_lo = config.spectrum.sigma_r_min;
    let fit_n = ((config.model_max - fit_lo) / config.fit_step).ceil() as usize + 1;
    let fit_grid: Vec<SigmaPoint> = (0..fit_n)
        .map(|i| SigmaPoint::new(fit_lo + config.fit_step * i as f64, config.fit_sigma_i, 0.0))
        .collect();
    let fit_curve = curve_from_moments(&ms, &fit_grid, 1e-10, 800)?;
    manifest.record_curve("bound_fit", &fit_curve);
    let fit = fit_bound_amplitudes(&fit_curve, &model_energies)?;
    let amplitudes: Vec<f64> = fit.amplitudes[..bound_energies.len()].to_vec();
    let mut bound_csv = String::from("energy,R_n\n");
    for (e, r) in bound_energies.iter().zip(&amplitudes) {
        bound_csv.push_str(&format!("{e:.11e},{r:.11e}\n"));
    }
    write_output(&mut manifest, &config.output_dir, "bound_amplitudes.csv", &bound_csv)?;

    // Protocol 3: continuum curves over the sigma_I ensemble, x = E_0.
    let n_pts = (config.e_max_offset / config.response_step).ceil() as usize + 1;
    let mut continuum_curves = Vec::new();
    for (ci, &si) in config.sigma_i_ensemble.iter().enumerate() {
        let grid: Vec<SigmaPoint> = (0..n_pts)
            .map(|i| SigmaPoint::new(e_th + config.response_step * i as f64, si, e0))
            .collect();
        let curve = curve_from_moments(&ms, &grid, 1e-10, 800)?;
        manifest.record_curve(&format!("continuum_sigma_i_{si}"), &curve);
        if ci == 0 {
            write_output(&mut manifest, &config.output_dir, "li_curve.csv", &curve.to_csv())?;
        }
        continuum_curves.push((curve.clone(), continuum_part(&curve, &bound_energies, &amplitudes)?));
    }
    let lcs: Vec<LorentzCurve> = continuum_curves.iter().map(|(_, lc)| lc.clone()).collect();
    let mut inv_params = InversionParams::new(e_th, e_th + config.e_max_offset);
    if config.beta > 0.0 {
        inv_params.beta = config.beta;
    }
    inv_params.m_max = config.m_max;
    let response = invert_continuum(&lcs, &inv_params)?;
    write_output(&mut manifest, &config.output_dir, "response.csv", &response.to_csv())?;
    let resp_json = config.output_dir.join("response.json");
    response.save_json(&resp_json)?;
    manifest.outputs.push(resp_json.display().to_string());

    // Round-trip report against the reference (first) input curve.
    let reference = &continuum_curves[0].0;
    let max_l = reference.max_l();
    let mut report = String::from("sigma_r,L_input,L_reconstructed,rel_deviation\n");
    let mut worst = 0.0f64;
    for p in &reference.points {
        let rec = reconstruct_li(&response, &bound_energies, &amplitudes, p.sigma)?;
        let rel = (rec - p.l).abs() / max_l;
        worst = worst.max(rel);
        report.push_str(&format!(
            "{:.11e},{:.11e},{:.11e},{:.11e}\n",
            p.sigma.sigma_r, p.l, rec, rel
        ));
    }
    write_output(&mut manifest, &config.output_dir, "reconstruction.csv", &report)?;
    manifest.write(&config.output_dir)?;

    println!("threshold e_th = {e_th:+.11e}");
    println!("bound states and fitted amplitudes:");
    for (e, r) in bound_energies.iter().zip(&amplitudes) {
        println!("  E = {e:+.11e}  R_n = {r:.11e}");
    }
    println!("inversion basis size m* = {}", response.m_star);
    println!("round-trip worst relative deviation = {worst:.11e}");
    Ok(())
}

pub fn cmd_moments(config: &RunConfig, config_path: &Path) -> Result<()> {
    let problem = load_problem(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let mut manifest = Manifest::new("moments", config_path, config);

    let space = enumerate_configs(&problem.basis, config.a, None)?;
    let omega = load_source_state(&config.source_path, &space)?;
    let ms = moments_for(config, &problem, &space, &omega, config.k_max)?;
    manifest
        .k_used
        .insert("moments".to_string(), [ms.k_max(), ms.k_max()]);
    let path = config.output_dir.join("moments.json");
    ms.save_json(&path)?;
    manifest.outputs.push(path.display().to_string());
    manifest.write(&config.output_dir)?;

    println!(
        "wrote {} moments (k <= {}) to {}",
        ms.moments.len(),
        ms.k_max(),
        path.display()
    );
    Ok(())
}

enum CheckOutcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn report(name: &str, outcome: &CheckOutcome) -> bool {
    match outcome {
        CheckOutcome::Pass(detail) => {
            println!("PASS    {name}: {detail}");
            true
        }
        CheckOutcome::Fail(detail) => {
            println!("FAIL    {name}: {detail}");
            false
        }
        CheckOutcome::Skipped(detail) => {
            println!("SKIPPED {name}: {detail}");
            true
        }
    }
}

/// Cross-module invariant suite; returns Err on any failing check so the
/// caller maps it to exit code 1.
pub fn cmd_validate(config: &RunConfig, _config_path: &Path) -> Result<()> {
    let basis = Arc::new(SpBasis::load(&config.basis_path)?);
    let mut ok = true;

    // Hermiticity of the ingested monomial table.
    let h = match load_monomials(&config.monomials_path, &basis).and_then(|h| h.hermitize()) {
        Ok(h) => {
            ok &= report(
                "hermiticity",
                &CheckOutcome::Pass("monomial table closes under conjugation".into()),
            );
            h
        }
        Err(e) => {
            report("hermiticity", &CheckOutcome::Fail(e.to_string()));
            return Err(LitError::Validation(e.to_string()));
        }
    };
    let space = enumerate_configs(&basis, config.a, None)?;
    let dense_ok = space.dim() <= DEFAULT_DENSE_CAP;

    if dense_ok {
        let mat = h.assemble_dense(&space, DEFAULT_DENSE_CAP)?;
        let defect = hermiticity_defect(&mat);
        let outcome = if defect <= 1e-10 * h.xi().max(1.0) {
            CheckOutcome::Pass(format!("dense matrix defect {defect:.3e}"))
        } else {
            CheckOutcome::Fail(format!("dense matrix defect {defect:.3e}"))
        };
        ok &= report("dense-hermiticity", &outcome);
    } else {
        ok &= report(
            "dense-hermiticity",
            &CheckOutcome::Skipped(format!(
                "dimension {} above dense cap {DEFAULT_DENSE_CAP}",
                space.dim()
            )),
        );
    }

    let omega = load_source_state(&config.source_path, &space)?;
    let rescaling = compute_rescaling(&h, &space, RESCALE_MARGIN)?;
    let ms = compute_moments(&h, &rescaling, &omega, 400)?;

    // Triple oracle: moment assembly vs dense resolvent vs spectral sum.
    if dense_ok {
        let decomp = diagonalize(&h, &space)?;
        let mut rng = StdRng::seed_from_u64(config.seed);
        let lo = rescaling.shift - rescaling.scale;
        let hi = rescaling.shift + rescaling.scale;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let sigma = SigmaPoint::new(
                lo + (hi - lo) * rng.random::<f64>(),
                1.0 + 13.0 * rng.random::<f64>(),
                0.0,
            );
            let l_mom = li_from_moments(&ms, sigma, 201)?;
            let l_dir = li_direct_solve(&h, &space, &omega, sigma)?;
            let l_fci = exact_lorentz(&decomp, &omega, sigma)?;
            let scale = l_fci.abs().max(1e-300);
            worst = worst
                .max((l_mom - l_fci).abs() / scale)
                .max((l_dir - l_fci).abs() / scale);
        }
        let outcome = if worst <= 1e-8 {
            CheckOutcome::Pass(format!("max relative spread {worst:.3e} over 10 points"))
        } else {
            CheckOutcome::Fail(format!("max relative spread {worst:.3e} over 10 points"))
        };
        ok &= report("triple-oracle", &outcome);
    } else {
        ok &= report(
            "triple-oracle",
            &CheckOutcome::Skipped(format!(
                "dimension {} above dense cap {DEFAULT_DENSE_CAP}",
                space.dim()
            )),
        );
    }

    // Walk-operator moments vs classical recursion.
    if dense_ok {
        let walk = build_walk(&h, &space, &rescaling)?;
        let ms_walk = walk.moments(&omega, 200)?;
        let worst = (0..=200)
            .map(|k| (ms_walk.moments[k] - ms.moments[k]).norm())
            .fold(0.0f64, f64::max);
        let outcome = if worst <= 1e-10 {
            CheckOutcome::Pass(format!("max |walk - recursion| = {worst:.3e}, k <= 200"))
        } else {
            CheckOutcome::Fail(format!("max |walk - recursion| = {worst:.3e}, k <= 200"))
        };
        ok &= report("walk-equivalence", &outcome);
    } else {
        ok &= report(
            "walk-equivalence",
            &CheckOutcome::Skipped(format!(
                "dimension {} above dense cap {DEFAULT_DENSE_CAP}",
                space.dim()
            )),
        );
    }

    // Product identity 2<t_j|t_k> = mu_{j+k} + mu_{|j-k|}.
    {
        let vectors = crate::chebyshev::recursion_vectors(&h, &rescaling, &omega, 200)?;
        let mut rng = StdRng::seed_from_u64(config.seed ^ 0x5ca1e);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let j = rng.random_range(0..=200usize);
            let k = rng.random_range(0..=200usize);
            let lhs = vectors[j].dot(&vectors[k]) * 2.0;
            let rhs = ms.moments[j + k] + ms.moments[j.abs_diff(k)];
            worst = worst.max((lhs - rhs).norm());
        }
        let outcome = if worst <= 1e-10 {
            CheckOutcome::Pass(format!("max defect {worst:.3e} over 20 (j,k) pairs"))
        } else {
            CheckOutcome::Fail(format!("max defect {worst:.3e} over 20 (j,k) pairs"))
        };
        ok &= report("product-identity", &outcome);
    }

    if ok {
        println!("validate: all checks passed");
        Ok(())
    } else {
        Err(LitError::Validation("one or more checks failed".into()))
    }
}
