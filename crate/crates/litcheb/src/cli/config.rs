//! Flat key=value run configuration with [section] headers.
//!
//! Lines are `key = value`, `#` starts a comment, section names are
//! bracketed. Parse and validation errors carry the 1-based line number.
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{LitError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    Recursion,
    Walk,
    WalkNoise,
}

impl MomentSource {
    pub fn label(&self) -> &'static str {
        match self {
            MomentSource::Recursion => "recursion",
            MomentSource::Walk => "walk",
            MomentSource::WalkNoise => "walk+noise",
        }
    }
}

/// One prescan window (sigma_I, sigma_R range and step).
#[derive(Debug, Clone, Copy)]
pub struct WindowConfig {
    pub sigma_i: f64,
    pub sigma_r_min: f64,
    pub sigma_r_max: f64,
    pub sigma_r_step: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub basis_path: PathBuf,
    pub monomials_path: PathBuf,
    pub source_path: PathBuf,
    /// Particle number of the target system.
    pub a: usize,
    pub moment_source: MomentSource,
    pub k_max: usize,
    pub shots: u64,
    pub seed: u64,
    /// Protocol-1 window on the target system.
    pub spectrum: WindowConfig,
    /// Window for the (A-1)-body ground state (threshold determination).
    pub threshold_min: f64,
    pub threshold_max: f64,
    /// Protocol-2/3 settings.
    pub sigma_i_ensemble: Vec<f64>,
    pub e_max_offset: f64,
    pub response_step: f64,
    /// Upper edge of the extended model window for nuisance states.
    pub model_max: f64,
    pub fit_sigma_i: f64,
    pub fit_step: f64,
    pub beta: f64,
    pub m_max: usize,
    pub output_dir: PathBuf,
    /// 0 = all available cores.
    pub threads: usize,
    /// Raw file text, echoed into the run manifest.
    pub raw_text: String,
}

struct RawConfig {
    values: BTreeMap<(String, String), (String, usize)>,
    dir: PathBuf,
}

impl RawConfig {
    fn parse(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LitError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(LitError::Config(format!(
                    "line {lineno}: expected `key = value`, got `{body}`"
                )));
            };
            values.insert(
                (section.clone(), key.trim().to_string()),
                (value.trim().to_string(), lineno),
            );
        }
        Ok((Self { values, dir }, text))
    }

    fn get(&self, section: &str, key: &str) -> Option<&(String, usize)> {
        self.values.get(&(section.to_string(), key.to_string()))
    }

    fn require(&self, section: &str, key: &str) -> Result<&(String, usize)> {
        self.get(section, key).ok_or_else(|| {
            LitError::Config(format!("missing required key `{key}` in section [{section}]"))
        })
    }

    fn parse_as<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<T> {
        let (v, lineno) = self.require(section, key)?;
        v.parse().map_err(|_| {
            LitError::Config(format!(
                "line {lineno}: cannot parse `{key} = {v}` in section [{section}]"
            ))
        })
    }

    fn parse_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.get(section, key) {
            None => Ok(default),
            Some(_) => self.parse_as(section, key),
        }
    }

    fn path(&self, section: &str, key: &str) -> Result<PathBuf> {
        let (v, _) = self.require(section, key)?;
        let p = PathBuf::from(v);
        Ok(if p.is_absolute() { p } else { self.dir.join(p) })
    }
}

fn check_exists(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(LitError::Config(format!(
            "referenced file does not exist: {}",
            path.display()
        )));
    }
    Ok(())
}

fn check_window(label: &str, w: &WindowConfig) -> Result<()> {
    if w.sigma_i <= 0.0 {
        return Err(LitError::Config(format!(
            "[{label}] sigma_i must be positive, got {}",
            w.sigma_i
        )));
    }
    if w.sigma_r_step <= 0.0 || w.sigma_r_max <= w.sigma_r_min {
        return Err(LitError::Config(format!(
            "[{label}] sigma_R grid is empty ({} .. {} step {})",
            w.sigma_r_min, w.sigma_r_max, w.sigma_r_step
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let (raw, text) = RawConfig::parse(path)?;

        let basis_path = raw.path("files", "basis")?;
        let monomials_path = raw.path("files", "monomials")?;
        let source_path = raw.path("files", "source")?;
        check_exists(&basis_path)?;
        check_exists(&monomials_path)?;
        check_exists(&source_path)?;

        let a: usize = raw.parse_as("system", "a")?;
        if a == 0 {
            return Err(LitError::Config("particle number a must be >= 1".into()));
        }

        let moment_source = {
            let (v, lineno) = raw
                .get("moments", "source")
                .cloned()
                .unwrap_or(("recursion".into(), 0));
            match v.as_str() {
                "recursion" => MomentSource::Recursion,
                "walk" => MomentSource::Walk,
                "walk+noise" => MomentSource::WalkNoise,
                other => {
                    return Err(LitError::Config(format!(
                        "line {lineno}: unknown moment source `{other}` (expected recursion, walk, or walk+noise)"
                    )))
                }
            }
        };

        let spectrum = WindowConfig {
            sigma_i: raw.parse_as("spectrum", "sigma_i")?,
            sigma_r_min: raw.parse_as("spectrum", "sigma_r_min")?,
            sigma_r_max: raw.parse_as("spectrum", "sigma_r_max")?,
            sigma_r_step: raw.parse_as("spectrum", "sigma_r_step")?,
        };
        check_window("spectrum", &spectrum)?;

        let ensemble_text: String = raw.parse_or(
            "response",
            "sigma_i_ensemble",
            "8,5,11,14".to_string(),
        )?;
        let mut sigma_i_ensemble = Vec::new();
        for part in ensemble_text.split(',') {
            let v: f64 = part.trim().parse().map_err(|_| {
                LitError::Config(format!(
                    "[response] sigma_i_ensemble: cannot parse `{part}`"
                ))
            })?;
            if v <= 0.0 {
                return Err(LitError::Config(format!(
                    "[response] sigma_i_ensemble entries must be positive, got {v}"
                )));
            }
            sigma_i_ensemble.push(v);
        }
        if sigma_i_ensemble.is_empty() {
            return Err(LitError::Config(
                "[response] sigma_i_ensemble must not be empty".into(),
            ));
        }

        let fit_sigma_i: f64 = raw.parse_or("response", "fit_sigma_i", spectrum.sigma_i)?;
        if fit_sigma_i <= 0.0 {
            return Err(LitError::Config(format!(
                "[response] fit_sigma_i must be positive, got {fit_sigma_i}"
            )));
        }

        let config = Self {
            basis_path,
            monomials_path,
            source_path,
            a,
            moment_source,
            k_max: raw.parse_or("moments", "k_max", 1600)?,
            shots: raw.parse_or("moments", "shots", 1_000_000)?,
            seed: raw.parse_or("moments", "seed", 1)?,
            spectrum,
            threshold_min: raw.parse_as("threshold", "sigma_r_min")?,
            threshold_max: raw.parse_as("threshold", "sigma_r_max")?,
            sigma_i_ensemble,
            e_max_offset: raw.parse_or("response", "e_max_offset", 40.0)?,
            response_step: raw.parse_or("response", "sigma_r_step", 0.5)?,
            model_max: raw.parse_or("response", "model_max", spectrum.sigma_r_max)?,
            fit_sigma_i,
            fit_step: raw.parse_or("response", "fit_step", spectrum.sigma_r_step)?,
            beta: raw.parse_or("response", "beta", 0.0)?,
            m_max: raw.parse_or("response", "m_max", 12)?,
            output_dir: {
                let (v, _) = raw
                    .get("output", "dir")
                    .cloned()
                    .unwrap_or(("out".into(), 0));
                let p = PathBuf::from(v);
                if p.is_absolute() {
                    p
                } else {
                    raw.dir.join(p)
                }
            },
            threads: raw.parse_or("run", "threads", 0)?,
            raw_text: text,
        };
        if config.threshold_max <= config.threshold_min {
            return Err(LitError::Config(format!(
                "[threshold] sigma_R window is empty ({} .. {})",
                config.threshold_min, config.threshold_max
            )));
        }
        if config.response_step <= 0.0 || config.e_max_offset <= 0.0 {
            return Err(LitError::Config(
                "[response] e_max_offset and sigma_r_step must be positive".into(),
            ));
        }
        Ok(config)
    }
}
