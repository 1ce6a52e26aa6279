//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; blank lines and text after `#` are ignored.
//! Lists are comma separated. Unknown keys are rejected. Every key has a
//! default, and [`RunConfig::entries`] lists the fully resolved set in a
//! fixed order.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use crate::model::{
    derive_seed, EnvInitialState, EnvironmentSpec, SqueezingAxis, SystemParams,
    DEFAULT_ENV_MASS, DEFAULT_RESONANCE_RATIO,
};
use crate::observables::Thresholds;
use crate::oracle::{OracleGrid, OracleState, ORACLE_TOLERANCE};
use crate::sweeps::{log_grid, Averaging, ComparisonConfig, SamplerKind, SweepConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // central oscillator
    pub mass: f64,
    pub omega: f64,
    pub squeezing_axis: SqueezingAxis,
    pub x_sep: f64,
    // bath
    pub omega_low: f64,
    pub omega_high: f64,
    pub gamma0: f64,
    pub m_env: f64,
    pub macro_size: usize,
    pub traced_size: usize,
    pub n_macrofractions: usize,
    pub resonance_ratio: f64,
    pub allow_resonant: bool,
    // bath initial state
    pub temperature: f64,
    pub squeeze_r: f64,
    pub squeeze_theta: f64,
    pub rot_psi: f64,
    pub displacement_re: f64,
    pub displacement_im: f64,
    // time series
    pub t_max: f64,
    pub n_points: usize,
    // long-time averages
    pub tau: f64,
    pub n_time_samples: usize,
    pub sampler: SamplerKind,
    // temperature sweep
    pub t_grid_lo: f64,
    pub t_grid_hi: f64,
    pub t_grid_n: usize,
    pub n_realizations: usize,
    pub eps: f64,
    pub eps_hi: f64,
    // squeezing comparison
    pub revival_start: f64,
    // oracle
    pub oracle_nbars: Vec<f64>,
    pub oracle_eta_abs: Vec<f64>,
    pub oracle_eta_phase: f64,
    pub oracle_thermal: bool,
    pub oracle_squeeze_r: Vec<f64>,
    pub oracle_squeeze_theta: Vec<f64>,
    pub oracle_dim: Option<usize>,
    pub oracle_tolerance: f64,
    // run
    pub seed: u64,
    /// Realization index used by single-realization commands.
    pub realization: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mass: 1e-5,
            omega: 3e8,
            squeezing_axis: SqueezingAxis::Momentum,
            x_sep: 1e-9,
            omega_low: 3e9,
            omega_high: 6e9,
            gamma0: 0.33e18,
            m_env: DEFAULT_ENV_MASS,
            macro_size: 30,
            traced_size: 30,
            n_macrofractions: 1,
            resonance_ratio: DEFAULT_RESONANCE_RATIO,
            allow_resonant: false,
            temperature: 1e-2,
            squeeze_r: 0.0,
            squeeze_theta: 0.0,
            rot_psi: 0.0,
            displacement_re: 0.0,
            displacement_im: 0.0,
            t_max: 2e-8,
            n_points: 20001,
            tau: 1e-5,
            n_time_samples: 100_000,
            sampler: SamplerKind::Random,
            t_grid_lo: 1e-4,
            t_grid_hi: 10.0,
            t_grid_n: 13,
            n_realizations: 10,
            eps: 0.05,
            eps_hi: 0.3,
            revival_start: 5e-10,
            oracle_nbars: vec![0.0, 0.5, 2.0],
            oracle_eta_abs: vec![0.3, 1.0, 2.0],
            oracle_eta_phase: 0.7,
            oracle_thermal: true,
            oracle_squeeze_r: vec![0.5, 1.0],
            oracle_squeeze_theta: vec![0.0, 0.5 * PI, PI],
            oracle_dim: None,
            oracle_tolerance: ORACLE_TOLERANCE,
            seed: 1,
            realization: 0,
            out_dir: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value for `{key}`: {value:?} ({e})")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mass" => self.mass = parse(key, v)?,
            "omega" => self.omega = parse(key, v)?,
            "squeezing_axis" => self.squeezing_axis = parse(key, v)?,
            "x_sep" => self.x_sep = parse(key, v)?,
            "omega_low" => self.omega_low = parse(key, v)?,
            "omega_high" => self.omega_high = parse(key, v)?,
            "gamma0" => self.gamma0 = parse(key, v)?,
            "m_env" => self.m_env = parse(key, v)?,
            "macro_size" => self.macro_size = parse(key, v)?,
            "traced_size" => self.traced_size = parse(key, v)?,
            "n_macrofractions" => self.n_macrofractions = parse(key, v)?,
            "resonance_ratio" => self.resonance_ratio = parse(key, v)?,
            "allow_resonant" => self.allow_resonant = parse(key, v)?,
            "temperature" => self.temperature = parse(key, v)?,
            "squeeze_r" => self.squeeze_r = parse(key, v)?,
            "squeeze_theta" => self.squeeze_theta = parse(key, v)?,
            "rot_psi" => self.rot_psi = parse(key, v)?,
            "displacement_re" => self.displacement_re = parse(key, v)?,
            "displacement_im" => self.displacement_im = parse(key, v)?,
            "t_max" => self.t_max = parse(key, v)?,
            "n_points" => self.n_points = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "n_time_samples" => self.n_time_samples = parse(key, v)?,
            "sampler" => {
                self.sampler = match v {
                    "random" => SamplerKind::Random,
                    "grid" => SamplerKind::Grid,
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid value for `sampler`: {v:?} (expected random or grid)"
                        )))
                    }
                }
            }
            "t_grid_lo" => self.t_grid_lo = parse(key, v)?,
            "t_grid_hi" => self.t_grid_hi = parse(key, v)?,
            "t_grid_n" => self.t_grid_n = parse(key, v)?,
            "n_realizations" => self.n_realizations = parse(key, v)?,
            "eps" => self.eps = parse(key, v)?,
            "eps_hi" => self.eps_hi = parse(key, v)?,
            "revival_start" => self.revival_start = parse(key, v)?,
            "oracle_nbars" => self.oracle_nbars = parse_list(key, v)?,
            "oracle_eta_abs" => self.oracle_eta_abs = parse_list(key, v)?,
            "oracle_eta_phase" => self.oracle_eta_phase = parse(key, v)?,
            "oracle_thermal" => self.oracle_thermal = parse(key, v)?,
            "oracle_squeeze_r" => self.oracle_squeeze_r = parse_list(key, v)?,
            "oracle_squeeze_theta" => self.oracle_squeeze_theta = parse_list(key, v)?,
            "oracle_dim" => {
                self.oracle_dim = match v {
                    "auto" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "oracle_tolerance" => self.oracle_tolerance = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "realization" => self.realization = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every assignment of a configuration file body.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override must be key=value, got {assignment:?}")))?;
        self.set(k, v)
    }

    /// Every key with its resolved value, in schema order. `out_dir` is left
    /// out so that outputs do not depend on where they are written.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let sampler = match self.sampler {
            SamplerKind::Random => "random",
            SamplerKind::Grid => "grid",
        };
        vec![
            ("mass", format!("{:?}", self.mass)),
            ("omega", format!("{:?}", self.omega)),
            ("squeezing_axis", self.squeezing_axis.to_string()),
            ("x_sep", format!("{:?}", self.x_sep)),
            ("omega_low", format!("{:?}", self.omega_low)),
            ("omega_high", format!("{:?}", self.omega_high)),
            ("gamma0", format!("{:?}", self.gamma0)),
            ("m_env", format!("{:?}", self.m_env)),
            ("macro_size", self.macro_size.to_string()),
            ("traced_size", self.traced_size.to_string()),
            ("n_macrofractions", self.n_macrofractions.to_string()),
            ("resonance_ratio", format!("{:?}", self.resonance_ratio)),
            ("allow_resonant", self.allow_resonant.to_string()),
            ("temperature", format!("{:?}", self.temperature)),
            ("squeeze_r", format!("{:?}", self.squeeze_r)),
            ("squeeze_theta", format!("{:?}", self.squeeze_theta)),
            ("rot_psi", format!("{:?}", self.rot_psi)),
            ("displacement_re", format!("{:?}", self.displacement_re)),
            ("displacement_im", format!("{:?}", self.displacement_im)),
            ("t_max", format!("{:?}", self.t_max)),
            ("n_points", self.n_points.to_string()),
            ("tau", format!("{:?}", self.tau)),
            ("n_time_samples", self.n_time_samples.to_string()),
            ("sampler", sampler.to_string()),
            ("t_grid_lo", format!("{:?}", self.t_grid_lo)),
            ("t_grid_hi", format!("{:?}", self.t_grid_hi)),
            ("t_grid_n", self.t_grid_n.to_string()),
            ("n_realizations", self.n_realizations.to_string()),
            ("eps", format!("{:?}", self.eps)),
            ("eps_hi", format!("{:?}", self.eps_hi)),
            ("revival_start", format!("{:?}", self.revival_start)),
            ("oracle_nbars", fmt_list(&self.oracle_nbars)),
            ("oracle_eta_abs", fmt_list(&self.oracle_eta_abs)),
            ("oracle_eta_phase", format!("{:?}", self.oracle_eta_phase)),
            ("oracle_thermal", self.oracle_thermal.to_string()),
            ("oracle_squeeze_r", fmt_list(&self.oracle_squeeze_r)),
            ("oracle_squeeze_theta", fmt_list(&self.oracle_squeeze_theta)),
            (
                "oracle_dim",
                self.oracle_dim.map_or_else(|| "auto".to_string(), |d| d.to_string()),
            ),
            ("oracle_tolerance", format!("{:?}", self.oracle_tolerance)),
            ("seed", self.seed.to_string()),
            ("realization", self.realization.to_string()),
        ]
    }

    /// The resolved configuration as a loadable file body.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn system(&self) -> Result<SystemParams> {
        SystemParams::new(self.mass, self.omega, self.squeezing_axis, self.x_sep).map_err(as_config)
    }

    /// Bath spec for disorder seed `seed`.
    pub fn environment(&self, seed: u64) -> EnvironmentSpec {
        let mut spec = EnvironmentSpec::new(
            self.omega_low,
            self.omega_high,
            self.gamma0,
            self.macro_size,
            self.n_macrofractions,
            self.traced_size,
            seed,
        );
        spec.m_env = self.m_env;
        spec.resonance_ratio = self.resonance_ratio;
        spec.allow_resonant = self.allow_resonant;
        spec
    }

    /// Disorder seed of the single-realization commands.
    pub fn realization_seed(&self) -> u64 {
        derive_seed(self.seed, self.realization)
    }

    pub fn initial_state(&self) -> EnvInitialState {
        EnvInitialState {
            displacement: Complex64::new(self.displacement_re, self.displacement_im),
            ..EnvInitialState::squeezed(self.temperature, self.squeeze_r, self.squeeze_theta, self.rot_psi)
        }
    }

    pub fn averaging(&self) -> Averaging {
        Averaging {
            tau: self.tau,
            n_time_samples: self.n_time_samples,
            sampler: self.sampler,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            eps: self.eps,
            eps_hi: self.eps_hi,
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            temperatures: log_grid(self.t_grid_lo, self.t_grid_hi, self.t_grid_n)?,
            n_realizations: self.n_realizations,
            master_seed: self.seed,
            averaging: self.averaging(),
            thresholds: self.thresholds(),
        })
    }

    pub fn comparison(&self) -> ComparisonConfig {
        ComparisonConfig {
            averaging: self.averaging(),
            t_max: self.t_max,
            n_points: self.n_points,
            revival_start: self.revival_start,
        }
    }

    pub fn oracle_grid(&self) -> OracleGrid {
        let mut states = Vec::new();
        if self.oracle_thermal {
            states.push(OracleState::Thermal);
        }
        for &r in &self.oracle_squeeze_r {
            for &theta in &self.oracle_squeeze_theta {
                states.push(OracleState::SqueezedThermal { r, theta });
            }
        }
        OracleGrid {
            nbars: self.oracle_nbars.clone(),
            eta_abs: self.oracle_eta_abs.clone(),
            eta_phase: self.oracle_eta_phase,
            states,
            dim: self.oracle_dim,
            tolerance: self.oracle_tolerance,
        }
    }

    /// Checks the physical model and the shared run settings.
    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        self.environment(self.realization_seed())
            .validate(&sys)
            .map_err(as_config)?;
        self.initial_state().validate().map_err(as_config)?;
        self.thresholds().validate()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("`tau` must be > 0, got {}", self.tau)));
        }
        if self.n_time_samples < 2 {
            return Err(Error::Config("`n_time_samples` must be >= 2".into()));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("`t_max` must be > 0, got {}", self.t_max)));
        }
        if self.n_points < 2 {
            return Err(Error::Config("`n_points` must be >= 2".into()));
        }
        if self.n_realizations == 0 {
            return Err(Error::Config("`n_realizations` must be >= 1".into()));
        }
        if !(self.revival_start >= 0.0) {
            return Err(Error::Config("`revival_start` must be >= 0".into()));
        }
        Ok(())
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// Re-labels a model error as a configuration error.
fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}
