//! Time series, long-time averages and temperature sweeps.
//!
//! Long-time averages `(1/τ)∫₀^τ` are estimated from a finite set of time
//! samples. The squared displacements `η_k²(t)` do not depend on temperature,
//! so they are evaluated once per sample and reused for every temperature of
//! a sweep. Per-oscillator terms are summed in index order exactly as in
//! [`log_exponents`], and per-sample values are reduced in sample order.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{
    derive_seed, sample_environment, EnvInitialState, EnvironmentRealization, EnvironmentSpec,
    Oscillator, SqueezingAxis, SystemParams,
};
use crate::observables::{
    classify_regime, eta_sq, from_log, log_b_term, log_exponents, log_gamma_term, thermal_purity,
    Regime, Thresholds,
};
use crate::{Error, Result};

/// Relative change between the half-sample and full-sample estimates above
/// which an average is flagged as not converged.
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

/// Drifts are measured relative to `max(|average|, CONVERGENCE_FLOOR)`, so
/// averages that are zero at this scale are judged by their absolute change.
pub const CONVERGENCE_FLOOR: f64 = 1e-3;

/// Averaging windows shorter than this many system periods are flagged.
pub const MIN_PERIODS: f64 = 10.0;

const CHUNK: usize = 2048;

/// `|Γ|` and `B` on a uniform time grid for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub b: Vec<f64>,
    /// Disorder seed, when the realization was drawn from a spec.
    pub seed: Option<u64>,
    pub traced_size: usize,
    pub macro_size: usize,
    pub temperature: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean of `(|Γ|, B)` over grid points with `lo <= t <= hi`.
    pub fn window_mean(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let (mut g, mut b, mut n) = (0.0, 0.0, 0usize);
        for i in 0..self.len() {
            if self.times[i] >= lo && self.times[i] <= hi {
                g += self.gamma[i];
                b += self.b[i];
                n += 1;
            }
        }
        (n > 0).then(|| (g / n as f64, b / n as f64))
    }

    /// Maxima of `(|Γ|, B)` over grid points with `lo <= t <= hi`.
    pub fn window_max(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let mut out: Option<(f64, f64)> = None;
        for i in 0..self.len() {
            if self.times[i] >= lo && self.times[i] <= hi {
                let (g, b) = out.unwrap_or((0.0, 0.0));
                out = Some((g.max(self.gamma[i]), b.max(self.b[i])));
            }
        }
        out
    }
}

/// `n_points` equally spaced times from 0 to `t_max`.
pub fn uniform_times(t_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::Config(format!("n_points must be >= 2, got {n_points}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Config(format!("t_max must be > 0, got {t_max}")));
    }
    let last = (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| if i == n_points - 1 { t_max } else { t_max * i as f64 / last })
        .collect())
}

/// Evaluates `|Γ|` over the traced fraction and `B` over the first
/// macro-fraction on a uniform grid that starts at `t = 0`.
pub fn time_series(
    realization: &EnvironmentRealization,
    sys: &SystemParams,
    env: &EnvInitialState,
    t_max: f64,
    n_points: usize,
) -> Result<TimeSeries> {
    let times = uniform_times(t_max, n_points)?;
    let values = times
        .par_iter()
        .map(|&t| {
            let logs = log_exponents(&realization.traced, realization.observed(), sys, env, t, false)?;
            Ok((logs.gamma(), logs.b()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (gamma, b) = values.into_iter().unzip();
    Ok(TimeSeries {
        times,
        gamma,
        b,
        seed: None,
        traced_size: realization.traced.len(),
        macro_size: realization.macro_size(),
        temperature: env.temperature,
    })
}

/// [`time_series`] for a freshly drawn realization of `spec`.
pub fn sample_time_series(
    spec: &EnvironmentSpec,
    sys: &SystemParams,
    env: &EnvInitialState,
    t_max: f64,
    n_points: usize,
) -> Result<TimeSeries> {
    let realization = sample_environment(spec, sys)?;
    let mut series = time_series(&realization, sys, env, t_max, n_points)?;
    series.seed = Some(spec.seed);
    Ok(series)
}

/// How time samples in `[0, τ)` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Midpoints of `n` equal cells.
    UniformGrid(usize),
    /// `n` i.i.d. uniform draws.
    SeededRandom { n: usize, seed: u64 },
}

impl Sampler {
    pub fn n(&self) -> usize {
        match *self {
            Sampler::UniformGrid(n) | Sampler::SeededRandom { n, .. } => n,
        }
    }

    pub fn times(&self, tau: f64) -> Result<Vec<f64>> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("tau must be > 0, got {tau}")));
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 time samples, got {n}")));
        }
        Ok(match *self {
            Sampler::UniformGrid(_) => (0..n).map(|i| tau * (i as f64 + 0.5) / n as f64).collect(),
            Sampler::SeededRandom { seed, .. } => {
                let dist = Uniform::new(0.0, tau).map_err(|e| Error::Config(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| dist.sample(&mut rng)).collect()
            }
        })
    }
}

/// Comparison of an average with the estimate from every second sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub n_samples: usize,
    pub gamma_half: f64,
    pub b_half: f64,
    pub gamma_drift: f64,
    pub b_drift: f64,
    /// Both drifts below [`CONVERGENCE_TOLERANCE`].
    pub converged: bool,
    /// `τ` below [`MIN_PERIODS`] system periods.
    pub short_tau: bool,
}

impl Convergence {
    pub fn max_drift(&self) -> f64 {
        self.gamma_drift.max(self.b_drift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    pub temperature: f64,
    pub gamma_avg: f64,
    pub b_avg: f64,
    pub convergence: Convergence,
}

fn relative_drift(full: f64, half: f64) -> f64 {
    (full - half).abs() / full.abs().max(CONVERGENCE_FLOOR)
}

/// Running sums for one temperature: all samples and even-indexed samples.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    gamma: f64,
    b: f64,
    gamma_even: f64,
    b_even: f64,
}

impl Sums {
    fn add(&mut self, o: &Sums) {
        self.gamma += o.gamma;
        self.b += o.b;
        self.gamma_even += o.gamma_even;
        self.b_even += o.b_even;
    }
}

fn sample_sums(
    realization: &EnvironmentRealization,
    sys: &SystemParams,
    env: &EnvInitialState,
    times: &[f64],
    temperatures: &[f64],
) -> Result<Vec<Sums>> {
    let traced = &realization.traced;
    let observed = realization.observed();
    if traced.is_empty() || observed.is_empty() {
        return Err(Error::Domain("oscillator fraction is empty".into()));
    }
    env.validate()?;
    let purity = |list: &[Oscillator]| -> Vec<Vec<f64>> {
        temperatures
            .iter()
            .map(|&temp| list.iter().map(|o| thermal_purity(o.omega, temp)).collect())
            .collect()
    };
    let p_traced = purity(traced);
    let p_observed = purity(observed);
    let n_temps = temperatures.len();

    let chunk_sums = times
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut sums = vec![Sums::default(); n_temps];
            let mut e_traced = vec![0.0; traced.len()];
            let mut e_observed = vec![0.0; observed.len()];
            for (j, &t) in chunk.iter().enumerate() {
                for (e, o) in e_traced.iter_mut().zip(traced) {
                    *e = eta_sq(o, sys, env, t)?;
                }
                for (e, o) in e_observed.iter_mut().zip(observed) {
                    *e = eta_sq(o, sys, env, t)?;
                }
                let even = (c * CHUNK + j).is_multiple_of(2);
                for (k, s) in sums.iter_mut().enumerate() {
                    let lg = e_traced
                        .iter()
                        .zip(&p_traced[k])
                        .fold(0.0, |acc, (&e, &p)| acc + log_gamma_term(e, p));
                    let lb = e_observed
                        .iter()
                        .zip(&p_observed[k])
                        .fold(0.0, |acc, (&e, &p)| acc + log_b_term(e, p));
                    let (g, b) = (from_log(lg), from_log(lb));
                    s.gamma += g;
                    s.b += b;
                    if even {
                        s.gamma_even += g;
                        s.b_even += b;
                    }
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = vec![Sums::default(); n_temps];
    for sums in &chunk_sums {
        for (acc, s) in total.iter_mut().zip(sums) {
            acc.add(s);
        }
    }
    Ok(total)
}

/// Long-time averages at several temperatures from one shared sample set.
pub fn time_averages(
    realization: &EnvironmentRealization,
    sys: &SystemParams,
    env: &EnvInitialState,
    tau: f64,
    sampler: Sampler,
    temperatures: &[f64],
) -> Result<Vec<TimeAverage>> {
    sys.validate()?;
    for &temp in temperatures {
        env.at_temperature(temp).validate()?;
    }
    let times = sampler.times(tau)?;
    let n = times.len();
    let n_even = n.div_ceil(2);
    let short_tau = tau < MIN_PERIODS * sys.period();
    let sums = sample_sums(realization, sys, env, &times, temperatures)?;
    Ok(temperatures
        .iter()
        .zip(sums)
        .map(|(&temperature, s)| {
            let gamma_avg = s.gamma / n as f64;
            let b_avg = s.b / n as f64;
            let gamma_half = s.gamma_even / n_even as f64;
            let b_half = s.b_even / n_even as f64;
            let gamma_drift = relative_drift(gamma_avg, gamma_half);
            let b_drift = relative_drift(b_avg, b_half);
            TimeAverage {
                temperature,
                gamma_avg,
                b_avg,
                convergence: Convergence {
                    n_samples: n,
                    gamma_half,
                    b_half,
                    gamma_drift,
                    b_drift,
                    converged: gamma_drift < CONVERGENCE_TOLERANCE && b_drift < CONVERGENCE_TOLERANCE,
                    short_tau,
                },
            }
        })
        .collect())
}

/// Estimates `(1/τ)∫₀^τ |Γ| dt` and `(1/τ)∫₀^τ B dt`.
pub fn time_average(
    realization: &EnvironmentRealization,
    sys: &SystemParams,
    env: &EnvInitialState,
    tau: f64,
    sampler: Sampler,
) -> Result<TimeAverage> {
    let mut v = time_averages(realization, sys, env, tau, sampler, &[env.temperature])?;
    Ok(v.remove(0))
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Config(format!(
            "log grid needs 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    match n {
        0 => Err(Error::Config("log grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let step = (b - a) / (n - 1) as f64;
            Ok((0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k == n - 1 => hi,
                    k => 10f64.powf(a + step * k as f64),
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Grid,
    Random,
}

/// Averaging settings shared by sweeps and comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averaging {
    pub tau: f64,
    pub n_time_samples: usize,
    pub sampler: SamplerKind,
}

impl Averaging {
    /// Sampler for a realization drawn with `realization_seed`.
    pub fn sampler(&self, realization_seed: u64) -> Sampler {
        match self.sampler {
            SamplerKind::Grid => Sampler::UniformGrid(self.n_time_samples),
            SamplerKind::Random => Sampler::SeededRandom {
                n: self.n_time_samples,
                seed: derive_seed(realization_seed, 1),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Positive, ascending.
    pub temperatures: Vec<f64>,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub averaging: Averaging,
    pub thresholds: Thresholds,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::Config("temperature grid is empty".into()));
        }
        if self.temperatures.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Config("sweep temperatures must be > 0".into()));
        }
        if self.temperatures.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep temperatures must be strictly ascending".into()));
        }
        if self.n_realizations == 0 {
            return Err(Error::Config("n_realizations must be >= 1".into()));
        }
        self.thresholds.validate()
    }

    /// Disorder seed of realization `i`.
    pub fn realization_seed(&self, i: usize) -> u64 {
        derive_seed(self.master_seed, i as u64)
    }
}

/// Ensemble statistics at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub temperature: f64,
    pub gamma_avg: f64,
    pub gamma_stderr: f64,
    pub b_avg: f64,
    pub b_stderr: f64,
    pub regime: Regime,
    pub n_time_samples: usize,
    pub tau: f64,
    /// Drift of the ensemble means between every second sample and all
    /// samples.
    pub gamma_drift: f64,
    pub b_drift: f64,
    /// Realizations whose own convergence record is flagged.
    pub n_unconverged: usize,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.gamma_drift < CONVERGENCE_TOLERANCE && self.b_drift < CONVERGENCE_TOLERANCE
    }
}

/// Mean and standard error, summed in ascending order of value so the result
/// does not depend on the order of realizations.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every realization once over the whole temperature grid. Realization
/// `i` uses the disorder seed [`SweepConfig::realization_seed`] and its own
/// time-sample set, shared by all temperatures.
pub fn temperature_sweep(
    spec: &EnvironmentSpec,
    sys: &SystemParams,
    env_template: &EnvInitialState,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    spec.validate(sys)?;
    let per_realization = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.realization_seed(i);
            let realization = sample_environment(&spec.with_seed(seed), sys)?;
            time_averages(
                &realization,
                sys,
                env_template,
                cfg.averaging.tau,
                cfg.averaging.sampler(seed),
                &cfg.temperatures,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    cfg.temperatures
        .iter()
        .enumerate()
        .map(|(k, &temperature)| {
            let at_t: Vec<&TimeAverage> = per_realization.iter().map(|r| &r[k]).collect();
            let gammas: Vec<f64> = at_t.iter().map(|a| a.gamma_avg).collect();
            let bs: Vec<f64> = at_t.iter().map(|a| a.b_avg).collect();
            let (gamma_avg, gamma_stderr) = mean_stderr(&gammas);
            let (b_avg, b_stderr) = mean_stderr(&bs);
            let half = |f: fn(&TimeAverage) -> f64| mean_stderr(&at_t.iter().map(|a| f(a)).collect::<Vec<_>>()).0;
            let gamma_half = half(|a| a.convergence.gamma_half);
            let b_half = half(|a| a.convergence.b_half);
            Ok(SweepRow {
                temperature,
                gamma_avg,
                gamma_stderr,
                b_avg,
                b_stderr,
                regime: classify_regime(gamma_avg, b_avg, cfg.thresholds)?,
                n_time_samples: cfg.averaging.n_time_samples,
                tau: cfg.averaging.tau,
                gamma_drift: relative_drift(gamma_avg, gamma_half),
                b_drift: relative_drift(b_avg, b_half),
                n_unconverged: at_t.iter().filter(|a| !a.convergence.converged).count(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConfig {
    pub averaging: Averaging,
    pub t_max: f64,
    pub n_points: usize,
    /// Start of the window in which revivals are searched.
    pub revival_start: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    pub axis: SqueezingAxis,
    pub gamma_avg: f64,
    pub b_avg: f64,
    /// Largest `|Γ|` of the time series in `[revival_start, t_max]`.
    pub revival: f64,
    pub convergence: Convergence,
    pub series: TimeSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingComparison {
    pub momentum: AxisReport,
    pub position: AxisReport,
    /// `gamma_avg(position) / gamma_avg(momentum)`.
    pub ratio: f64,
}

/// Runs one realization with the system squeezed in momentum and in position,
/// all other parameters equal.
pub fn position_squeezing_comparison(
    realization: &EnvironmentRealization,
    realization_seed: Option<u64>,
    sys: &SystemParams,
    env: &EnvInitialState,
    cfg: &ComparisonConfig,
) -> Result<SqueezingComparison> {
    if !(cfg.revival_start >= 0.0 && cfg.revival_start < cfg.t_max) {
        return Err(Error::Config(format!(
            "revival window [{}, {}] is empty",
            cfg.revival_start, cfg.t_max
        )));
    }
    let sampler = cfg.averaging.sampler(realization_seed.unwrap_or(0));
    let run = |axis: SqueezingAxis| -> Result<AxisReport> {
        let sys = sys.with_axis(axis);
        let avg = time_average(realization, &sys, env, cfg.averaging.tau, sampler)?;
        let mut series = time_series(realization, &sys, env, cfg.t_max, cfg.n_points)?;
        series.seed = realization_seed;
        let revival = series
            .window_max(cfg.revival_start, cfg.t_max)
            .map_or(0.0, |(g, _)| g);
        Ok(AxisReport {
            axis,
            gamma_avg: avg.gamma_avg,
            b_avg: avg.b_avg,
            revival,
            convergence: avg.convergence,
            series,
        })
    };
    let momentum = run(SqueezingAxis::Momentum)?;
    let position = run(SqueezingAxis::Position)?;
    let ratio = position.gamma_avg / momentum.gamma_avg;
    Ok(SqueezingComparison {
        momentum,
        position,
        ratio,
    })
}
