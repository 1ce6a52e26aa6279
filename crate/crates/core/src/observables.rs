//! Decoherence factor `|Γ|`, macro-fraction overlap `B`, and the regime
//! classifier.
//!
//! For a thermal bath every oscillator contributes independently:
//!
//! ```text
//! ln Γ_k = −η_k²/2 · coth(ħω_k / 2k_BT)
//! ln B_k = −η_k²/2 · tanh(ħω_k / 2k_BT),     η_k² = (X−X′)² |α̃_k(t)|² / ħ
//! ```
//!
//! `tanh(ħω/2k_BT)` is the purity of the thermal state. Everything is summed
//! in log space in oscillator order; exponentials are taken last.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{alpha, alpha_gaussian, Amplitude};
use crate::model::{EnvInitialState, Oscillator, SystemParams, HBAR, K_B};
use crate::{Error, Result};

/// Values below this are reported as exactly zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Purity `tr ρ² = tanh(ħω/2k_BT)` of a thermal mode. Exactly 1 at `T = 0`.
pub fn thermal_purity(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        (HBAR * omega / (2.0 * K_B * temperature)).tanh()
    }
}

/// `ln Γ_k` for a dimensionless squared displacement `η²` and purity `p`.
#[inline]
pub fn log_gamma_term(eta_sq: f64, purity: f64) -> f64 {
    -0.5 * eta_sq / purity
}

/// `ln B_k` for a dimensionless squared displacement `η²` and purity `p`.
#[inline]
pub fn log_b_term(eta_sq: f64, purity: f64) -> f64 {
    -0.5 * eta_sq * purity
}

/// `exp(log)` with the underflow policy applied.
pub fn from_log(log: f64) -> f64 {
    let v = log.exp();
    if v < UNDERFLOW_FLOOR {
        0.0
    } else {
        v
    }
}

/// Amplitude after the Gaussian substitution. Plain thermal states (`r = 0`)
/// use `α_k` unchanged.
pub fn effective_alpha(
    osc: &Oscillator,
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
) -> Result<Amplitude> {
    let a = alpha(osc, sys, t)?;
    if env.squeeze_r > 0.0 {
        Ok(alpha_gaussian(a, env.squeeze_r, env.squeeze_theta, env.rot_psi))
    } else {
        Ok(a)
    }
}

/// Dimensionless `η² = (X−X′)² |α̃(t)|² / ħ`.
pub fn eta_sq(osc: &Oscillator, sys: &SystemParams, env: &EnvInitialState, t: f64) -> Result<f64> {
    let a = effective_alpha(osc, sys, env, t)?;
    Ok(sys.x_sep * sys.x_sep * a.norm_sqr() / HBAR)
}

fn check_inputs(fraction: &[Oscillator], env: &EnvInitialState) -> Result<()> {
    if fraction.is_empty() {
        return Err(Error::Domain("oscillator fraction is empty".into()));
    }
    env.validate()
}

/// `(ln Γ_k, ln B_k)` of a single oscillator.
pub fn oscillator_logs(
    osc: &Oscillator,
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
) -> Result<(f64, f64)> {
    let e = eta_sq(osc, sys, env, t)?;
    let p = thermal_purity(osc.omega, env.temperature);
    Ok((log_gamma_term(e, p), log_b_term(e, p)))
}

fn sum_logs(
    fraction: &[Oscillator],
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
    term: fn(f64, f64) -> f64,
) -> Result<f64> {
    check_inputs(fraction, env)?;
    fraction.iter().try_fold(0.0, |acc, osc| {
        let e = eta_sq(osc, sys, env, t)?;
        Ok(acc + term(e, thermal_purity(osc.omega, env.temperature)))
    })
}

/// `|Γ_{X,X′}(t)|` produced by tracing out `fraction`.
pub fn decoherence_factor(
    fraction: &[Oscillator],
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
) -> Result<f64> {
    sum_logs(fraction, sys, env, t, log_gamma_term).map(from_log)
}

/// `B^mac_{X,X′}(t)` for the macro-fraction `mac`.
pub fn overlap_macrofraction(
    mac: &[Oscillator],
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
) -> Result<f64> {
    sum_logs(mac, sys, env, t, log_b_term).map(from_log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorLog {
    /// Position in `traced ++ observed`.
    pub index: usize,
    pub log_gamma: f64,
    pub log_b: f64,
}

/// `ln |Γ|` over the traced fraction and `ln B` over an observed
/// macro-fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct LogExponents {
    pub gamma_log: f64,
    pub b_log: f64,
    pub per_oscillator: Option<Vec<OscillatorLog>>,
}

impl LogExponents {
    pub fn gamma(&self) -> f64 {
        from_log(self.gamma_log)
    }

    pub fn b(&self) -> f64 {
        from_log(self.b_log)
    }
}

/// Log-space form of [`decoherence_factor`] and [`overlap_macrofraction`].
/// With `detail`, per-oscillator `(ln Γ_k, ln B_k)` pairs are attached for
/// every oscillator of both lists.
pub fn log_exponents(
    traced: &[Oscillator],
    observed: &[Oscillator],
    sys: &SystemParams,
    env: &EnvInitialState,
    t: f64,
    detail: bool,
) -> Result<LogExponents> {
    check_inputs(traced, env)?;
    check_inputs(observed, env)?;
    let n_traced = traced.len();
    let mut gamma_log = 0.0;
    let mut b_log = 0.0;
    let mut per = detail.then(|| Vec::with_capacity(n_traced + observed.len()));
    for (index, osc) in traced.iter().chain(observed).enumerate() {
        let (lg, lb) = oscillator_logs(osc, sys, env, t)?;
        if index < n_traced {
            gamma_log += lg;
        } else {
            b_log += lb;
        }
        if let Some(per) = per.as_mut() {
            per.push(OscillatorLog {
                index,
                log_gamma: lg,
                log_b: lb,
            });
        }
    }
    Ok(LogExponents {
        gamma_log,
        b_log,
        per_oscillator: per,
    })
}

/// Qualitative regime of a (`⟨|Γ|⟩`, `⟨B⟩`) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Decoherence and distinguishable records: spectrum broadcast structure.
    Sbs,
    /// Decohered, but the records are imperfect.
    ClassicalQuantum,
    /// Coherence survives.
    Coherent,
    Indeterminate,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Sbs => "SBS",
            Regime::ClassicalQuantum => "ClassicalQuantum",
            Regime::Coherent => "Coherent",
            Regime::Indeterminate => "Indeterminate",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SBS" => Ok(Regime::Sbs),
            "ClassicalQuantum" => Ok(Regime::ClassicalQuantum),
            "Coherent" => Ok(Regime::Coherent),
            "Indeterminate" => Ok(Regime::Indeterminate),
            _ => Err(Error::Config(format!("unknown regime '{s}'"))),
        }
    }
}

/// Thresholds of [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Below this an average counts as practically zero.
    pub eps: f64,
    /// At or above this an average counts as clearly non-zero.
    pub eps_hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            eps: 0.05,
            eps_hi: 0.3,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.eps && self.eps < self.eps_hi && self.eps_hi < 1.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < eps < eps_hi < 1, got eps = {}, eps_hi = {}",
                self.eps, self.eps_hi
            )));
        }
        Ok(())
    }
}

pub fn classify_regime(gamma_avg: f64, b_avg: f64, thresholds: Thresholds) -> Result<Regime> {
    thresholds.validate()?;
    for (name, v) in [("gamma_avg", gamma_avg), ("b_avg", b_avg)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let Thresholds { eps, eps_hi } = thresholds;
    Ok(if gamma_avg < eps && b_avg < eps {
        Regime::Sbs
    } else if gamma_avg < eps && b_avg >= eps_hi {
        Regime::ClassicalQuantum
    } else if gamma_avg >= eps_hi {
        Regime::Coherent
    } else {
        Regime::Indeterminate
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coupling_constant, SqueezingAxis};
    use approx::assert_relative_eq;

    fn sys() -> SystemParams {
        SystemParams::new(1e-5, 3e8, SqueezingAxis::Momentum, 1e-9).unwrap()
    }

    fn bath(n: usize) -> Vec<Oscillator> {
        let c = coupling_constant(1e-5, 1e-25, 0.33e18).unwrap();
        (0..n)
            .map(|i| Oscillator {
                omega: 3e9 + 3e9 * ((i as f64 * 0.618_033_988_75) % 1.0),
                mass: 1e-25,
                coupling: c,
            })
            .collect()
    }

    #[test]
    fn zero_separation_gives_one() {
        let s = SystemParams { x_sep: 0.0, ..sys() };
        for t in [0.0, 1e-10, 3e-9] {
            for temp in [0.0, 1e-2, 10.0] {
                let env = EnvInitialState::thermal(temp);
                assert_eq!(decoherence_factor(&bath(5), &s, &env, t).unwrap(), 1.0);
                assert_eq!(overlap_macrofraction(&bath(5), &s, &env, t).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn one_at_t_zero() {
        let env = EnvInitialState::thermal(1e-2);
        assert_eq!(decoherence_factor(&bath(30), &sys(), &env, 0.0).unwrap(), 1.0);
        assert_eq!(overlap_macrofraction(&bath(30), &sys(), &env, 0.0).unwrap(), 1.0);
        let l = log_exponents(&bath(3), &bath(4), &sys(), &env, 0.0, false).unwrap();
        assert_eq!((l.gamma_log, l.b_log), (0.0, 0.0));
    }

    #[test]
    fn temperature_monotonicity() {
        let osc = bath(8);
        let t = 2.3e-9;
        let mut prev = (f64::INFINITY, 0.0);
        for i in 0..=40 {
            let temp = 10f64.powf(-5.0 + 0.15 * i as f64);
            let env = EnvInitialState::thermal(temp);
            let g = decoherence_factor(&osc, &sys(), &env, t).unwrap();
            let b = overlap_macrofraction(&osc, &sys(), &env, t).unwrap();
            assert!(g <= prev.0 && b >= prev.1, "T={temp}");
            prev = (g, b);
        }
        let cold = decoherence_factor(&osc, &sys(), &EnvInitialState::thermal(1e-2), t).unwrap();
        let hot = decoherence_factor(&osc, &sys(), &EnvInitialState::thermal(10.0), t).unwrap();
        assert!(hot < cold);
    }

    #[test]
    fn hot_bath_cannot_discriminate() {
        let env = EnvInitialState::thermal(1e6);
        for i in 1..50 {
            let t = i as f64 * 4.1e-10;
            let b = overlap_macrofraction(&bath(30), &sys(), &env, t).unwrap();
            assert!(b > 1.0 - 1e-3, "t={t}: {b}");
        }
    }

    #[test]
    fn zero_temperature_equality() {
        let env = EnvInitialState::thermal(0.0);
        let osc = bath(12);
        for t in [1e-10, 7e-10, 5e-9] {
            assert_eq!(
                decoherence_factor(&osc, &sys(), &env, t).unwrap(),
                overlap_macrofraction(&osc, &sys(), &env, t).unwrap()
            );
        }
    }

    #[test]
    fn log_product_identity() {
        let s = sys();
        for temp in [1e-3, 0.1, 4.0] {
            let env = EnvInitialState::thermal(temp);
            for osc in bath(6) {
                let t = 1.7e-9;
                let (lg, lb) = oscillator_logs(&osc, &s, &env, t).unwrap();
                let e = eta_sq(&osc, &s, &env, t).unwrap();
                assert_relative_eq!(lg * lb, (0.5 * e).powi(2), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn logs_are_additive_and_match_products() {
        let env = EnvInitialState::thermal(2e-2);
        let osc = bath(10);
        let doubled: Vec<_> = osc.iter().chain(&osc).copied().collect();
        let t = 3.3e-9;
        let one = log_exponents(&osc, &osc, &sys(), &env, t, true).unwrap();
        let two = log_exponents(&doubled, &doubled, &sys(), &env, t, false).unwrap();
        assert_relative_eq!(two.gamma_log, 2.0 * one.gamma_log, max_relative = 1e-14);
        assert_relative_eq!(two.b_log, 2.0 * one.b_log, max_relative = 1e-14);
        assert_eq!(one.per_oscillator.as_ref().unwrap().len(), 20);
        assert_relative_eq!(
            one.gamma(),
            decoherence_factor(&osc, &sys(), &env, t).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            one.b(),
            overlap_macrofraction(&osc, &sys(), &env, t).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn underflow_reports_zero() {
        assert_eq!(from_log(-800.0), 0.0);
        assert_eq!(from_log(0.0), 1.0);
    }

    #[test]
    fn errors() {
        let env = EnvInitialState::thermal(1.0);
        assert!(decoherence_factor(&[], &sys(), &env, 1e-9).is_err());
        let cold = EnvInitialState::thermal(-1.0);
        assert!(overlap_macrofraction(&bath(2), &sys(), &cold, 1e-9).is_err());
    }

    #[test]
    fn regimes() {
        let th = Thresholds::default();
        assert_eq!(classify_regime(0.01, 0.01, th).unwrap(), Regime::Sbs);
        assert_eq!(classify_regime(0.01, 0.6, th).unwrap(), Regime::ClassicalQuantum);
        assert_eq!(classify_regime(0.9, 0.95, th).unwrap(), Regime::Coherent);
        assert_eq!(classify_regime(0.1, 0.1, th).unwrap(), Regime::Indeterminate);
        let bad = Thresholds { eps: 0.4, eps_hi: 0.3 };
        assert!(matches!(classify_regime(0.1, 0.1, bad), Err(Error::Config(_))));
        assert!(classify_regime(1.5, 0.1, th).is_err());
    }
}
