//! Physical constants, system and bath parameters, and disorder sampling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Default bound on the frequency ratio used by the off-resonance guard.
pub const DEFAULT_RESONANCE_RATIO: f64 = 5.0;

/// Default environment oscillator mass in kg. It cancels out of every
/// observable because `C_k² ∝ m_k`.
pub const DEFAULT_ENV_MASS: f64 = 1e-25;

/// Initial squeezing axis of the central oscillator. Selects the classical
/// trajectory `X₀ cos(Ωt)` (momentum) or `X₀ sin(Ωt)` (position).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SqueezingAxis {
    Momentum,
    Position,
}

impl fmt::Display for SqueezingAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqueezingAxis::Momentum => f.write_str("momentum"),
            SqueezingAxis::Position => f.write_str("position"),
        }
    }
}

impl FromStr for SqueezingAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "momentum" => Ok(SqueezingAxis::Momentum),
            "position" => Ok(SqueezingAxis::Position),
            other => Err(Error::Config(format!(
                "unknown squeezing axis '{other}' (expected 'momentum' or 'position')"
            ))),
        }
    }
}

/// Central oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Mass `M` in kg.
    pub mass: f64,
    /// Angular frequency `Ω` in rad/s.
    pub omega: f64,
    pub squeezing_axis: SqueezingAxis,
    /// Branch separation `|X − X′|` in m.
    pub x_sep: f64,
}

impl SystemParams {
    pub fn new(mass: f64, omega: f64, squeezing_axis: SqueezingAxis, x_sep: f64) -> Result<Self> {
        let sys = SystemParams {
            mass,
            omega,
            squeezing_axis,
            x_sep,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Domain(format!("system mass must be > 0, got {}", self.mass)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Domain(format!(
                "system frequency must be > 0, got {}",
                self.omega
            )));
        }
        if !(self.x_sep >= 0.0 && self.x_sep.is_finite()) {
            return Err(Error::Domain(format!(
                "branch separation must be >= 0, got {}",
                self.x_sep
            )));
        }
        Ok(())
    }

    /// Intrinsic period `2π/Ω` of the central oscillator.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn with_axis(mut self, axis: SqueezingAxis) -> Self {
        self.squeezing_axis = axis;
        self
    }
}

/// One bath mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    /// Angular frequency `ω_k` in rad/s.
    pub omega: f64,
    /// Mass `m_k` in kg.
    pub mass: f64,
    /// Coupling `C_k` in kg·s⁻².
    pub coupling: f64,
}

/// True when `omega / omega_big` lies outside `[1/ratio, ratio]`.
pub fn is_off_resonant(omega: f64, omega_big: f64, ratio: f64) -> bool {
    let q = omega / omega_big;
    q < 1.0 / ratio || q > ratio
}

/// `C_k = 2 sqrt(M m_k γ̃₀ / π)`.
pub fn coupling_constant(mass_big: f64, mass_k: f64, gamma0: f64) -> Result<f64> {
    for (name, v) in [("M", mass_big), ("m_k", mass_k), ("gamma0", gamma0)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(2.0 * (mass_big * mass_k * gamma0 / PI).sqrt())
}

/// Disorder distribution of the bath and its partition into a traced
/// fraction plus `n_macrofractions` observed macro-fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub n_total: usize,
    /// Lower bound of the uniform frequency band in rad/s.
    pub omega_low: f64,
    /// Upper bound of the uniform frequency band in rad/s.
    pub omega_high: f64,
    /// Coupling scale `γ̃₀` in s⁻⁴.
    pub gamma0: f64,
    /// Common bath oscillator mass in kg.
    pub m_env: f64,
    pub n_macrofractions: usize,
    pub traced_size: usize,
    pub seed: u64,
    /// Off-resonance guard ratio `ρ > 1`.
    pub resonance_ratio: f64,
    /// Skip the off-resonance band check.
    pub allow_resonant: bool,
}

impl EnvironmentSpec {
    /// Builds a spec from the per-fraction sizes, with the default guard
    /// ratio and bath mass.
    pub fn new(
        omega_low: f64,
        omega_high: f64,
        gamma0: f64,
        macro_size: usize,
        n_macrofractions: usize,
        traced_size: usize,
        seed: u64,
    ) -> Self {
        EnvironmentSpec {
            n_total: traced_size + macro_size * n_macrofractions,
            omega_low,
            omega_high,
            gamma0,
            m_env: DEFAULT_ENV_MASS,
            n_macrofractions,
            traced_size,
            seed,
            resonance_ratio: DEFAULT_RESONANCE_RATIO,
            allow_resonant: false,
        }
    }

    /// Parameter values of the reference numerical study: band 3…6×10⁹ s⁻¹,
    /// `γ̃₀ = 0.33×10¹⁸ s⁻⁴`, one observed macro-fraction, traced fraction of
    /// the same size.
    pub fn reference(macro_size: usize, seed: u64) -> Self {
        EnvironmentSpec::new(3e9, 6e9, 0.33e18, macro_size, 1, macro_size, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnvironmentSpec {
            seed,
            ..self.clone()
        }
    }

    /// Size of each observed macro-fraction.
    pub fn macro_size(&self) -> Result<usize> {
        if self.n_macrofractions == 0 {
            return Err(Error::Config("n_macrofractions must be >= 1".into()));
        }
        let rest = self
            .n_total
            .checked_sub(self.traced_size)
            .ok_or_else(|| {
                Error::Config(format!(
                    "traced_size {} exceeds n_total {}",
                    self.traced_size, self.n_total
                ))
            })?;
        if !rest.is_multiple_of(self.n_macrofractions) {
            return Err(Error::Config(format!(
                "{rest} observed oscillators cannot be split into {} equal macro-fractions",
                self.n_macrofractions
            )));
        }
        Ok(rest / self.n_macrofractions)
    }

    pub fn validate(&self, sys: &SystemParams) -> Result<()> {
        if !(self.omega_low > 0.0 && self.omega_low <= self.omega_high && self.omega_high.is_finite()) {
            return Err(Error::Config(format!(
                "frequency band must satisfy 0 < omega_low <= omega_high, got [{}, {}]",
                self.omega_low, self.omega_high
            )));
        }
        if !(self.gamma0 > 0.0) || !(self.m_env > 0.0) {
            return Err(Error::Config("gamma0 and m_env must be > 0".into()));
        }
        if self.traced_size == 0 {
            return Err(Error::Config("traced_size must be >= 1".into()));
        }
        if self.macro_size()? == 0 {
            return Err(Error::Config("macro-fraction size must be >= 1".into()));
        }
        if !(self.resonance_ratio > 1.0) {
            return Err(Error::Config(format!(
                "resonance_ratio must be > 1, got {}",
                self.resonance_ratio
            )));
        }
        if !self.allow_resonant {
            let lo_bound = sys.omega / self.resonance_ratio;
            let hi_bound = sys.omega * self.resonance_ratio;
            let below = self.omega_high < lo_bound;
            let above = self.omega_low > hi_bound;
            if !(below || above) {
                return Err(Error::Config(format!(
                    "off-resonance rule violated: band [{:e}, {:e}] rad/s must lie below \
                     Omega/rho = {:e} or above Omega*rho = {:e} (Omega = {:e}, rho = {})",
                    self.omega_low, self.omega_high, lo_bound, hi_bound, sys.omega, self.resonance_ratio
                )));
            }
        }
        Ok(())
    }
}

/// One disorder draw, split into the traced fraction and the observed
/// macro-fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentRealization {
    pub traced: Vec<Oscillator>,
    pub macrofractions: Vec<Vec<Oscillator>>,
}

impl EnvironmentRealization {
    pub fn macro_size(&self) -> usize {
        self.macrofractions.first().map_or(0, Vec::len)
    }

    /// First observed macro-fraction. All macro-fractions are statistically
    /// equivalent, so observables are reported for this one.
    pub fn observed(&self) -> &[Oscillator] {
        self.macrofractions.first().map_or(&[], Vec::as_slice)
    }

    pub fn all(&self) -> impl Iterator<Item = &Oscillator> {
        self.traced.iter().chain(self.macrofractions.iter().flatten())
    }
}

/// Draws every `ω_k` i.i.d. uniform on the configured band and partitions the
/// list. Deterministic in `spec.seed`.
pub fn sample_environment(spec: &EnvironmentSpec, sys: &SystemParams) -> Result<EnvironmentRealization> {
    sys.validate()?;
    spec.validate(sys)?;
    let coupling = coupling_constant(sys.mass, spec.m_env, spec.gamma0)?;
    let band = Uniform::new_inclusive(spec.omega_low, spec.omega_high)
        .map_err(|e| Error::Config(format!("invalid frequency band: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let oscillators = (0..spec.n_total)
        .map(|_| Oscillator {
            omega: band.sample(&mut rng),
            mass: spec.m_env,
            coupling,
        })
        .collect();
    partition_macrofractions(oscillators, spec.n_macrofractions, spec.traced_size)
}

/// The first `traced_size` oscillators form the traced fraction, the rest is
/// cut into `n_macrofractions` contiguous equal blocks.
pub fn partition_macrofractions(
    oscillators: Vec<Oscillator>,
    n_macrofractions: usize,
    traced_size: usize,
) -> Result<EnvironmentRealization> {
    if n_macrofractions == 0 || traced_size == 0 {
        return Err(Error::Config(
            "need at least one macro-fraction and a non-empty traced fraction".into(),
        ));
    }
    if oscillators.len() <= traced_size {
        return Err(Error::Config(format!(
            "{} oscillators leave nothing to observe after tracing {traced_size}",
            oscillators.len()
        )));
    }
    let rest = oscillators.len() - traced_size;
    if !rest.is_multiple_of(n_macrofractions) {
        return Err(Error::Config(format!(
            "{rest} observed oscillators cannot be split into {n_macrofractions} equal macro-fractions"
        )));
    }
    let size = rest / n_macrofractions;
    let mut iter = oscillators.into_iter();
    let traced: Vec<_> = iter.by_ref().take(traced_size).collect();
    let observed: Vec<_> = iter.collect();
    let macrofractions = observed.chunks(size).map(<[Oscillator]>::to_vec).collect();
    Ok(EnvironmentRealization {
        traced,
        macrofractions,
    })
}

/// Initial state of every bath mode: a thermal state at `temperature`,
/// optionally squeezed by `ξ = r e^{iθ}`, displaced by `γ` and rotated by `ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvInitialState {
    /// Temperature in K.
    pub temperature: f64,
    pub squeeze_r: f64,
    pub squeeze_theta: f64,
    pub rot_psi: f64,
    /// Displacement `γ`. Only contributes phases that the moduli remove, so
    /// it never enters `|Γ|` or `B`.
    pub displacement: Complex64,
}

impl EnvInitialState {
    pub fn thermal(temperature: f64) -> Self {
        EnvInitialState {
            temperature,
            squeeze_r: 0.0,
            squeeze_theta: 0.0,
            rot_psi: 0.0,
            displacement: Complex64::new(0.0, 0.0),
        }
    }

    pub fn squeezed(temperature: f64, r: f64, theta: f64, psi: f64) -> Self {
        EnvInitialState {
            squeeze_r: r,
            squeeze_theta: theta,
            rot_psi: psi,
            ..EnvInitialState::thermal(temperature)
        }
    }

    pub fn at_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Domain(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.squeeze_r >= 0.0 && self.squeeze_r.is_finite()) {
            return Err(Error::Domain(format!(
                "squeezing r must be >= 0, got {}",
                self.squeeze_r
            )));
        }
        if !(self.squeeze_theta.is_finite() && self.rot_psi.is_finite()) {
            return Err(Error::Domain("squeezing angles must be finite".into()));
        }
        Ok(())
    }

    /// Set when a non-zero displacement was supplied; callers surface it as a
    /// warning since the value has no effect.
    pub fn displacement_ignored(&self) -> bool {
        self.displacement != Complex64::new(0.0, 0.0)
    }
}

/// SplitMix64 finalizer applied to `master` and `index`. Used to derive
/// per-realization and per-sampler seeds from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_system() -> SystemParams {
        SystemParams::new(1e-5, 3e8, SqueezingAxis::Momentum, 1e-9).unwrap()
    }

    #[test]
    fn coupling_reference_values() {
        let c = coupling_constant(1e-5, 1e-25, 0.33e18).unwrap();
        assert_relative_eq!(c, 2.0 * (1e-5 * 1e-25 * 0.33e18 / PI).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(coupling_constant(PI, 1.0, 1.0).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn coupling_squared_over_mass_is_mass_independent() {
        let (big, g0) = (1e-5, 0.33e18);
        let expected = 4.0 * big * g0 / PI;
        for m in [1e-30, 1.0] {
            let c = coupling_constant(big, m, g0).unwrap();
            assert_relative_eq!(c * c / m, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn coupling_scale_covariance() {
        let base = coupling_constant(2e-5, 1e-25, 0.33e18).unwrap();
        for lambda in [0.25, 3.0, 1e4] {
            let scaled = coupling_constant(lambda * 2e-5, 1e-25, 0.33e18).unwrap();
            assert_relative_eq!(scaled, lambda.sqrt() * base, max_relative = 1e-14);
        }
    }

    #[test]
    fn coupling_rejects_non_positive() {
        assert!(coupling_constant(0.0, 1.0, 1.0).is_err());
        assert!(coupling_constant(1.0, -1.0, 1.0).is_err());
        assert!(coupling_constant(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn reference_band_is_accepted() {
        let sys = reference_system();
        let spec = EnvironmentSpec::reference(30, 3);
        let env = sample_environment(&spec, &sys).unwrap();
        assert_eq!(env.traced.len(), 30);
        assert_eq!(env.macrofractions.len(), 1);
        assert_eq!(env.observed().len(), 30);
        for osc in env.all() {
            assert!((3e9..=6e9).contains(&osc.omega));
            assert!(is_off_resonant(osc.omega, sys.omega, spec.resonance_ratio));
        }
    }

    #[test]
    fn band_containing_omega_is_rejected() {
        let sys = reference_system();
        let mut spec = EnvironmentSpec::reference(10, 0);
        spec.omega_low = 1e8;
        spec.omega_high = 6e8;
        let err = sample_environment(&spec, &sys).unwrap_err();
        assert!(err.to_string().contains("off-resonance"), "{err}");
        spec.allow_resonant = true;
        assert!(sample_environment(&spec, &sys).is_ok());
    }

    #[test]
    fn same_seed_same_realization() {
        let sys = reference_system();
        let spec = EnvironmentSpec::reference(30, 11);
        let a = sample_environment(&spec, &sys).unwrap();
        let b = sample_environment(&spec, &sys).unwrap();
        assert_eq!(a, b);
        let c = sample_environment(&spec.with_seed(12), &sys).unwrap();
        assert_ne!(a, c);
    }

    fn dummy(n: usize) -> Vec<Oscillator> {
        (0..n)
            .map(|i| Oscillator {
                omega: 1e9 + i as f64,
                mass: 1.0,
                coupling: 1.0,
            })
            .collect()
    }

    #[test]
    fn partition_sizes() {
        let env = partition_macrofractions(dummy(60), 1, 30).unwrap();
        assert_eq!((env.traced.len(), env.macro_size()), (30, 30));
        let env = partition_macrofractions(dummy(20), 1, 10).unwrap();
        assert_eq!((env.traced.len(), env.macro_size()), (10, 10));
        let env = partition_macrofractions(dummy(13), 2, 3).unwrap();
        assert_eq!(env.macrofractions.len(), 2);
        assert_eq!(env.macrofractions[1][0].omega, 1e9 + 8.0);
    }

    #[test]
    fn partition_rejects_uneven_remainder() {
        assert!(matches!(
            partition_macrofractions(dummy(7), 3, 3),
            Err(Error::Config(_))
        ));
        assert!(partition_macrofractions(dummy(7), 2, 3).is_ok());
        assert!(partition_macrofractions(dummy(3), 1, 3).is_err());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<_> = (0..1000).map(|i| derive_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
