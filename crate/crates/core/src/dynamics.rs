//! Closed-form displacement amplitudes of the driven bath modes.
//!
//! Along the trajectory `X(t) = X₀ f(t)` each bath mode is displaced by
//! `α_k(t) X₀` with
//!
//! ```text
//! α_k(t) = −i C_k / sqrt(2 m_k ω_k) ∫₀ᵗ e^{iω_k s} f(s) ds
//! ```
//!
//! and `f = cos(Ωt)` (momentum squeezing) or `f = sin(Ωt)` (position
//! squeezing). Amplitudes here carry SI units of `sqrt(kg/s)`; the
//! observables layer divides by `sqrt(ħ)`.

use num_complex::Complex64;

use crate::model::{Oscillator, SqueezingAxis, SystemParams};
use crate::{Error, Result};

/// Minimal allowed `|ω_k − Ω|` in rad/s.
pub const RESONANCE_FLOOR: f64 = 1e3;

/// Complex displacement amplitude of one bath mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude(pub Complex64);

impl Amplitude {
    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn abs(self) -> f64 {
        self.0.norm()
    }
}

/// `e^{ix} − 1` without cancellation near `x = 0`.
fn expm1_i(x: f64) -> Complex64 {
    let half = 0.5 * x;
    Complex64::new(0.0, 2.0 * half.sin()) * Complex64::cis(half)
}

fn check(osc: &Oscillator, sys: &SystemParams, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if !(osc.omega > 0.0 && osc.mass > 0.0) {
        return Err(Error::Domain(format!(
            "oscillator needs omega > 0 and mass > 0, got {osc:?}"
        )));
    }
    let gap = (osc.omega - sys.omega).abs();
    if gap < RESONANCE_FLOOR {
        return Err(Error::Resonance {
            gap,
            floor: RESONANCE_FLOOR,
        });
    }
    Ok(())
}

/// The two terms `(e^{i(ω+Ω)t} − 1)/(ω+Ω)` and `(e^{i(ω−Ω)t} − 1)/(ω−Ω)`.
fn brackets(osc: &Oscillator, sys: &SystemParams, t: f64) -> (Complex64, Complex64) {
    let ew = expm1_i(osc.omega * t);
    let ep = expm1_i(sys.omega * t);
    let em = expm1_i(-sys.omega * t);
    let sum = ew * ep + ew + ep;
    let diff = ew * em + ew + em;
    (sum / (osc.omega + sys.omega), diff / (osc.omega - sys.omega))
}

fn prefactor(osc: &Oscillator) -> f64 {
    osc.coupling / (2.0 * (2.0 * osc.mass * osc.omega).sqrt())
}

/// Amplitude for the momentum-squeezed system, trajectory `X₀ cos(Ωt)`.
pub fn alpha_momentum(osc: &Oscillator, sys: &SystemParams, t: f64) -> Result<Amplitude> {
    check(osc, sys, t)?;
    let (plus, minus) = brackets(osc, sys, t);
    Ok(Amplitude(-prefactor(osc) * (plus + minus)))
}

/// Amplitude for the position-squeezed system, trajectory `X₀ sin(Ωt)`.
pub fn alpha_position(osc: &Oscillator, sys: &SystemParams, t: f64) -> Result<Amplitude> {
    check(osc, sys, t)?;
    let (plus, minus) = brackets(osc, sys, t);
    // −1/(2i) = i/2
    Ok(Amplitude(Complex64::new(0.0, prefactor(osc)) * (plus - minus)))
}

/// Dispatches on `sys.squeezing_axis`.
pub fn alpha(osc: &Oscillator, sys: &SystemParams, t: f64) -> Result<Amplitude> {
    match sys.squeezing_axis {
        SqueezingAxis::Momentum => alpha_momentum(osc, sys, t),
        SqueezingAxis::Position => alpha_position(osc, sys, t),
    }
}

/// Real closed form of `|α_k(t)|²` for momentum squeezing:
///
/// ```text
/// C²ω / (2m(ω²−Ω²)²) · [(cos ωt − cos Ωt)² + (sin ωt − (Ω/ω) sin Ωt)²]
/// ```
pub fn alpha_sq_momentum(osc: &Oscillator, sys: &SystemParams, t: f64) -> Result<f64> {
    check(osc, sys, t)?;
    let (w, big) = (osc.omega, sys.omega);
    // cos a − cos b = −2 sin((a+b)/2) sin((a−b)/2)
    let cos_diff = -2.0 * (0.5 * (w + big) * t).sin() * (0.5 * (w - big) * t).sin();
    let sin_diff = (w * t).sin() - (big / w) * (big * t).sin();
    let d = (w - big) * (w + big);
    Ok(osc.coupling * osc.coupling * w / (2.0 * osc.mass * d * d)
        * (cos_diff * cos_diff + sin_diff * sin_diff))
}

/// Amplitude seen by a bath mode prepared in a squeezed, rotated thermal
/// state `e^{iψa†a} S(ξ) ρ_T S(ξ)† e^{−iψa†a}` with
/// `S(ξ) = exp[(ξ* a² − ξ a†²)/2]`, `ξ = r e^{iθ}`:
///
/// ```text
/// α̃ = cosh r · [e^{−iψ} α + e^{i(ψ+θ)} α* tanh r]
/// ```
///
/// so that `|α̃| = |α|` at `r = 0`, and for real `α`, `ψ = 0` the amplitude
/// is stretched by `e^r` at `θ = 0` and compressed by `e^{−r}` at `θ = π`.
pub fn alpha_gaussian(alpha: Amplitude, r: f64, theta: f64, psi: f64) -> Amplitude {
    let a = alpha.0;
    let rotated = Complex64::cis(-psi) * a;
    let conj_term = Complex64::cis(psi + theta) * a.conj() * r.tanh();
    Amplitude((rotated + conj_term) * r.cosh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::coupling_constant;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sys(axis: SqueezingAxis) -> SystemParams {
        SystemParams::new(1e-5, 3e8, axis, 1e-9).unwrap()
    }

    fn osc(omega: f64) -> Oscillator {
        Oscillator {
            omega,
            mass: 1e-25,
            coupling: coupling_constant(1e-5, 1e-25, 0.33e18).unwrap(),
        }
    }

    // 5-point Gauss-Legendre on [-1, 1].
    const GL_NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const GL_WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];

    /// ∫₀ᵗ e^{iωs} f(s) ds by composite Gauss-Legendre with at least 10⁴
    /// panels per period of the fastest oscillation.
    fn quadrature(omega: f64, big: f64, t: f64, f: impl Fn(f64) -> f64) -> Complex64 {
        let periods = t * (omega + big) / (2.0 * PI);
        let panels = (1e4 * periods.max(1.0)).ceil() as usize;
        let h = t / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let s = mid + 0.5 * h * x;
                acc += Complex64::cis(omega * s) * (w * f(s));
            }
        }
        acc * (0.5 * h)
    }

    fn scale(o: &Oscillator) -> Complex64 {
        Complex64::new(0.0, -o.coupling / (2.0 * o.mass * o.omega).sqrt())
    }

    #[test]
    fn zero_at_t_zero() {
        for axis in [SqueezingAxis::Momentum, SqueezingAxis::Position] {
            let a = alpha(&osc(4.5e9), &sys(axis), 0.0).unwrap();
            assert_eq!(a.norm_sqr(), 0.0);
        }
        assert_eq!(alpha_sq_momentum(&osc(4.5e9), &sys(SqueezingAxis::Momentum), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn momentum_matches_quadrature() {
        let s = sys(SqueezingAxis::Momentum);
        for (w, t) in [(4.5e9, 1e-9), (3.1e9, 2.7e-9), (5.9e9, 4e-10)] {
            let o = osc(w);
            let a = alpha_momentum(&o, &s, t).unwrap().value();
            let q = scale(&o) * quadrature(w, s.omega, t, |x| (s.omega * x).cos());
            assert!((a - q).norm() / q.norm() < 1e-9, "w={w} t={t}: {a} vs {q}");
        }
    }

    #[test]
    fn position_matches_quadrature() {
        let s = sys(SqueezingAxis::Position);
        for (w, t) in [(4.5e9, 1e-9), (3.1e9, 2.7e-9), (5.9e9, 6e-9)] {
            let o = osc(w);
            let a = alpha_position(&o, &s, t).unwrap().value();
            let q = scale(&o) * quadrature(w, s.omega, t, |x| (s.omega * x).sin());
            assert!((a - q).norm() / q.norm() < 1e-9, "w={w} t={t}: {a} vs {q}");
        }
    }

    #[test]
    fn closed_real_form_matches_modulus() {
        let s = sys(SqueezingAxis::Momentum);
        for w in [3e9, 4.2e9, 6e9] {
            let o = osc(w);
            for i in 1..=1000 {
                let t = 2e-8 * i as f64 / 1000.0;
                let a = alpha_momentum(&o, &s, t).unwrap().norm_sqr();
                let b = alpha_sq_momentum(&o, &s, t).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
                assert!(b > 0.0);
            }
        }
    }

    #[test]
    fn amplitude_bound_holds() {
        for axis in [SqueezingAxis::Momentum, SqueezingAxis::Position] {
            let s = sys(axis);
            for w in [3e9, 4.5e9, 6e9] {
                let o = osc(w);
                let bound = o.coupling / (2.0 * o.mass * w).sqrt()
                    * 2.0
                    * (1.0 / (w + s.omega) + 1.0 / (w - s.omega).abs());
                for i in 0..2000 {
                    let t = 1e-11 * i as f64 * 7.3;
                    assert!(alpha(&o, &s, t).unwrap().abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn position_vanishes_for_slow_system() {
        let w = 4.5e9;
        let s = SystemParams::new(1e-5, 1e-3 * w, SqueezingAxis::Position, 1e-9).unwrap();
        let o = osc(w);
        let unit = o.coupling / (2.0 * o.mass * w).sqrt();
        for t in [1e-10, 1e-9, 5e-9, 2e-8] {
            let a = alpha_position(&o, &s, t).unwrap().abs();
            // |∫ e^{iωs} sin(Ωs) ds| <= 3Ωt/ω after one integration by parts
            assert!(a <= unit * 3.0 * s.omega * t / w, "t={t}");
        }
    }

    #[test]
    fn resonance_floor() {
        let s = sys(SqueezingAxis::Momentum);
        let err = alpha_momentum(&osc(3e8 + 10.0), &s, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Resonance { .. }));
        assert!(alpha_position(&osc(3e8), &s, 1e-9).is_err());
        assert!(alpha_momentum(&osc(4e9), &s, -1.0).is_err());
    }

    #[test]
    fn gaussian_identity_and_rotation() {
        let a = Amplitude(Complex64::new(0.3, -1.7));
        assert_eq!(alpha_gaussian(a, 0.0, 0.4, 0.0), a);
        for psi in [0.3, 1.0, 2.5] {
            let b = alpha_gaussian(a, 0.0, 1.1, psi);
            assert_relative_eq!(b.abs(), a.abs(), max_relative = 1e-15);
        }
    }

    #[test]
    fn gaussian_real_amplitude_stretch() {
        let a = Amplitude(Complex64::new(0.8, 0.0));
        for r in [0.5, 1.0, 5.0] {
            let up = alpha_gaussian(a, r, 0.0, 0.0).value();
            assert_relative_eq!(up.re, 0.8 * r.exp(), max_relative = 1e-14);
            assert_eq!(up.im, 0.0);
            let down = alpha_gaussian(a, r, PI, 0.0).value();
            assert_relative_eq!(down.re, 0.8 * (-r).exp(), max_relative = 1e-9);
        }
    }

    #[test]
    fn gaussian_growth_bound() {
        let a = Amplitude(Complex64::new(-0.4, 1.3));
        for r in [0.1, 1.0, 3.0] {
            for i in 0..32 {
                for j in 0..32 {
                    let theta = 2.0 * PI * i as f64 / 32.0;
                    let psi = 2.0 * PI * j as f64 / 32.0;
                    let b = alpha_gaussian(a, r, theta, psi);
                    assert!(b.norm_sqr() <= (2.0 * r).exp() * a.norm_sqr() * (1.0 + 1e-12));
                }
            }
        }
    }
}
