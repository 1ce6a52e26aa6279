//! Decoherence and spectrum broadcast structure (SBS) formation for a massive
//! central oscillator linearly coupled to a discrete, randomly tuned thermal
//! bath of oscillators.
//!
//! The crate evaluates two closed-form observables along the system's
//! classical trajectories:
//!
//! - the decoherence factor `|Γ(t)|` produced by the traced part of the bath,
//! - the generalized overlap `B(t) = tr sqrt(sqrt(ρ₁) ρ₂ sqrt(ρ₁))` between the
//!   states one observed macro-fraction holds for two initial positions.
//!
//! Both vanishing together signals an SBS. The [`oracle`] module re-derives
//! the per-oscillator closed forms by brute force in a truncated Fock space.
//!
//! Module map:
//!
//! - [`model`]: physical constants, parameters, disorder sampling.
//! - [`dynamics`]: displacement amplitudes `α_k(t)` and their Gaussian transform.
//! - [`observables`]: `|Γ|`, `B`, their logs, and the regime classifier.
//! - [`oracle`]: Fock-space brute force.
//! - [`sweeps`]: time series, time averages, temperature sweeps.
//! - [`cli`]: configuration and subcommands of the `qbm-sbs` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
mod error;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod sweeps;

pub use error::{Error, Result};
