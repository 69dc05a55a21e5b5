//! Transverse-mode-selective parametric down-conversion in a type II optical
//! parametric oscillator.
//!
//! The crate is organised bottom-up:
//!
//! * [`hg_modes`] evaluates normalised Hermite-Gauss profiles.
//! * [`quadrature`] provides the Gauss-Hermite rules used for overlap integrals.
//! * [`overlap`] computes three-field coupling coefficients and modal expansions.
//! * [`opo_model`] holds the analytic below-threshold OPO model: thresholds,
//!   correlation spectra, the inseparability sum and experimental conversions.
//! * [`pump_optimizer`] finds the coupling-maximising pump superposition and
//!   checks which transverse mode reaches threshold first.
//! * [`langevin`] integrates the linearised Langevin equations as an independent
//!   check of the analytic spectra.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hg_modes;
pub mod langevin;
pub mod opo_model;
pub mod overlap;
pub mod pump_optimizer;
pub mod quadrature;

pub use error::{Error, Result};
pub use hg_modes::{hermite_polynomial, HGMode};
pub use opo_model::{CavityParams, EfficiencyChain, Regime, SpectrumPoint};
pub use overlap::{CouplingResult, Expansion, PumpSuperposition};
