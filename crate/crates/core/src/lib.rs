//! Biphoton spectral simulation for microring photon-pair sources with
//! backscattering-split resonances.
//!
//! The numeric core is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix it to `f64`, which is what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod io;
pub mod jsa;
pub mod num;
pub mod phasematch;
pub mod presets;
pub mod profile;
pub mod pump;
pub mod resonator;
pub mod specfit;
pub mod units;

pub use error::{Error, Result};
pub use num::Real;

pub type Omega = units::AngularFrequency<f64>;
pub type Grid = units::DetuningGrid<f64>;
pub type Resonance = resonator::SplitResonance<f64>;
pub type Sample = specfit::SpectrumSample<f64>;
pub type Fit = specfit::FitResult<f64>;
pub type Pump = pump::PumpSpec<f64>;
pub type PhaseMatch = phasematch::PhaseMatchSpec<f64>;
pub type Source = jsa::SourceConfig<f64>;
pub type Jsa = jsa::JsaGrid<f64>;
pub type Report = analysis::AnalysisReport<f64>;
pub type Config = config::SimulationConfig<f64>;
