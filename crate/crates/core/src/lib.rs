//! Simulator and analysis toolkit for a silicon photonic chip with two
//! spontaneous four-wave-mixing pair sources inside a Mach-Zehnder
//! interferometer.
//!
//! The numerical modules are generic over the scalar type ([`Real`], i.e.
//! `f32` or `f64`); the aliases at the crate root fix it to `f64`, which is
//! what configuration loading, sampling and the experiment drivers use.

pub mod circuit;
pub mod config;
pub mod counts;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod fock;
pub mod hom;
mod linalg;
pub mod pairgen;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type QuantumState = fock::QuantumState<f64>;
pub type LinearMap = fock::LinearMap<f64>;
pub type CircuitSpec = circuit::CircuitSpec<f64>;
pub type PumpField = circuit::PumpField<f64>;
pub type HeaterModel = circuit::HeaterModel<f64>;
pub type PairProcess = pairgen::PairProcess<f64>;
pub type HomSetup = hom::HomSetup<f64>;
pub type DetectionChain = counts::DetectionChain<f64>;
pub type CountRecord = counts::CountRecord<f64>;
pub type FitResult = fit::FitResult<f64>;
pub type FringeModel = fit::FringeModel<f64>;
