//! Simulation of stimulated Raman adiabatic passage (STIRAP), optionally
//! assisted by a counter-diabatic field, in vibrational manifolds where the
//! three transfer states are embedded among many coupled background states.
//!
//! * [`spectro`]: units, level tables and transition dipole data
//! * [`pulse`]: Gaussian pump/Stokes pulses, mixing angle and CDF
//! * [`dynamics`]: full-manifold RK4 propagation
//! * [`rwa3`]: three-level rotating-wave oracle with the exact CD term
//! * [`scenarios`]: reference transfers and parameter scans

pub mod dynamics;
pub mod error;
pub mod pulse;
mod quad;
pub mod rwa3;
pub mod scenarios;
pub mod spectro;

pub use dynamics::{convergence_check, propagate, Picture, PropagationConfig, PropagationResult};
pub use error::{Error, Result};
pub use pulse::{Field, GaussianPulse, StirapDrive, Waveform};
pub use rwa3::Rwa3System;
pub use scenarios::{fidelity, Scenario, ScanMode, ScanResult};
pub use spectro::{intensity_of_field, Dataset, LevelSystem, UNITS};
