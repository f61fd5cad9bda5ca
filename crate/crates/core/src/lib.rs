//! Simulation and analysis of parametric down-conversion photon pairs.
//!
//! The crate builds joint spectral amplitudes (JSAs) from a chirped Gaussian
//! pump and a Gaussian or sinc phasematching function, predicts Hong-Ou-Mandel
//! (HOM) coincidence scans both by quadrature and in closed form, transforms
//! the state into the time domain, and fits measured dip scans.
//!
//! All quantities are SI: angular frequencies and detunings in rad/s, times in
//! seconds, lengths in meters. User-facing helpers that take nanometers or
//! picoseconds say so in their names.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod grid;
pub mod hom;
pub mod io;
pub mod jsa;
pub mod preset;
pub mod report;
pub mod schmidt;
pub mod spectral;
pub mod temporal;
pub mod units;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use hom::{DelayScan, HomModel, HomResult};
pub use jsa::{GaussianJsaParams, JointSpectralAmplitude, SpectralFilter};
pub use preset::SourcePreset;
pub use spectral::{PhasematchSpec, Profile, PumpSpec};
pub use temporal::{JointTemporalAmplitude, TimingReport};
