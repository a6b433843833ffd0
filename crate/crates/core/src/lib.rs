//! Incompatibility of quantum measurements and channels.
//!
//! The crate computes the mutual eigenspace disturbance (MED) of two
//! projective measurements and the noncommutativity (NCOM) of two channels,
//! simulates the quantum-switch experiment that estimates them, and clusters
//! observables by their pairwise incompatibility.

pub mod cluster;
pub mod error;
pub mod experiment;
pub mod incompat;
pub mod io;
pub mod linalg;
pub mod quantum;
pub mod random;
pub mod rng;
pub mod switch;

pub use error::{Error, Result};
pub use linalg::{Complex, ComplexMatrix};
pub use quantum::{BlochObservable, DensityMatrix, KrausChannel, NoiseModel, ProjectorFamily};
pub use rng::RandomStream;
