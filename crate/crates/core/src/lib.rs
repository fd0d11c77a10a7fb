//! Spectral analysis of leaky-wire Hamiltonians `-Δ + V - α δ_L` in the plane,
//! with a step bias `V` on one side of a wedge-like curve `L`.

pub mod assembly;
pub mod eigensolve;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod transverse;
pub mod variational;

pub use error::{Error, Result};
