//! Pseudospectral laboratory for derivative fractional Schrödinger equations
//! `∂t u + iD^α u − ε∂x²u = F(u, ∂x u, ū, conj ∂x u)` on the torus.

// Comparisons are negated on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod experiments;
pub mod illposed;
pub mod nonlinearity;
pub mod sampling;
pub mod spectral;

pub use error::{LabError, Result};
pub use evolution::{EvolutionConfig, TrajectoryRecord};
pub use nonlinearity::{PolynomialNonlinearity, Preset};
pub use spectral::SpectralField;
