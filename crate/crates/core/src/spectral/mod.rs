//! Periodic fields on the torus and their spectral calculus.

pub mod calculus;
pub mod field;
pub mod grid;
pub mod nufft;

pub use calculus::*;
pub use field::{component_count, rel_diff, SpectralField};
pub use grid::Grid;
pub use nufft::{compose, FourierInterpolant};
