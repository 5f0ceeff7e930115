//! Desk-scale laboratory for intermittent convex integration of the
//! Euler-α equations on the periodic torus.

pub mod error;
pub mod spectral;

pub use error::{LabError, Result};
pub mod alpha;
pub mod engine;
pub mod geometry;
pub mod inverse_div;
pub mod lab;
pub mod ledger;
pub mod mikado;
pub mod tensor;
pub mod transport;

pub use alpha::{AlphaModel, Trajectory};
pub use spectral::{Grid, SpectralField};
pub use tensor::StressField;
