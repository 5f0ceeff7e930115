//! Intermittent Mikado pipes with radial profiles.

mod pipe;
mod profile;

pub use pipe::{
    deformed_pipe, deformed_pipe_direct, expected_average, pulled_back_potential, transverse_defect, Frame,
    PipeFamily, PipeFields, Positions, StationarityReport,
};
pub use profile::{gauss_legendre, radial_laplacian, PipeProfile, Poly};
