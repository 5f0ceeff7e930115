//! One step of the convex integration scheme on a desk-scale grid.

pub mod amplitude;
pub mod budget;
pub mod conservation;
pub mod glue;
pub mod mollify;
pub mod perturbation;
pub mod smooth;
pub mod step;

pub use amplitude::{build_amplitude, AmplitudeField, AmplitudeScales};
pub use budget::{decompose_new_stress, reassembly_residual, type_one_check, BudgetNorms, StressBudget};
pub use conservation::{
    commutator_flux, conservation_experiment, double_commutator_defect, drift_ratio, ConservationReport, GridKernel,
};
pub use glue::{flux_pair, glue_initial, GlueCutoff, GluedState};
pub use mollify::{mollify, Mollifier, MollifiedState, TimeWeights};
pub use perturbation::{assemble_perturbation, ActiveCutoff, Perturbation, PipeBank};
pub use step::{iterate_step, InductiveDiagnostics, StepResult, ToyParams};
