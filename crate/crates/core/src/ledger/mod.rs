//! Exact bookkeeping of the exponent inequalities behind the scheme.

pub mod inequalities;
pub mod params;
pub mod recipe;

pub use inequalities::{check_inequalities, derive_scales, entries_at, Entry, LedgerReport, ScaleExponent};
pub use params::{parse_rational, ParameterSet};
pub use recipe::{suggest_from, suggest_parameters};
