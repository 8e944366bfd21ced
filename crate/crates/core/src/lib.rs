//! Grouser wheel on loose regolith: constitutive laws, rigid-wheel contact
//! solver, single-wheel test rig simulator, soil calibration, and the
//! configuration / reference-data / report layer used by the CLI.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod contact;
pub mod error;
pub mod io;
pub mod rig;
pub mod soil;

pub use contact::{ContactPatch, ModelOptions, WheelLoads};
pub use error::{CalibrationError, ModelError, RigError};
pub use rig::{ExperimentOutcome, RigConfig};
pub use soil::{SlipState, SoilParameters, WheelGeometry};
