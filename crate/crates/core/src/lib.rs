#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod app;
pub mod constitutive;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
mod par;
pub mod solid;
pub mod stepper;
pub mod stokes;

pub use error::{Error, Result};
