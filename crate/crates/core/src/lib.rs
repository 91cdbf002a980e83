//! Preconditioning of weighted linear least-squares with approximate model
//! matrices: spectrum containment and condition-number bounds, the
//! weak-constraint 4D-Var state system, and preconditioned CG.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod fourdvar;
pub mod gallery;
pub mod harness;
pub mod krylov;
pub mod random;
pub mod suite;
pub mod theory;
