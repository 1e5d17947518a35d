//! Design and analysis toolkit for closely spaced full-duplex microstrip
//! antenna systems.
//!
//! The crate is organised by concern:
//!
//! - [`rfnet`]: frequency grids, N-port S-parameter networks, ABCD chain
//!   matrices, cascading and conversions.
//! - [`microstrip`]: quasi-static microstrip line and inset-fed patch models,
//!   with synthesis (inverse) routines.
//! - [`dgs`]: defected-ground-structure band-stop equivalent circuits and the
//!   line/slot/line chain model.
//! - [`mimo`]: ECC, CCL and isolation reports computed from S-parameters.
//! - [`touchstone`]: Touchstone v1 reader and canonical writer.
//! - [`silink`]: power-domain self-interference budget.
//! - [`layout`]: preset board layouts for each design stage, validation and
//!   export.

// `!(x < y)` guards are written that way so NaN inputs take the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgs;
pub mod layout;
pub mod microstrip;
pub mod mimo;
pub mod rfnet;
pub mod silink;
mod solve;
pub mod touchstone;
pub mod units;

pub use num_complex::Complex64;
