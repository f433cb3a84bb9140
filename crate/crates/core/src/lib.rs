//! Gaussian and Fock-space simulation of a trapped atom coupled to a membrane
//! through two cavity modes.
//!
//! Frequencies inside the dynamics are expressed in units of the membrane
//! frequency `ω_m`; SI values appear only in [`system::PhysicalParams`],
//! [`lattice`] and [`thermal`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod metrics;
pub mod oracle;
pub mod protocols;
pub mod system;
pub mod thermal;

pub use error::{Error, Result};
