//! Entropy exchange in the Jaynes-Cummings model with a thermally
//! fluctuating cavity.
//!
//! The cavity mode starts in a superstatistical mixture: either a
//! gamma-distributed inverse temperature (giving Tsallis-like photon
//! statistics) or a finite set of Gibbs states. The atom starts diagonal.
//! The crate evolves the pair exactly, traces out either side and reports
//! entropy changes and their time averages.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod jcm;
pub mod output;
pub mod par;
pub mod roots;
pub mod specfun;
pub mod superstat;

pub mod cli;

pub use error::{Error, Result};
