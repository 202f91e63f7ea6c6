//! Impulse Pattern Formulation (IPF) toolkit.
//!
//! * [`model`]: the iterated map, its fixed point, stability boundaries and
//!   regime classification.
//! * [`dynamics`]: orbit diagrams and regime maps over `1/alpha` sweeps.
//! * [`mapper`]: interval extraction and likelihood maps over the
//!   two-reflection clarinet model.
//! * [`synth`]: period-concatenation synthesis driven by an alpha envelope.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod mapper;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
