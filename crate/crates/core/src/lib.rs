//! Trace functions over finite fields, their short sums over shifted intervals, and
//! the random-matrix model that predicts the limiting distribution of those sums.

pub mod error;
pub mod finite_field;
pub mod group;
pub mod haar_oracle;
pub mod poly;
pub mod repro;
pub mod rmt_moments;
pub mod short_sums;
pub mod stats;
pub mod summation;
pub mod trace_functions;

pub use error::{Error, Result};
pub use finite_field::{FieldCtx, FqElem};
pub use group::GroupKind;
