//! Best subset selection with the trimmed lasso and its generalized soft-min
//! (GSM) surrogate.

pub mod baselines;
pub mod bench;
pub mod dd;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod objective;
pub mod optimizer;
pub mod par;
pub mod real;
pub mod wl1;

pub use error::{GsmError, Result};
