//! Storm-induced bridge and road closures and their effect on spatial
//! accessibility to health services.
//!
//! The pipeline: surge exposure and inundation closures ([`hazard`]), deck
//! uplift fragility ([`fragility`]), bounded travel times over the open
//! network ([`network`]), two-step floating catchment scores ([`access`]),
//! Monte Carlo aggregation ([`simulate`]) and dataset I/O ([`scenario_io`]).

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
pub mod error;
pub mod fragility;
pub mod geom;
pub mod hazard;
pub mod network;
pub mod scenario_io;
pub mod simulate;

pub use error::{Error, Result, ValidationReport};
pub use geom::Point;
