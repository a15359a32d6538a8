//! Fast-slow analysis of a three-variable ENSO recharge oscillator.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bifurcation;
pub mod cycle;
pub mod error;
pub mod integrate;
pub mod io;
pub mod manifold;
pub mod mmo;
pub mod model;
pub mod numeric;
pub mod params;
pub mod reduced;
pub mod state;

pub use error::{Error, Result};
pub use params::{DimensionlessParams, ParamSet, PhysicalParams, Preset, Scales};
pub use state::{AnomalyState, DimlessState, PhysState};
