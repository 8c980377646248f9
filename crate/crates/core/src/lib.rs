//! Numerical laboratory for the one-dimensional Anderson model.

pub mod approx;
pub mod error;
pub mod experiment;
pub mod gauge;
pub mod interval;
pub mod localization;
pub mod operator;
pub mod potential;
pub mod spectralstats;
pub mod table;
pub mod transfer;

pub use error::{Error, Result};
