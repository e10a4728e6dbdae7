//! Affine black-box benchmark generation, exploratory landscape features,
//! optimizer portfolio runs and feature-based algorithm selection.

pub mod aas;
pub mod artifact;
pub mod ela;
pub mod error;
pub mod pipeline;
pub mod portfolio;
pub mod problem;
pub mod sampling;
pub mod seed;
pub mod selection;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
