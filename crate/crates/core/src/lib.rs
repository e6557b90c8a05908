//! Deterministic ray tracing for RIS-assisted indoor mmWave channels.
//!
//! A transmitter illuminates every element of a reconfigurable intelligent
//! surface; each element reradiates towards the receiver directly and via
//! specular wall reflections found with the image method. Fields are summed
//! coherently and converted to received power over receiver grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antennas;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod par;
pub mod pathfinder;
pub mod propagation;
pub mod ris;
pub mod scene;
pub mod sweep;

pub use error::{Error, Result};
