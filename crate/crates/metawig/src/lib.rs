//! Metaplectic time-frequency distributions on sampled grids.

pub mod distributions;
pub mod engine;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod symplectic;
