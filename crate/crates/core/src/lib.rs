//! Discrete prolate spheroidal sequences, Thomson's multitaper estimator,
//! the aggregated Slepian spectral window and the modulated-Slepian
//! dictionary for multi-band signals, together with Monte-Carlo harnesses
//! that measure leakage, bias, variance and approximation error.

pub mod cli;
pub mod csv;
pub mod error;
pub mod grid;
pub mod multitaper;
pub mod offgrid;
pub mod parallel;
pub mod prolate;
pub mod stochastic;
pub mod window;

pub use error::{Error, Result};
pub use grid::{FrequencyGrid, GridFunction};
pub use prolate::{DpssBasis, DpssParams, SlepianSpectra};
