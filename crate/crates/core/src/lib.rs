pub mod abcrf;
pub mod baselines;
pub mod benchmark;
pub mod cart;
pub mod classifier;
pub mod cli;
pub mod data;
pub mod error;
pub mod forest;
pub mod ma_toy;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
