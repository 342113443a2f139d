//! Monte Carlo verification of cluster point process limits for stationary
//! heavy-tailed sequences.
//!
//! [`models`] simulates the sequences, [`blocks`] turns paths into block
//! statistics, [`limits`] evaluates the limiting cluster measures exactly,
//! and [`verify`] compares the two with confidence intervals. [`cli`] wires
//! it all to TOML configs.

pub mod blocks;
pub mod cli;
pub mod extended;
pub mod limits;
pub mod mc;
pub mod measure;
pub mod models;
pub mod quad;
pub mod stats;
pub mod verify;
