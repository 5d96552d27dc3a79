//! Distributionally robust CVaR safe halfspaces and an MPC safety filter that
//! minimally corrects a reference trajectory against sampled obstacle
//! predictions.

pub mod bench;
pub mod compare;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod halfspace;
pub mod montecarlo;
pub mod program;
pub mod report;
pub mod risk;
pub mod sim;
pub mod stats;
pub mod vector;

pub use error::{Error, Result};
