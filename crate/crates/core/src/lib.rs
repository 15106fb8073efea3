//! Exact and asymptotic height statistics of p-watermelons with a wall.

pub mod error;
pub mod det;
pub mod exact;
pub mod paths;
pub mod special;
pub mod quad;
pub mod dirichlet;
pub mod asymptotics;
pub mod sampler;
pub mod verify;
pub mod cli;

pub use error::{MelonError, Result};
pub use exact::{count_bounded, count_total, exact_moment, height_pmf, WatermelonSpec};
