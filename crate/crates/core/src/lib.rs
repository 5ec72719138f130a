//! Universal robustness bounds for classifiers over discrete image spaces.
//!
//! The crate evaluates the closed-form upper and lower bounds on attainable
//! robustness, implements the sum-threshold classifier and the cell-based
//! perturbation search, and checks every supporting inequality on
//! brute-forceable instances with exact arithmetic.

pub mod error;
pub mod bounds;
pub mod classifiers;
pub mod exactmath;
pub mod hamming;
pub mod image_space;
pub mod par;
pub mod perturb;
pub mod robustness;
pub mod rng;
mod serde_util;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
