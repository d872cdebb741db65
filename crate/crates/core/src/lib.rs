//! Frames, windows and Barsotti–Tate modules over truncated p-adic power
//! series rings, with the cyclotomic Gamma-action calculus.

pub mod bt_modules;
pub mod cli;
pub mod error;
pub mod examples_zoo;
pub mod frames;
pub mod gamma_calculus;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod padic_rings;
pub mod suites;
pub mod wach_rank1;
pub mod windows;

pub use error::{Error, Result};
