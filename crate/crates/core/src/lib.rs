pub mod error;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod interface;
pub mod potential;
pub mod spectrum;
pub mod stationary;

pub use error::{Error, Result};
