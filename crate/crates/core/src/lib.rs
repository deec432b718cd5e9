pub mod engine;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod overhead;
pub mod tiling;

pub use error::{Error, Result};
