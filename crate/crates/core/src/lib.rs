pub mod cli;
pub mod deform;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod initial_data;
pub mod jet;
pub mod mass;
pub mod shield;

pub use error::{Error, Result};
