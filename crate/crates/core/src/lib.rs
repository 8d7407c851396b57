pub mod algebra;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod groups;
pub mod inversion;
pub mod weights;

pub use error::{Error, Result};
