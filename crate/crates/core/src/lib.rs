pub mod analysis;
pub mod builders;
pub mod cli;
pub mod emit;
pub mod error;
pub mod graph;
pub mod optimize;
pub mod rational;
pub mod symmetry;

pub use error::{Error, Result};
pub use rational::Q;
