pub mod ba;
pub mod curve;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod maib;
pub mod nn;
pub mod prob;
pub mod seed;
pub mod sources;

pub use error::{Error, Result};
