pub mod cli;
pub mod error;
pub mod experiments;
pub mod fbm;
pub mod noise;
pub mod quadrature;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
