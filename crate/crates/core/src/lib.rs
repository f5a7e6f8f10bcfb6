pub mod bounds;
pub mod detectors;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod sam;
pub mod sigraim;
pub mod stats;

pub use error::{Error, Result};
