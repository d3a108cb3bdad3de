pub mod complex;
pub mod datagen;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod nuisance;
pub mod oracle;
pub mod persistence;
pub mod seed;
pub mod summary;

pub use error::{Error, Result};
