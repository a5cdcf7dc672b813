pub mod config;
pub mod curve;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod rat;
pub mod service;
pub mod sim;

pub use curve::Curve;
pub use error::{Error, Result};
pub use rat::{rat, Rat};
