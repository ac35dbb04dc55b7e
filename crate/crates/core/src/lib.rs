pub mod analysis;
pub mod data;
pub mod design;
pub mod distributions;
pub mod effects;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod methods;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
