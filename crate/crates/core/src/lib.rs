//! Physical model descriptions, validation, mode bases and the quadrature
//! shared by the modal synthesis crates.

pub mod error;
pub mod model;
pub mod modes;
pub mod quadrature;

pub use error::{Error, Result};
