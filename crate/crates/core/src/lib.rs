//! Quantitative asymptotics for continuous-time Fejer monotone flows.

pub mod error;
pub mod flows;
pub mod moduli;
pub mod operators;
pub mod scenario;
pub mod verify;
pub mod space;

pub use error::{Error, Result};
