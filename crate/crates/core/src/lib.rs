//! Method-of-types toolkit for two-sender random access with collision
//! detection over discrete memoryless multiple-access channels.

pub mod error;
pub mod codebooks;
pub mod decoder;
pub mod exponents;
pub mod jscc;
pub mod simulator;
pub mod mac;
pub mod typekit;

pub use error::{Error, Result};
