//! Perfect strategies for two-player non-local games, their parallel composition, Lie/Cartan
//! structure of game algebras, and checkable qubit-compression certificates.

pub mod cli;
pub mod composer;
pub mod compressor;
pub mod error;
pub mod games;
pub mod liecart;
pub mod opcore;
pub mod strategies;

pub use error::{Error, Result};
