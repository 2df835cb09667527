//! Domain-specific video summarization with learned mixtures of submodular,
//! supermodular and modular set functions.

pub mod corpus;
pub mod error;
pub mod functions;
pub mod gtgen;
pub mod harness;
pub mod kernels;
pub mod learn;
pub mod measure;
pub mod optimize;

pub use error::{Error, Result};
