//! Program-embedding benchmark: parsing, model input views, eight program
//! encoders, task heads, and integrated-gradients attribution.

pub mod ast;
pub mod attribution;
pub mod corpus;
pub mod encoders;
mod error;
pub mod features;
pub mod nn;
pub mod seed;
pub mod tasks;

pub use error::{Error, Result};
