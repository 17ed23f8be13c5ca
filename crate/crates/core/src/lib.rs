//! Domain data selection and curriculum scheduling for continued training.

pub mod cli;
pub mod corpus;
pub mod curriculum;
pub mod diagnostics;
pub mod error;
pub mod lm;
pub mod par;
pub mod s4;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
