//! Entanglement-width measures of graphs and quantum states, normal-form
//! tree tensor network construction, and classical simulation of adaptive
//! single-qubit measurement sequences.

pub mod cli;
pub mod dense;
pub mod error;
pub mod gf2;
pub mod graph;
pub mod mqc;
pub mod rankwidth;
pub mod stabilizer;
pub mod ttn;

pub use error::{Error, Result};
