pub mod classical;
pub mod clustering;
pub mod counterexamples;
pub mod error;
pub mod fixers;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod quantum;
pub mod rotations;

pub use error::{Error, Result};
