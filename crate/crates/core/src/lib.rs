pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod gradient;
pub mod linalg;
pub mod pauli;
pub mod qnn;
pub mod state;
pub mod trainer;

pub use error::{Error, Result};
