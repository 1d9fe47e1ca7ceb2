//! File formats, audio I/O and benchmarking around [`ffsn_core`].

pub mod bench;
mod error;
pub mod features;
pub mod metric;
pub mod tensor;
pub mod wav;
pub mod weights;

pub use error::{Error, Result};
pub use ffsn_core;
