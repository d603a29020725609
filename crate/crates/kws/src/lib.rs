//! File formats, datasets, reports and the command line for the spiking
//! keyword-spotting pipeline in `snnkws-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod report;
pub mod wav;

pub use error::{KwsError, Result};
