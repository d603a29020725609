//! Spiking keyword-spotting pipeline core.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! builds under `#![no_std]` with `alloc`:
//!
//! * [`afe`]: streaming audio front-end (gain, band-pass filterbank,
//!   rectification, LIF event encoder, time binning).
//! * [`snn`]: SynNet model description, float parameters, and the
//!   bit-accurate integer LIF engine (8-bit weights, 16-bit state).
//! * [`train`]: float forward pass, PeakLoss, surrogate-gradient BPTT, Adam.
//! * [`quantize`]: float to integer model conversion and accuracy audit.
//! * [`metrics`] and [`energy`]: confusion/ROC statistics and the op-count
//!   energy model used by the benchmark harness.
//! * [`synth`]: the deterministic two-class synthetic corpus.
//!
//! File formats, WAV ingestion, threading and the CLI live in the `snnkws`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod afe;
pub mod energy;
mod error;
pub mod metrics;
pub mod quantize;
pub mod snn;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
