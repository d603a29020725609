//! Streaming audio front-end.
//!
//! Mono PCM goes through a digital gain stage, a bank of second-order
//! band-pass filters, full-wave rectification and one leaky integrate-and-fire
//! encoder per band. Encoder events are then counted into fixed-width time
//! bins to form an [`EventRaster`].

mod audio;
mod encoder;
mod filterbank;
mod raster;

pub use audio::{pad_clip, AudioClip, DEFAULT_SAMPLE_RATE_HZ};
pub use encoder::{encode_clip, encode_events, AfeConfig, EncoderConfig, EventTrains, StreamingEncoder};
pub use filterbank::{design_filterbank, process_audio, Biquad, BiquadBank, FilterbankConfig, GainDb};
pub use raster::{bin_raster, timesteps_for, BinnedRaster, EventRaster};
