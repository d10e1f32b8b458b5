//! Doppler-radar hand gesture recognition at desk scale.
//!
//! The crate is organised along the processing chain:
//!
//! * [`signal_synth`] turns a parametric hand trajectory into four-channel
//!   quadrature baseband for a one-transmitter, two-receiver 5.8 GHz sensor.
//! * [`tfa`] computes spectrograms (STFT) and scalograms (Morlet CWT).
//! * [`cnn`] is a small from-scratch convolutional network with momentum SGD.
//! * [`pipeline`] builds datasets, runs experiments and sweeps, and exports
//!   maps and metrics.

pub mod cnn;
pub mod error;
pub mod pipeline;
pub mod signal_synth;
pub mod tfa;

pub use error::{Error, Result};
