//! Simulator for a circular-type (Sagnac loop) phase-coded quantum key
//! distribution system.
//!
//! Layers, bottom up:
//!
//! - [`jones`]: polarization algebra and controller alignment.
//! - [`loopmodel`]: the loop optics, detection probabilities and pulse timing.
//! - [`channel`]: weak coherent pulses and detector clicks.
//! - [`bb84`]: protocol choices, decoding, sifting, intercept-resend.
//! - [`session`]: Monte Carlo sessions and their closed-form expectation.
//! - [`loopnet`]: the looped multi-party network.
//! - [`harness`]: scenario files, runs, calibration, sweeps and CSV output.

pub mod bb84;
pub mod channel;
pub mod error;
pub mod harness;
pub mod jones;
pub mod loopmodel;
pub mod loopnet;
pub mod rng;
pub mod session;

pub use error::{Error, Result};
