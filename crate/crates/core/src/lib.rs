//! OFDM timing-synchronization laboratory.
//!
//! The crate simulates the full synchronization chain of an OFDM receiver and
//! a learned alternative to the classic correlator:
//!
//! - [`signal`] builds the Zadoff-Chu training symbol and its time-domain
//!   OFDM waveform (IDFT plus cyclic prefix).
//! - [`channel`] draws Rayleigh multipath realizations (exponentially decayed
//!   or tapped-delay-line profiles), assembles a transmit stream around the
//!   training symbol and produces the noisy observed window.
//! - [`correlator`] computes the cross-correlation timing metric and the
//!   classic argmax estimator.
//! - [`label`] constructs triangular training labels over the ISI-free region
//!   and samples the labeling delay bound from a line-of-sight prior.
//! - [`network`] is a single-hidden-layer perceptron trained with SGD to map
//!   the normalized timing metric onto the label.
//! - [`dataset`] generates training sets and drives the training loop.
//! - [`eval`] runs seeded Monte-Carlo error-probability sweeps, computes the
//!   complexity figures of the compared methods and writes CSV/SVG results.
//!
//! Every random draw flows through an explicitly seeded generator
//! ([`rng::derived_rng`]), so datasets, trained models and evaluation curves
//! are bit-reproducible for a given master seed.

pub mod channel;
pub mod correlator;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod label;
pub mod network;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
