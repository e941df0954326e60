//! Fault detection and diagnosis for a two-loop pressurized water reactor.
//!
//! The crate is organised as a pipeline:
//!
//! * [`plantsim`] generates labelled multichannel transients from a
//!   lumped-parameter surrogate of the plant.
//! * [`preprocess`] standardises the channels and extracts principal
//!   components, dropping components that carry less than 2% of the
//!   total variance.
//! * [`rbfn`] is a Gaussian radial basis function network grown one
//!   center at a time until a training MSE goal is met.
//! * [`pipeline`] ties the pieces into a trainable, serialisable
//!   [`pipeline::DiagnosisModel`] and computes the evaluation metrics.
//! * [`service`] holds the CLI plumbing and the HTTP/WebSocket server
//!   used by the operator console.

pub mod error;
pub mod pipeline;
pub mod plantsim;
pub mod preprocess;
pub mod rbfn;
pub mod service;

pub use error::{Error, Result};
