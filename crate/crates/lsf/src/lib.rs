//! Fusion and classification of trajectory-aligned spatiotemporal video
//! descriptors.
//!
//! The flow: a tied-weight autoencoder with a shared-encoder classifier
//! head fuses per-trajectory descriptors into compact codes
//! ([`lsfnet`]); average pooling and Fisher-score selection turn those
//! into one short vector per video ([`features`]); per-class scalar
//! projections with K-NN retrieval and soft voting classify new videos
//! ([`index`]). [`pipeline`] wires the stages behind the `lsf` CLI and
//! [`synthetic`] generates labeled Gaussian-cluster datasets for testing.

pub mod descriptor;
pub mod error;
pub mod features;
pub mod index;
mod io_util;
pub mod lsfnet;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
