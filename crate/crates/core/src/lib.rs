//! Modular spiking neural networks for visual place recognition.
//!
//! Small expert modules of leaky integrate-and-fire neurons are trained with
//! unsupervised STDP on disjoint subsets of a reference traverse. At query
//! time every module responds in parallel; neurons that fire indiscriminately
//! across the whole reference set are masked out, and the per-place spike
//! sums of all modules (and optionally of several independently seeded
//! ensemble members) form one column of a similarity matrix. Sequence
//! matching and recall@N evaluation operate on the resulting distance
//! matrices.

pub mod error;
pub mod params;
pub mod pipeline;
pub mod seed;
pub mod snn;

pub use error::{Error, Result};
pub use params::SimulationParams;
pub mod data;
pub mod ensemble;
pub mod eval;
pub mod modular;
