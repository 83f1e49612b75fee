//! Multiset and graph embeddings with exact optimal-transport metrics, and
//! empirical estimation of their lower-Hölder exponents in expectation.
//!
//! Layout, bottom up:
//! - [`assignment`] and [`multiset`]: exact Wasserstein distances.
//! - [`graph`], [`tmd`], [`wl`]: graphs, Tree Mover's Distance and a 1-WL oracle.
//! - [`embeddings`] and [`combine`]: random multiset and 2-tuple embeddings.
//! - [`mpnn`]: untrained message passing networks built from them.
//! - [`adversarial`]: input pairs on which weak embeddings collapse.
//! - [`analysis`]: exponent fits, distortion and variance studies, probes.

pub mod adversarial;
pub mod analysis;
pub mod assignment;
pub mod combine;
pub mod embeddings;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mpnn;
pub mod multiset;
pub mod rng;
pub mod tmd;
pub mod wl;

pub use error::{Error, Result};
pub use graph::Graph;
pub use multiset::{FeatureVector, InnerNorm, Multiset};
