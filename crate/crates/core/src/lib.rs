//! Community detection in inhomogeneous multilayer stochastic block models.
//!
//! Every layer of a multilayer network shares a two-block global partition,
//! but each node's layer-level label independently flips with probability
//! `rho`. The crate provides
//!
//! - a seeded sampler for such networks ([`model`]) and a plain-text instance
//!   format ([`format`]),
//! - a spectral initializer ([`spectral`]) followed by node-wise MAP
//!   refinement ([`refine`]) that estimates both the global partition and
//!   every layer's own partition,
//! - the information-theoretic rate exponents that govern the best achievable
//!   misclustering ([`rates`]),
//! - parameter estimation ([`estimate`]), a co-regularized spectral baseline
//!   ([`baseline`]) and loss statistics ([`metrics`]).

pub mod baseline;
pub mod error;
pub mod estimate;
pub mod format;
pub mod metrics;
pub mod model;
pub mod rates;
pub mod refine;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    balanced_assignment, experiment_params, sample_imlsbm, Assignment, ExperimentDesign, Layer, LayerGroup,
    ModelParams, MultilayerGraph, SampleRecord, Scaling,
};
