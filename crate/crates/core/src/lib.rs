//! Bayesian calibration of forward models with an embedded, parameter-level
//! representation of model-form error.
//!
//! Each embedded parameter is replaced by `θ̃ = θᵐ + θᵇ·ξ` with a standard
//! normal germ `ξ`. The induced response distribution is expanded in
//! orthonormal Hermite polynomials ([`pce`]), its moments are scored against
//! noisy observations by one of several likelihoods ([`likelihood`]), and
//! the posterior over `(θᵐ, θᵇ)` is sampled with an affine-invariant
//! ensemble sampler ([`sampler`]). Posterior draws can then be pushed
//! through a quantity of interest ([`qoi`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod dist;
pub mod error;
pub mod likelihood;
pub mod models;
pub mod pce;
pub mod problem;
pub mod qoi;
pub mod sampler;
pub mod special;
pub mod studies;

pub use dist::Distribution1D;
pub use error::{Error, Result};
pub use likelihood::{LikelihoodKind, MomentSummary, VarianceCentering};
pub use models::{ForwardModel, LinearModel};
pub use pce::{HermiteBasis, QuadratureRule, StochasticResponse};
pub use problem::{EmbeddedParameter, InferenceProblem, ObservationSet, PceSettings, PlainParameter, ProblemConfig};
pub use qoi::{QoIDistribution, QoiSet};
pub use sampler::{EnsembleChain, SamplerConfig};
