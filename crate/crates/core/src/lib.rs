//! Bayesian causal discovery over a latent linear-Gaussian SCM that is only
//! observed through a linear projection.
//!
//! The crate covers the full loop: ground-truth DAG synthesis
//! ([`graph_scm`]), observational and interventional data generation
//! ([`sampler`], [`io`]), a variational posterior over edge weights with a
//! learned linear decoder ([`posterior`]), the training objective
//! ([`objective`]) and its exact gradients ([`gradient`]), the evaluation
//! metrics ([`metrics`]), and the seeded experiment harness
//! ([`experiment`], [`plot`]) with its command-line front end ([`cli`]).

pub mod cli;
pub mod error;
pub mod experiment;
pub mod gradient;
pub mod graph_scm;
pub mod io;
pub mod metrics;
pub mod objective;
pub mod plot;
pub mod posterior;
pub mod sampler;

pub use error::{BcdError, Result};
