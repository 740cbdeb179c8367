//! Nonanticipative rate distortion for Gauss–Markov sources observed in
//! noise, with a realization over a scalar AWGN channel, plus a
//! finite-alphabet solver.
//!
//! - [`gauss_source`]: the state-space model, validation, simulation.
//! - [`nrdf_gauss`]: innovation eigen-decomposition and reverse
//!   water-filling, giving `R(D)` in closed form.
//! - [`realization`]: encoder, decoder and modified Kalman filter that
//!   achieve the rate over an AWGN channel at matched power.
//! - [`sim`]: Monte-Carlo of the full chain.
//! - [`discrete`]: directed information and the optimal reproduction kernels
//!   for finite alphabets.
//! - [`cli`]: the `nrdf` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discrete;
pub mod error;
pub mod export;
pub mod gauss_source;
pub mod linalg;
pub mod nrdf_gauss;
pub mod realization;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use gauss_source::StateSpaceModel;
pub use realization::RealizationDesign;
