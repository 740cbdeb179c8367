//! Finite-alphabet nonanticipative RDF: directed information by exact
//! enumeration and the optimal reproduction kernels by alternating
//! minimization.

pub mod enumerate;
pub mod instance;
pub mod solver;

pub use enumerate::{causal_mixture, directed_information, expected_distortion, marginal_update};
pub use instance::{hamming, CausalKernelFamily, FiniteSource, Marginals, DEFAULT_ATOM_CAP};
pub use solver::{optimal_kernel_update, solve_at_slope, solve_nrdf, NrdfSolution, SolverConfig};
