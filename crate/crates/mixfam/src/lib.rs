//! Iterative minimization of G(P) = Σ_x P(x)·Ψ[P](x) over mixture families
//! of finite distributions, with an acceleration parameter γ.
//!
//! The crate is organized as:
//! - [`family`]: distributions, divergences, mixture/exponential families,
//!   and the m-/e-projection solvers;
//! - [`solver`]: the exact, approximate, and gradient-combination iteration
//!   loops plus condition and identity checkers;
//! - [`problems`]: the catalog of Ψ oracles (channel capacity, error
//!   exponents, wiretap and commitment capacities, em divergence
//!   minimization, information bottleneck);
//! - [`oracle`]: independent brute-force and analytic baselines used by
//!   tests.

pub mod error;
pub mod family;
pub mod oracle;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use family::{
    kl_divergence, renyi_divergence, Distribution, DualSolveReport, ExponentialFamily,
    FeatureFunction, MixtureFamily, ProjectionFamily,
};
