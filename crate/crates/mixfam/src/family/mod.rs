//! Distributions, divergences, and the two projection primitives (m- and
//! e-projection) used by every algorithm in the crate.

pub mod distribution;
pub mod dual;
pub mod exponential;
pub mod mixture;

pub use distribution::{
    conditional_entropy, entropy_of, kl_divergence, renyi_divergence, Distribution,
};
pub use dual::{dual_potential, e_projection, m_projection, solve_moment_match, DualSolveReport};
pub use exponential::ExponentialFamily;
pub use mixture::{FeatureFunction, MixtureFamily};

use crate::error::Result;

/// A constraint set that supports projecting an arbitrary distribution onto
/// itself. `MixtureFamily` solves a convex dual; problem-specific families
/// (such as fixed-marginal joints) may use a closed form instead.
pub trait ProjectionFamily: Send + Sync {
    fn alphabet_size(&self) -> usize;

    fn num_constraints(&self) -> usize;

    /// Worst-case constraint violation of `p`; 0 means membership.
    fn residual(&self, p: &Distribution) -> Result<f64>;

    /// The family member minimizing D(member‖p), with solve diagnostics.
    fn project(&self, p: &Distribution, tol: f64) -> Result<(Distribution, DualSolveReport)>;
}
