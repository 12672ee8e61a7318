//! The iterative minimization loops: the exact loop (projection each step),
//! the approximate loop (inexact dual solves with a final selection rule),
//! and the gradient-combination loop (penalty parameter updated by gradient
//! steps instead of projecting). Also houses the empirical condition and
//! identity checkers used to diagnose whether a given γ guarantees descent.

mod approx;
mod checks;
mod exact;
mod gradient;
mod ops;

pub use approx::solve_approx;
pub use checks::{check_conditions, verify_iteration_identities, ConditionReport, IdentityReport};
pub use exact::{solve_exact, solve_exact_restarts};
pub use gradient::solve_gradient_combo;
pub use ops::{d_psi, extended_objective, f3_map, objective};

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::Distribution;

/// The plug-in point for every application: maps a distribution P to the
/// value vector Ψ[P](·). Implementations must be re-entrant and
/// side-effect-free; solves may evaluate them concurrently.
pub trait PsiOracle: Send + Sync {
    fn eval(&self, p: &Distribution) -> Vec<f64>;

    /// Whether Ψ is defined on the whole simplex rather than only on the
    /// constraint set. Required by [`solve_approx`], whose auxiliary
    /// iterates leave the family.
    fn domain_is_full_simplex(&self) -> bool;
}

/// Adapter turning a closure into a [`PsiOracle`].
pub struct FnPsi<F> {
    f: F,
    full_simplex: bool,
}

impl<F> FnPsi<F>
where
    F: Fn(&Distribution) -> Vec<f64> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            full_simplex: true,
        }
    }

    pub fn restricted_domain(f: F) -> Self {
        Self {
            f,
            full_simplex: false,
        }
    }
}

impl<F> PsiOracle for FnPsi<F>
where
    F: Fn(&Distribution) -> Vec<f64> + Send + Sync,
{
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        (self.f)(p)
    }

    fn domain_is_full_simplex(&self) -> bool {
        self.full_simplex
    }
}

/// Validated Ψ evaluation: the returned vector must match the alphabet and
/// be finite everywhere.
pub(crate) fn psi_eval(psi: &dyn PsiOracle, p: &Distribution) -> Result<Vec<f64>> {
    let v = psi.eval(p);
    if v.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: v.len(),
        });
    }
    if let Some((i, &x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::Degenerate(format!(
            "psi value at point {i} is {x}"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Acceleration parameter γ > 0.
    pub gamma: f64,
    pub max_iter: usize,
    /// Stop when γ·D(P^t‖P^{t+1}) falls below this.
    pub stop_tol: f64,
    /// Constraint-residual tolerance for per-step projections.
    pub projection_tol: f64,
    /// Dual-value slack ε₁ targeted by the inexact solves of [`solve_approx`].
    pub approx_tol: f64,
    /// Divergence guard for the penalty parameter of [`solve_gradient_combo`].
    pub b_cap: f64,
    /// When set, [`solve_approx`] verifies each inexact projection against
    /// an exact one and records the worst observed divergence. Test-only;
    /// roughly doubles the cost of a solve.
    pub check_projection_accuracy: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            max_iter: 10_000,
            stop_tol: 1e-10,
            projection_tol: 1e-10,
            approx_tol: 1e-8,
            b_cap: 1e6,
            check_projection_accuracy: false,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} must be > 0",
                self.gamma
            )));
        }
        for (name, v) in [
            ("stop_tol", self.stop_tol),
            ("projection_tol", self.projection_tol),
            ("approx_tol", self.approx_tol),
            ("b_cap", self.b_cap),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter = 0".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// One row of a solve trace. `objective` is G(P^t); `step_kl` is
/// D(P^t‖P^{t+1}), zero on the final row; `kappa` is the F₃ normalizer at
/// P^t; the dual fields describe the projection producing P^{t+1}.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub iter: usize,
    pub objective: f64,
    pub step_kl: f64,
    pub kappa: f64,
    pub dual_iters: usize,
    pub dual_residual: f64,
    /// Selection criterion G(P^t) − γ·D(P^t‖P̄^t) of the approximate loop.
    pub selection_score: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub steps: Vec<StepRecord>,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.objective).collect()
    }

    /// CSV rendering with a fixed column order and 17-significant-digit
    /// floats, so identical runs produce byte-identical files.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("iter,objective,step_kl,kappa,dual_iters,dual_residual,selection_score\n");
        for s in &self.steps {
            let sel = match s.selection_score {
                Some(v) => format_float(v),
                None => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.iter,
                format_float(s.objective),
                format_float(s.step_kl),
                format_float(s.kappa),
                s.dual_iters,
                format_float(s.dual_residual),
                sel
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterCap,
    /// The objective increased beyond tolerance; γ is too small for this
    /// problem. The best iterate seen is still returned.
    DescentViolation,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterCap => "iteration-cap",
            SolveStatus::DescentViolation => "descent-violation",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extra measurements recorded by [`solve_approx`].
#[derive(Debug, Clone)]
pub struct ApproxDiagnostics {
    /// Worst realized dual-value slack across steps.
    pub eps1_realized: f64,
    /// Worst realized repair divergence D(P̄^{t+1}‖P^{t+1}) across steps.
    pub eps2_realized: f64,
    /// Total iterate count t₁ (the selection ranges over t = 2..t₁).
    pub t1: usize,
    /// Selected index.
    pub t2: usize,
    /// Worst observed D(exact projection of F₃[P̄^t] ‖ P̄^{t+1}); only
    /// measured when `check_projection_accuracy` is set.
    pub projection_gap_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub minimizer: Distribution,
    pub objective: f64,
    pub trace: IterationTrace,
    pub status: SolveStatus,
    pub approx: Option<ApproxDiagnostics>,
}

impl SolveResult {
    /// The result document written by the CLI: minimizer, objective, status,
    /// and an echo of the solver configuration.
    pub fn to_json(&self, cfg: &SolverConfig) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "minimizer": self.minimizer.probs(),
            "objective_nats": self.objective,
            "status": self.status.as_str(),
            "iterations": self.trace.steps.len().saturating_sub(1),
            "config": {
                "gamma": cfg.gamma,
                "max_iter": cfg.max_iter,
                "stop_tol": cfg.stop_tol,
                "projection_tol": cfg.projection_tol,
                "approx_tol": cfg.approx_tol,
            },
        });
        if let Some(a) = &self.approx {
            doc["approx"] = serde_json::json!({
                "eps1_realized": a.eps1_realized,
                "eps2_realized": a.eps2_realized,
                "t1": a.t1,
                "t2": a.t2,
            });
        }
        doc
    }
}
