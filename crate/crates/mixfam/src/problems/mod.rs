//! The problem catalog: builders that pair a Ψ oracle with the family it is
//! minimized over, the γ known to guarantee descent, and the sign/transform
//! bookkeeping between the solver objective and the headline quantity
//! (capacity, exponent, divergence, ...).

mod capacity;
mod commitment;
mod em;
mod exponent;
mod ib;
mod wiretap;

pub use capacity::channel_capacity;
pub use commitment::commitment_capacity;
pub use em::{
    channel_joint_family, em_problem, markov_family, output_marginal_family, product_family,
    reverse_em,
};
pub use exponent::{reliability_exponent, renyi_center, strong_converse_exponent};
pub use ib::{information_bottleneck, FixedMarginalFamily, JointSource};
pub use wiretap::{wiretap_degraded, wiretap_general};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{Distribution, FeatureFunction, MixtureFamily, ProjectionFamily};
use crate::solver::{
    solve_exact, solve_exact_restarts, PsiOracle, SolveResult, SolveStatus, SolverConfig,
};

/// A discrete memoryless channel: row x holds the output distribution
/// W(·|x). All-zero output columns are stripped at construction, so every
/// retained output has positive probability under some input.
#[derive(Debug, Clone)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter("empty channel matrix".into()));
        }
        let ny = rows[0].len();
        for (x, row) in rows.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::DimensionMismatch {
                    expected: ny,
                    got: row.len(),
                });
            }
            let mut sum = 0.0;
            for (y, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "channel entry ({x},{y}) = {w} is not a probability"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "channel row {x} sums to {sum}, not 1"
                )));
            }
        }
        let kept: Vec<usize> = (0..ny)
            .filter(|&y| rows.iter().any(|row| row[y] > 0.0))
            .collect();
        let rows = if kept.len() == ny {
            rows
        } else {
            rows.into_iter()
                .map(|row| kept.iter().map(|&y| row[y]).collect())
                .collect()
        };
        Ok(Self { rows })
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The output marginal (W·P)(y) = Σ_x P(x)·W(y|x).
    pub fn output_marginal(&self, p: &Distribution) -> Result<Vec<f64>> {
        if p.len() != self.input_size() {
            return Err(Error::DimensionMismatch {
                expected: self.input_size(),
                got: p.len(),
            });
        }
        let mut m = vec![0.0; self.output_size()];
        for (&px, row) in p.probs().iter().zip(&self.rows) {
            for (out, &w) in m.iter_mut().zip(row) {
                *out += px * w;
            }
        }
        Ok(m)
    }

    /// D(W(·|x) ‖ m) under the 0·ln 0 = 0 convention. `m` must be positive
    /// wherever the row is, which holds for any output marginal of a
    /// full-support input because all-zero columns are stripped.
    pub fn row_divergence(&self, x: usize, m: &[f64]) -> f64 {
        self.rows[x]
            .iter()
            .zip(m)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &mm)| w * (w.ln() - mm.ln()))
            .sum()
    }

    /// The channel with inputs limited to `keep` (in the given order).
    pub fn restrict_inputs(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidParameter("no inputs kept".into()));
        }
        let rows = keep
            .iter()
            .map(|&x| {
                self.rows
                    .get(x)
                    .cloned()
                    .ok_or(Error::InvalidParameter(format!(
                        "input index {x} out of range for {} inputs",
                        self.input_size()
                    )))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

/// Whether the headline quantity is the minimized objective itself or the
/// negation of it (for problems stated as maximizations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Minimize,
    MaximizeViaNegation,
}

/// Exact map from the solver objective min G to the quantity the problem is
/// about. Kept as data so downstream consumers never re-derive signs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportTransform {
    /// headline = G (em divergence, information bottleneck).
    Identity,
    /// headline = −G (capacities).
    Negate,
    /// headline = I_α = ln|G|/(α−1); G > 0 for the reliability problem and
    /// G < 0 for the strong-converse problem.
    RenyiExponent { alpha: f64 },
}

/// The constraint set a problem is solved over.
#[derive(Debug, Clone)]
pub enum FamilyKind {
    Mixture(MixtureFamily),
    /// Joints on 𝒯×𝒳 with a pinned 𝒳-marginal (information bottleneck).
    FixedMarginal(FixedMarginalFamily),
}

impl FamilyKind {
    pub fn as_projection(&self) -> &dyn ProjectionFamily {
        match self {
            FamilyKind::Mixture(f) => f,
            FamilyKind::FixedMarginal(f) => f,
        }
    }

    pub fn as_mixture(&self) -> Option<&MixtureFamily> {
        match self {
            FamilyKind::Mixture(f) => Some(f),
            FamilyKind::FixedMarginal(_) => None,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.as_projection().alphabet_size()
    }
}

/// A ready-to-solve pairing of a Ψ oracle with its family and metadata.
pub struct ProblemInstance {
    pub psi: Arc<dyn PsiOracle>,
    pub family: FamilyKind,
    /// γ for which descent is guaranteed (or the best-known default when no
    /// finite guarantee exists).
    pub recommended_gamma: f64,
    pub sign: Sign,
    pub transform: ReportTransform,
    /// Set on problems with known or suspected local minimizers; drivers
    /// should prefer [`ProblemInstance::solve_restarts`].
    pub multi_restart: bool,
    pub label: &'static str,
}

impl ProblemInstance {
    /// Maps a solver objective to the problem's headline quantity.
    pub fn headline(&self, objective: f64) -> f64 {
        match self.transform {
            ReportTransform::Identity => objective,
            ReportTransform::Negate => -objective,
            ReportTransform::RenyiExponent { alpha } => objective.abs().ln() / (alpha - 1.0),
        }
    }

    /// One exact solve from the projected uniform point at the instance's
    /// recommended γ (or the γ in `cfg` if it differs).
    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolveResult> {
        let fam = self.family.as_projection();
        let uniform = Distribution::uniform(fam.alphabet_size());
        let (init, _) = fam.project(&uniform, cfg.projection_tol)?;
        solve_exact(self.psi.as_ref(), fam, &init, cfg)
    }

    pub fn solve_restarts(
        &self,
        cfg: &SolverConfig,
        restarts: usize,
        seed: u64,
    ) -> Result<SolveResult> {
        solve_exact_restarts(self.psi.as_ref(), self.family.as_projection(), cfg, restarts, seed)
    }

    pub fn default_config(&self) -> SolverConfig {
        SolverConfig::new(self.recommended_gamma)
    }
}

/// Largest γ tried by [`solve_with_gamma_doubling`].
pub const GAMMA_DOUBLING_CAP: f64 = 64.0;

/// Runs the exact loop, doubling γ (up to 64) whenever the trace shows a
/// descent violation. Returns the result together with the γ that produced
/// it. Used for the exponent problems, where descent is only guaranteed for
/// "sufficiently large" γ with no closed-form threshold.
pub fn solve_with_gamma_doubling(
    instance: &ProblemInstance,
    cfg: &SolverConfig,
) -> Result<(SolveResult, f64)> {
    let mut gamma = cfg.gamma;
    loop {
        let mut attempt = cfg.clone();
        attempt.gamma = gamma;
        let result = instance.solve(&attempt)?;
        if result.status != SolveStatus::DescentViolation || gamma >= GAMMA_DOUBLING_CAP {
            return Ok((result, gamma));
        }
        gamma = (gamma * 2.0).min(GAMMA_DOUBLING_CAP);
    }
}

/// Intersects the instance's mixture family with {P : P[cost] = budget}.
/// The per-step projection is then no longer closed-form, so drivers should
/// use the approximate or gradient-combination loop.
pub fn with_cost_constraint(
    base: &ProblemInstance,
    cost: FeatureFunction,
    budget: f64,
) -> Result<ProblemInstance> {
    let fam = base.family.as_mixture().ok_or(Error::InvalidParameter(
        "cost constraints apply to mixture-family problems only".into(),
    ))?;
    Ok(ProblemInstance {
        psi: base.psi.clone(),
        family: FamilyKind::Mixture(fam.with_constraint(cost, budget)?),
        recommended_gamma: base.recommended_gamma,
        sign: base.sign,
        transform: base.transform,
        multi_restart: base.multi_restart,
        label: base.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_rejects_bad_rows() {
        assert!(Channel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(Channel::new(vec![vec![0.5, -0.5, 1.0]]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![0.3, 0.3, 0.4]]).is_err());
        assert!(Channel::new(vec![]).is_err());
    }

    #[test]
    fn channel_strips_zero_columns() {
        let w = Channel::new(vec![vec![0.7, 0.0, 0.3], vec![0.4, 0.0, 0.6]]).unwrap();
        assert_eq!(w.output_size(), 2);
        assert_eq!(w.rows()[0], vec![0.7, 0.3]);
    }

    #[test]
    fn channel_output_marginal() {
        let w = Channel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let m = w.output_marginal(&p).unwrap();
        assert!((m[0] - 0.55).abs() < 1e-15);
        assert!((m[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn channel_restrict_inputs() {
        let w = Channel::new(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        ])
        .unwrap();
        let r = w.restrict_inputs(&[0, 2]).unwrap();
        assert_eq!(r.input_size(), 2);
        assert_eq!(r.rows()[1], vec![0.5, 0.5]);
        assert!(w.restrict_inputs(&[5]).is_err());
        assert!(w.restrict_inputs(&[]).is_err());
    }

    #[test]
    fn row_divergence_zero_entries() {
        let w = Channel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let m = w.output_marginal(&p).unwrap();
        // D((1,0) ‖ (0.75, 0.25)) = ln(1/0.75).
        let d = w.row_divergence(0, &m);
        assert!((d - (1.0_f64 / 0.75).ln()).abs() < 1e-14);
    }
}
