//! Error-exponent problems: optimize Σ_x P(x)·e^{(α−1)·D_α(W(·|x) ‖ Q_α[P])}
//! over the input simplex, where Q_α[P] is the order-α center of the channel
//! outputs. Minimized for α < 1 (reliability function) and maximized via
//! sign flip for α > 1 (strong converse exponent). The optimal value equals
//! exp((α−1)·I_α) at the optimal input, so I_α = ln|G*|/(α−1).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{Distribution, MixtureFamily};
use crate::problems::{Channel, FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

/// The order-α output center: q(y) ∝ (Σ_x P(x)·w(y|x)^α)^{1/α}. Among all
/// output distributions Q it minimizes D_α(W×P ‖ Q×P).
pub fn renyi_center(w: &Channel, p: &Distribution, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "center order must be positive and != 1, got {alpha}"
        )));
    }
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: p.len(),
        });
    }
    let mut q = vec![0.0; w.output_size()];
    for (out, y) in q.iter_mut().zip(0..w.output_size()) {
        let s: f64 = p
            .probs()
            .iter()
            .zip(w.rows())
            .map(|(&px, row)| px * row[y].powf(alpha))
            .sum();
        *out = s.powf(1.0 / alpha);
    }
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    Ok(q)
}

/// Σ_y w(y|x)^α·q(y)^{1−α} = e^{(α−1)·D_α(W(·|x) ‖ q)}, with 0^α = 0.
fn tilted_mass(row: &[f64], q: &[f64], alpha: f64) -> f64 {
    row.iter()
        .zip(q)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &qy)| (alpha * w.ln() + (1.0 - alpha) * qy.ln()).exp())
        .sum()
}

struct ExponentPsi {
    w: Channel,
    alpha: f64,
    /// −1 for the strong-converse (maximization) variant.
    sign: f64,
}

impl PsiOracle for ExponentPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let q = match renyi_center(&self.w, p, self.alpha) {
            Ok(q) => q,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        self.w
            .rows()
            .iter()
            .map(|row| self.sign * tilted_mass(row, &q, self.alpha))
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// max_P I_α with α ∈ [1/2, 1), solved as min_P Σ P·e^{(α−1)D_α}. No finite
/// γ is guaranteed a priori; start from the recommended γ = 1 and escalate
/// via `solve_with_gamma_doubling` on descent violations.
pub fn reliability_exponent(w: Channel, alpha: f64) -> Result<ProblemInstance> {
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "reliability order {alpha} must lie in [1/2, 1)"
        )));
    }
    let n = w.input_size();
    Ok(ProblemInstance {
        psi: Arc::new(ExponentPsi { w, alpha, sign: 1.0 }),
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::Minimize,
        transform: ReportTransform::RenyiExponent { alpha },
        multi_restart: false,
        label: "reliability-exponent",
    })
}

/// max_P I_α with α > 1, solved by negating Ψ so the maximization becomes
/// the standard minimization.
pub fn strong_converse_exponent(w: Channel, alpha: f64) -> Result<ProblemInstance> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "strong-converse order {alpha} must exceed 1"
        )));
    }
    let n = w.input_size();
    Ok(ProblemInstance {
        psi: Arc::new(ExponentPsi { w, alpha, sign: -1.0 }),
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::MaximizeViaNegation,
        transform: ReportTransform::RenyiExponent { alpha },
        multi_restart: false,
        label: "strong-converse-exponent",
    })
}
