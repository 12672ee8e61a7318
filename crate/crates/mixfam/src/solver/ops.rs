//! The pointwise maps underlying every loop: the objective G, the
//! multiplicative update F₃, the extended objective J_γ, and the signed
//! divergence D_Ψ.

use crate::error::{Error, Result};
use crate::family::{kl_divergence, Distribution};
use crate::solver::{psi_eval, PsiOracle};

/// G(P) = Σ_x P(x)·Ψ[P](x).
pub fn objective(p: &Distribution, psi: &dyn PsiOracle) -> Result<f64> {
    let v = psi_eval(psi, p)?;
    p.expectation(&v)
}

/// F₃[q](x) = q(x)·exp(−Ψ[q](x)/γ)/κ[q] together with ln κ[q]. The max
/// exponent is subtracted before exponentiation, so the distribution stays
/// finite even when κ itself over- or underflows as an f64.
pub(crate) fn f3_map_ln(
    q: &Distribution,
    psi: &dyn PsiOracle,
    gamma: f64,
) -> Result<(Distribution, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be > 0"
        )));
    }
    let v = psi_eval(psi, q)?;
    // Work in log space end to end: ln q(x) − Ψ(x)/γ, max-shifted and
    // clamped at -700, so no weight underflows to an exact zero even when
    // q(x) itself is denormal.
    let ln_weights: Vec<f64> = q
        .probs()
        .iter()
        .zip(&v)
        .map(|(&p, &x)| p.ln() - x / gamma)
        .collect();
    let shift = ln_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = ln_weights
        .iter()
        .map(|&l| (l - shift).max(-700.0).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    let ln_kappa = shift + sum.ln();
    Ok((Distribution::normalized(weights)?, ln_kappa))
}

/// F₃[q] and the normalizer κ[q] = Σ_x q(x)·exp(−Ψ[q](x)/γ).
pub fn f3_map(q: &Distribution, psi: &dyn PsiOracle, gamma: f64) -> Result<(Distribution, f64)> {
    let (d, ln_kappa) = f3_map_ln(q, psi, gamma)?;
    Ok((d, ln_kappa.exp()))
}

/// J_γ(P,Q) = γ·D(P‖Q) + Σ_x P(x)·Ψ[Q](x).
pub fn extended_objective(
    p: &Distribution,
    q: &Distribution,
    psi: &dyn PsiOracle,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be > 0"
        )));
    }
    let v = psi_eval(psi, q)?;
    Ok(gamma * kl_divergence(p, q)? + p.expectation(&v)?)
}

/// D_Ψ(P‖Q) = Σ_x P(x)·(Ψ[P](x) − Ψ[Q](x)). Signed.
pub fn d_psi(p: &Distribution, q: &Distribution, psi: &dyn PsiOracle) -> Result<f64> {
    let vp = psi_eval(psi, p)?;
    let vq = psi_eval(psi, q)?;
    if vq.len() != vp.len() {
        return Err(Error::DimensionMismatch {
            expected: vp.len(),
            got: vq.len(),
        });
    }
    Ok(p.probs()
        .iter()
        .zip(vp.iter().zip(&vq))
        .map(|(&w, (&a, &b))| w * (a - b))
        .sum())
}
