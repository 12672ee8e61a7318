//! Empirical checkers: sampled margins for the descent/alignment conditions
//! governing the convergence guarantees, and numerical verification of the
//! algebraic identities behind the per-step analysis. Both produce evidence,
//! not proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::{kl_divergence, Distribution, MixtureFamily, ProjectionFamily};
use crate::solver::exact::random_interior_point;
use crate::solver::ops::{d_psi, extended_objective, f3_map_ln, objective};
use crate::solver::PsiOracle;

/// Worst-case margins over the sampled neighborhood. Positive margins are
/// evidence the corresponding condition holds there.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// min over samples of γ·D(F₂[Q]‖Q) − D_Ψ(F₂[Q]‖Q), where F₂[Q] is the
    /// projected update of Q. Nonnegative means each step's descent
    /// inequality held.
    pub a1_min_margin: f64,
    /// min over samples of D_Ψ(center‖Q).
    pub a2_min_margin: f64,
    /// inf over samples of D_Ψ(center‖Q)/D(center‖Q): the empirical modulus
    /// β of the strengthened alignment condition. NaN when no sample had
    /// D(center‖Q) bounded away from zero.
    pub a3_beta: f64,
    pub samples: usize,
}

/// Samples family members Q with D(center‖Q) ≤ delta and reports the
/// worst-case condition margins over the sample set.
pub fn check_conditions(
    psi: &dyn PsiOracle,
    fam: &dyn ProjectionFamily,
    center: &Distribution,
    delta: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples = 0".into()));
    }
    if !(gamma > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} and delta = {delta} must be > 0"
        )));
    }
    let n = fam.alphabet_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a1_min = f64::INFINITY;
    let mut a2_min = f64::INFINITY;
    let mut beta = f64::INFINITY;
    let mut beta_defined = false;

    for _ in 0..samples {
        let raw = random_interior_point(n, &mut rng, 1.0);
        let (member, _) = fam.project(&raw, 1e-10)?;
        // Walk from the center toward the sampled member until the
        // neighborhood radius is respected; mixtures of members stay in the
        // family.
        let mut w = rng.gen_range(0.05..1.0);
        let mut q = center.mix(&member, w)?;
        while kl_divergence(center, &q)? > delta && w > 1e-6 {
            w *= 0.5;
            q = center.mix(&member, w)?;
        }

        let (f3, _) = f3_map_ln(&q, psi, gamma)?;
        let (f2, _) = fam.project(&f3, 1e-10)?;
        let a1 = gamma * kl_divergence(&f2, &q)? - d_psi(&f2, &q, psi)?;
        a1_min = a1_min.min(a1);

        let a2 = d_psi(center, &q, psi)?;
        a2_min = a2_min.min(a2);

        let d = kl_divergence(center, &q)?;
        if d > 1e-12 {
            beta = beta.min(a2 / d);
            beta_defined = true;
        }
    }

    Ok(ConditionReport {
        a1_min_margin: a1_min,
        a2_min_margin: a2_min,
        a3_beta: if beta_defined { beta } else { f64::NAN },
        samples,
    })
}

/// Absolute residuals of the per-step algebraic identities, evaluated with
/// both sides computed independently. All should vanish on well-conditioned
/// inputs regardless of whether any descent condition holds.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// J_γ(F₂[Q],Q) versus γ·D(F₂[Q]‖F₃[Q]) − γ·ln κ[Q].
    pub min_value_residual: f64,
    /// J_γ(probe,Q) versus J_γ(F₂[Q],Q) + γ·D(probe‖F₂[Q]).
    pub decomposition_residual: f64,
    /// D(probe‖Q) − D(probe‖Q_θ) versus the expansion through J_γ(F₂[Q],Q).
    pub tilted_difference_residual: f64,
    /// Same left side versus the expansion through G(F₂[Q]).
    pub objective_difference_residual: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.min_value_residual
            .max(self.decomposition_residual)
            .max(self.tilted_difference_residual)
            .max(self.objective_difference_residual)
    }
}

/// Checks the identities at `q` with family member `probe`, using a member
/// Q_θ of the exponential family through the projected update (the optimal
/// parameter shifted by 0.05 in every coordinate, so the off-family terms
/// are exercised).
pub fn verify_iteration_identities(
    psi: &dyn PsiOracle,
    fam: &MixtureFamily,
    q: &Distribution,
    probe: &Distribution,
    gamma: f64,
) -> Result<IdentityReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be > 0"
        )));
    }
    if fam.residual(probe)? > 1e-8 {
        return Err(Error::InvalidParameter(
            "probe must be a member of the family".into(),
        ));
    }
    let (f3, ln_kappa) = f3_map_ln(q, psi, gamma)?;
    let (f2, report) = fam.project(&f3, 1e-12)?;

    // Q_θ: tilt F₃[Q] by the perturbed dual parameter.
    let theta_shift: Vec<f64> = report.theta.iter().map(|t| t + 0.05).collect();
    let mut exponents = vec![0.0; q.len()];
    for (f, &t) in fam.features().iter().zip(&theta_shift) {
        for (e, &v) in exponents.iter_mut().zip(f.values()) {
            *e += t * v;
        }
    }
    let q_theta = Distribution::normalized(
        f3.probs()
            .iter()
            .zip(&exponents)
            .map(|(&p, &e)| p * e.exp())
            .collect(),
    )?;

    let j_f2 = extended_objective(&f2, q, psi, gamma)?;
    let min_value_residual =
        (j_f2 - (gamma * kl_divergence(&f2, &f3)? - gamma * ln_kappa)).abs();

    let j_probe = extended_objective(probe, q, psi, gamma)?;
    let decomposition_residual =
        (j_probe - (j_f2 + gamma * kl_divergence(probe, &f2)?)).abs();

    let lhs = kl_divergence(probe, q)? - kl_divergence(probe, &q_theta)?;
    let g_probe = objective(probe, psi)?;
    let rhs1 = j_f2 / gamma - g_probe / gamma + d_psi(probe, q, psi)? / gamma
        - kl_divergence(&f2, &q_theta)?;
    let tilted_difference_residual = (lhs - rhs1).abs();

    let g_f2 = objective(&f2, psi)?;
    let rhs2 = g_f2 / gamma - g_probe / gamma + kl_divergence(&f2, q)?
        - d_psi(&f2, q, psi)? / gamma
        + d_psi(probe, q, psi)? / gamma
        - kl_divergence(&f2, &q_theta)?;
    let objective_difference_residual = (lhs - rhs2).abs();

    Ok(IdentityReport {
        min_value_residual,
        decomposition_residual,
        tilted_difference_residual,
        objective_difference_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FeatureFunction;
    use crate::solver::FnPsi;

    fn capacity_psi(rows: Vec<Vec<f64>>) -> FnPsi<impl Fn(&Distribution) -> Vec<f64>> {
        FnPsi::new(move |p: &Distribution| {
            let ny = rows[0].len();
            let mut m = vec![0.0; ny];
            for (x, row) in rows.iter().enumerate() {
                for (y, &w) in row.iter().enumerate() {
                    m[y] += p.probs()[x] * w;
                }
            }
            rows.iter()
                .map(|row| {
                    -row.iter()
                        .zip(&m)
                        .filter(|(&w, _)| w > 0.0)
                        .map(|(&w, &mm)| w * (w.ln() - mm.ln()))
                        .sum::<f64>()
                })
                .collect()
        })
    }

    #[test]
    fn capacity_conditions_hold_at_gamma_one() {
        let psi = capacity_psi(vec![vec![0.8, 0.2], vec![0.25, 0.75]]);
        let fam = MixtureFamily::full_simplex(2);
        // Center: the converged maximizer (good enough for margin checks).
        let cfg = crate::solver::SolverConfig::new(1.0);
        let center = crate::solver::solve_exact(&psi, &fam, &Distribution::uniform(2), &cfg)
            .unwrap()
            .minimizer;
        let report = check_conditions(&psi, &fam, &center, 10.0, 1.0, 50, 1).unwrap();
        assert!(report.a1_min_margin >= -1e-10, "{report:?}");
        assert!(report.a2_min_margin >= -1e-10, "{report:?}");
    }

    #[test]
    fn identities_degenerate_case() {
        let psi = FnPsi::new(|p: &Distribution| vec![1.0; p.len()]);
        let fam = MixtureFamily::full_simplex(2);
        let u = Distribution::uniform(2);
        let r = verify_iteration_identities(&psi, &fam, &u, &u, 1.0).unwrap();
        assert!(r.max_residual() < 1e-14, "{r:?}");
    }

    #[test]
    fn identities_capacity_instance() {
        let psi = capacity_psi(vec![vec![0.9, 0.1], vec![0.4, 0.6]]);
        let f = FeatureFunction::new(vec![0.0, 1.0]).unwrap();
        let fam = MixtureFamily::new(2, vec![(f, 0.35)]).unwrap();
        let q = Distribution::new(vec![0.65, 0.35]).unwrap();
        let probe = Distribution::new(vec![0.65, 0.35]).unwrap();
        let r = verify_iteration_identities(&psi, &fam, &q, &probe, 1.3).unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
    }

    #[test]
    fn identities_with_offfamily_q() {
        // Ψ defined on the whole simplex; q need not satisfy the constraint.
        let psi = capacity_psi(vec![vec![0.7, 0.3], vec![0.1, 0.9], vec![0.5, 0.5]]);
        let f = FeatureFunction::new(vec![0.0, 1.0, 2.0]).unwrap();
        let fam = MixtureFamily::new(3, vec![(f, 0.8)]).unwrap();
        let q = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let probe_raw = Distribution::new(vec![0.3, 0.4, 0.3]).unwrap();
        let (probe, _) = fam.project(&probe_raw, 1e-12).unwrap();
        let r = verify_iteration_identities(&psi, &fam, &q, &probe, 0.9).unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
    }
}
