//! Commitment capacity of a noisy channel, as −min G with
//! Ψ[P](x) = D(W(·|x) ‖ W·P) + ln P(x); the headline quantity is
//! max_P [H(P) − Σ_x P(x)·D(W(·|x) ‖ W·P)]. Descent holds at γ = 1.

use std::sync::Arc;

use crate::error::Result;
use crate::family::{Distribution, MixtureFamily};
use crate::problems::{Channel, FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

struct CommitmentPsi {
    w: Channel,
}

impl PsiOracle for CommitmentPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let m = match self.w.output_marginal(p) {
            Ok(m) => m,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        p.probs()
            .iter()
            .enumerate()
            .map(|(x, &px)| self.w.row_divergence(x, &m) + px.ln())
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// Commitment capacity = −min G; γ = 1 guarantees descent.
pub fn commitment_capacity(w: Channel) -> Result<ProblemInstance> {
    let n = w.input_size();
    Ok(ProblemInstance {
        psi: Arc::new(CommitmentPsi { w }),
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::MaximizeViaNegation,
        transform: ReportTransform::Negate,
        multi_restart: false,
        label: "commitment-capacity",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::family::m_projection;
    use crate::problems::em::{channel_joint_family, output_marginal_family};
    use crate::problems::em_problem;
    use crate::solver::{f3_map, objective};

    fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Distribution {
        Distribution::normalized((0..n).map(|_| rng.gen_range(0.05..1.0)).collect()).unwrap()
    }

    #[test]
    fn noiseless_channel_cannot_commit() {
        // With an identity channel Ψ ≡ 0: revealing x exactly leaves no
        // binding/concealing slack, so the capacity is 0.
        let w = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let prob = commitment_capacity(w).unwrap();
        let result = prob.solve(&prob.default_config()).unwrap();
        assert!(prob.headline(result.objective).abs() < 1e-12);
    }

    #[test]
    fn useless_channel_commits_log_alphabet() {
        let w = Channel::new(vec![vec![0.4, 0.6]; 3]).unwrap();
        let prob = commitment_capacity(w).unwrap();
        let result = prob.solve(&prob.default_config()).unwrap();
        assert!((prob.headline(result.objective) - 3.0_f64.ln()).abs() < 1e-10);
        for p in result.minimizer.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn objective_matches_em_form_pointwise() {
        // G_c(P) + ln|𝒳| = D(W×P ‖ (W·P)×unif), the em objective on the
        // joint against the pinned-uniform-input product family.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let w = Channel::new(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let direct = commitment_capacity(w.clone()).unwrap();
        let fam = channel_joint_family(&w).unwrap();
        let efam = output_marginal_family(3, 3).unwrap();
        let em = em_problem(fam.clone(), efam).unwrap();

        for _ in 0..10 {
            let px = random_dist(&mut rng, 3);
            let mut joint = Vec::with_capacity(9);
            for x in 0..3 {
                for y in 0..3 {
                    joint.push(px.probs()[x] * w.rows()[x][y]);
                }
            }
            let joint = Distribution::new(joint).unwrap();
            let g_direct = objective(&px, direct.psi.as_ref()).unwrap();
            let g_em = objective(&joint, em.psi.as_ref()).unwrap();
            assert!((g_em - (g_direct + 3.0_f64.ln())).abs() < 1e-10);
        }
    }

    #[test]
    fn em_route_update_marginalizes_to_direct_update() {
        // One step of the em-form iteration on the joint family, followed by
        // taking the input marginal, is exactly the direct update on P_X.
        let w = Channel::new(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let direct = commitment_capacity(w.clone()).unwrap();
        let fam = channel_joint_family(&w).unwrap();
        let em = em_problem(fam.clone(), output_marginal_family(3, 3).unwrap()).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for gamma in [1.0, 0.9] {
            let px = random_dist(&mut rng, 3);
            let mut joint = Vec::with_capacity(9);
            for x in 0..3 {
                for y in 0..3 {
                    joint.push(px.probs()[x] * w.rows()[x][y]);
                }
            }
            let joint = Distribution::new(joint).unwrap();

            let (f3_joint, _) = f3_map(&joint, em.psi.as_ref(), gamma).unwrap();
            let (stepped, _) = m_projection(&f3_joint, &fam, 1e-12).unwrap();
            let marginal: Vec<f64> = (0..3)
                .map(|x| (0..3).map(|y| stepped.probs()[x * 3 + y]).sum())
                .collect();

            let (direct_step, _) = f3_map(&px, direct.psi.as_ref(), gamma).unwrap();
            for (a, b) in marginal.iter().zip(direct_step.probs()) {
                assert!((a - b).abs() < 1e-8, "gamma={gamma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn restriction_shrinks_capacity_of_spread_channel() {
        let w = Channel::new(vec![
            vec![0.6, 0.2, 0.1, 0.1],
            vec![0.1, 0.2, 0.1, 0.6],
            vec![0.1, 0.2, 0.15, 0.55],
            vec![0.05, 0.85, 0.05, 0.05],
        ])
        .unwrap();
        let full = commitment_capacity(w.clone()).unwrap();
        let full_value = full
            .headline(full.solve(&full.default_config()).unwrap().objective);
        let restricted = commitment_capacity(w.restrict_inputs(&[0, 1, 2]).unwrap()).unwrap();
        let restricted_value = restricted
            .headline(restricted.solve(&restricted.default_config()).unwrap().objective);
        assert!(full_value > 0.0 && restricted_value > 0.0);
        assert!(restricted_value <= full_value + 1e-12);
    }
}
