//! Information-bottleneck-style tradeoffs. The optimization variable is the
//! joint of a compression variable T with the source input X (index
//! t·|𝒳| + x), constrained to keep the 𝒳-marginal equal to the source's;
//! the objective interpolates compression I(T;X), the entropy of T, and
//! relevance −I(T;Y) with weights α and β. Descent holds at γ = α.

use crate::error::{Error, Result};
use crate::family::{Distribution, DualSolveReport, ProjectionFamily};
use crate::problems::{FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

use std::sync::Arc;

/// A joint source P_XY given as an |𝒳|×|𝒴| matrix, plus the size of the
/// compression alphabet 𝒯.
#[derive(Debug, Clone)]
pub struct JointSource {
    joint: Vec<Vec<f64>>,
    t_size: usize,
}

impl JointSource {
    pub fn new(joint: Vec<Vec<f64>>, t_size: usize) -> Result<Self> {
        if joint.is_empty() || joint[0].is_empty() {
            return Err(Error::InvalidParameter("empty source matrix".into()));
        }
        if t_size == 0 {
            return Err(Error::InvalidParameter("empty compression alphabet".into()));
        }
        let ny = joint[0].len();
        let mut total = 0.0;
        for (x, row) in joint.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::DimensionMismatch {
                    expected: ny,
                    got: row.len(),
                });
            }
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "source entry ({x},{y}) = {v} is not a probability"
                    )));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "source mass sums to {total}, not 1"
            )));
        }
        let src = Self { joint, t_size };
        if src.x_marginal_raw().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidDistribution(
                "source has an input symbol of probability zero".into(),
            ));
        }
        if src.y_marginal().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidDistribution(
                "source has an output symbol of probability zero".into(),
            ));
        }
        Ok(src)
    }

    pub fn x_size(&self) -> usize {
        self.joint.len()
    }

    pub fn y_size(&self) -> usize {
        self.joint[0].len()
    }

    pub fn t_size(&self) -> usize {
        self.t_size
    }

    pub fn joint(&self) -> &[Vec<f64>] {
        &self.joint
    }

    fn x_marginal_raw(&self) -> Vec<f64> {
        self.joint.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn x_marginal(&self) -> Distribution {
        Distribution::normalized(self.x_marginal_raw()).expect("checked at construction")
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.y_size()];
        for row in &self.joint {
            for (out, &v) in m.iter_mut().zip(row) {
                *out += v;
            }
        }
        m
    }
}

/// Joints on 𝒯×𝒳 (index t·|𝒳| + x) with the 𝒳-marginal pinned. The
/// projection is closed-form: rescale each x-column to the target mass,
/// which both minimizes KL onto the set and preserves P_{T|X}.
#[derive(Debug, Clone)]
pub struct FixedMarginalFamily {
    x_marginal: Distribution,
    t_size: usize,
}

impl FixedMarginalFamily {
    pub fn new(x_marginal: Distribution, t_size: usize) -> Result<Self> {
        if t_size == 0 {
            return Err(Error::InvalidParameter("empty compression alphabet".into()));
        }
        Ok(Self { x_marginal, t_size })
    }

    pub fn x_marginal(&self) -> &Distribution {
        &self.x_marginal
    }

    pub fn t_size(&self) -> usize {
        self.t_size
    }
}

impl ProjectionFamily for FixedMarginalFamily {
    fn alphabet_size(&self) -> usize {
        self.t_size * self.x_marginal.len()
    }

    fn num_constraints(&self) -> usize {
        self.x_marginal.len()
    }

    fn residual(&self, p: &Distribution) -> Result<f64> {
        let nx = self.x_marginal.len();
        if p.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                got: p.len(),
            });
        }
        let mut worst = 0.0_f64;
        for x in 0..nx {
            let mass: f64 = (0..self.t_size).map(|t| p.probs()[t * nx + x]).sum();
            worst = worst.max((mass - self.x_marginal.probs()[x]).abs());
        }
        Ok(worst)
    }

    fn project(&self, p: &Distribution, _tol: f64) -> Result<(Distribution, DualSolveReport)> {
        let nx = self.x_marginal.len();
        if p.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                got: p.len(),
            });
        }
        let mut scale = vec![0.0; nx];
        for x in 0..nx {
            let mass: f64 = (0..self.t_size).map(|t| p.probs()[t * nx + x]).sum();
            scale[x] = self.x_marginal.probs()[x] / mass;
        }
        let out = Distribution::new(
            p.probs()
                .iter()
                .enumerate()
                .map(|(i, &v)| v * scale[i % nx])
                .collect(),
        )?;
        Ok((out, DualSolveReport::trivial()))
    }
}

/// Ψ for the two-parameter tradeoff, evaluated at a joint P on 𝒯×𝒳:
///
///   Ψ(t,x) = α·[ln P(t,x) − ln P_X(x)] + (β−1)·ln P_T(t)
///          + β·Σ_y P(y|x)·[ln P_Y(y) − ln P_TY(t,y)]
///
/// where P_TY(t,y) = Σ_x P(t|x)·P_XY(x,y). At members of the fixed-marginal
/// family, G(P) = α·I(T;X) + (1−α)·H(T) − β·I(T;Y).
struct BottleneckPsi {
    src: JointSource,
    alpha: f64,
    beta: f64,
}

impl PsiOracle for BottleneckPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let (nx, ny, nt) = (self.src.x_size(), self.src.y_size(), self.src.t_size());
        let probs = p.probs();
        let p_y = self.src.y_marginal();
        let src_x = self.src.x_marginal();

        let mut p_t = vec![0.0; nt];
        let mut p_x = vec![0.0; nx];
        for t in 0..nt {
            for x in 0..nx {
                p_t[t] += probs[t * nx + x];
                p_x[x] += probs[t * nx + x];
            }
        }
        // P_TY through the current encoder P(t|x) and the source joint.
        let mut p_ty = vec![0.0; nt * ny];
        for t in 0..nt {
            for x in 0..nx {
                let cond = probs[t * nx + x] / p_x[x];
                for y in 0..ny {
                    p_ty[t * ny + y] += cond * self.src.joint()[x][y];
                }
            }
        }

        let mut out = vec![0.0; nt * nx];
        for t in 0..nt {
            for x in 0..nx {
                let mut relevance = 0.0;
                for y in 0..ny {
                    let cond_y = self.src.joint()[x][y] / src_x.probs()[x];
                    if cond_y > 0.0 {
                        relevance += cond_y * (p_y[y].ln() - p_ty[t * ny + y].ln());
                    }
                }
                out[t * nx + x] = self.alpha * (probs[t * nx + x].ln() - p_x[x].ln())
                    + (self.beta - 1.0) * p_t[t].ln()
                    + self.beta * relevance;
            }
        }
        out
    }

    fn domain_is_full_simplex(&self) -> bool {
        false
    }
}

/// min over encoders of α·I(T;X) + (1−β)·H(T) + β·H(T|Y), for α ∈ [0,1] and
/// β ≥ α. Descent holds at γ = α; α = 0 is accepted here but needs a
/// positive γ override to run the iterative solver. The landscape is
/// non-convex in general, hence the multi-restart flag.
pub fn information_bottleneck(src: JointSource, alpha: f64, beta: f64) -> Result<ProblemInstance> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "compression weight {alpha} must lie in [0, 1]"
        )));
    }
    if !(beta >= alpha) {
        return Err(Error::InvalidParameter(format!(
            "relevance weight {beta} must be at least the compression weight {alpha}"
        )));
    }
    let family = FixedMarginalFamily::new(src.x_marginal(), src.t_size())?;
    Ok(ProblemInstance {
        psi: Arc::new(BottleneckPsi { src, alpha, beta }),
        family: FamilyKind::FixedMarginal(family),
        recommended_gamma: alpha,
        sign: Sign::Minimize,
        transform: ReportTransform::Identity,
        multi_restart: true,
        label: "information-bottleneck",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::family::kl_divergence;
    use crate::solver::{d_psi, objective, SolveStatus};

    fn random_source(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> JointSource {
        let mut rows: Vec<Vec<f64>> = (0..nx)
            .map(|_| (0..ny).map(|_| rng.gen_range(0.05..1.0)).collect())
            .collect();
        let total: f64 = rows.iter().flatten().sum();
        rows.iter_mut().flatten().for_each(|v| *v /= total);
        // Exact renormalization pass so the 1e-12 mass check holds.
        let total: f64 = rows.iter().flatten().sum();
        rows.iter_mut().flatten().for_each(|v| *v /= total);
        JointSource::new(rows, nt).unwrap()
    }

    fn random_member(
        rng: &mut ChaCha8Rng,
        fam: &FixedMarginalFamily,
    ) -> Distribution {
        let nx = fam.x_marginal().len();
        let mut v = vec![0.0; fam.alphabet_size()];
        for x in 0..nx {
            let mut col: Vec<f64> = (0..fam.t_size()).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = col.iter().sum();
            for (t, c) in col.drain(..).enumerate() {
                v[t * nx + x] = fam.x_marginal().probs()[x] * c / s;
            }
        }
        Distribution::new(v).unwrap()
    }

    #[test]
    fn source_validation() {
        assert!(JointSource::new(vec![vec![0.5, 0.5], vec![0.0, 0.0]], 2).is_err());
        assert!(JointSource::new(vec![vec![0.5, 0.0], vec![0.5, 0.0]], 2).is_err());
        assert!(JointSource::new(vec![vec![0.3, 0.3], vec![0.3, 0.3]], 2).is_err());
        assert!(JointSource::new(vec![vec![0.25; 2]; 2], 0).is_err());
        assert!(JointSource::new(vec![vec![0.25; 2]; 2], 2).is_ok());
    }

    #[test]
    fn projection_rescales_columns_and_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let fam = FixedMarginalFamily::new(
            Distribution::new(vec![0.3, 0.7]).unwrap(),
            3,
        )
        .unwrap();
        let q = Distribution::normalized((0..6).map(|_| rng.gen_range(0.1..1.0)).collect())
            .unwrap();
        let (p, report) = fam.project(&q, 1e-12).unwrap();
        assert!(report.converged);
        assert!(fam.residual(&p).unwrap() < 1e-14);
        // Encoder P(t|x) is untouched by the projection.
        for x in 0..2 {
            let qx: f64 = (0..3).map(|t| q.probs()[t * 2 + x]).sum();
            let px: f64 = (0..3).map(|t| p.probs()[t * 2 + x]).sum();
            for t in 0..3 {
                assert!(
                    (q.probs()[t * 2 + x] / qx - p.probs()[t * 2 + x] / px).abs() < 1e-13
                );
            }
        }
    }

    #[test]
    fn independent_source_reaches_zero_at_unit_weights() {
        // X ⊥ Y makes the relevance term vanish, so at α = β = 1 the
        // objective is I(T;X) with minimum 0.
        let src = JointSource::new(
            vec![vec![0.24, 0.36], vec![0.16, 0.24]],
            2,
        )
        .unwrap();
        let prob = information_bottleneck(src, 1.0, 1.0).unwrap();
        let result = prob.solve_restarts(&prob.default_config(), 3, 7).unwrap();
        assert!(result.objective.abs() < 1e-8, "{}", result.objective);
    }

    #[test]
    fn copy_source_objective_is_identically_zero() {
        // Y = X at α = β = 1: I(T;X) − I(T;Y) = 0 for every encoder.
        let src = JointSource::new(vec![vec![0.4, 0.0], vec![0.0, 0.6]], 2).unwrap();
        let prob = information_bottleneck(src, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let fam = match &prob.family {
            FamilyKind::FixedMarginal(f) => f,
            _ => unreachable!(),
        };
        for _ in 0..10 {
            let p = random_member(&mut rng, fam);
            assert!(objective(&p, prob.psi.as_ref()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn breakdown_contracts_by_compression_weight() {
        // D_Ψ(P‖Q) ≤ α·D(P‖Q) on family members.
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for alpha in [0.25, 0.5, 1.0] {
            for beta in [alpha, 1.0, 2.0] {
                let src = random_source(&mut rng, 2, 2, 2);
                let prob = information_bottleneck(src, alpha, beta).unwrap();
                let fam = match &prob.family {
                    FamilyKind::FixedMarginal(f) => f,
                    _ => unreachable!(),
                };
                for _ in 0..10 {
                    let p = random_member(&mut rng, fam);
                    let q = random_member(&mut rng, fam);
                    let breakdown = d_psi(&p, &q, prob.psi.as_ref()).unwrap();
                    let bound = alpha * kl_divergence(&p, &q).unwrap();
                    assert!(
                        breakdown <= bound + 1e-12,
                        "alpha={alpha} beta={beta}: {breakdown} > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn random_sources_descend_at_compression_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for _ in 0..5 {
            let src = random_source(&mut rng, 2, 2, 2);
            let prob = information_bottleneck(src, 0.5, 1.0).unwrap();
            let result = prob.solve(&prob.default_config()).unwrap();
            assert_ne!(result.status, SolveStatus::DescentViolation);
            let obj = result.trace.objectives();
            for s in obj.windows(2) {
                assert!(s[1] <= s[0] + 1e-12);
            }
        }
    }
}
