//! Divergence minimization between a mixture family 𝓜 and an exponential
//! family 𝓔: min_{P∈𝓜} D(P ‖ Γ^e[P]) (the em setting, γ = 1 reproduces the
//! classical alternating e/m iteration) and the reverse direction
//! max_{P∈𝓜} D(P ‖ Γ^e[P]).
//!
//! Also hosts the family constructors used to restate channel problems in
//! this form: the joint family {W×P_X}, product families, and conditional-
//! independence (Markov) families.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{
    e_projection, Distribution, ExponentialFamily, FeatureFunction, MixtureFamily,
};
use crate::problems::{Channel, FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

/// Ψ[P] = ±(ln P − ln Γ^e[P]), so G(P) = ±D(P ‖ Γ^e[P]) = ±D(P ‖ 𝓔).
pub(crate) struct EmPsi {
    efam: ExponentialFamily,
    sign: f64,
}

impl PsiOracle for EmPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let proj = match e_projection(p, &self.efam, 1e-12) {
            Ok((proj, _)) => proj,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        p.probs()
            .iter()
            .zip(proj.probs())
            .map(|(&a, &b)| self.sign * (a.ln() - b.ln()))
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

fn check_same_alphabet(fam: &MixtureFamily, efam: &ExponentialFamily) -> Result<()> {
    use crate::family::ProjectionFamily;
    if fam.alphabet_size() != efam.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: fam.alphabet_size(),
            got: efam.alphabet_size(),
        });
    }
    Ok(())
}

/// min_{P∈𝓜} D(P ‖ 𝓔); descent holds at γ = 1, where the iteration is the
/// classical alternation of e- and m-projections. The objective can have
/// several local minima, hence the multi-restart flag.
pub fn em_problem(fam: MixtureFamily, efam: ExponentialFamily) -> Result<ProblemInstance> {
    check_same_alphabet(&fam, &efam)?;
    Ok(ProblemInstance {
        psi: Arc::new(EmPsi { efam, sign: 1.0 }),
        family: FamilyKind::Mixture(fam),
        recommended_gamma: 1.0,
        sign: Sign::Minimize,
        transform: ReportTransform::Identity,
        multi_restart: true,
        label: "em-divergence",
    })
}

/// max_{P∈𝓜} D(P ‖ 𝓔), run as min of the negated objective. Descent at
/// γ = 1 needs the e-projection to be a KL contraction up to a factor of
/// 1 + γ on 𝓜 (true e.g. for the conditional-independence families built by
/// [`markov_family`]); use restarts, the maximum is rarely unique.
pub fn reverse_em(fam: MixtureFamily, efam: ExponentialFamily) -> Result<ProblemInstance> {
    check_same_alphabet(&fam, &efam)?;
    Ok(ProblemInstance {
        psi: Arc::new(EmPsi { efam, sign: -1.0 }),
        family: FamilyKind::Mixture(fam),
        recommended_gamma: 1.0,
        sign: Sign::MaximizeViaNegation,
        transform: ReportTransform::Negate,
        multi_restart: true,
        label: "reverse-em",
    })
}

/// The mixture family {W×P_X : P_X interior} of joints on 𝒳×𝒴 (index
/// x·|𝒴| + y) whose conditional given x is the channel row. Requires a
/// strictly positive channel matrix so that members have full support.
pub fn channel_joint_family(w: &Channel) -> Result<MixtureFamily> {
    let (nx, ny) = (w.input_size(), w.output_size());
    if w.rows().iter().any(|row| row.iter().any(|&v| v <= 0.0)) {
        return Err(Error::InvalidParameter(
            "joint channel family needs strictly positive channel entries".into(),
        ));
    }
    let mut constraints = Vec::with_capacity(nx * (ny - 1));
    for x in 0..nx {
        for y in 0..ny - 1 {
            // Σ_{y'} P(x,y')·(1{y'=y} − w(y|x)) = P(x,y) − P_X(x)·w(y|x).
            let mut f = vec![0.0; nx * ny];
            for y2 in 0..ny {
                f[x * ny + y2] = -w.rows()[x][y];
            }
            f[x * ny + y] += 1.0;
            constraints.push((FeatureFunction::new(f)?, 0.0));
        }
    }
    MixtureFamily::new(nx * ny, constraints)
}

fn indicator(n: usize, hits: impl Iterator<Item = usize>) -> Result<FeatureFunction> {
    let mut f = vec![0.0; n];
    for i in hits {
        f[i] = 1.0;
    }
    FeatureFunction::new(f)
}

/// The exponential family {Q_X × Q_Y} of product distributions on 𝒳×𝒴
/// (index x·y_size + y).
pub fn product_family(x_size: usize, y_size: usize) -> Result<ExponentialFamily> {
    let n = x_size * y_size;
    let mut gens = Vec::with_capacity(x_size + y_size - 2);
    for x in 0..x_size - 1 {
        gens.push(indicator(n, (0..y_size).map(|y| x * y_size + y))?);
    }
    for y in 0..y_size - 1 {
        gens.push(indicator(n, (0..x_size).map(|x| x * y_size + y))?);
    }
    ExponentialFamily::new(Distribution::uniform(n), gens)
}

/// The exponential family {unif_X × Q_Y} on 𝒳×𝒴 (index x·y_size + y):
/// only the 𝒴-marginal varies, the 𝒳-marginal is pinned uniform.
pub fn output_marginal_family(x_size: usize, y_size: usize) -> Result<ExponentialFamily> {
    let n = x_size * y_size;
    let gens = (0..y_size - 1)
        .map(|y| indicator(n, (0..x_size).map(|x| x * y_size + y)))
        .collect::<Result<Vec<_>>>()?;
    ExponentialFamily::new(Distribution::uniform(n), gens)
}

/// The exponential family of joints on 𝒳×𝒴×𝒵 (index x·y_size·z_size +
/// y·z_size + z) under which X and Y are conditionally independent given Z.
pub fn markov_family(x_size: usize, y_size: usize, z_size: usize) -> Result<ExponentialFamily> {
    let n = x_size * y_size * z_size;
    let at = |x: usize, y: usize, z: usize| x * y_size * z_size + y * z_size + z;
    let mut gens = Vec::new();
    for x in 0..x_size - 1 {
        for z in 0..z_size {
            gens.push(indicator(
                n,
                (0..y_size).map(|y| at(x, y, z)),
            )?);
        }
    }
    for y in 0..y_size - 1 {
        for z in 0..z_size {
            gens.push(indicator(
                n,
                (0..x_size).map(|x| at(x, y, z)),
            )?);
        }
    }
    for z in 0..z_size - 1 {
        gens.push(indicator(
            n,
            (0..x_size).flat_map(|x| (0..y_size).map(move |y| at(x, y, z))),
        )?);
    }
    ExponentialFamily::new(Distribution::uniform(n), gens)
}
