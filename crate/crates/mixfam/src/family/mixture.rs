//! Mixture families {P : P[f_i] = a_i} cut out of the simplex by expectation
//! constraints on feature functions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::family::distribution::Distribution;
use crate::family::dual::{solve_moment_match, DualSolveReport};
use crate::family::ProjectionFamily;

/// A real-valued function on the alphabet, stored as its value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFunction {
    values: Vec<f64>,
}

impl FeatureFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty feature function".into()));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "feature value {i} = {v} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Checks that the features together with the constant function are linearly
/// independent: rank of the (k+1)×n matrix must be k+1, with singular values
/// below 1e-9 (relative to the largest) treated as zero.
pub(crate) fn check_independent_with_ones(features: &[FeatureFunction], n: usize) -> Result<()> {
    let k = features.len();
    if k + 1 > n {
        return Err(Error::DependentFeatures);
    }
    let mut m = DMatrix::zeros(k + 1, n);
    for j in 0..n {
        m[(0, j)] = 1.0;
    }
    for (i, f) in features.iter().enumerate() {
        for j in 0..n {
            m[(i + 1, j)] = f.values()[j];
        }
    }
    let sv = m.singular_values();
    let max_sv = sv.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = 1e-9 * max_sv.max(1.0);
    let rank = sv.iter().filter(|&&s| s > thresh).count();
    if rank < k + 1 {
        return Err(Error::DependentFeatures);
    }
    Ok(())
}

/// The family {P ∈ 𝒫(𝒳) : P[f_i] = a_i, i = 1..k}. k = 0 is the full simplex.
#[derive(Debug, Clone)]
pub struct MixtureFamily {
    alphabet_size: usize,
    features: Vec<FeatureFunction>,
    targets: Vec<f64>,
}

impl MixtureFamily {
    /// Builds the family, validating feature independence and nonemptiness.
    /// Feasibility is checked by running the dual solve from the uniform
    /// base: if the constraint residual stalls above 1e-6 the family is
    /// declared infeasible.
    pub fn new(alphabet_size: usize, constraints: Vec<(FeatureFunction, f64)>) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        for (f, a) in &constraints {
            if f.len() != alphabet_size {
                return Err(Error::DimensionMismatch {
                    expected: alphabet_size,
                    got: f.len(),
                });
            }
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "constraint target {a} is not finite"
                )));
            }
        }
        let (features, targets): (Vec<_>, Vec<_>) = constraints.into_iter().unzip();
        if !features.is_empty() {
            check_independent_with_ones(&features, alphabet_size)?;
        }
        for (f, a) in features.iter().zip(&targets) {
            let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(*a > lo && *a < hi) {
                return Err(Error::InfeasibleFamily(format!(
                    "target {a} is outside the open range ({lo}, {hi}) attainable \
                     by full-support distributions"
                )));
            }
        }
        let fam = Self {
            alphabet_size,
            features,
            targets,
        };
        if !fam.features.is_empty() {
            let uniform = Distribution::uniform(alphabet_size);
            let (_, report) =
                solve_moment_match(&uniform, &fam.features, &fam.targets, 1e-10, 200, None)?;
            if !report.converged && report.gradient_norm > 1e-6 {
                return Err(Error::InfeasibleFamily(format!(
                    "constraint residual stalls at {:e}",
                    report.gradient_norm
                )));
            }
        }
        Ok(fam)
    }

    pub fn full_simplex(alphabet_size: usize) -> Self {
        Self {
            alphabet_size,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn features(&self) -> &[FeatureFunction] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn num_constraints_inner(&self) -> usize {
        self.features.len()
    }

    /// The mixture coordinates (P[f_i])_i of `p` with respect to this family.
    pub fn mixture_coordinates(&self, p: &Distribution) -> Result<Vec<f64>> {
        self.features
            .iter()
            .map(|f| p.expectation(f.values()))
            .collect()
    }

    pub fn is_member(&self, p: &Distribution, tol: f64) -> Result<bool> {
        Ok(self.residual(p)? <= tol)
    }

    /// An equivalent family with all constraint targets shifted to zero by
    /// replacing f_i with f_i − a_i.
    pub fn recentered(&self) -> Self {
        let features = self
            .features
            .iter()
            .zip(&self.targets)
            .map(|(f, &a)| {
                FeatureFunction::new(f.values().iter().map(|&v| v - a).collect())
                    .expect("shifted feature stays finite")
            })
            .collect();
        Self {
            alphabet_size: self.alphabet_size,
            features,
            targets: vec![0.0; self.targets.len()],
        }
    }

    /// This family with one more expectation constraint appended.
    pub fn with_constraint(&self, feature: FeatureFunction, target: f64) -> Result<Self> {
        let mut constraints: Vec<(FeatureFunction, f64)> = self
            .features
            .iter()
            .cloned()
            .zip(self.targets.iter().cloned())
            .collect();
        constraints.push((feature, target));
        Self::new(self.alphabet_size, constraints)
    }
}

impl ProjectionFamily for MixtureFamily {
    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    fn num_constraints(&self) -> usize {
        self.features.len()
    }

    fn residual(&self, p: &Distribution) -> Result<f64> {
        let coords = self.mixture_coordinates(p)?;
        Ok(coords
            .iter()
            .zip(&self.targets)
            .map(|(c, a)| (c - a).abs())
            .fold(0.0, f64::max))
    }

    fn project(&self, p: &Distribution, tol: f64) -> Result<(Distribution, DualSolveReport)> {
        if p.len() != self.alphabet_size {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size,
                got: p.len(),
            });
        }
        solve_moment_match(p, &self.features, &self.targets, tol, 200, None)
    }
}
