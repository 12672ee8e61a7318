//! Exponential families base·exp(Σ_j θ_j g_j − φ(θ)) used as e-projection
//! targets.

use crate::error::{Error, Result};
use crate::family::distribution::Distribution;
use crate::family::mixture::{check_independent_with_ones, FeatureFunction};

#[derive(Debug, Clone)]
pub struct ExponentialFamily {
    base: Distribution,
    generators: Vec<FeatureFunction>,
}

impl ExponentialFamily {
    pub fn new(base: Distribution, generators: Vec<FeatureFunction>) -> Result<Self> {
        let n = base.len();
        for g in &generators {
            if g.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.len(),
                });
            }
        }
        if !generators.is_empty() {
            check_independent_with_ones(&generators, n)?;
        }
        Ok(Self { base, generators })
    }

    /// The family that covers the whole interior of the simplex: uniform base
    /// with the first n−1 point indicators as generators.
    pub fn full_simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        let mut generators = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n - 1 {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            generators.push(FeatureFunction::new(v)?);
        }
        Self::new(Distribution::uniform(n), generators)
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn generators(&self) -> &[FeatureFunction] {
        &self.generators
    }

    pub fn alphabet_size(&self) -> usize {
        self.base.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// The member with natural parameter θ.
    pub fn member(&self, theta: &[f64]) -> Result<Distribution> {
        if theta.len() != self.generators.len() {
            return Err(Error::DimensionMismatch {
                expected: self.generators.len(),
                got: theta.len(),
            });
        }
        let n = self.base.len();
        let mut exponents = vec![0.0; n];
        for (g, &t) in self.generators.iter().zip(theta) {
            for (e, &v) in exponents.iter_mut().zip(g.values()) {
                *e += t * v;
            }
        }
        let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Distribution::normalized(
            self.base
                .probs()
                .iter()
                .zip(&exponents)
                .map(|(&p, &e)| p * (e - shift).exp())
                .collect(),
        )
    }
}
