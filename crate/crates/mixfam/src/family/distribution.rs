//! Full-support probability vectors over a finite alphabet and the basic
//! information quantities on them. All quantities are in nats.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A probability distribution with full support over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Builds a distribution, rejecting zero entries and vectors whose sum
    /// deviates from 1 by more than 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is not finite"
                )));
            }
            if p <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} = {p} is not strictly positive; use restricted_support \
                     to drop zero-probability points"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Builds a distribution from positive weights, normalizing their sum to 1.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}"
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {i} = {w} is not strictly positive"
                )));
            }
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    /// Drops zero-probability points, renormalizes, and reports the kept
    /// indices. This is the explicit opt-in for inputs without full support.
    pub fn restricted_support(probs: Vec<f64>) -> Result<(Self, Vec<usize>)> {
        let kept: Vec<usize> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidDistribution("all entries are zero".into()));
        }
        let dist = Self::normalized(kept.iter().map(|&i| probs[i]).collect())?;
        Ok((dist, kept))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "alphabet must be nonempty");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Expectation P[f] of a function given by its value vector.
    pub fn expectation(&self, f: &[f64]) -> Result<f64> {
        check_len(self.len(), f.len())?;
        Ok(self
            .probs
            .iter()
            .zip(f)
            .map(|(&p, &v)| p * v)
            .sum())
    }

    /// Shannon entropy H(P) in nats.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// Convex mixture (1-w)·self + w·other.
    pub fn mix(&self, other: &Distribution, w: f64) -> Result<Distribution> {
        check_len(self.len(), other.len())?;
        Distribution::normalized(
            self.probs
                .iter()
                .zip(other.probs())
                .map(|(&a, &b)| (1.0 - w) * a + w * b)
                .collect(),
        )
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// Kullback-Leibler divergence D(p‖q) in nats.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| a * (a.ln() - b.ln()))
        .sum())
}

/// Rényi divergence of order alpha (alpha > 0, alpha ≠ 1) in nats.
pub fn renyi_divergence(alpha: f64, p: &Distribution, q: &Distribution) -> Result<f64> {
    check_len(p.len(), q.len())?;
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Renyi order must be positive and != 1, got {alpha}"
        )));
    }
    let sum: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| (alpha * a.ln() + (1.0 - alpha) * b.ln()).exp())
        .sum();
    Ok(sum.ln() / (alpha - 1.0))
}

/// Entropy of a probability vector that may contain zeros (0·ln 0 = 0).
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Conditional entropy H(X|Y) of a joint vector indexed as x·y_size + y.
/// Zero entries are allowed under the 0·ln 0 = 0 convention.
pub fn conditional_entropy(joint: &[f64], x_size: usize) -> Result<f64> {
    if x_size == 0 || joint.len() % x_size != 0 {
        return Err(Error::DimensionMismatch {
            expected: x_size,
            got: joint.len(),
        });
    }
    let y_size = joint.len() / x_size;
    let mut h = 0.0;
    for y in 0..y_size {
        let py: f64 = (0..x_size).map(|x| joint[x * y_size + y]).sum();
        if py <= 0.0 {
            continue;
        }
        for x in 0..x_size {
            let pxy = joint[x * y_size + y];
            if pxy > 0.0 {
                h -= pxy * (pxy / py).ln();
            }
        }
    }
    Ok(h)
}
