//! File schemas and their validation. Every error message names the
//! offending file and field so a bad input can be located without a
//! debugger.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use mixfam::problems::{Channel, JointSource};
use mixfam::{Distribution, ExponentialFamily, FeatureFunction, MixtureFamily};

/// Row-stochastic matrix, validated to 1e-9 and then renormalized exactly
/// so downstream arithmetic sees rows summing to 1 at full precision.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    joint: Vec<Vec<f64>>,
    t_size: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsFile {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EFamilyFile {
    base: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn load_channel(path: &Path) -> Result<Channel> {
    let file: ChannelFile = parse(path)?;
    let mut rows = file.rows;
    if rows.is_empty() {
        bail!("{}: rows is empty", path.display());
    }
    for (x, row) in rows.iter_mut().enumerate() {
        for (y, &w) in row.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                bail!(
                    "{}: rows[{x}][{y}] = {w} is not a probability",
                    path.display()
                );
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            bail!(
                "{}: rows[{x}] sums to {sum}, not 1 within 1e-9",
                path.display()
            );
        }
        for w in row.iter_mut() {
            *w /= sum;
        }
    }
    Channel::new(rows).map_err(|e| anyhow!("{}: rows: {e}", path.display()))
}

pub fn load_joint(path: &Path) -> Result<JointSource> {
    let file: JointFile = parse(path)?;
    JointSource::new(file.joint, file.t_size)
        .map_err(|e| anyhow!("{}: joint/t_size: {e}", path.display()))
}

/// The constraint list as (feature, target) pairs; the caller decides the
/// alphabet it must match.
pub fn load_constraints(path: &Path) -> Result<Vec<(FeatureFunction, f64)>> {
    let file: ConstraintsFile = parse(path)?;
    if file.features.len() != file.targets.len() {
        bail!(
            "{}: features has {} rows but targets has {} entries",
            path.display(),
            file.features.len(),
            file.targets.len()
        );
    }
    file.features
        .into_iter()
        .zip(file.targets)
        .enumerate()
        .map(|(i, (f, a))| {
            if !a.is_finite() {
                bail!("{}: targets[{i}] = {a} is not finite", path.display());
            }
            let f = FeatureFunction::new(f)
                .map_err(|e| anyhow!("{}: features[{i}]: {e}", path.display()))?;
            Ok((f, a))
        })
        .collect()
}

pub fn load_efamily(path: &Path) -> Result<ExponentialFamily> {
    let file: EFamilyFile = parse(path)?;
    let base = Distribution::new(file.base)
        .map_err(|e| anyhow!("{}: base: {e}", path.display()))?;
    let generators = file
        .generators
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            FeatureFunction::new(g)
                .map_err(|e| anyhow!("{}: generators[{i}]: {e}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    ExponentialFamily::new(base, generators)
        .map_err(|e| anyhow!("{}: generators: {e}", path.display()))
}

/// Builds the mixture family a constraints file describes on an
/// `alphabet_size`-point alphabet; the full simplex when no file is given.
pub fn constraints_to_family(
    constraints: Option<Vec<(FeatureFunction, f64)>>,
    alphabet_size: usize,
) -> Result<MixtureFamily> {
    match constraints {
        None => Ok(MixtureFamily::full_simplex(alphabet_size)),
        Some(list) => {
            MixtureFamily::new(alphabet_size, list).map_err(|e| anyhow!("constraints: {e}"))
        }
    }
}

/// Parses a 1-based comma-separated index list ("1,2,3") into 0-based
/// indices.
pub fn parse_restrict(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            let i: usize = tok
                .trim()
                .parse()
                .map_err(|_| anyhow!("--restrict entry {tok:?} is not a positive integer"))?;
            if i == 0 {
                bail!("--restrict uses 1-based input indices; got 0");
            }
            Ok(i - 1)
        })
        .collect()
}

/// Parses the --gamma token list, keeping the original tokens for file
/// naming. Every value must be finite and > 0.
pub fn parse_gammas(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let g: f64 = tok
                .parse()
                .map_err(|_| anyhow!("--gamma entry {tok:?} is not a number"))?;
            if !(g.is_finite() && g > 0.0) {
                bail!("--gamma entry {tok} must be finite and > 0");
            }
            Ok((tok.to_string(), g))
        })
        .collect()
}
