//! Independent baselines for tests: a brute-force grid minimizer, the
//! analytic binary-symmetric-channel capacity, and a plain alternating
//! e-/m-projection reference. Deliberately sharing no numerical kernels
//! with the solver module, so agreement between the two is evidence of
//! correctness rather than a shared bug.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{
    e_projection, m_projection, Distribution, ExponentialFamily, MixtureFamily, ProjectionFamily,
};
use crate::solver::{objective, PsiOracle};

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Grid step is 1/resolution on each simplex coordinate.
    pub resolution: usize,
    /// Admission band for family membership of a grid point.
    pub constraint_tolerance: f64,
}

impl GridSpec {
    pub fn new(resolution: usize, constraint_tolerance: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution {resolution} must be >= 2"
            )));
        }
        Ok(Self {
            resolution,
            constraint_tolerance,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub minimizer: Distribution,
    pub value: f64,
    /// Largest observed |ΔG| per unit L1 distance between consecutively
    /// scanned feasible points; the value error of the grid is of order
    /// lipschitz_estimate / resolution.
    pub lipschitz_estimate: f64,
}

/// Weight for nudging boundary grid points into the strict interior.
const INTERIOR_MIX: f64 = 1e-9;

fn grid_point(counts: &[usize], m: usize, n: usize) -> Distribution {
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let raw = c as f64 / m as f64;
            (1.0 - INTERIOR_MIX) * raw + INTERIOR_MIX / n as f64
        })
        .collect();
    Distribution::normalized(weights).expect("interior mixing keeps weights positive")
}

struct ScanBest {
    value: f64,
    counts: Vec<usize>,
    minimizer: Distribution,
    lipschitz: f64,
    feasible: bool,
}

/// Scans all compositions of `m` into `n` parts with a fixed first
/// coordinate, keeping the best feasible point.
fn scan_first_coordinate(
    first: usize,
    m: usize,
    n: usize,
    psi: &dyn PsiOracle,
    fam: &dyn ProjectionFamily,
    spec: &GridSpec,
) -> Result<ScanBest> {
    let mut best = ScanBest {
        value: f64::INFINITY,
        counts: Vec::new(),
        minimizer: Distribution::uniform(n),
        lipschitz: 0.0,
        feasible: false,
    };
    let mut counts = vec![0usize; n];
    counts[0] = first;
    let mut prev: Option<(f64, Vec<usize>)> = None;

    // Iterative enumeration of the remaining n-1 coordinates.
    fn descend(
        counts: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        m: usize,
        n: usize,
        psi: &dyn PsiOracle,
        fam: &dyn ProjectionFamily,
        spec: &GridSpec,
        best: &mut ScanBest,
        prev: &mut Option<(f64, Vec<usize>)>,
    ) -> Result<()> {
        if idx == n - 1 {
            counts[idx] = remaining;
            let point = grid_point(counts, m, n);
            if fam.residual(&point)? <= spec.constraint_tolerance {
                // Snap onto the family so the evaluated value is attained by
                // an actual member, not a near-member.
                let (snapped, _) = fam.project(&point, 1e-10)?;
                let value = objective(&snapped, psi)?;
                if let Some((pv, pc)) = prev.as_ref() {
                    let dist: f64 = pc
                        .iter()
                        .zip(counts.iter())
                        .map(|(&a, &b)| (a as f64 - b as f64).abs() / m as f64)
                        .sum();
                    if dist > 0.0 {
                        best.lipschitz = best.lipschitz.max((value - pv).abs() / dist);
                    }
                }
                *prev = Some((value, counts.clone()));
                let better = !best.feasible
                    || value < best.value
                    || (value == best.value && counts[..] < best.counts[..]);
                if better {
                    best.value = value;
                    best.counts = counts.clone();
                    best.minimizer = snapped;
                    best.feasible = true;
                }
            }
            counts[idx] = 0;
            return Ok(());
        }
        for c in 0..=remaining {
            counts[idx] = c;
            descend(
                counts,
                idx + 1,
                remaining - c,
                m,
                n,
                psi,
                fam,
                spec,
                best,
                prev,
            )?;
        }
        counts[idx] = 0;
        Ok(())
    }

    descend(
        &mut counts, 1, m - first, m, n, psi, fam, spec, &mut best, &mut prev,
    )?;
    Ok(best)
}

/// Brute-force minimization of G over the grid {c/m} on the simplex,
/// restricted to points within the family's admission band. Points are
/// nudged into the strict interior and snapped onto the family before
/// evaluation. Guarded to alphabets of at most 5 points.
pub fn grid_minimize(
    psi: &dyn PsiOracle,
    fam: &dyn ProjectionFamily,
    spec: &GridSpec,
) -> Result<GridResult> {
    let n = fam.alphabet_size();
    if n > 5 {
        return Err(Error::InvalidParameter(format!(
            "full grids are limited to 5-point alphabets, got {n}"
        )));
    }
    let m = spec.resolution;
    let bests: Vec<ScanBest> = (0..=m)
        .into_par_iter()
        .map(|first| scan_first_coordinate(first, m, n, psi, fam, spec))
        .collect::<Result<_>>()?;

    let mut overall: Option<ScanBest> = None;
    let mut lipschitz: f64 = 0.0;
    // Deterministic reduction: ascending first coordinate, ties broken by
    // lexicographically smallest count vector.
    for b in bests {
        lipschitz = lipschitz.max(b.lipschitz);
        if !b.feasible {
            continue;
        }
        let take = match &overall {
            None => true,
            Some(o) => {
                b.value < o.value || (b.value == o.value && b.counts[..] < o.counts[..])
            }
        };
        if take {
            overall = Some(b);
        }
    }
    let best = overall.ok_or(Error::EmptyFeasibleGrid)?;
    Ok(GridResult {
        minimizer: best.minimizer,
        value: best.value,
        lipschitz_estimate: lipschitz,
    })
}

/// ln 2 + p·ln p + (1−p)·ln(1−p), the capacity in nats of the binary
/// symmetric channel with crossover probability p ∈ (0, 1/2).
pub fn bsc_capacity(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "crossover probability {p} must lie in (0, 1/2)"
        )));
    }
    Ok(2.0_f64.ln() + p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// Plain alternating projection: e-projection onto `efam`, then
/// m-projection back onto `fam`, with no acceleration parameter. Returns
/// the iterate list starting with `init`.
pub fn classical_em_reference(
    fam: &MixtureFamily,
    efam: &ExponentialFamily,
    init: &Distribution,
    iters: usize,
) -> Result<Vec<Distribution>> {
    if fam.residual(init)? > 1e-8 {
        return Err(Error::InvalidParameter(
            "init must be a member of the mixture family".into(),
        ));
    }
    let mut out = vec![init.clone()];
    let mut p = init.clone();
    for _ in 0..iters {
        let (q, _) = e_projection(&p, efam, 1e-12)?;
        let (next, _) = m_projection(&q, fam, 1e-12)?;
        out.push(next.clone());
        p = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FeatureFunction;
    use crate::solver::FnPsi;

    #[test]
    fn constant_psi_flat_grid() {
        let psi = FnPsi::new(|p: &Distribution| vec![2.5; p.len()]);
        let fam = MixtureFamily::full_simplex(3);
        let spec = GridSpec::new(20, 1e-9).unwrap();
        let r = grid_minimize(&psi, &fam, &spec).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bsc_grid_matches_analytic() {
        let p = 0.1;
        let rows = [[1.0 - p, p], [p, 1.0 - p]];
        let psi = FnPsi::new(move |q: &Distribution| {
            let m = [
                q.probs()[0] * rows[0][0] + q.probs()[1] * rows[1][0],
                q.probs()[0] * rows[0][1] + q.probs()[1] * rows[1][1],
            ];
            rows.iter()
                .map(|row| {
                    -row.iter()
                        .zip(&m)
                        .map(|(&w, &mm)| w * (w.ln() - mm.ln()))
                        .sum::<f64>()
                })
                .collect()
        });
        let fam = MixtureFamily::full_simplex(2);
        let spec = GridSpec::new(2000, 1e-9).unwrap();
        let r = grid_minimize(&psi, &fam, &spec).unwrap();
        assert!((r.value + bsc_capacity(0.1).unwrap()).abs() < 1e-5, "{}", r.value);
    }

    #[test]
    fn empty_feasible_grid_detected() {
        let psi = FnPsi::new(|p: &Distribution| vec![0.0; p.len()]);
        let f = FeatureFunction::new(vec![0.0, 1.0, 2.0]).unwrap();
        let fam = MixtureFamily::new(3, vec![(f, 0.5)]).unwrap();
        // Tolerance so tight that no coarse grid point hits the constraint.
        let spec = GridSpec::new(3, 1e-15).unwrap();
        assert!(matches!(
            grid_minimize(&psi, &fam, &spec),
            Err(Error::EmptyFeasibleGrid)
        ));
    }

    #[test]
    fn bsc_capacity_limits() {
        assert!((bsc_capacity(1e-12).unwrap() - 2.0_f64.ln()).abs() < 1e-9);
        assert!(bsc_capacity(0.5).is_err());
        assert!(bsc_capacity(0.0).is_err());
        assert!((bsc_capacity(0.1).unwrap() - 0.368_064_2).abs() < 5e-8);
    }

    #[test]
    fn bsc_capacity_monotone() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let p = i as f64 * 0.01;
            let c = bsc_capacity(p).unwrap();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn em_reference_fixed_point_at_intersection() {
        // fam: E[x] = 1.0 on {0,1,2}; efam: tilts of uniform by x. The tilt
        // with mean 1.0 is uniform itself, which lies in both families.
        let f = FeatureFunction::new(vec![0.0, 1.0, 2.0]).unwrap();
        let fam = MixtureFamily::new(3, vec![(f.clone(), 1.0)]).unwrap();
        let efam = ExponentialFamily::new(Distribution::uniform(3), vec![f]).unwrap();
        let init = Distribution::uniform(3);
        let iters = classical_em_reference(&fam, &efam, &init, 5).unwrap();
        assert_eq!(iters.len(), 6);
        for it in &iters {
            for (a, b) in it.probs().iter().zip(init.probs()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn em_reference_zero_iters_returns_init() {
        let f = FeatureFunction::new(vec![0.0, 1.0, 2.0]).unwrap();
        let fam = MixtureFamily::new(3, vec![(f.clone(), 1.0)]).unwrap();
        let efam = ExponentialFamily::new(Distribution::uniform(3), vec![f]).unwrap();
        let init = Distribution::uniform(3);
        let iters = classical_em_reference(&fam, &efam, &init, 0).unwrap();
        assert_eq!(iters.len(), 1);
    }
}
