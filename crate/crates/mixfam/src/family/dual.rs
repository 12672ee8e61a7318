//! Dual (natural-parameter) solver behind both projection primitives.
//!
//! The m-projection of P onto {Q : Q[f_i] = a_i} is the tilted distribution
//! Q_θ(x) ∝ P(x)·exp(Σ_j θ_j f_j(x)) whose parameter minimizes the convex
//! dual φ[P](θ) − Σ_j θ_j a_j, and the e-projection of P onto an exponential
//! family is the member whose generator expectations match P's. Both reduce
//! to the same moment-matching solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::distribution::Distribution;
use crate::family::exponential::ExponentialFamily;
use crate::family::mixture::{FeatureFunction, MixtureFamily};
use crate::family::ProjectionFamily;

/// Diagnostics of one dual solve.
#[derive(Debug, Clone)]
pub struct DualSolveReport {
    pub theta: Vec<f64>,
    pub dual_value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DualSolveReport {
    pub(crate) fn trivial() -> Self {
        Self {
            theta: Vec::new(),
            dual_value: 0.0,
            gradient_norm: 0.0,
            iterations: 0,
            converged: true,
        }
    }
}

/// The log-partition φ[q](θ) = ln Σ_x q(x)·e^{Σ_j θ_j f_j(x)} and its
/// gradient (Σ_x Q_θ(x) f_j(x))_j, stabilized by a max-shift.
pub fn dual_potential(
    q: &Distribution,
    fam: &MixtureFamily,
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if theta.len() != fam.features().len() {
        return Err(Error::DimensionMismatch {
            expected: fam.features().len(),
            got: theta.len(),
        });
    }
    let (value, tilted) = tilt(q, fam.features(), theta)?;
    let grad = fam.mixture_coordinates(&tilted)?;
    Ok((value, grad))
}

/// Returns (φ[q](θ), Q_θ) where Q_θ(x) ∝ q(x)·e^{Σ_j θ_j f_j(x)}.
fn tilt(
    q: &Distribution,
    features: &[FeatureFunction],
    theta: &[f64],
) -> Result<(f64, Distribution)> {
    let n = q.len();
    for f in features {
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
    }
    let mut exponents = vec![0.0; n];
    for (f, &t) in features.iter().zip(theta) {
        for (e, &v) in exponents.iter_mut().zip(f.values()) {
            *e += t * v;
        }
    }
    let shift = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = q
        .probs()
        .iter()
        .zip(&exponents)
        .map(|(&p, &e)| p * (e - shift).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::Degenerate(format!(
            "tilted weights sum to {sum} at theta = {theta:?}"
        )));
    }
    let value = shift + sum.ln();
    Ok((value, Distribution::normalized(weights)?))
}

struct DualState {
    value: f64,
    grad: Vec<f64>,
    grad_norm: f64,
    tilted: Distribution,
}

fn evaluate(
    base: &Distribution,
    features: &[FeatureFunction],
    targets: &[f64],
    theta: &[f64],
) -> Result<DualState> {
    let (phi, tilted) = tilt(base, features, theta)?;
    let value = phi
        - theta
            .iter()
            .zip(targets)
            .map(|(&t, &a)| t * a)
            .sum::<f64>();
    let grad: Vec<f64> = features
        .iter()
        .zip(targets)
        .map(|(f, &a)| tilted.expectation(f.values()).map(|e| e - a))
        .collect::<Result<_>>()?;
    let grad_norm = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
    Ok(DualState {
        value,
        grad,
        grad_norm,
        tilted,
    })
}

/// Finds θ with |E_{Q_θ}[f_j] − a_j| ≤ tol for all j, where
/// Q_θ ∝ base·e^{θ·f}, by damped Newton descent on the convex dual.
/// Non-convergence is reported via the returned flag, not an error; the best
/// iterate seen is returned in that case.
pub fn solve_moment_match(
    base: &Distribution,
    features: &[FeatureFunction],
    targets: &[f64],
    tol: f64,
    max_iter: usize,
    theta0: Option<&[f64]>,
) -> Result<(Distribution, DualSolveReport)> {
    if features.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: targets.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let k = features.len();
    if k == 0 {
        return Ok((base.clone(), DualSolveReport::trivial()));
    }
    let mut theta: Vec<f64> = match theta0 {
        Some(t) => {
            if t.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: t.len(),
                });
            }
            t.to_vec()
        }
        None => vec![0.0; k],
    };

    let mut state = evaluate(base, features, targets, &theta)?;
    let mut best_theta = theta.clone();
    let mut best = state.grad_norm;
    let mut iterations = 0;

    for _ in 0..max_iter {
        if state.grad_norm <= tol {
            break;
        }
        iterations += 1;

        let dir = newton_direction(&state, features);
        let descent: f64 = dir
            .iter()
            .zip(&state.grad)
            .map(|(&d, &g)| d * g)
            .sum();
        let dir = if !descent.is_finite() || descent >= 0.0 {
            // Fall back to plain gradient descent when the Hessian solve
            // produced an ascent or non-finite direction.
            state.grad.iter().map(|&g| -g).collect::<Vec<f64>>()
        } else {
            dir
        };

        // Backtracking line search on the dual value. Near the optimum the
        // value change per step falls below f64 resolution, so a step is
        // also accepted when it shrinks the gradient norm.
        let mut step = 1.0;
        let mut accepted = None;
        let slack = 1e-14 * (1.0 + state.value.abs());
        for _ in 0..60 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&dir)
                .map(|(&t, &d)| t + step * d)
                .collect();
            match evaluate(base, features, targets, &cand) {
                Ok(s)
                    if s.value.is_finite()
                        && (s.value <= state.value + slack
                            || s.grad_norm < state.grad_norm) =>
                {
                    accepted = Some((cand, s));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if std::env::var("MIXFAM_DUAL_DEBUG").is_ok() {
            eprintln!(
                "iter={iterations} theta={theta:?} gn={:e} val={:.17} dir={dir:?} accepted={}",
                state.grad_norm,
                state.value,
                accepted.is_some()
            );
        }
        match accepted {
            Some((cand, s)) => {
                theta = cand;
                state = s;
            }
            None if k == 1 => {
                let (t, s) = bisect_scalar(base, &features[0], targets[0], theta[0], tol)?;
                theta = vec![t];
                state = s;
            }
            None => break,
        }
        if state.grad_norm < best {
            best = state.grad_norm;
            best_theta = theta.clone();
        }
    }

    if state.grad_norm > best {
        state = evaluate(base, features, targets, &best_theta)?;
        theta = best_theta;
    }
    // The line search can keep accepting oscillating steps on extreme
    // one-dimensional instances (near-degenerate bases) without ever
    // triggering the in-loop fallback; finish those off by bisection.
    if state.grad_norm > tol && k == 1 && max_iter > 0 {
        if let Ok((t, s)) = bisect_scalar(base, &features[0], targets[0], theta[0], tol) {
            if s.grad_norm < state.grad_norm {
                theta = vec![t];
                state = s;
            }
        }
    }
    let converged = state.grad_norm <= tol;
    let report = DualSolveReport {
        theta,
        dual_value: state.value,
        gradient_norm: state.grad_norm,
        iterations,
        converged,
    };
    Ok((state.tilted, report))
}

/// Newton direction −H⁻¹g with H the feature covariance under Q_θ plus a
/// small ridge. May return an unusable direction; the caller screens it.
fn newton_direction(state: &DualState, features: &[FeatureFunction]) -> Vec<f64> {
    let k = features.len();
    let means: Vec<f64> = features
        .iter()
        .map(|f| state.tilted.expectation(f.values()).unwrap_or(f64::NAN))
        .collect();
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut cov = 0.0;
            for ((&p, &fi), &fj) in state
                .tilted
                .probs()
                .iter()
                .zip(features[i].values())
                .zip(features[j].values())
            {
                cov += p * (fi - means[i]) * (fj - means[j]);
            }
            h[(i, j)] = cov;
            h[(j, i)] = cov;
        }
    }
    let ridge = 1e-12 * (h.trace().abs() + 1.0);
    for i in 0..k {
        h[(i, i)] += ridge;
    }
    let g = DVector::from_column_slice(&state.grad);
    match h.clone().cholesky() {
        Some(ch) => (-(ch.solve(&g))).data.into(),
        None => match h.lu().solve(&g) {
            Some(d) => (-d).data.into(),
            None => state.grad.iter().map(|&g| -g).collect(),
        },
    }
}

/// One-dimensional fallback: the dual derivative t ↦ E_{Q_t}[f] − a is
/// monotone increasing, so bracket a sign change and bisect.
fn bisect_scalar(
    base: &Distribution,
    feature: &FeatureFunction,
    target: f64,
    t0: f64,
    tol: f64,
) -> Result<(f64, DualState)> {
    let features = std::slice::from_ref(feature);
    let targets = [target];
    // Extreme tilt parameters can underflow some weight to exactly zero;
    // that only happens while chasing an unattainable target.
    let deriv = |t: f64| -> Result<f64> {
        evaluate(base, features, &targets, &[t])
            .map(|s| s.grad[0])
            .map_err(|_| {
                Error::InfeasibleFamily(format!(
                    "no finite tilt parameter attains target {target}"
                ))
            })
    };
    let d0 = deriv(t0)?;
    let (mut lo, mut hi);
    if d0 > 0.0 {
        hi = t0;
        lo = t0 - 1.0;
        let mut width = 1.0;
        while deriv(lo)? > 0.0 {
            width *= 2.0;
            lo -= width;
            if width > 1e9 {
                return Err(Error::InfeasibleFamily(format!(
                    "no tilt parameter attains target {target}"
                )));
            }
        }
    } else {
        lo = t0;
        hi = t0 + 1.0;
        let mut width = 1.0;
        while deriv(hi)? < 0.0 {
            width *= 2.0;
            hi += width;
            if width > 1e9 {
                return Err(Error::InfeasibleFamily(format!(
                    "no tilt parameter attains target {target}"
                )));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = deriv(mid)?;
        if d.abs() <= tol || hi - lo < f64::EPSILON * (1.0 + mid.abs()) {
            return Ok((mid, evaluate(base, features, &targets, &[mid])?));
        }
        if d > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok((mid, evaluate(base, features, &targets, &[mid])?))
}

/// The member of `fam` minimizing D(member‖p).
pub fn m_projection(
    p: &Distribution,
    fam: &MixtureFamily,
    tol: f64,
) -> Result<(Distribution, DualSolveReport)> {
    fam.project(p, tol)
}

/// The member of `efam` minimizing D(p‖member), found by matching the
/// generator expectations of p.
pub fn e_projection(
    p: &Distribution,
    efam: &ExponentialFamily,
    tol: f64,
) -> Result<(Distribution, DualSolveReport)> {
    if p.len() != efam.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: efam.alphabet_size(),
            got: p.len(),
        });
    }
    let targets: Vec<f64> = efam
        .generators()
        .iter()
        .map(|g| p.expectation(g.values()))
        .collect::<Result<_>>()?;
    solve_moment_match(efam.base(), efam.generators(), &targets, tol, 200, None)
}
