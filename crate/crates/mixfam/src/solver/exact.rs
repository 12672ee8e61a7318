//! The exact loop: P^{t+1} is the m-projection of F₃[P^t] onto the family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::{kl_divergence, Distribution, ProjectionFamily};
use crate::solver::ops::{f3_map_ln, objective};
use crate::solver::{
    IterationTrace, PsiOracle, SolveResult, SolveStatus, SolverConfig, StepRecord,
};

/// Brings `init` into the family, projecting first when it violates the
/// constraints beyond tolerance.
fn admitted_init(
    fam: &dyn ProjectionFamily,
    init: &Distribution,
    tol: f64,
) -> Result<Distribution> {
    if init.len() != fam.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: fam.alphabet_size(),
            got: init.len(),
        });
    }
    let residual = fam.residual(init)?;
    if residual <= 10.0 * tol {
        return Ok(init.clone());
    }
    log::warn!(
        "initial point violates the constraints (residual {residual:e}); projecting it first"
    );
    let (p, report) = fam.project(init, tol)?;
    if !report.converged {
        return Err(Error::ProjectionFailed {
            residual: report.gradient_norm,
            iterations: report.iterations,
        });
    }
    Ok(p)
}

pub fn solve_exact(
    psi: &dyn PsiOracle,
    fam: &dyn ProjectionFamily,
    init: &Distribution,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let mut p = admitted_init(fam, init, cfg.projection_tol)?;
    let mut trace = IterationTrace::default();
    let mut status = SolveStatus::IterCap;

    for t in 1..=cfg.max_iter {
        let g = objective(&p, psi)?;
        let (f3, ln_kappa) = f3_map_ln(&p, psi, cfg.gamma)?;
        let (next, report) = fam.project(&f3, cfg.projection_tol)?;
        if !report.converged {
            return Err(Error::ProjectionFailed {
                residual: report.gradient_norm,
                iterations: report.iterations,
            });
        }
        let step_kl = kl_divergence(&p, &next)?;
        trace.steps.push(StepRecord {
            iter: t,
            objective: g,
            step_kl,
            kappa: ln_kappa.exp(),
            dual_iters: report.iterations,
            dual_residual: report.gradient_norm,
            selection_score: None,
        });

        let g_next = objective(&next, psi)?;
        if g_next > g + 1e-12 {
            log::warn!(
                "objective increased by {:e} at step {t}; gamma = {} is too small",
                g_next - g,
                cfg.gamma
            );
            status = SolveStatus::DescentViolation;
            break;
        }
        p = next;
        if cfg.gamma * step_kl <= cfg.stop_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    let g_final = objective(&p, psi)?;
    let (_, ln_kappa_final) = f3_map_ln(&p, psi, cfg.gamma)?;
    trace.steps.push(StepRecord {
        iter: trace.steps.len() + 1,
        objective: g_final,
        step_kl: 0.0,
        kappa: ln_kappa_final.exp(),
        dual_iters: 0,
        dual_residual: fam.residual(&p)?,
        selection_score: None,
    });

    Ok(SolveResult {
        minimizer: p,
        objective: g_final,
        trace,
        status,
        approx: None,
    })
}

/// A full-support point drawn uniformly from the simplex (flat Dirichlet via
/// normalized exponentials). `sharpness` > 1 raises the weights to that
/// power before normalizing, concentrating the draw near faces of the
/// simplex; the iteration map preserves some conditional structure of its
/// starting point on several problems, so restarts need near-face starts to
/// cover optima with (near-)deterministic conditionals.
pub(crate) fn random_interior_point(
    n: usize,
    rng: &mut ChaCha8Rng,
    sharpness: f64,
) -> Distribution {
    let weights: Vec<f64> = (0..n)
        .map(|_| (-(rng.gen_range(f64::MIN_POSITIVE..1.0_f64)).ln()).powf(sharpness))
        .collect();
    Distribution::normalized(weights).expect("positive weights")
}

/// Runs [`solve_exact`] from the projected uniform point plus
/// `restarts − 1` random family members and keeps the best converged
/// objective. Ties and ordering are deterministic for a fixed seed.
pub fn solve_exact_restarts(
    psi: &dyn PsiOracle,
    fam: &dyn ProjectionFamily,
    cfg: &SolverConfig,
    restarts: usize,
    seed: u64,
) -> Result<SolveResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<SolveResult> = None;
    let mut last_err: Option<Error> = None;
    for r in 0..restarts {
        let start = if r == 0 {
            Distribution::uniform(fam.alphabet_size())
        } else if r % 2 == 1 {
            random_interior_point(fam.alphabet_size(), &mut rng, 1.0)
        } else {
            random_interior_point(fam.alphabet_size(), &mut rng, 8.0)
        };
        // A pathological random start (e.g. too close to a face for its
        // projection to converge) is skipped, not fatal; the error is only
        // surfaced when every restart fails.
        let attempt = fam
            .project(&start, cfg.projection_tol)
            .and_then(|(init, _)| solve_exact(psi, fam, &init, cfg));
        match attempt {
            Ok(result) => {
                let better = match &best {
                    None => true,
                    Some(b) => result.objective < b.objective,
                };
                if better {
                    best = Some(result);
                }
            }
            Err(e) => {
                log::warn!("restart {r} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => Err(last_err.expect("restarts >= 1")),
    }
}
