//! The approximate loop: each per-step dual problem is solved only to a
//! value slack ε₁, giving an auxiliary iterate P̄^{t+1} outside the family;
//! a single repair projection produces the family member P^{t+1}, and the
//! output is picked by a selection rule over the whole run.

use crate::error::{Error, Result};
use crate::family::{kl_divergence, solve_moment_match, Distribution, MixtureFamily,
    ProjectionFamily};
use crate::solver::ops::{f3_map_ln, objective};
use crate::solver::{
    ApproxDiagnostics, IterationTrace, PsiOracle, SolveResult, SolveStatus, SolverConfig,
    StepRecord,
};

/// Accuracy of the reference dual solves used to measure the slack of the
/// inexact ones. Must be far below any ε₁ of interest.
const MEASURE_TOL: f64 = 1e-13;

pub fn solve_approx(
    psi: &dyn PsiOracle,
    fam: &MixtureFamily,
    init: &Distribution,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    if !psi.domain_is_full_simplex() {
        return Err(Error::InvalidParameter(
            "the approximate loop evaluates psi outside the constraint set, \
             which this oracle does not support"
            .into(),
        ));
    }
    if cfg.max_iter < 2 {
        return Err(Error::Degenerate(
            "the selection rule needs at least 2 iterates".into(),
        ));
    }
    let (p1, _) = fam.project(init, cfg.projection_tol)?;

    // 1-based iterate lists: ps[t-1] = P^t ∈ 𝓜_a, pbars[t-1] = P̄^t.
    let mut ps = vec![p1.clone()];
    let mut pbars = vec![p1];
    let mut eps1_realized: f64 = 0.0;
    let mut eps2_realized: f64 = 0.0;
    let mut projection_gap_max: Option<f64> = None;
    let mut trace = IterationTrace::default();
    let mut status = SolveStatus::IterCap;

    for t in 1..cfg.max_iter {
        let pbar_t = pbars.last().expect("nonempty").clone();
        let p_t = ps.last().expect("nonempty").clone();
        let (base, ln_kappa) = f3_map_ln(&pbar_t, psi, cfg.gamma)?;

        // Reference solve: the true dual minimum, used to measure slack.
        let (exact_proj, exact_rep) =
            solve_moment_match(&base, fam.features(), fam.targets(), MEASURE_TOL, 300, None)?;
        if !exact_rep.converged {
            return Err(Error::ProjectionFailed {
                residual: exact_rep.gradient_norm,
                iterations: exact_rep.iterations,
            });
        }
        let dual_min = exact_rep.dual_value;

        // Inexact solve: the cheapest Newton budget whose dual value is
        // within ε₁ of the minimum.
        let mut pbar_next = base.clone();
        let mut inexact_rep = None;
        for budget in 0..=300 {
            let (cand, rep) = solve_moment_match(
                &base,
                fam.features(),
                fam.targets(),
                MEASURE_TOL,
                budget,
                None,
            )?;
            if rep.dual_value - dual_min <= cfg.approx_tol {
                eps1_realized = eps1_realized.max((rep.dual_value - dual_min).max(0.0));
                pbar_next = cand;
                inexact_rep = Some(rep);
                break;
            }
        }
        let inexact_rep = inexact_rep.ok_or(Error::ProjectionFailed {
            residual: exact_rep.gradient_norm,
            iterations: 300,
        })?;

        // Constraint repair: one high-accuracy projection into the family.
        let (p_next, repair_rep) = fam.project(&pbar_next, cfg.projection_tol)?;
        if !repair_rep.converged {
            return Err(Error::ProjectionFailed {
                residual: repair_rep.gradient_norm,
                iterations: repair_rep.iterations,
            });
        }
        eps2_realized = eps2_realized.max(kl_divergence(&pbar_next, &p_next)?);

        if cfg.check_projection_accuracy {
            let gap = kl_divergence(&exact_proj, &pbar_next)?;
            projection_gap_max = Some(projection_gap_max.unwrap_or(0.0).max(gap));
        }

        let g_t = objective(&p_t, psi)?;
        let step_kl = kl_divergence(&p_t, &p_next)?;
        trace.steps.push(StepRecord {
            iter: t,
            objective: g_t,
            step_kl,
            kappa: ln_kappa.exp(),
            dual_iters: inexact_rep.iterations,
            dual_residual: inexact_rep.gradient_norm,
            selection_score: Some(g_t - cfg.gamma * kl_divergence(&p_t, &pbar_t)?),
        });

        ps.push(p_next);
        pbars.push(pbar_next);

        if cfg.gamma * step_kl <= cfg.stop_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    let t1 = ps.len();
    if t1 < 2 {
        return Err(Error::Degenerate(
            "the selection rule needs at least 2 iterates".into(),
        ));
    }

    // Final row for P^{t1}.
    let g_last = objective(&ps[t1 - 1], psi)?;
    let last_score = g_last - cfg.gamma * kl_divergence(&ps[t1 - 1], &pbars[t1 - 1])?;
    let (_, ln_kappa_last) = f3_map_ln(&pbars[t1 - 1], psi, cfg.gamma)?;
    trace.steps.push(StepRecord {
        iter: t1,
        objective: g_last,
        step_kl: 0.0,
        kappa: ln_kappa_last.exp(),
        dual_iters: 0,
        dual_residual: fam.residual(&ps[t1 - 1])?,
        selection_score: Some(last_score),
    });

    // Selection over t = 2..t1 of G(P^t) − γ·D(P^t‖P̄^t).
    let mut t2 = 2;
    let mut best_score = f64::INFINITY;
    for t in 2..=t1 {
        let score = objective(&ps[t - 1], psi)?
            - cfg.gamma * kl_divergence(&ps[t - 1], &pbars[t - 1])?;
        if score < best_score {
            best_score = score;
            t2 = t;
        }
    }

    let minimizer = ps[t2 - 1].clone();
    let obj = objective(&minimizer, psi)?;
    Ok(SolveResult {
        minimizer,
        objective: obj,
        trace,
        status,
        approx: Some(ApproxDiagnostics {
            eps1_realized,
            eps2_realized,
            t1,
            t2,
            projection_gap_max,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::FeatureFunction;
    use crate::solver::exact::solve_exact;
    use crate::solver::FnPsi;

    fn bsc_capacity_psi(p: f64) -> FnPsi<impl Fn(&Distribution) -> Vec<f64>> {
        let rows = [[1.0 - p, p], [p, 1.0 - p]];
        FnPsi::new(move |q: &Distribution| {
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
        })
    }

    #[test]
    fn tight_eps_matches_exact() {
        let psi = bsc_capacity_psi(0.1);
        let f = FeatureFunction::new(vec![0.0, 1.0]).unwrap();
        let fam = MixtureFamily::new(2, vec![(f, 0.3)]).unwrap();
        let init = Distribution::new(vec![0.7, 0.3]).unwrap();
        let mut cfg = SolverConfig::new(1.0);
        cfg.approx_tol = 1e-12;
        let approx = solve_approx(&psi, &fam, &init, &cfg).unwrap();
        let exact = solve_exact(&psi, &fam, &init, &cfg).unwrap();
        assert!(
            (approx.objective - exact.objective).abs() < 1e-8,
            "{} vs {}",
            approx.objective,
            exact.objective
        );
        let d = approx.approx.unwrap();
        assert!(d.eps1_realized <= 1e-12);
    }

    #[test]
    fn symmetric_budget_is_inactive() {
        // Constraint P[(0,1)] = 0.5 admits the unconstrained optimum of a
        // symmetric channel.
        let psi = bsc_capacity_psi(0.1);
        let f = FeatureFunction::new(vec![0.0, 1.0]).unwrap();
        let fam = MixtureFamily::new(2, vec![(f, 0.5)]).unwrap();
        let init = Distribution::new(vec![0.5, 0.5]).unwrap();
        let cfg = SolverConfig::new(1.0);
        let result = solve_approx(&psi, &fam, &init, &cfg).unwrap();
        let capacity = 2.0_f64.ln() + 0.1 * 0.1_f64.ln() + 0.9 * 0.9_f64.ln();
        assert!((result.objective + capacity).abs() < 1e-9);
    }

    #[test]
    fn rejects_restricted_domain_oracle() {
        let psi = FnPsi::restricted_domain(|p: &Distribution| vec![0.0; p.len()]);
        let fam = MixtureFamily::full_simplex(2);
        let cfg = SolverConfig::new(1.0);
        assert!(solve_approx(&psi, &fam, &Distribution::uniform(2), &cfg).is_err());
    }
}
