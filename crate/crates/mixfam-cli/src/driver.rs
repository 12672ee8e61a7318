//! Problem construction from flags and the run/sweep/grid drivers.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use mixfam::oracle::{grid_minimize, GridSpec};
use mixfam::problems::{
    channel_capacity, commitment_capacity, em_problem, information_bottleneck,
    reliability_exponent, reverse_em, strong_converse_exponent, wiretap_degraded, wiretap_general,
    with_cost_constraint, ProblemInstance, ReportTransform,
};
use mixfam::solver::{
    solve_approx, solve_exact, solve_gradient_combo, SolveResult, SolveStatus, SolverConfig,
};
use mixfam::Distribution;

use crate::cli::{Algorithm, GridArgs, ProblemArgs, ProblemKind, RunArgs, SweepArgs};
use crate::input;

/// Exit code contract: 0 converged, 2 iteration cap, 3 descent violation
/// (input errors exit 1 before any solve).
pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::IterCap => 2,
        SolveStatus::DescentViolation => 3,
    }
}

fn require<'a, T>(opt: &'a Option<T>, flag: &str, problem: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| anyhow!("--problem {problem} requires {flag}"))
}

fn load_channel_arg(args: &ProblemArgs, problem: &str) -> Result<mixfam::problems::Channel> {
    let path = require(&args.channel, "--channel", problem)?;
    let w = input::load_channel(path)?;
    match &args.restrict {
        None => Ok(w),
        Some(s) => {
            let keep = input::parse_restrict(s)?;
            w.restrict_inputs(&keep)
                .map_err(|e| anyhow!("--restrict: {e}"))
        }
    }
}

/// Builds the problem instance the flags describe, including any extra
/// linear constraints from --constraints.
pub fn build_instance(args: &ProblemArgs) -> Result<ProblemInstance> {
    let name = problem_name(args.problem);
    let instance = match args.problem {
        ProblemKind::Capacity => channel_capacity(load_channel_arg(args, name)?)?,
        ProblemKind::Reliability => {
            let alpha = *require(&args.alpha, "--alpha", name)?;
            reliability_exponent(load_channel_arg(args, name)?, alpha)?
        }
        ProblemKind::StrongConverse => {
            let alpha = *require(&args.alpha, "--alpha", name)?;
            strong_converse_exponent(load_channel_arg(args, name)?, alpha)?
        }
        ProblemKind::Wiretap => {
            let w_y = load_channel_arg(args, name)?;
            let w_z = input::load_channel(require(&args.eaves_channel, "--eaves-channel", name)?)?;
            wiretap_general(w_y, w_z, args.v_size)?
        }
        ProblemKind::WiretapDegraded => {
            let z_size = *require(&args.z_size, "--z-size", name)?;
            wiretap_degraded(load_channel_arg(args, name)?, z_size)?
        }
        ProblemKind::Commitment => commitment_capacity(load_channel_arg(args, name)?)?,
        ProblemKind::Em | ProblemKind::ReverseEm => {
            let efam = input::load_efamily(require(&args.efamily, "--efamily", name)?)?;
            let constraints = args
                .constraints
                .as_deref()
                .map(input::load_constraints)
                .transpose()?;
            let fam = input::constraints_to_family(constraints, efam.alphabet_size())?;
            if args.problem == ProblemKind::Em {
                em_problem(fam, efam)?
            } else {
                reverse_em(fam, efam)?
            }
        }
        ProblemKind::Ib => {
            let src = input::load_joint(require(&args.joint, "--joint", name)?)?;
            let alpha = *require(&args.alpha, "--alpha", name)?;
            let beta = *require(&args.beta, "--beta", name)?;
            information_bottleneck(src, alpha, beta)?
        }
    };

    // For the family-defining problems the constraints file was consumed
    // above; everywhere else it intersects the instance's family.
    if matches!(args.problem, ProblemKind::Em | ProblemKind::ReverseEm) {
        return Ok(instance);
    }
    match &args.constraints {
        None => Ok(instance),
        Some(path) => {
            let mut out = instance;
            for (i, (f, a)) in input::load_constraints(path)?.into_iter().enumerate() {
                out = with_cost_constraint(&out, f, a)
                    .map_err(|e| anyhow!("constraints: features[{i}]: {e}"))?;
            }
            Ok(out)
        }
    }
}

pub fn problem_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Capacity => "capacity",
        ProblemKind::Reliability => "reliability",
        ProblemKind::StrongConverse => "strong-converse",
        ProblemKind::Wiretap => "wiretap",
        ProblemKind::WiretapDegraded => "wiretap-degraded",
        ProblemKind::Commitment => "commitment",
        ProblemKind::Em => "em",
        ProblemKind::ReverseEm => "reverse-em",
        ProblemKind::Ib => "ib",
    }
}

fn config_for(instance: &ProblemInstance, args: &ProblemArgs, gamma: Option<f64>) -> SolverConfig {
    let mut cfg = instance.default_config();
    if let Some(g) = gamma {
        cfg.gamma = g;
    }
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
    }
    if let Some(t) = args.tol {
        cfg.stop_tol = t;
    }
    cfg
}

/// The shared starting point of every loop: the uniform distribution
/// projected onto the family.
fn initial_point(instance: &ProblemInstance, cfg: &SolverConfig) -> Result<Distribution> {
    let fam = instance.family.as_projection();
    let uniform = Distribution::uniform(fam.alphabet_size());
    let (init, _) = fam.project(&uniform, cfg.projection_tol)?;
    Ok(init)
}

fn solve_one(
    instance: &ProblemInstance,
    args: &ProblemArgs,
    cfg: &SolverConfig,
    init: &Distribution,
) -> Result<SolveResult> {
    match args.algorithm {
        Algorithm::Exact => {
            let restarts = args
                .restarts
                .unwrap_or(if instance.multi_restart { 8 } else { 0 });
            if restarts > 0 {
                Ok(instance.solve_restarts(cfg, restarts, args.seed)?)
            } else {
                Ok(solve_exact(
                    instance.psi.as_ref(),
                    instance.family.as_projection(),
                    init,
                    cfg,
                )?)
            }
        }
        Algorithm::Approx => {
            let fam = instance.family.as_mixture().ok_or_else(|| {
                anyhow!("--algorithm approx requires a mixture-family problem")
            })?;
            Ok(solve_approx(instance.psi.as_ref(), fam, init, cfg)?)
        }
        Algorithm::Gradient => {
            let fam = instance.family.as_mixture().ok_or_else(|| {
                anyhow!("--algorithm gradient requires a mixture-family problem")
            })?;
            let b_init = vec![0.0; fam.features().len()];
            Ok(solve_gradient_combo(
                instance.psi.as_ref(),
                fam,
                init,
                &b_init,
                None,
                cfg,
            )?)
        }
    }
}

/// The result document: the solver's own JSON plus the problem label and
/// headline quantity (always in nats).
fn result_doc(
    instance: &ProblemInstance,
    args: &ProblemArgs,
    cfg: &SolverConfig,
    result: &SolveResult,
) -> serde_json::Value {
    let mut doc = result.to_json(cfg);
    doc["problem"] = serde_json::json!(problem_name(args.problem));
    let headline = instance.headline(result.objective);
    doc["headline_nats"] = serde_json::json!(headline);
    if instance.transform == ReportTransform::Negate {
        doc["capacity_nats"] = serde_json::json!(headline);
    }
    doc
}

fn human_summary(instance: &ProblemInstance, result: &SolveResult, bits: bool) -> String {
    let headline = instance.headline(result.objective);
    let (value, unit) = if bits {
        (headline / std::f64::consts::LN_2, "bits")
    } else {
        (headline, "nats")
    };
    format!(
        "{}: {value:.7} {unit} ({}, {} iterations)",
        instance.label,
        result.status,
        result.trace.steps.len().saturating_sub(1)
    )
}

fn write_or_print(doc: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)? + "\n";
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<i32> {
    let gammas = args
        .problem
        .gamma
        .as_deref()
        .map(input::parse_gammas)
        .transpose()?;
    match gammas {
        Some(list) if list.len() > 1 => {
            if args.trace.is_some() {
                bail!("--trace applies to single-gamma runs; use --out-dir for sweeps");
            }
            sweep(&args.problem, &list, args.out_dir.as_deref(), args.bits)
        }
        other => {
            let gamma = other.map(|list| list[0].1);
            let instance = build_instance(&args.problem)?;
            let cfg = config_for(&instance, &args.problem, gamma);
            let init = initial_point(&instance, &cfg)?;
            let result = solve_one(&instance, &args.problem, &cfg, &init)?;
            if let Some(path) = &args.trace {
                result.trace.write_csv(path)?;
            }
            write_or_print(&result_doc(&instance, &args.problem, &cfg, &result), args.out.as_deref())?;
            eprintln!("{}", human_summary(&instance, &result, args.bits));
            Ok(status_exit_code(result.status))
        }
    }
}

pub fn sweep_gamma(args: &SweepArgs) -> Result<i32> {
    let gamma = args
        .problem
        .gamma
        .as_deref()
        .ok_or_else(|| anyhow!("sweep-gamma requires --gamma with at least 2 values"))?;
    let list = input::parse_gammas(gamma)?;
    if list.len() < 2 {
        bail!("sweep-gamma requires at least 2 gamma values, got {}", list.len());
    }
    sweep(&args.problem, &list, args.out_dir.as_deref(), args.bits)
}

/// Runs one exact solve per gamma from a shared initial point, writes one
/// trace CSV per gamma plus summary.csv, and prints the comparison table.
/// "iters_to_1e-6" counts iterations until the objective is within 1e-6 of
/// the best final objective across the sweep.
fn sweep(
    args: &ProblemArgs,
    gammas: &[(String, f64)],
    out_dir: Option<&Path>,
    bits: bool,
) -> Result<i32> {
    let instance = build_instance(args)?;
    let dir: PathBuf = out_dir.unwrap_or(Path::new(".")).to_path_buf();
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create {}", dir.display()))?;

    let base_cfg = config_for(&instance, args, None);
    let init = initial_point(&instance, &base_cfg)?;
    let mut runs = Vec::new();
    for (tok, g) in gammas {
        let cfg = config_for(&instance, args, Some(*g));
        let result = solve_one(&instance, args, &cfg, &init)?;
        let path = dir.join(format!("trace_gamma_{tok}.csv"));
        result.trace.write_csv(&path)?;
        runs.push((tok.clone(), *g, result));
    }

    let best = runs
        .iter()
        .map(|(_, _, r)| r.objective)
        .fold(f64::INFINITY, f64::min);
    let mut summary = String::from("gamma,iters_to_1e-6,final_objective,status\n");
    let mut table = String::from("gamma      iters_to_1e-6  final_objective        status\n");
    let mut worst = 0;
    for (tok, _, result) in &runs {
        let reached = result
            .trace
            .objectives()
            .iter()
            .position(|&g| g - best <= 1e-6)
            .map(|i| (i + 1).to_string())
            .unwrap_or_default();
        summary.push_str(&format!(
            "{tok},{reached},{:.16e},{}\n",
            result.objective, result.status
        ));
        table.push_str(&format!(
            "{tok:<10} {reached:>13}  {:<22.16} {}\n",
            result.objective, result.status
        ));
        worst = worst.max(status_exit_code(result.status));
    }
    std::fs::write(dir.join("summary.csv"), summary)?;
    print!("{table}");
    if let Some((_, _, first)) = runs.first() {
        eprintln!("{}", human_summary(&instance, first, bits));
    }
    Ok(worst)
}

pub fn grid(args: &GridArgs) -> Result<i32> {
    let instance = build_instance(&args.problem)?;
    let spec = GridSpec::new(args.resolution, args.band)?;
    let result = grid_minimize(
        instance.psi.as_ref(),
        instance.family.as_projection(),
        &spec,
    )?;
    let doc = serde_json::json!({
        "problem": problem_name(args.problem.problem),
        "value_nats": result.value,
        "headline_nats": instance.headline(result.value),
        "minimizer": result.minimizer.probs(),
        "lipschitz_estimate": result.lipschitz_estimate,
        "resolution": args.resolution,
    });
    write_or_print(&doc, None)?;
    Ok(0)
}
