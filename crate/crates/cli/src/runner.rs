//! Execution paths behind the `run` and `compare` subcommands: load a
//! config, gate on validation, iterate, and write the trace and summary
//! documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tripoint::{
    reduce, residual_bundle, solve, step, validate_schedule, validate_target_steps, Error,
    IterationState, Problem, ResidualProbes, Sampler, ScheduleReport, SolveOptions, SolveStatus,
    Trace, TraceRow, ValidationReport, Vector,
};

use crate::config::{MalformedConfig, RunConfig};

/// Exit codes of the batch front-end.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn malformed(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_MALFORMED,
            message: msg.into(),
        }
    }

    fn validation(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: msg.into(),
        }
    }

    fn runtime(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: msg.into(),
        }
    }
}

impl From<MalformedConfig> for Failure {
    fn from(e: MalformedConfig) -> Self {
        Failure::malformed(e.to_string())
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub validate_only: bool,
    pub force: bool,
    pub max_iters: Option<u32>,
    pub seed: Option<u64>,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

struct LoadedRun {
    config: RunConfig,
    problem: Problem,
    trace_path: PathBuf,
    summary_path: PathBuf,
    max_iters: u32,
}

fn load(config_path: &Path, overrides: &Overrides) -> Result<LoadedRun, Failure> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Failure::malformed(format!("cannot read {}: {e}", config_path.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(max_iters) = overrides.max_iters {
        config.stopping.max_iters = max_iters;
    }
    let problem = config.build_problem()?;
    let trace_path = overrides
        .trace
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.trace_path));
    let summary_path = overrides
        .summary
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.outputs.summary_path));
    let max_iters = config.stopping.max_iters;
    Ok(LoadedRun {
        config,
        problem,
        trace_path,
        summary_path,
        max_iters,
    })
}

/// Strength/certificate and schedule/target reports for one problem.
fn reports(problem: &Problem) -> Result<(ValidationReport, ScheduleReport), Failure> {
    let cfg = &problem.cfg;
    let strength_report = cfg.validate();
    let ism_a = cfg
        .effective_ism_a()
        .map_err(|e| Failure::validation(e.to_string()))?;
    let ism_b = cfg
        .effective_ism_b()
        .map_err(|e| Failure::validation(e.to_string()))?;
    let mut schedule_report = validate_schedule(&problem.sch, cfg.variant, ism_a, ism_b, 200);
    let sampler = Sampler::around_set(&cfg.set, problem.seed ^ 0xC3);
    let probes: Result<Vec<Vector>, Error> = sampler
        .vectors(3)
        .into_iter()
        .map(|v| cfg.set.project(&v))
        .collect();
    let probes = probes.map_err(|e| Failure::runtime(e.to_string()))?;
    let target_report = validate_target_steps(&cfg.target, &problem.sch.alpha, &probes, 50);
    schedule_report.entries.extend(target_report.entries);
    Ok((strength_report, schedule_report))
}

#[derive(Serialize)]
struct ResidualsOut {
    gmep: f64,
    vi: f64,
    fix: f64,
    composite: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    diverged_at: Option<u32>,
    n_final: usize,
    final_residuals: ResidualsOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_error: Option<f64>,
    schedule_report: &'a ScheduleReport,
    strength_report: &'a ValidationReport,
    inner_tolerance: f64,
    seed: u64,
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                Failure::runtime(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn residuals_at(problem: &Problem, x: &Vector) -> Result<ResidualsOut, Failure> {
    let probes = ResidualProbes::from_config(&problem.cfg, &problem.sch)
        .map_err(|e| Failure::validation(e.to_string()))?;
    let bundle =
        residual_bundle(&problem.cfg, x, &probes).map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(ResidualsOut {
        gmep: bundle.gmep_res,
        vi: bundle.vi_res,
        fix: bundle.fix_res,
        composite: bundle.composite(),
    })
}

/// `run`: validate, iterate, write trace CSV and summary JSON.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let loaded = load(config_path, overrides)?;
    let problem = &loaded.problem;
    let (strength_report, schedule_report) = reports(problem)?;
    let feasible_start = problem.cfg.set.violation(&problem.x1) <= 1e-8;
    let all_valid = strength_report.all_passed() && schedule_report.all_passed() && feasible_start;

    if overrides.validate_only {
        let residuals = residuals_at(problem, &problem.x1)?;
        let summary = Summary {
            status: "validated",
            diverged_at: None,
            n_final: 0,
            final_residuals: residuals,
            final_error: None,
            schedule_report: &schedule_report,
            strength_report: &strength_report,
            inner_tolerance: problem.cfg.inner.tol,
            seed: loaded.config.seed,
        };
        write_file(
            &loaded.summary_path,
            &serde_json::to_string_pretty(&summary).unwrap(),
        )?;
        return if all_valid {
            Ok(())
        } else {
            Err(Failure::validation(report_failures(
                &strength_report,
                &schedule_report,
            )))
        };
    }

    if !all_valid && !overrides.force {
        let mut message = report_failures(&strength_report, &schedule_report);
        if !feasible_start {
            message.push_str("; initial point outside the feasible set");
        }
        return Err(Failure::validation(message));
    }

    // validation already ran (or was overridden); skip the engine's gate
    let outcome = solve(
        &problem.cfg,
        &problem.sch,
        problem.x1.clone(),
        problem.oracle_solution().ok().as_ref(),
        &SolveOptions {
            max_iters: loaded.max_iters,
            target_residual: loaded.config.stopping.target_residual,
            force: true,
        },
    )
    .map_err(|e| Failure::runtime(e.to_string()))?;

    write_file(&loaded.trace_path, &outcome.trace.to_csv_string())?;

    let (status, diverged_at) = match outcome.status {
        SolveStatus::Converged => ("converged", None),
        SolveStatus::MaxIters => ("max_iters", None),
        SolveStatus::Diverged { at } => ("diverged", Some(at)),
    };
    let residuals = residuals_at(problem, &outcome.x_final)?;
    let summary = Summary {
        status,
        diverged_at,
        n_final: outcome.trace.rows.len(),
        final_residuals: residuals,
        final_error: outcome.final_error,
        schedule_report: &schedule_report,
        strength_report: &strength_report,
        inner_tolerance: problem.cfg.inner.tol,
        seed: loaded.config.seed,
    };
    write_file(
        &loaded.summary_path,
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;

    if matches!(outcome.status, SolveStatus::Diverged { .. }) {
        return Err(Failure {
            code: EXIT_DIVERGED,
            message: format!("diverged at n = {}", diverged_at.unwrap()),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    status: &'static str,
    variants: [String; 2],
    n_final: usize,
    max_deviation: f64,
}

/// `compare`: run the two named variants of one problem in lockstep and
/// write the paired trace with a deviation column.
pub fn compare(config_path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let loaded = load(config_path, overrides)?;
    let compare_spec = loaded
        .config
        .compare
        .as_ref()
        .ok_or_else(|| Failure::malformed("compare requires a `compare.variants` section"))?;
    let [va, vb] = compare_spec.variants;

    let base = &loaded.problem;
    let cfg_a = reduce(va, &base.cfg).map_err(|e| Failure::validation(e.to_string()))?;
    let cfg_b = reduce(vb, &base.cfg).map_err(|e| Failure::validation(e.to_string()))?;

    if !overrides.force {
        for cfg in [&cfg_a, &cfg_b] {
            let variant_problem = Problem {
                cfg: cfg.clone(),
                sch: base.sch,
                x1: base.x1.clone(),
                solution: tripoint::Solution::Unknown,
                seed: base.seed,
            };
            let (strengths, schedule) = reports(&variant_problem)?;
            if !strengths.all_passed() || !schedule.all_passed() {
                return Err(Failure::validation(report_failures(&strengths, &schedule)));
            }
        }
    }

    let probes_a = ResidualProbes::from_config(&cfg_a, &base.sch)
        .map_err(|e| Failure::validation(e.to_string()))?;
    let probes_b = ResidualProbes::from_config(&cfg_b, &base.sch)
        .map_err(|e| Failure::validation(e.to_string()))?;

    let mut state_a = IterationState::initial(base.x1.clone());
    let mut state_b = IterationState::initial(base.x1.clone());
    let mut trace_a = Trace::default();
    let mut trace_b = Trace::default();
    let mut deviations: Vec<f64> = Vec::new();

    for _ in 0..loaded.max_iters {
        let stepped_a = step(&cfg_a, &base.sch, &state_a);
        let stepped_b = step(&cfg_b, &base.sch, &state_b);
        let ((next_a, rec_a), (next_b, rec_b)) = match (stepped_a, stepped_b) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::NonFiniteIterate { n }), _) | (_, Err(Error::NonFiniteIterate { n })) => {
                return Err(Failure {
                    code: EXIT_DIVERGED,
                    message: format!("diverged at n = {n}"),
                });
            }
            (Err(e), _) | (_, Err(e)) => return Err(Failure::runtime(e.to_string())),
        };
        trace_a
            .rows
            .push(make_row(&cfg_a, &state_a, &next_a, &rec_a, &probes_a)?);
        trace_b
            .rows
            .push(make_row(&cfg_b, &state_b, &next_b, &rec_b, &probes_b)?);
        deviations.push(next_a.x.max_abs_diff(&next_b.x));
        state_a = next_a;
        state_b = next_b;
    }

    write_file(
        &loaded.trace_path,
        &paired_csv(&trace_a, &trace_b, &deviations),
    )?;
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let summary = CompareSummary {
        status: "compared",
        variants: [
            format!("{va:?}").to_lowercase(),
            format!("{vb:?}").to_lowercase(),
        ],
        n_final: deviations.len(),
        max_deviation,
    };
    write_file(
        &loaded.summary_path,
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(())
}

fn make_row(
    cfg: &tripoint::SchemeConfig,
    state: &IterationState,
    next: &IterationState,
    rec: &tripoint::StepRecord,
    probes: &ResidualProbes,
) -> Result<TraceRow, Failure> {
    let bundle =
        residual_bundle(cfg, &rec.x_next, probes).map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(TraceRow {
        n: rec.n,
        step_norm: next.x.dist(&state.x),
        gap_ux: rec.u.dist(&state.x),
        gap_uz: rec.u.dist(&rec.z),
        gap_xy: state.x.dist(&rec.y),
        gmep_res: bundle.gmep_res,
        vi_res: bundle.vi_res,
        fix_res: bundle.fix_res,
        alpha: rec.alpha,
        beta: rec.beta,
        lambda: rec.lambda,
        r: rec.r,
        a: rec.a,
    })
}

/// Paired trace: the standard columns for each side (suffixed) plus the
/// per-iteration max coordinate deviation.
fn paired_csv(a: &Trace, b: &Trace, deviations: &[f64]) -> String {
    let cols: Vec<&str> = Trace::CSV_HEADER.split(',').skip(1).collect();
    let mut header = String::from("n");
    for c in &cols {
        header.push_str(&format!(",{c}_a"));
    }
    for c in &cols {
        header.push_str(&format!(",{c}_b"));
    }
    header.push_str(",deviation");

    let mut out = header;
    out.push('\n');
    for ((ra, rb), dev) in a.rows.iter().zip(&b.rows).zip(deviations) {
        let row_a = row_fields(ra);
        let row_b = row_fields(rb);
        out.push_str(&format!("{},{},{},{:.16e}\n", ra.n, row_a, row_b, dev));
    }
    out
}

fn row_fields(r: &TraceRow) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.step_norm, r.gap_ux, r.gap_uz, r.gap_xy, r.gmep_res, r.vi_res, r.fix_res, r.alpha,
        r.beta, r.lambda, r.r, r.a
    )
}

fn report_failures(strengths: &ValidationReport, schedule: &ScheduleReport) -> String {
    let mut names: Vec<&str> = strengths
        .failures()
        .iter()
        .map(|e| e.name.as_str())
        .collect();
    names.extend(schedule.failures().iter().map(|e| e.name.as_str()));
    if names.is_empty() {
        "validation failed".into()
    } else {
        names.join(", ")
    }
}
