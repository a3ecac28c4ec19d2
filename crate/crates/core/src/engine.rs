//! The projection iteration and its reductions.
//!
//! One step at index n runs up to four stages from the current point x:
//!
//!   u = T_r ( x - r B x )                      resolvent stage
//!   z = P_C ( u - lambda A u )                 variational-inequality stage
//!   y = P_C [ beta S x + (1 - beta) z ]        guide stage
//!   x+ = P_C [ alpha rho V x + (I - alpha mu F) T^n y ]
//!
//! Reduced variants skip dropped stages exactly: `S1` has no z stage, `S2`
//! neither z nor y, `S3` runs the resolvent without the co-coercive shift,
//! and `Ceng` is the single damped-target stage with a stationary map.
//! The n-th target iterate is evaluated literally (composing a self-map n
//! times when the oracle is composition-based); total cost over N steps is
//! O(N^2) applications, accepted at desk scale in favor of faithfulness.

use std::io::{self, Write};

use crate::eq::{gmep_residual, BifunctionSpec, ConvexFnSpec, InnerOpts, ResolventSpec};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::ops::{
    validate_strengths, CertifiedOperator, IterateOracle, StrengthParams, ValidationReport,
};
use crate::sampling::Sampler;
use crate::schedule::{validate_schedule, validate_target_steps, Schedule, SchemeVariant};
use crate::sets::ConvexSet;

/// Membership tolerance for recorded iterates and for flagging iterate
/// oracles that leave the feasible set.
const FEASIBILITY_TOL: f64 = 1e-8;
/// Horizon used when `solve` validates the schedule and the target map.
const VALIDATION_HORIZON: u32 = 50;
const VALIDATION_PROBE_SEED: u64 = 0xC3;

/// Everything the iteration needs: the feasible set, the equilibrium data,
/// the operator family, the target iterate oracle, the scalar strengths,
/// and the variant selecting which stages run.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub set: ConvexSet,
    pub bifunction: BifunctionSpec,
    pub phi: ConvexFnSpec,
    /// Operator of the variational-inequality component (co-coercive).
    pub vi_op: CertifiedOperator,
    /// Co-coercive operator inside the equilibrium subproblem.
    pub gmep_op: CertifiedOperator,
    /// Nonexpansive map steering the hierarchical component.
    pub guide: CertifiedOperator,
    /// Lipschitz map mixed in with vanishing weight.
    pub viscosity: CertifiedOperator,
    /// Strongly monotone Lipschitz operator damping the target iterate.
    pub regularizer: CertifiedOperator,
    /// Iterate access to the fixed-point target map.
    pub target: IterateOracle,
    pub strengths: StrengthParams,
    pub variant: SchemeVariant,
    /// Inner-solver options for every resolvent evaluation.
    pub inner: InnerOpts,
    /// Declared coercivity condition permitting unbounded feasible sets.
    pub coercivity_declared: bool,
}

impl SchemeConfig {
    fn resolvent_spec(&self, r: f64) -> Result<ResolventSpec> {
        ResolventSpec::new(
            self.bifunction.clone(),
            self.phi.clone(),
            self.set.clone(),
            r,
            self.inner,
            self.coercivity_declared,
        )
    }

    /// Declared ism modulus of the variational-inequality operator;
    /// infinite when the variant never runs that stage.
    pub fn effective_ism_a(&self) -> Result<f64> {
        if !self.variant.uses_vi_stage() {
            return Ok(f64::INFINITY);
        }
        match self.vi_op.ism_modulus() {
            Some(m) if m > 0.0 => Ok(m),
            _ => Err(Error::ValidationFailed(
                "variational-inequality operator needs a positive ism modulus".into(),
            )),
        }
    }

    /// Declared ism modulus of the equilibrium operator; infinite when the
    /// variant drops the co-coercive shift.
    pub fn effective_ism_b(&self) -> Result<f64> {
        if !self.variant.uses_gmep_shift() {
            return Ok(f64::INFINITY);
        }
        match self.gmep_op.ism_modulus() {
            Some(m) if m > 0.0 => Ok(m),
            _ => Err(Error::ValidationFailed(
                "equilibrium operator needs a positive ism modulus".into(),
            )),
        }
    }

    /// Structural validation: scalar hypotheses plus the certificates each
    /// stage relies on. Failures are entries, not errors.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_strengths(&self.strengths);
        if self.variant.uses_vi_stage() {
            report.push(
                "config.vi_op_ism",
                matches!(self.vi_op.ism_modulus(), Some(m) if m > 0.0),
                format!("declared ism = {:?}", self.vi_op.ism_modulus()),
            );
        }
        if self.variant.uses_gmep_shift() {
            report.push(
                "config.gmep_op_ism",
                matches!(self.gmep_op.ism_modulus(), Some(m) if m > 0.0),
                format!("declared ism = {:?}", self.gmep_op.ism_modulus()),
            );
        }
        if self.variant.uses_guide_stage() {
            report.push(
                "config.guide_nonexpansive",
                self.guide.is_nonexpansive(),
                "guide must carry a nonexpansiveness certificate".into(),
            );
        }
        report.push(
            "config.regularizer_covers_strengths",
            self.regularizer
                .lipschitz()
                .map(|l| l <= self.strengths.lipschitz)
                .unwrap_or(false)
                && self
                    .regularizer
                    .strong_monotonicity()
                    .map(|m| m >= self.strengths.eta)
                    .unwrap_or(false),
            format!(
                "declared (L, eta) = ({:?}, {:?}) must cover strengths ({}, {})",
                self.regularizer.lipschitz(),
                self.regularizer.strong_monotonicity(),
                self.strengths.lipschitz,
                self.strengths.eta
            ),
        );
        report.push(
            "config.viscosity_within_gamma",
            self.viscosity
                .lipschitz()
                .map(|l| l <= self.strengths.gamma)
                .unwrap_or(self.strengths.gamma >= 0.0 && self.strengths.rho == 0.0),
            format!(
                "declared Lipschitz {:?} must not exceed gamma = {}",
                self.viscosity.lipschitz(),
                self.strengths.gamma
            ),
        );
        if self.variant == SchemeVariant::Ceng {
            report.push(
                "config.stationary_target",
                self.target.is_stationary_compatible(),
                "stationary reduction needs a single-map iterate family".into(),
            );
            report.push(
                "config.stationary_zero_equilibrium",
                self.bifunction.is_zero() && self.phi.is_zero() && self.gmep_op.is_zero(),
                "stationary reduction needs zero equilibrium data".into(),
            );
        }
        report
    }
}

/// Point of the trajectory at index n.
#[derive(Clone, Debug)]
pub struct IterationState {
    pub n: u32,
    pub x: Vector,
}

impl IterationState {
    pub fn initial(x1: Vector) -> Self {
        IterationState { n: 1, x: x1 }
    }
}

/// Every intermediate of one step, including the pre-projection value t and
/// the schedule values used.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub n: u32,
    pub u: Vector,
    pub z: Vector,
    pub y: Vector,
    pub t: Vector,
    pub x_next: Vector,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub r: f64,
    pub a: f64,
}

fn require_finite(v: &Vector, n: u32) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate { n })
    }
}

/// One step of the iteration at the state's index. Returns the next state
/// together with the full record of intermediates.
pub fn step(
    cfg: &SchemeConfig,
    sch: &Schedule,
    st: &IterationState,
) -> Result<(IterationState, StepRecord)> {
    let n = st.n;
    let x = &st.x;
    let alpha = sch.alpha.value(n);
    let beta = sch.beta.value(n);
    let lambda = sch.lambda.value(n);
    let r = sch.r.value(n);
    let a = sch.a.value(n);

    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ScheduleOutOfRange {
            name: "alpha",
            value: alpha,
            n,
        });
    }

    // resolvent stage
    let u = if cfg.variant.uses_resolvent() {
        let upper = if cfg.variant.uses_gmep_shift() {
            2.0 * cfg.effective_ism_b()?
        } else {
            f64::INFINITY
        };
        if !(r > 0.0 && r < upper) {
            return Err(Error::ScheduleOutOfRange {
                name: "r",
                value: r,
                n,
            });
        }
        let input = if cfg.variant.uses_gmep_shift() {
            x.axpy(-r, &cfg.gmep_op.apply(x))
        } else {
            x.clone()
        };
        require_finite(&input, n)?;
        cfg.resolvent_spec(r)?.evaluate(&input)?
    } else {
        x.clone()
    };
    require_finite(&u, n)?;

    // variational-inequality stage
    let z = if cfg.variant.uses_vi_stage() {
        let upper = 2.0 * cfg.effective_ism_a()?;
        if !(lambda > 0.0 && lambda < upper) {
            return Err(Error::ScheduleOutOfRange {
                name: "lambda",
                value: lambda,
                n,
            });
        }
        let shifted = u.axpy(-lambda, &cfg.vi_op.apply(&u));
        require_finite(&shifted, n)?;
        cfg.set.project(&shifted)?
    } else {
        u.clone()
    };
    require_finite(&z, n)?;

    // guide stage
    let y = if cfg.variant.uses_guide_stage() {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::ScheduleOutOfRange {
                name: "beta",
                value: beta,
                n,
            });
        }
        let mixed = cfg.guide.apply(x).scale(beta).axpy(1.0 - beta, &z);
        require_finite(&mixed, n)?;
        cfg.set.project(&mixed)?
    } else {
        z.clone()
    };
    require_finite(&y, n)?;

    // damped-target stage; the stationary variant applies the map once
    let power = if cfg.variant == SchemeVariant::Ceng {
        1
    } else {
        n
    };
    let w = cfg.target.power(power, &y);
    require_finite(&w, n)?;
    if cfg.set.violation(&w) > FEASIBILITY_TOL {
        return Err(Error::IterateOutsideSet { n });
    }
    let t = cfg
        .viscosity
        .apply(x)
        .scale(alpha * cfg.strengths.rho)
        .axpy(
            1.0,
            &w.axpy(-alpha * cfg.strengths.mu, &cfg.regularizer.apply(&w)),
        );
    require_finite(&t, n)?;
    let x_next = cfg.set.project(&t)?;
    require_finite(&x_next, n)?;

    let record = StepRecord {
        n,
        u,
        z,
        y,
        t,
        x_next: x_next.clone(),
        alpha,
        beta,
        lambda,
        r,
        a,
    };
    Ok((
        IterationState {
            n: n + 1,
            x: x_next,
        },
        record,
    ))
}

/// Probe parameters of the residual diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct ResidualProbes {
    pub r_probe: f64,
    pub lambda_probe: f64,
    pub fix_power: u32,
}

impl ResidualProbes {
    /// First schedule values where admissible, midpoints of the admissible
    /// ranges otherwise; target power 1.
    pub fn from_config(cfg: &SchemeConfig, sch: &Schedule) -> Result<Self> {
        let theta_b = match cfg.gmep_op.ism_modulus() {
            Some(m) if m > 0.0 => m,
            _ => {
                return Err(Error::ValidationFailed(
                    "residual probes need a positive ism modulus on the equilibrium operator"
                        .into(),
                ))
            }
        };
        let r1 = sch.r.value(1);
        let r_probe = if r1 > 0.0 && r1 < 2.0 * theta_b {
            r1
        } else {
            theta_b
        };
        let lam1 = sch.lambda.value(1);
        let lambda_probe = match cfg.vi_op.ism_modulus() {
            Some(m) if m > 0.0 => {
                if lam1 > 0.0 && lam1 < 2.0 * m {
                    lam1
                } else {
                    m
                }
            }
            _ => {
                return Err(Error::ValidationFailed(
                    "residual probes need a positive ism modulus on the VI operator".into(),
                ))
            }
        };
        Ok(ResidualProbes {
            r_probe,
            lambda_probe,
            fix_power: 1,
        })
    }
}

/// Distances to the three solution components at a point.
#[derive(Clone, Copy, Debug)]
pub struct ResidualBundle {
    /// || x - T_r (x - r B x) ||
    pub gmep_res: f64,
    /// || x - P_C (x - lambda A x) ||
    pub vi_res: f64,
    /// || x - T^m x ||
    pub fix_res: f64,
}

impl ResidualBundle {
    pub fn composite(&self) -> f64 {
        self.gmep_res.max(self.vi_res).max(self.fix_res)
    }
}

/// Evaluate all three residuals at x.
pub fn residual_bundle(
    cfg: &SchemeConfig,
    x: &Vector,
    probes: &ResidualProbes,
) -> Result<ResidualBundle> {
    let gmep = gmep_residual(
        &cfg.bifunction,
        &cfg.phi,
        &cfg.gmep_op,
        &cfg.set,
        probes.r_probe,
        x,
        cfg.inner,
    )?;
    let shifted = x.axpy(-probes.lambda_probe, &cfg.vi_op.apply(x));
    let vi = x.dist(&cfg.set.project(&shifted)?);
    let fix = x.dist(&cfg.target.power(probes.fix_power, x));
    Ok(ResidualBundle {
        gmep_res: gmep,
        vi_res: vi,
        fix_res: fix,
    })
}

/// Gap of the hierarchical variational inequality at x over sampled
/// feasible points: max over s of <rho V x - mu F x, s - x>. Nonpositive
/// (up to tolerance) certifies x as the target on the sampled set.
pub fn hvi_gap(cfg: &SchemeConfig, x: &Vector, feasible_samples: &[Vector]) -> f64 {
    assert!(
        !feasible_samples.is_empty(),
        "need at least one feasible sample"
    );
    let direction = cfg
        .viscosity
        .apply(x)
        .scale(cfg.strengths.rho)
        .axpy(-cfg.strengths.mu, &cfg.regularizer.apply(x));
    feasible_samples
        .iter()
        .map(|s| direction.inner(&(s - x)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Produce the configuration of a reduced scheme. Operators of dropped
/// stages are normalized to zero so residual diagnostics match the reduced
/// problem; the stationary reduction additionally requires zero equilibrium
/// data and a composition-based oracle.
pub fn reduce(variant: SchemeVariant, cfg: &SchemeConfig) -> Result<SchemeConfig> {
    let mut out = cfg.clone();
    match variant {
        SchemeVariant::Full => {}
        SchemeVariant::S1 | SchemeVariant::S2 => {
            out.vi_op = CertifiedOperator::zero();
        }
        SchemeVariant::S3 => {
            out.vi_op = CertifiedOperator::zero();
            out.gmep_op = CertifiedOperator::zero();
        }
        SchemeVariant::Ceng => {
            if !cfg.bifunction.is_zero() {
                return Err(Error::StructuralMismatch(
                    "stationary reduction requires a zero bifunction".into(),
                ));
            }
            if !cfg.phi.is_zero() {
                return Err(Error::StructuralMismatch(
                    "stationary reduction requires a zero penalty".into(),
                ));
            }
            if !cfg.gmep_op.is_zero() {
                return Err(Error::StructuralMismatch(
                    "stationary reduction requires a zero equilibrium operator".into(),
                ));
            }
            if !cfg.target.is_stationary_compatible() {
                return Err(Error::StructuralMismatch(
                    "stationary reduction requires a single-map iterate family".into(),
                ));
            }
            out.vi_op = CertifiedOperator::zero();
        }
    }
    out.variant = variant;
    Ok(out)
}

/// Per-iteration record of the quantities the convergence analysis drives
/// to zero, plus the schedule values used.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub n: u32,
    pub step_norm: f64,
    pub gap_ux: f64,
    pub gap_uz: f64,
    pub gap_xy: f64,
    pub gmep_res: f64,
    pub vi_res: f64,
    pub fix_res: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub r: f64,
    pub a: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub const CSV_HEADER: &'static str =
        "n,step_norm,gap_ux,gap_uz,gap_xy,gmep_res,vi_res,fix_res,alpha,beta,lambda,r,a";

    /// CSV export: the fixed header, one row per iteration, floats with 17
    /// significant decimal digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                row.n,
                row.step_norm,
                row.gap_ux,
                row.gap_uz,
                row.gap_xy,
                row.gmep_res,
                row.vi_res,
                row.fix_res,
                row.alpha,
                row.beta,
                row.lambda,
                row.r,
                row.a,
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged { at: u32 },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub max_iters: u32,
    pub target_residual: Option<f64>,
    /// Skip the validation gate (schedule, strengths, target-map checks).
    pub force: bool,
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub x_final: Vector,
    pub trace: Trace,
    pub status: SolveStatus,
    /// Distance to `known_solution` when one was supplied.
    pub final_error: Option<f64>,
}

/// Run the iteration from x1. Stops at `max_iters`, or earlier when the
/// composite residual reaches `target_residual`; a non-finite coordinate
/// aborts with status `Diverged` at the offending index.
pub fn solve(
    cfg: &SchemeConfig,
    sch: &Schedule,
    x1: Vector,
    known_solution: Option<&Vector>,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    if !opts.force {
        let report = validation_report(cfg, sch)?;
        if !report.all_passed() {
            let names: Vec<&str> = report.failures().iter().map(|e| e.name.as_str()).collect();
            return Err(Error::ValidationFailed(names.join(", ")));
        }
        if cfg.set.violation(&x1) > FEASIBILITY_TOL {
            return Err(Error::ValidationFailed(
                "initial point outside the feasible set".into(),
            ));
        }
    }

    let probes = ResidualProbes::from_config(cfg, sch)?;
    let mut trace = Trace::default();
    let mut state = IterationState::initial(x1);
    let mut status = SolveStatus::MaxIters;

    for _ in 0..opts.max_iters {
        let n = state.n;
        let (next, record) = match step(cfg, sch, &state) {
            Ok(ok) => ok,
            Err(Error::NonFiniteIterate { n }) => {
                status = SolveStatus::Diverged { at: n };
                break;
            }
            Err(e) => return Err(e),
        };
        let bundle = residual_bundle(cfg, &record.x_next, &probes)?;
        trace.rows.push(TraceRow {
            n,
            step_norm: record.x_next.dist(&state.x),
            gap_ux: record.u.dist(&state.x),
            gap_uz: record.u.dist(&record.z),
            gap_xy: state.x.dist(&record.y),
            gmep_res: bundle.gmep_res,
            vi_res: bundle.vi_res,
            fix_res: bundle.fix_res,
            alpha: record.alpha,
            beta: record.beta,
            lambda: record.lambda,
            r: record.r,
            a: record.a,
        });
        state = next;
        if let Some(target) = opts.target_residual {
            if bundle.composite() <= target {
                status = SolveStatus::Converged;
                break;
            }
        }
    }

    let final_error = known_solution.map(|p| state.x.dist(p));
    Ok(SolveOutcome {
        x_final: state.x,
        trace,
        status,
        final_error,
    })
}

/// Merged validation report: scalar hypotheses, certificate presence,
/// schedule admissibility, and the target-map step conditions along probe
/// trajectories.
pub fn validation_report(cfg: &SchemeConfig, sch: &Schedule) -> Result<ValidationReport> {
    let mut report = cfg.validate();
    let ism_a = cfg.effective_ism_a().unwrap_or(f64::NAN);
    let ism_b = cfg.effective_ism_b().unwrap_or(f64::NAN);
    let schedule_report =
        validate_schedule(sch, cfg.variant, ism_a, ism_b, VALIDATION_HORIZON.max(10));
    schedule_report.append_to(&mut report);

    let sampler = Sampler::around_set(&cfg.set, VALIDATION_PROBE_SEED);
    let probes: Result<Vec<Vector>> = sampler
        .vectors(3)
        .into_iter()
        .map(|v| cfg.set.project(&v))
        .collect();
    let target_report =
        validate_target_steps(&cfg.target, &sch.alpha, &probes?, VALIDATION_HORIZON);
    target_report.append_to(&mut report);
    Ok(report)
}
