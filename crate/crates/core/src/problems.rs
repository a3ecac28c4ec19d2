//! Benchmark problem generators with analytically known limits, used as
//! oracles by the test suites and exposed through the batch front-end.
//!
//! Generation is deterministic: one seed fixes every random choice, so an
//! identical seed reproduces the problem bit-for-bit.

use crate::engine::{residual_bundle, ResidualProbes, SchemeConfig};
use crate::eq::{BifunctionSpec, ConvexFnSpec, InnerOpts};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::ops::{
    certify_declared, certify_iterates, derive_ism_from_psd, Certificates, CertifiedOperator,
    IterateOracle, StrengthParams,
};
use crate::sampling::{random_psd, Sampler};
use crate::schedule::{validate_schedule, Schedule, SchemeVariant, SeqDesc};
use crate::sets::ConvexSet;

/// How the problem's solution is known.
#[derive(Clone, Debug)]
pub enum Solution {
    /// The common solution set is the single point p.
    Singleton {
        p: Vector,
    },
    /// The limit is known in closed form; the whole feasible region solves
    /// the three component problems.
    Analytic {
        x_star: Vector,
    },
    Unknown,
}

/// A ready-to-run instance: configuration, schedule, initial point, and the
/// oracle answer when one exists.
#[derive(Clone, Debug)]
pub struct Problem {
    pub cfg: SchemeConfig,
    pub sch: Schedule,
    pub x1: Vector,
    pub solution: Solution,
    /// Seed the instance was generated from (0 for seedless generators).
    pub seed: u64,
}

impl Problem {
    pub fn oracle_solution(&self) -> Result<Vector> {
        match &self.solution {
            Solution::Singleton { p } => Ok(p.clone()),
            Solution::Analytic { x_star } => Ok(x_star.clone()),
            Solution::Unknown => Err(Error::UnknownSolution),
        }
    }

    /// Seeded sample of the common solution set, for gap diagnostics.
    /// Singleton instances return the point itself; analytic instances
    /// sample the feasible region (which equals the solution set there).
    pub fn feasible_samples(&self, count: usize) -> Result<Vec<Vector>> {
        match &self.solution {
            Solution::Singleton { p } => Ok(vec![p.clone()]),
            Solution::Analytic { .. } => {
                let sampler = Sampler::around_set(&self.cfg.set, self.seed ^ 0xFEA5);
                sampler
                    .vectors(count)
                    .into_iter()
                    .map(|v| self.cfg.set.project(&v))
                    .collect()
            }
            Solution::Unknown => Err(Error::UnknownSolution),
        }
    }
}

const SINGLETON_RESIDUAL_TOL: f64 = 1e-8;

/// Every generated instance must pass the full validation gate plus the
/// operator certifications before it is returned.
fn vet_problem(problem: Problem) -> Result<Problem> {
    let cfg = &problem.cfg;
    let strength_report = crate::ops::validate_strengths(&cfg.strengths);
    if !strength_report.all_passed() {
        return Err(Error::InvalidProblem(format!(
            "generated strengths fail validation: {:?}",
            strength_report.failures()
        )));
    }
    let schedule_report = validate_schedule(
        &problem.sch,
        cfg.variant,
        cfg.effective_ism_a()?,
        cfg.effective_ism_b()?,
        200,
    );
    if !schedule_report.all_passed() {
        return Err(Error::InvalidProblem(format!(
            "generated schedule fails validation: {:?}",
            schedule_report.failures()
        )));
    }
    let sampler = Sampler::around_set(&cfg.set, problem.seed ^ 0xCE27);
    for op in [
        &cfg.vi_op,
        &cfg.gmep_op,
        &cfg.guide,
        &cfg.viscosity,
        &cfg.regularizer,
    ] {
        for report in certify_declared(op, &sampler, 200, 1e-9) {
            if !report.passed {
                return Err(Error::InvalidProblem(format!(
                    "operator certification failed: {} (worst violation {:.3e})",
                    report.certificate, report.worst_violation
                )));
            }
        }
    }
    let iterates = certify_iterates(
        &cfg.target,
        Some(&cfg.set),
        &sampler,
        &[1, 2, 5, 10],
        50,
        1e-9,
    );
    if !iterates.passed {
        return Err(Error::InvalidProblem(format!(
            "iterate oracle certification failed (worst violation {:.3e})",
            iterates.worst_violation
        )));
    }
    match &problem.solution {
        Solution::Singleton { p } => {
            let probes = ResidualProbes::from_config(cfg, &problem.sch)?;
            let bundle = residual_bundle(cfg, p, &probes)?;
            if bundle.composite() > SINGLETON_RESIDUAL_TOL {
                return Err(Error::InvalidProblem(format!(
                    "declared solution has composite residual {:.3e}",
                    bundle.composite()
                )));
            }
        }
        Solution::Analytic { x_star } => {
            if !cfg.set.contains(x_star, 1e-9) {
                return Err(Error::InvalidProblem(
                    "declared limit lies outside the feasible set".into(),
                ));
            }
            let samples = problem.feasible_samples(32)?;
            let gap = crate::engine::hvi_gap(cfg, x_star, &samples);
            if gap > 1e-9 {
                return Err(Error::InvalidProblem(format!(
                    "declared limit has selection gap {gap:.3e} on feasible samples"
                )));
            }
        }
        Solution::Unknown => {}
    }
    Ok(problem)
}

/// Instance whose common solution set is the single interior point p:
/// the target map contracts toward p with factor 1/2 (iterates by
/// composition, zero slack), the variational-inequality operator is
/// x - p, the equilibrium operator is a seeded PSD map of x - p with unit
/// spectral norm, and the bifunction is driven by a positive definite map
/// of z - p. The damping uses mu = 1 with zero viscosity weight.
pub fn make_singleton(seed: u64, dim: usize, set: ConvexSet, p: Vector) -> Result<Problem> {
    if p.dim() != dim || set.dim() != dim {
        return Err(Error::InvalidProblem(
            "dimension mismatch between p and the set".into(),
        ));
    }
    if set.violation(&p) >= 0.0 {
        return Err(Error::InvalidProblem(
            "p must lie strictly inside the feasible set".into(),
        ));
    }

    let contraction_point = p.clone();
    let target_map = CertifiedOperator::custom(
        move |x| contraction_point.axpy(0.5, &(x - &contraction_point)),
        Certificates {
            lipschitz: Some(0.5),
            nonexpansive: true,
            ..Default::default()
        },
    );
    let target = IterateOracle::from_map(&target_map);

    let vi_op = CertifiedOperator::translation_to(p.clone());

    // B(x) = M_B (x - p), spectral norm 1 so the derived ism modulus is 1
    let m_b = random_psd(dim, seed.wrapping_mul(2654435761).wrapping_add(1), 1.0);
    let ism_b = derive_ism_from_psd(&m_b)?;
    let gmep_op = CertifiedOperator::affine(m_b.clone(), m_b.apply(&p).scale(-1.0))?;

    // G(z, y) = <M_G (z - p), y - z> with spectrum in [0.1, 0.5]: positive
    // definite, and r * Lip(g) = 0.5 at the default radius keeps the
    // frozen-argument inner loop comfortably contractive.
    let m_g_raw = random_psd(dim, seed.wrapping_mul(0x9E3779B9).wrapping_add(7), 0.4);
    let m_g = m_g_raw.add(&crate::linalg::LinearMap::identity(dim).scaled(0.1));
    let g_op = CertifiedOperator::affine(m_g.clone(), m_g.apply(&p).scale(-1.0))?;
    let bifunction = BifunctionSpec::linear(g_op);

    let strengths = StrengthParams {
        mu: 1.0,
        rho: 0.0,
        gamma: 0.0,
        eta: 1.0,
        lipschitz: 1.0,
    };
    let cfg = SchemeConfig {
        set,
        bifunction,
        phi: ConvexFnSpec::Zero,
        vi_op,
        gmep_op,
        guide: CertifiedOperator::identity(),
        viscosity: CertifiedOperator::zero(),
        regularizer: CertifiedOperator::identity(),
        target,
        strengths,
        variant: SchemeVariant::Full,
        inner: InnerOpts::default(),
        coercivity_declared: false,
    };

    let ism_a = cfg.effective_ism_a()?;
    let sch = Schedule::canonical(ism_a, ism_b, SeqDesc::Constant { c: 0.0 });

    // x1 sampled in C: uniform in the bounding box, projected onto C
    let sampler = Sampler::around_set(&cfg.set, seed);
    let x1 = cfg.set.project(&sampler.vectors(1).remove(0))?;

    vet_problem(Problem {
        cfg,
        sch,
        x1,
        solution: Solution::Singleton { p },
        seed,
    })
}

/// Selection instance over a bounded set: identity target (every feasible
/// point is a fixed point), zero component operators, constant viscosity
/// map v with weight rho, identity damping. The iteration then selects the
/// projection of rho * v onto the set, and the error obeys the closed form
/// || x_n - x* || = || x_1 - x* || / n under the canonical schedule.
pub fn make_selection(dim: usize, set: ConvexSet, v: Vector, rho: f64) -> Result<Problem> {
    if v.dim() != dim || set.dim() != dim {
        return Err(Error::InvalidProblem(
            "dimension mismatch between v and the set".into(),
        ));
    }
    if !set.is_bounded() {
        return Err(Error::InvalidProblem(
            "selection instances require a bounded feasible set".into(),
        ));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidProblem(format!(
            "rho must be nonnegative, got {rho}"
        )));
    }

    let x_star = set.project(&v.scale(rho))?;
    let strengths = StrengthParams {
        mu: 1.0,
        rho,
        gamma: 0.0,
        eta: 1.0,
        lipschitz: 1.0,
    };
    let cfg = SchemeConfig {
        set,
        bifunction: BifunctionSpec::Zero,
        phi: ConvexFnSpec::Zero,
        vi_op: CertifiedOperator::zero(),
        gmep_op: CertifiedOperator::zero(),
        guide: CertifiedOperator::identity(),
        viscosity: CertifiedOperator::constant(v),
        regularizer: CertifiedOperator::identity(),
        target: IterateOracle::identity(),
        strengths,
        variant: SchemeVariant::Full,
        inner: InnerOpts::default(),
        coercivity_declared: false,
    };
    let sch = Schedule::canonical(1.0, 1.0, SeqDesc::Constant { c: 0.0 });
    let x1 = cfg.set.project(&Vector::zeros(dim))?;

    vet_problem(Problem {
        cfg,
        sch,
        x1,
        solution: Solution::Analytic { x_star },
        seed: 0,
    })
}

/// Fixture with a genuinely nearly nonexpansive iterate family: each power
/// expands around the center by a vanishing factor and is clamped back into
/// the ball, so the bound needs the slack a_n = 1/(n+1)^2 and fails with
/// zero slack. Exercises every a_n code path.
pub fn make_near_family_fixture(dim: usize, radius: f64, center: Vector) -> Result<Problem> {
    if center.dim() != dim {
        return Err(Error::InvalidProblem("dimension mismatch".into()));
    }
    let set = ConvexSet::ball(center.clone(), radius)?;
    let slack = SeqDesc::PowerLaw {
        c: 1.0,
        p: 2.0,
        n0: 1.0,
    };
    let family_set = set.clone();
    let family_center = center.clone();
    let diameter = 2.0 * radius;
    let target = IterateOracle::from_family(
        move |n, x| {
            let delta = slack.value(n) / diameter;
            let pushed = family_center.axpy(1.0 + delta, &(x - &family_center));
            family_set
                .project(&pushed)
                .expect("ball projection cannot fail")
        },
        move |n| slack.value(n),
    );

    let strengths = StrengthParams {
        mu: 1.0,
        rho: 0.0,
        gamma: 0.0,
        eta: 1.0,
        lipschitz: 1.0,
    };
    let cfg = SchemeConfig {
        set,
        bifunction: BifunctionSpec::Zero,
        phi: ConvexFnSpec::Zero,
        vi_op: CertifiedOperator::zero(),
        gmep_op: CertifiedOperator::zero(),
        guide: CertifiedOperator::identity(),
        viscosity: CertifiedOperator::zero(),
        regularizer: CertifiedOperator::identity(),
        target,
        strengths,
        variant: SchemeVariant::Full,
        inner: InnerOpts::default(),
        coercivity_declared: false,
    };
    let sch = Schedule::canonical(1.0, 1.0, slack);
    let x1 = center.clone();
    vet_problem(Problem {
        cfg,
        sch,
        x1,
        solution: Solution::Unknown,
        seed: 0,
    })
}

/// Fixture on which the full scheme and the stationary reduction follow the
/// same trajectory: zero equilibrium data, zero component operators, zero
/// guide weight, and an idempotent nonexpansive target (a projection), so
/// every power of the target equals the map itself.
pub fn make_reduction_fixture(dim: usize) -> Result<Problem> {
    let set = ConvexSet::cube(dim, -2.0, 2.0)?;
    let inner_box = ConvexSet::cube(dim, -0.5, 0.5)?;
    let target_map = CertifiedOperator::custom(
        move |x| inner_box.project(x).expect("box projection cannot fail"),
        Certificates {
            lipschitz: Some(1.0),
            nonexpansive: true,
            ..Default::default()
        },
    );
    let target = IterateOracle::from_map(&target_map);

    let strengths = StrengthParams {
        mu: 1.0,
        rho: 0.25,
        gamma: 0.5,
        eta: 1.0,
        lipschitz: 1.0,
    };
    // viscosity: affine contraction x -> 0.5 (x - shift)
    let shift = Vector::filled(dim, 0.8);
    let viscosity = CertifiedOperator::custom(
        move |x| (x - &shift).scale(0.5),
        Certificates {
            lipschitz: Some(0.5),
            nonexpansive: true,
            ..Default::default()
        },
    );

    let cfg = SchemeConfig {
        set,
        bifunction: BifunctionSpec::Zero,
        phi: ConvexFnSpec::Zero,
        vi_op: CertifiedOperator::zero(),
        gmep_op: CertifiedOperator::zero(),
        guide: CertifiedOperator::identity(),
        viscosity,
        regularizer: CertifiedOperator::identity(),
        target,
        strengths,
        variant: SchemeVariant::Full,
        inner: InnerOpts::default(),
        coercivity_declared: false,
    };
    let mut sch = Schedule::canonical(1.0, 1.0, SeqDesc::Constant { c: 0.0 });
    sch.beta = SeqDesc::Constant { c: 0.0 };
    let x1 = Vector::filled(dim, 1.5);
    vet_problem(Problem {
        cfg,
        sch,
        x1,
        solution: Solution::Unknown,
        seed: 0,
    })
}
