//! Control sequences of the iteration and the validator for the
//! admissibility conditions they must satisfy.
//!
//! The limit conditions are validated structurally where the power-law
//! algebra decides them, and by a finite-horizon decreasing-tail test
//! otherwise. Each report entry records which basis produced it, so a
//! "proved" verdict is never claimed for an empirical check.

use serde::{Deserialize, Serialize};

use crate::ops::ValidationReport;

/// Scalar sequence descriptor; `value(n)` is defined for n >= 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqDesc {
    Constant {
        c: f64,
    },
    /// c / (n + n0)^p
    PowerLaw {
        c: f64,
        p: f64,
        n0: f64,
    },
}

impl SeqDesc {
    pub fn value(&self, n: u32) -> f64 {
        match self {
            SeqDesc::Constant { c } => *c,
            SeqDesc::PowerLaw { c, p, n0 } => c / (n as f64 + n0).powf(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SeqDesc::Constant { c } if *c == 0.0)
    }
}

/// The five control sequences of the iteration: the vanishing mixing weight
/// alpha, the guide weight beta, the variational-inequality stepsizes
/// lambda, the resolvent radii r, and the near-nonexpansiveness slack a.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub alpha: SeqDesc,
    pub beta: SeqDesc,
    pub lambda: SeqDesc,
    pub r: SeqDesc,
    pub a: SeqDesc,
}

impl Schedule {
    /// alpha_n = 1/(n+1), beta_n = 1/(n+1)^2, lambda and r constant at the
    /// midpoints of their admissible ranges, slack from the iterate oracle.
    pub fn canonical(ism_a: f64, ism_b: f64, a: SeqDesc) -> Self {
        Schedule {
            alpha: SeqDesc::PowerLaw {
                c: 1.0,
                p: 1.0,
                n0: 1.0,
            },
            beta: SeqDesc::PowerLaw {
                c: 1.0,
                p: 2.0,
                n0: 1.0,
            },
            lambda: SeqDesc::Constant { c: ism_a },
            r: SeqDesc::Constant { c: ism_b },
            a,
        }
    }
}

/// Which stages a scheme variant runs, hence which schedule conditions
/// apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeVariant {
    /// Resolvent, variational-inequality, guide, and damped-target stages.
    Full,
    /// No variational-inequality stage.
    S1,
    /// No variational-inequality and no guide stage.
    S2,
    /// Resolvent without the co-coercive shift; no variational-inequality
    /// stage.
    S3,
    /// Single damped-target stage with a stationary map.
    Ceng,
}

impl SchemeVariant {
    pub fn uses_vi_stage(self) -> bool {
        matches!(self, SchemeVariant::Full)
    }

    pub fn uses_guide_stage(self) -> bool {
        matches!(
            self,
            SchemeVariant::Full | SchemeVariant::S1 | SchemeVariant::S3
        )
    }

    pub fn uses_resolvent(self) -> bool {
        !matches!(self, SchemeVariant::Ceng)
    }

    /// Whether the resolvent radius is restricted to (0, 2 theta) by the
    /// co-coercive shift; without it any positive radius is admissible.
    pub fn uses_gmep_shift(self) -> bool {
        matches!(
            self,
            SchemeVariant::Full | SchemeVariant::S1 | SchemeVariant::S2
        )
    }
}

/// Basis of one schedule check: decided by power-law algebra or observed
/// over a finite horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckBasis {
    Proved,
    Empirical,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleCheck {
    pub name: String,
    pub passed: bool,
    pub basis: CheckBasis,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleReport {
    pub entries: Vec<ScheduleCheck>,
    pub horizon: u32,
}

impl ScheduleReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&ScheduleCheck> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }

    pub fn has_failure(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.name == name && !e.passed)
    }

    fn push(&mut self, name: &str, passed: bool, basis: CheckBasis, detail: String) {
        self.entries.push(ScheduleCheck {
            name: name.into(),
            passed,
            basis,
            detail,
        });
    }

    /// Fold into a flat validation report (for merged config reports).
    pub fn append_to(&self, report: &mut ValidationReport) {
        for e in &self.entries {
            report.push(&e.name, e.passed, format!("[{:?}] {}", e.basis, e.detail));
        }
    }
}

/// Vanishing-tail test over the back half of the horizon: the sequence must
/// be (slack-)non-increasing there and either already negligible or shrunk
/// by a quarter from the start of the tail.
fn decreasing_tail(values: &[f64]) -> (bool, String) {
    if values.iter().any(|v| !v.is_finite()) {
        return (false, "non-finite entries".into());
    }
    let len = values.len();
    let tail_start = len / 2;
    let tail = &values[tail_start..];
    let first = tail[0];
    let last = *tail.last().unwrap();
    if tail.iter().all(|v| *v <= 1e-12) {
        return (true, "tail vanished below 1e-12".into());
    }
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    let shrinks = last <= 0.75 * first + 1e-15;
    let ok = monotone && shrinks;
    (
        ok,
        format!("tail [{first:.3e} -> {last:.3e}], monotone = {monotone}, shrinks = {shrinks}"),
    )
}

fn ratio_difference_series(seq: &SeqDesc, alpha: &SeqDesc, horizon: u32) -> Vec<f64> {
    (2..=horizon)
        .map(|n| (seq.value(n) - seq.value(n - 1)).abs() / alpha.value(n))
        .collect()
}

/// Validate the admissibility of a schedule for a given scheme variant.
/// `ism_a` / `ism_b` bound the stepsize and radius ranges; pass
/// `f64::INFINITY` for stages the variant does not run (the range check
/// then only requires positivity). Failures are report entries, not errors.
pub fn validate_schedule(
    sch: &Schedule,
    variant: SchemeVariant,
    ism_a: f64,
    ism_b: f64,
    horizon: u32,
) -> ScheduleReport {
    assert!(horizon >= 10, "validation horizon must be >= 10");
    let mut report = ScheduleReport {
        entries: Vec::new(),
        horizon,
    };

    // (C1): alpha_n -> 0 and sum alpha_n = infinity; range [0, 1].
    match sch.alpha {
        SeqDesc::Constant { c } => {
            report.push(
                "C1.alpha_to_zero",
                false,
                CheckBasis::Proved,
                format!("constant alpha = {c} does not vanish"),
            );
            report.push(
                "C1.alpha_divergent_sum",
                c > 0.0,
                CheckBasis::Proved,
                format!("constant alpha = {c}"),
            );
            report.push(
                "range.alpha_unit",
                (0.0..=1.0).contains(&c),
                CheckBasis::Proved,
                format!("alpha = {c}"),
            );
        }
        SeqDesc::PowerLaw { c, p, n0 } => {
            report.push(
                "C1.alpha_to_zero",
                c > 0.0 && p > 0.0,
                CheckBasis::Proved,
                format!("alpha = {c}/(n+{n0})^{p}"),
            );
            report.push(
                "C1.alpha_divergent_sum",
                c > 0.0 && p > 0.0 && p <= 1.0,
                CheckBasis::Proved,
                format!("exponent p = {p}; the sum diverges iff p <= 1"),
            );
            let first = sch.alpha.value(1);
            report.push(
                "range.alpha_unit",
                c > 0.0 && first <= 1.0,
                CheckBasis::Proved,
                format!("alpha_1 = {first}"),
            );
        }
    }

    // (C2): beta_n / alpha_n -> 0 (structural), plus the four ratio
    // difference conditions and a_n / alpha_n -> 0 (finite-horizon tails).
    if variant.uses_guide_stage() {
        let (passed, detail): (bool, String) = match (sch.beta, sch.alpha) {
            (SeqDesc::Constant { c: 0.0 }, _) => (true, "beta = 0".into()),
            (SeqDesc::Constant { c: b }, _) => (false, format!("constant beta = {b}")),
            (SeqDesc::PowerLaw { p: pb, c: cb, .. }, SeqDesc::PowerLaw { p: pa, .. }) => (
                cb >= 0.0 && pb > pa,
                format!("p_beta = {pb} must exceed p_alpha = {pa}"),
            ),
            (SeqDesc::PowerLaw { .. }, SeqDesc::Constant { .. }) => {
                (false, "vanishing ratio needs vanishing alpha".into())
            }
        };
        report.push("C2.beta_over_alpha", passed, CheckBasis::Proved, detail);

        let beta_in_range = (1..=horizon).all(|n| (0.0..=1.0).contains(&sch.beta.value(n)));
        report.push(
            "range.beta_unit",
            beta_in_range,
            CheckBasis::Empirical,
            format!("beta over n <= {horizon}"),
        );

        let (ok, detail) =
            decreasing_tail(&ratio_difference_series(&sch.beta, &sch.alpha, horizon));
        report.push("C2.beta_diff_ratio", ok, CheckBasis::Empirical, detail);
    }

    let (ok, detail) = decreasing_tail(&ratio_difference_series(&sch.alpha, &sch.alpha, horizon));
    report.push("C2.alpha_diff_ratio", ok, CheckBasis::Empirical, detail);

    if variant.uses_vi_stage() {
        let (ok, detail) =
            decreasing_tail(&ratio_difference_series(&sch.lambda, &sch.alpha, horizon));
        report.push("C2.lambda_diff_ratio", ok, CheckBasis::Empirical, detail);

        let lambda_ok = (1..=horizon).all(|n| {
            let l = sch.lambda.value(n);
            l > 0.0 && l < 2.0 * ism_a
        });
        report.push(
            "range.lambda",
            lambda_ok,
            CheckBasis::Empirical,
            format!(
                "lambda must lie in (0, {}) over n <= {horizon}",
                2.0 * ism_a
            ),
        );
    }

    if variant.uses_resolvent() {
        let (ok, detail) = decreasing_tail(&ratio_difference_series(&sch.r, &sch.alpha, horizon));
        report.push("C2.r_diff_ratio", ok, CheckBasis::Empirical, detail);

        let upper = if variant.uses_gmep_shift() {
            2.0 * ism_b
        } else {
            f64::INFINITY
        };
        let r_ok = (1..=horizon).all(|n| {
            let r = sch.r.value(n);
            r > 0.0 && r < upper
        });
        report.push(
            "range.r",
            r_ok,
            CheckBasis::Empirical,
            format!("r must lie in (0, {upper}) over n <= {horizon}"),
        );
    }

    let a_series: Vec<f64> = (2..=horizon)
        .map(|n| sch.a.value(n) / sch.alpha.value(n))
        .collect();
    let (ok, detail) = decreasing_tail(&a_series);
    report.push("C2.a_over_alpha", ok, CheckBasis::Empirical, detail);
    let a_nonneg = (1..=horizon).all(|n| sch.a.value(n) >= 0.0);
    report.push(
        "range.a_nonnegative",
        a_nonneg,
        CheckBasis::Empirical,
        format!("a over n <= {horizon}"),
    );

    report
}

/// (C3) along probe trajectories: || T^n x - T^{n-1} x || -> 0 and the same
/// quantity over alpha_n -> 0, both as finite-horizon tail checks. Costs
/// O(horizon^2) applications for composed oracles.
pub fn validate_target_steps(
    oracle: &crate::ops::IterateOracle,
    alpha: &SeqDesc,
    probes: &[Vector],
    horizon: u32,
) -> ScheduleReport {
    assert!(horizon >= 10);
    assert!(!probes.is_empty(), "need at least one probe point");
    let mut report = ScheduleReport {
        entries: Vec::new(),
        horizon,
    };
    let mut worst_plain: Vec<f64> = vec![0.0; (horizon - 1) as usize];
    let mut worst_ratio: Vec<f64> = vec![0.0; (horizon - 1) as usize];
    for x in probes {
        let mut prev = oracle.power(1, x);
        for n in 2..=horizon {
            let cur = oracle.power(n, x);
            let d = cur.dist(&prev);
            let idx = (n - 2) as usize;
            worst_plain[idx] = worst_plain[idx].max(d);
            worst_ratio[idx] = worst_ratio[idx].max(d / alpha.value(n));
            prev = cur;
        }
    }
    let (ok, detail) = decreasing_tail(&worst_plain);
    report.push("C3.step_vanishes", ok, CheckBasis::Empirical, detail);
    let (ok, detail) = decreasing_tail(&worst_ratio);
    report.push("C3.step_over_alpha", ok, CheckBasis::Empirical, detail);
    report
}

use crate::linalg::Vector;
