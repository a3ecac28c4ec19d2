//! Acceptance suite: every criterion pinned to its stated tolerance, one
//! printed pass/fail line per criterion (visible with `-- --nocapture`).
//!
//! Each criterion is also an ordinary test so `cargo test` fails loudly when
//! any of them regresses.

use std::fs;
use std::process::Command;
use std::time::Instant;

use tempfile::TempDir;
use tripoint::{
    certify, composite_strong_monotonicity_check, contraction_factor_check, make_reduction_fixture,
    make_selection, make_singleton, reduce, solve, step, validate_schedule, BifunctionSpec,
    Certificate, CertifiedOperator, ConvexFnSpec, ConvexSet, InnerOpts, IterationState, LinearMap,
    ResolventSpec, Sampler, Schedule, SchemeVariant, SeqDesc, SolveOptions, SolveStatus,
    StrengthParams, Trace, Vector,
};

fn report(criterion: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(passed, "{criterion}: {detail}");
}

fn v(coords: &[f64]) -> Vector {
    Vector::new(coords.to_vec()).unwrap()
}

fn clamp_unit_box(x: &Vector) -> Vector {
    Vector::new(x.as_slice().iter().map(|c| c.clamp(0.0, 1.0)).collect()).unwrap()
}

#[test]
fn criterion_1_selection_benchmark() {
    let set = ConvexSet::cube(2, 0.0, 1.0).unwrap();
    let prob = make_selection(2, set, v(&[2.0, 2.0]), 0.25).unwrap();
    assert_eq!(prob.x1, v(&[0.0, 0.0]));
    let x_star = v(&[0.5, 0.5]);

    let started = Instant::now();
    let out = solve(
        &prob.cfg,
        &prob.sch,
        prob.x1.clone(),
        Some(&x_star),
        &SolveOptions {
            max_iters: 10_000,
            ..Default::default()
        },
    )
    .unwrap();
    let elapsed = started.elapsed();

    let err = out.x_final.dist(&x_star);

    // first 100 iterates against the closed form
    // x_{n+1} = P_C[(1 - alpha_n) x_n + alpha_n rho v]
    let mut closed = v(&[0.0, 0.0]);
    let mut state = IterationState::initial(prob.x1.clone());
    let mut worst_dev = 0.0_f64;
    for n in 1..=100u32 {
        let alpha = 1.0 / (n as f64 + 1.0);
        let mixed = Vector::new(
            closed
                .as_slice()
                .iter()
                .zip(x_star.as_slice())
                .map(|(xi, ti)| (1.0 - alpha) * xi + alpha * ti)
                .collect(),
        )
        .unwrap();
        closed = clamp_unit_box(&mixed);
        let (next, _) = step(&prob.cfg, &prob.sch, &state).unwrap();
        worst_dev = worst_dev.max(next.x.max_abs_diff(&closed));
        state = next;
    }

    let passed = err <= 2e-3 && worst_dev <= 1e-10 && elapsed.as_secs_f64() <= 5.0;
    report(
        "criterion 1 (selection benchmark)",
        passed,
        &format!(
            "final error {err:.3e} (<= 2e-3), closed-form deviation {worst_dev:.3e} (<= 1e-10), \
             runtime {:.2}s (<= 5s)",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_singleton_benchmark() {
    let set = ConvexSet::cube(2, -1.0, 1.0).unwrap();
    let p = v(&[0.25, -0.5]);
    let prob = make_singleton(42, 2, set, p.clone()).unwrap();
    let out = solve(
        &prob.cfg,
        &prob.sch,
        prob.x1.clone(),
        Some(&p),
        &SolveOptions {
            max_iters: 10_000,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(out.status, SolveStatus::MaxIters);

    let last = *out.trace.rows.last().unwrap();
    let err = out.final_error.unwrap();
    let residuals_ok = last.gmep_res <= 1e-2 && last.vi_res <= 1e-2 && last.fix_res <= 1e-2;
    let composite = last.gmep_res.max(last.vi_res).max(last.fix_res);
    let gaps_ok = last.gap_ux <= 1e-3 && last.gap_uz <= 1e-3 && last.gap_xy <= 1e-3;

    let passed = composite <= 1e-2 && err <= 1e-2 && residuals_ok && gaps_ok;
    report(
        "criterion 2 (singleton benchmark, dim 2, seed 42)",
        passed,
        &format!(
            "composite residual {composite:.3e} (<= 1e-2), error {err:.3e} (<= 1e-2), gaps \
             ({:.1e}, {:.1e}, {:.1e}) (<= 1e-3)",
            last.gap_ux, last.gap_uz, last.gap_xy
        ),
    );
}

#[test]
fn criterion_3_lemma_property_suites() {
    let mut failures: Vec<String> = Vec::new();
    let pairs = 1000;

    // metric projection properties (1)-(3), tol 1e-9, per primitive
    let primitives = vec![
        ConvexSet::cube(3, -0.5, 1.5).unwrap(),
        ConvexSet::ball(v(&[0.25, -0.25, 0.5]), 1.2).unwrap(),
        ConvexSet::halfspace(v(&[1.0, 2.0, -1.0]), 0.5).unwrap(),
        ConvexSet::hyperplane(v(&[1.0, 1.0, 1.0]), 1.0).unwrap(),
        ConvexSet::simplex(3, 1.0).unwrap(),
    ];
    for set in &primitives {
        let s = Sampler::around_set(set, 1042);
        for (x, y) in s.pairs(pairs) {
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            if px.dist(&py) > x.dist(&y) + 1e-9 {
                failures.push(format!("{set:?}: projection nonexpansiveness"));
            }
            if (&x - &y).inner(&(&px - &py)) < px.dist(&py).powi(2) - 1e-9 {
                failures.push(format!("{set:?}: firm nonexpansiveness"));
            }
            if (&x - &px).inner(&(&px - &py)) < -1e-9 {
                failures.push(format!("{set:?}: variational characterization"));
            }
        }
    }

    // resolvent firm nonexpansiveness, tol 1e-7
    let spec = ResolventSpec::new(
        BifunctionSpec::linear(CertifiedOperator::scaled_identity(0.5)),
        ConvexFnSpec::quadratic(LinearMap::diagonal(&[0.5, 1.0]), v(&[0.1, -0.2])).unwrap(),
        ConvexSet::cube(2, -1.0, 1.0).unwrap(),
        0.9,
        InnerOpts::default(),
        false,
    )
    .unwrap();
    let s2 = Sampler::new(Vector::filled(2, -2.0), Vector::filled(2, 2.0), 1043).unwrap();
    for (x, y) in s2.pairs(pairs) {
        let tx = spec.evaluate(&x).unwrap();
        let ty = spec.evaluate(&y).unwrap();
        if tx.dist(&ty).powi(2) > (&tx - &ty).inner(&(&x - &y)) + 1e-7 {
            failures.push("resolvent firm nonexpansiveness".into());
        }
    }

    // contraction bound 1 - lambda nu, tol 1e-9, including exact attainment
    let id = CertifiedOperator::identity();
    let p_exact = StrengthParams {
        mu: 1.0,
        rho: 0.0,
        gamma: 0.0,
        eta: 1.0,
        lipschitz: 1.0,
    };
    let r = contraction_factor_check(&id, 0.5, &p_exact, &s2, pairs, 1e-9).unwrap();
    if !r.passed {
        failures.push("contraction bound (identity, mu = 1)".into());
    }
    if r.worst_violation.abs() > 1e-12 {
        failures.push("contraction bound must be attained exactly by (1 - lambda) I".into());
    }
    let p_half = StrengthParams { mu: 0.5, ..p_exact };
    let r = contraction_factor_check(&id, 0.5, &p_half, &s2, pairs, 1e-9).unwrap();
    if !r.passed || r.worst_violation.abs() > 1e-12 {
        failures.push("contraction bound (identity, mu = 0.5) exact attainment".into());
    }
    let diag = CertifiedOperator::linear(LinearMap::diagonal(&[1.0, 2.0])).unwrap();
    let p_diag = StrengthParams {
        mu: 0.25,
        rho: 0.0,
        gamma: 0.0,
        eta: 1.0,
        lipschitz: 2.0,
    };
    for lambda in [0.25, 0.5, 0.75] {
        let r = contraction_factor_check(&diag, lambda, &p_diag, &s2, pairs, 1e-9).unwrap();
        if !r.passed {
            failures.push(format!("contraction bound (diag(1,2), lambda = {lambda})"));
        }
    }

    // composite strong monotonicity with coefficient mu eta - rho gamma
    let f_op = CertifiedOperator::linear(
        LinearMap::from_rows(vec![vec![1.2, 0.1], vec![0.1, 0.9]]).unwrap(),
    )
    .unwrap();
    let v_op = CertifiedOperator::scaled_identity(0.5);
    let p = StrengthParams {
        mu: 0.8,
        rho: 0.3,
        gamma: 0.5,
        eta: f_op.strong_monotonicity().unwrap(),
        lipschitz: f_op.lipschitz().unwrap(),
    };
    let r = composite_strong_monotonicity_check(&f_op, &v_op, &p, &s2, pairs, 1e-9);
    if !r.passed {
        failures.push("composite strong monotonicity".into());
    }

    // I - r B and I - lambda A nonexpansive on admissible ranges, for a
    // symmetric PSD map and the translation operator x - p
    let psd_op = CertifiedOperator::linear(
        LinearMap::from_rows(vec![vec![1.0, 0.25], vec![0.25, 0.5]]).unwrap(),
    )
    .unwrap();
    let translation = CertifiedOperator::translation_to(v(&[0.3, -0.2]));
    for (name, op) in [("B", psd_op), ("A", translation)] {
        let modulus = op.ism_modulus().unwrap();
        for frac in [0.25, 1.0, 1.75] {
            let step_size = frac * modulus;
            let shifted = {
                let op = op.clone();
                CertifiedOperator::custom(
                    move |x| x.axpy(-step_size, &op.apply(x)),
                    Default::default(),
                )
            };
            let r = certify(&shifted, Certificate::Nonexpansive, &s2, pairs, 1e-9);
            if !r.passed {
                failures.push(format!("I - {step_size} {name} nonexpansive"));
            }
        }
    }

    report(
        "criterion 3 (lemma property suites)",
        failures.is_empty(),
        &if failures.is_empty() {
            format!("all suites clean on {pairs} pairs")
        } else {
            format!("{} failures: {:?}", failures.len(), failures)
        },
    );
}

#[test]
fn criterion_4_reduction_equivalence() {
    let prob = make_reduction_fixture(2).unwrap();

    // independently coded stationary loop
    // x+ = P_C[alpha rho V x + T x - alpha mu F(T x)]
    let shift = Vector::filled(2, 0.8);
    let inner_box = ConvexSet::cube(2, -0.5, 0.5).unwrap();
    let outer_box = ConvexSet::cube(2, -2.0, 2.0).unwrap();
    let mut x_ref = prob.x1.clone();
    let mut state = IterationState::initial(prob.x1.clone());
    let mut worst_ceng = 0.0_f64;
    for n in 1..=100u32 {
        let alpha = 1.0 / (n as f64 + 1.0);
        let w = inner_box.project(&x_ref).unwrap();
        let visc = (&x_ref - &shift).scale(0.5);
        let t = &visc.scale(alpha * prob.cfg.strengths.rho)
            + &w.axpy(-alpha * prob.cfg.strengths.mu, &w);
        x_ref = outer_box.project(&t).unwrap();

        let (next, _) = step(&prob.cfg, &prob.sch, &state).unwrap();
        worst_ceng = worst_ceng.max(next.x.max_abs_diff(&x_ref));
        state = next;
    }

    // engine full-with-zero-A versus the S1 reduction
    let s1 = reduce(SchemeVariant::S1, &prob.cfg).unwrap();
    let mut state_full = IterationState::initial(prob.x1.clone());
    let mut state_s1 = IterationState::initial(prob.x1.clone());
    let mut worst_s1 = 0.0_f64;
    for _ in 0..100 {
        let (a, _) = step(&prob.cfg, &prob.sch, &state_full).unwrap();
        let (b, _) = step(&s1, &prob.sch, &state_s1).unwrap();
        worst_s1 = worst_s1.max(a.x.max_abs_diff(&b.x));
        state_full = a;
        state_s1 = b;
    }

    let passed = worst_ceng <= 1e-12 && worst_s1 <= 1e-12;
    report(
        "criterion 4 (reduction equivalence)",
        passed,
        &format!(
            "full vs independent stationary loop {worst_ceng:.3e} (<= 1e-12), full-with-zero-A vs \
             S1 {worst_s1:.3e} (<= 1e-12)"
        ),
    );
}

#[test]
fn criterion_5_scalar_recursion() {
    let mut x = 1.0_f64;
    for n in 1..=10_000u32 {
        let alpha = 1.0 / (n as f64 + 1.0);
        let beta = 1.0 / (n as f64 + 1.0);
        x = (1.0 - alpha) * x + alpha * beta;
    }
    report(
        "criterion 5 (vanishing scalar recursion)",
        x < 1e-2,
        &format!("x_10000 = {x:.3e} (< 1e-2)"),
    );
}

#[test]
fn criterion_6_schedule_validator() {
    let canonical = Schedule::canonical(1.0, 1.0, SeqDesc::Constant { c: 0.0 });
    let accepts = validate_schedule(&canonical, SchemeVariant::Full, 1.0, 1.0, 200).all_passed();

    let mut fast_alpha = canonical;
    fast_alpha.alpha = SeqDesc::PowerLaw {
        c: 1.0,
        p: 2.0,
        n0: 1.0,
    };
    let c1 = validate_schedule(&fast_alpha, SchemeVariant::Full, 1.0, 1.0, 200)
        .has_failure("C1.alpha_divergent_sum");

    let mut beta_eq = canonical;
    beta_eq.beta = canonical.alpha;
    let c2 = validate_schedule(&beta_eq, SchemeVariant::Full, 1.0, 1.0, 200)
        .has_failure("C2.beta_over_alpha");

    let mut r_out = canonical;
    r_out.r = SeqDesc::Constant { c: 2.5 };
    let range =
        validate_schedule(&r_out, SchemeVariant::Full, 1.0, 1.0, 200).has_failure("range.r");

    let passed = accepts && c1 && c2 && range;
    report(
        "criterion 6 (schedule validator)",
        passed,
        &format!(
            "canonical accepted = {accepts}, alpha sum-divergence named = {c1}, beta/alpha ratio \
             named = {c2}, r range named = {range}"
        ),
    );
}

#[test]
fn criterion_7_cli_reproducibility() {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("selection.json");
    fs::write(
        &config_path,
        format!(
            r#"{{
  "seed": 42,
  "problem": {{
    "generator": "selection",
    "dim": 2,
    "set": {{"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}},
    "v": [2.0, 2.0],
    "rho": 0.25
  }},
  "stopping": {{"max_iters": 10000}},
  "outputs": {{"trace_path": "{dir}/trace.csv", "summary_path": "{dir}/summary.json"}}
}}"#,
            dir = dir.path().display()
        ),
    )
    .unwrap();

    let mut runs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let trace = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_tripoint"))
            .args([
                "run",
                "--config",
                config_path.to_str().unwrap(),
                "--trace",
                trace.to_str().unwrap(),
                "--summary",
                dir.path().join(format!("{name}.json")).to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "cli run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        runs.push(fs::read(&trace).unwrap());
    }

    let text = String::from_utf8(runs[0].clone()).unwrap();
    let mut lines = text.lines();
    let header_ok = lines.next() == Some(Trace::CSV_HEADER);
    let row_count = lines.count();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.json")).unwrap()).unwrap();
    let error_ok = summary["final_error"].as_f64().unwrap() <= 2e-3;

    let passed = header_ok && row_count == 10_000 && runs[0] == runs[1] && error_ok;
    report(
        "criterion 7 (batch front-end)",
        passed,
        &format!(
            "header byte-exact = {header_ok}, rows = {row_count} (= 10000), identical bytes \
             across seeds = {}, summary error within bound = {error_ok}",
            runs[0] == runs[1]
        ),
    );
}
