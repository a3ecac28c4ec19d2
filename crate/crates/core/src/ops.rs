//! Operator descriptors with declared strength constants, sampling-based
//! certification of the monotonicity/Lipschitz hypotheses, and the strength
//! algebra tying them together.
//!
//! Certification is evidence, not proof: the hypotheses are universally
//! quantified, so a report records the worst violation found over a seeded
//! sample and a pass/fail verdict at a caller-chosen tolerance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{LinearMap, Vector};
use crate::sampling::Sampler;
use crate::sets::ConvexSet;

type EvalFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type FamilyFn = Arc<dyn Fn(u32, &Vector) -> Vector + Send + Sync>;

/// Registry tag for the built-in operator family. `Custom` marks operators
/// supplied as closures by library users.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Zero,
    Identity,
    ScaledIdentity,
    Affine,
    Translation,
    Constant,
    Custom,
}

/// A single certifiable hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Certificate {
    /// <Fx - Fy, x - y> >= modulus * ||Fx - Fy||^2 (inverse strong
    /// monotonicity / co-coercivity).
    Ism { modulus: f64 },
    /// ||Fx - Fy|| <= constant * ||x - y||
    Lipschitz { constant: f64 },
    /// <Fx - Fy, x - y> >= modulus * ||x - y||^2
    StronglyMonotone { modulus: f64 },
    /// ||Fx - Fy|| <= ||x - y||
    Nonexpansive,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Ism { modulus } => write!(f, "ism({modulus})"),
            Certificate::Lipschitz { constant } => write!(f, "lipschitz({constant})"),
            Certificate::StronglyMonotone { modulus } => write!(f, "strongly_monotone({modulus})"),
            Certificate::Nonexpansive => write!(f, "nonexpansive"),
        }
    }
}

/// Declared strength constants of one operator. Downstream validation
/// relies on exactly these values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Certificates {
    pub ism: Option<f64>,
    pub lipschitz: Option<f64>,
    pub strongly_monotone: Option<f64>,
    pub nonexpansive: bool,
}

impl Certificates {
    pub fn to_list(self) -> Vec<Certificate> {
        let mut out = Vec::new();
        if let Some(m) = self.ism {
            out.push(Certificate::Ism { modulus: m });
        }
        if let Some(l) = self.lipschitz {
            out.push(Certificate::Lipschitz { constant: l });
        }
        if let Some(m) = self.strongly_monotone {
            out.push(Certificate::StronglyMonotone { modulus: m });
        }
        if self.nonexpansive {
            out.push(Certificate::Nonexpansive);
        }
        out
    }
}

/// Vector-to-vector map bundled with its declared strength constants.
#[derive(Clone)]
pub struct CertifiedOperator {
    kind: OpKind,
    eval: EvalFn,
    certs: Certificates,
}

impl fmt::Debug for CertifiedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CertifiedOperator({:?}, {:?})", self.kind, self.certs)
    }
}

impl CertifiedOperator {
    /// x |-> 0. Valid ism modulus for every value; declared as 1.
    pub fn zero() -> Self {
        Self {
            kind: OpKind::Zero,
            eval: Arc::new(|x| Vector::zeros(x.dim())),
            certs: Certificates {
                ism: Some(1.0),
                lipschitz: Some(0.0),
                strongly_monotone: Some(0.0),
                nonexpansive: true,
            },
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: OpKind::Identity,
            eval: Arc::new(|x| x.clone()),
            certs: Certificates {
                ism: Some(1.0),
                lipschitz: Some(1.0),
                strongly_monotone: Some(1.0),
                nonexpansive: true,
            },
        }
    }

    pub fn scaled_identity(factor: f64) -> Self {
        assert!(factor.is_finite());
        let certs = if factor > 0.0 {
            Certificates {
                ism: Some(1.0 / factor),
                lipschitz: Some(factor),
                strongly_monotone: Some(factor),
                nonexpansive: factor <= 1.0,
            }
        } else if factor == 0.0 {
            return Self::zero();
        } else {
            Certificates {
                ism: None,
                lipschitz: Some(factor.abs()),
                strongly_monotone: None,
                nonexpansive: factor.abs() <= 1.0,
            }
        };
        Self {
            kind: OpKind::ScaledIdentity,
            eval: Arc::new(move |x| x.scale(factor)),
            certs,
        }
    }

    /// x |-> x - point.
    pub fn translation_to(point: Vector) -> Self {
        Self {
            kind: OpKind::Translation,
            eval: Arc::new(move |x| x - &point),
            certs: Certificates {
                ism: Some(1.0),
                lipschitz: Some(1.0),
                strongly_monotone: Some(1.0),
                nonexpansive: true,
            },
        }
    }

    /// x |-> value (constant map).
    pub fn constant(value: Vector) -> Self {
        Self {
            kind: OpKind::Constant,
            eval: Arc::new(move |_| value.clone()),
            certs: Certificates {
                ism: Some(1.0),
                lipschitz: Some(0.0),
                strongly_monotone: Some(0.0),
                nonexpansive: true,
            },
        }
    }

    /// x |-> M x + offset with certificates derived from the spectrum:
    /// Lipschitz = spectral norm; for a PSD symmetric part, strong
    /// monotonicity = its smallest eigenvalue, and the ism modulus is the
    /// tight 1/lambda_max for symmetric M or the conservative
    /// lambda_min(sym) / sigma_max^2 otherwise.
    pub fn affine(map: LinearMap, offset: Vector) -> Result<Self> {
        if map.dim() != offset.dim() {
            return Err(Error::InvalidProblem(
                "affine operator: matrix and offset dimensions differ".into(),
            ));
        }
        let lip = map.spectral_norm();
        let symmetric = map.is_symmetric(1e-12 * lip.max(1.0));
        let sym = map.add(&map.transpose()).scaled(0.5);
        let eigs = sym.sym_eigenvalues().expect("symmetrized matrix");
        let lam_min = *eigs.first().unwrap();
        let lam_max = *eigs.last().unwrap();
        let (sm, ism) = if lam_min >= 0.0 && lip > 0.0 {
            let modulus = if symmetric {
                1.0 / lam_max
            } else {
                lam_min / (lip * lip)
            };
            (Some(lam_min), (modulus > 0.0).then_some(modulus))
        } else if lip == 0.0 {
            (Some(0.0), Some(1.0))
        } else {
            (None, None)
        };
        let certs = Certificates {
            ism,
            lipschitz: Some(lip),
            strongly_monotone: sm,
            nonexpansive: lip <= 1.0,
        };
        Ok(Self {
            kind: OpKind::Affine,
            eval: Arc::new(move |x| &map.apply(x) + &offset),
            certs,
        })
    }

    /// Linear map x |-> M x.
    pub fn linear(map: LinearMap) -> Result<Self> {
        let dim = map.dim();
        Self::affine(map, Vector::zeros(dim))
    }

    /// Arbitrary callback with caller-declared certificates. The callback
    /// must be safe for concurrent calls.
    pub fn custom(
        eval: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        certs: Certificates,
    ) -> Self {
        Self {
            kind: OpKind::Custom,
            eval: Arc::new(eval),
            certs,
        }
    }

    /// Replace the declared certificates (e.g. to tighten auto-derived
    /// constants).
    pub fn with_certificates(mut self, certs: Certificates) -> Self {
        self.certs = certs;
        self
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        (self.eval)(x)
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.kind == OpKind::Zero
    }

    pub fn certificates(&self) -> Certificates {
        self.certs
    }

    pub fn ism_modulus(&self) -> Option<f64> {
        self.certs.ism
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.certs.lipschitz
    }

    pub fn strong_monotonicity(&self) -> Option<f64> {
        self.certs.strongly_monotone
    }

    pub fn is_nonexpansive(&self) -> bool {
        self.certs.nonexpansive
    }
}

/// Iterate access to the fixed-point target map: the iteration consumes only
/// the n-th iterate at step n, so the oracle either composes a single
/// self-map n times on demand or evaluates a directly supplied iterate
/// family. `near_bound(n)` is the declared slack a_n of the nearly
/// nonexpansive bound; demicontinuity is a declared, numerically uncheckable
/// flag.
#[derive(Clone)]
pub struct IterateOracle {
    rule: IterateRule,
    near: Arc<dyn Fn(u32) -> f64 + Send + Sync>,
    demicontinuous: bool,
    /// The family is generated by one map (true for composition oracles,
    /// declarable for families like the identity whose members coincide).
    stationary: bool,
}

#[derive(Clone)]
enum IterateRule {
    Composed(EvalFn),
    Family(FamilyFn),
}

impl fmt::Debug for IterateOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            IterateRule::Composed(_) => "composed",
            IterateRule::Family(_) => "family",
        };
        write!(f, "IterateOracle({rule})")
    }
}

impl IterateOracle {
    /// Compose a single self-map n times on demand; slack a_n = 0.
    pub fn from_map(op: &CertifiedOperator) -> Self {
        let eval = op.eval.clone();
        Self {
            rule: IterateRule::Composed(eval),
            near: Arc::new(|_| 0.0),
            demicontinuous: true,
            stationary: true,
        }
    }

    pub fn from_self_map(map: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self {
            rule: IterateRule::Composed(Arc::new(map)),
            near: Arc::new(|_| 0.0),
            demicontinuous: true,
            stationary: true,
        }
    }

    /// Directly supplied iterate family with declared slack sequence.
    pub fn from_family(
        family: impl Fn(u32, &Vector) -> Vector + Send + Sync + 'static,
        near: impl Fn(u32) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            rule: IterateRule::Family(Arc::new(family)),
            near: Arc::new(near),
            demicontinuous: true,
            stationary: false,
        }
    }

    /// Identity family: every power is the identity, a_n = 0.
    pub fn identity() -> Self {
        Self::from_family(|_, x| x.clone(), |_| 0.0).declare_stationary(true)
    }

    /// Declare that the family members coincide with a single map (only
    /// meaningful for directly supplied families).
    pub fn declare_stationary(mut self, flag: bool) -> Self {
        self.stationary = flag;
        self
    }

    /// Whether the family is generated by (or declared equal to) one map.
    pub fn is_stationary_compatible(&self) -> bool {
        self.stationary
    }

    pub fn declare_demicontinuous(mut self, flag: bool) -> Self {
        self.demicontinuous = flag;
        self
    }

    pub fn is_demicontinuous_declared(&self) -> bool {
        self.demicontinuous
    }

    pub fn is_composed(&self) -> bool {
        matches!(self.rule, IterateRule::Composed(_))
    }

    /// n-th iterate at x, n >= 1.
    pub fn power(&self, n: u32, x: &Vector) -> Vector {
        assert!(n >= 1, "iterate power must be >= 1");
        match &self.rule {
            IterateRule::Composed(f) => {
                let mut y = f(x);
                for _ in 1..n {
                    y = f(&y);
                }
                y
            }
            IterateRule::Family(f) => f(n, x),
        }
    }

    pub fn near_bound(&self, n: u32) -> f64 {
        (self.near)(n)
    }
}

/// The scalar hypotheses of the iteration: 0 < mu < 2 eta / L^2 and
/// 0 <= rho * gamma < nu with nu = 1 - sqrt(1 - mu (2 eta - mu L^2)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthParams {
    pub mu: f64,
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub lipschitz: f64,
}

impl StrengthParams {
    pub fn nu(&self) -> Result<f64> {
        nu_coefficient(self.mu, self.eta, self.lipschitz)
    }
}

/// Contraction coefficient nu = 1 - sqrt(1 - mu (2 eta - mu L^2)) of the
/// damped map I - lambda mu F; lies in (0, 1] on the admissible domain.
pub fn nu_coefficient(mu: f64, eta: f64, lipschitz: f64) -> Result<f64> {
    if !(eta > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::StrengthDomain(format!(
            "eta and L must be positive (eta = {eta}, L = {lipschitz})"
        )));
    }
    if eta > lipschitz {
        return Err(Error::StrengthDomain(format!(
            "eta <= L is required for a strongly monotone Lipschitz operator (eta = {eta}, L = {lipschitz})"
        )));
    }
    let upper = 2.0 * eta / (lipschitz * lipschitz);
    if !(mu > 0.0 && mu < upper) {
        return Err(Error::StrengthDomain(format!(
            "mu must lie in (0, {upper}), got {mu}"
        )));
    }
    let radicand = 1.0 - mu * (2.0 * eta - mu * lipschitz * lipschitz);
    // radicand = (1 - mu eta)^2 + mu^2 (L^2 - eta^2) >= 0 given eta <= L;
    // clamp roundoff
    let nu = 1.0 - radicand.max(0.0).sqrt();
    debug_assert!(nu > 0.0 && nu <= 1.0 + 1e-15);
    Ok(nu.min(1.0))
}

/// One named pass/fail entry of a validation or schedule report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of checking the scalar hypotheses. Failures are entries, not
/// errors.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
    /// Computed contraction coefficient, when the mu-bound admits one.
    pub nu: Option<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&CheckEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }

    pub fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

/// Check every scalar hypothesis, reporting each with the computed nu.
pub fn validate_strengths(p: &StrengthParams) -> ValidationReport {
    let mut report = ValidationReport {
        entries: Vec::new(),
        nu: None,
    };
    report.push(
        "strength.eta_positive",
        p.eta > 0.0,
        format!("eta = {}", p.eta),
    );
    report.push(
        "strength.lipschitz_positive",
        p.lipschitz > 0.0,
        format!("L = {}", p.lipschitz),
    );
    report.push(
        "strength.eta_le_lipschitz",
        p.eta <= p.lipschitz,
        format!("eta = {}, L = {}", p.eta, p.lipschitz),
    );
    let upper = if p.lipschitz > 0.0 {
        2.0 * p.eta / (p.lipschitz * p.lipschitz)
    } else {
        f64::NAN
    };
    report.push(
        "strength.mu_bound",
        p.mu > 0.0 && p.mu < upper,
        format!("mu = {}, admissible interval (0, {upper})", p.mu),
    );
    match p.nu() {
        Ok(nu) => {
            report.nu = Some(nu);
            report.push(
                "strength.nu_in_unit",
                nu > 0.0 && nu <= 1.0,
                format!("nu = {nu}"),
            );
            report.push(
                "strength.rho_gamma_below_nu",
                p.rho * p.gamma >= 0.0 && p.rho * p.gamma < nu,
                format!("rho*gamma = {}, nu = {nu}", p.rho * p.gamma),
            );
        }
        Err(e) => {
            report.push("strength.nu_in_unit", false, format!("nu undefined: {e}"));
            report.push(
                "strength.rho_gamma_below_nu",
                false,
                "nu undefined, bound unverifiable".into(),
            );
        }
    }
    report.push(
        "strength.gamma_nonnegative",
        p.gamma >= 0.0,
        format!("gamma = {}", p.gamma),
    );
    report
}

/// Result of a sampling certification run. `worst_violation` is signed:
/// positive means the defining inequality was broken by that much, negative
/// is the smallest observed margin.
#[derive(Clone, Debug)]
pub struct CertReport {
    pub certificate: Certificate,
    pub passed: bool,
    pub worst_violation: f64,
    pub samples: usize,
}

impl CertReport {
    fn from_violations(
        certificate: Certificate,
        violations: impl Iterator<Item = f64>,
        tol: f64,
    ) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut samples = 0;
        for v in violations {
            worst = worst.max(v);
            samples += 1;
        }
        assert!(samples >= 1, "certification needs at least one sample");
        CertReport {
            certificate,
            passed: worst <= tol,
            worst_violation: worst,
            samples,
        }
    }
}

fn certificate_violation(cert: &Certificate, dx: &Vector, dfx: &Vector) -> f64 {
    match cert {
        Certificate::Ism { modulus } => modulus * dfx.inner(dfx) - dfx.inner(dx),
        Certificate::Lipschitz { constant } => dfx.norm() - constant * dx.norm(),
        Certificate::StronglyMonotone { modulus } => modulus * dx.inner(dx) - dfx.inner(dx),
        Certificate::Nonexpansive => dfx.norm() - dx.norm(),
    }
}

/// Check one defining inequality over `n_samples` seeded pairs drawn from
/// the sampler's box.
pub fn certify(
    op: &CertifiedOperator,
    cert: Certificate,
    sampler: &Sampler,
    n_samples: usize,
    tol: f64,
) -> CertReport {
    assert!(n_samples >= 1);
    let violations = sampler.pairs(n_samples).into_iter().map(|(x, y)| {
        let dx = &x - &y;
        let dfx = &op.apply(&x) - &op.apply(&y);
        certificate_violation(&cert, &dx, &dfx)
    });
    CertReport::from_violations(cert, violations, tol)
}

/// Certify every declared certificate of an operator.
pub fn certify_declared(
    op: &CertifiedOperator,
    sampler: &Sampler,
    n_samples: usize,
    tol: f64,
) -> Vec<CertReport> {
    op.certificates()
        .to_list()
        .into_iter()
        .map(|c| certify(op, c, sampler, n_samples, tol))
        .collect()
}

/// Strong monotonicity of the combined map mu F - rho V with coefficient
/// mu eta - rho gamma.
pub fn composite_strong_monotonicity_check(
    f_op: &CertifiedOperator,
    v_op: &CertifiedOperator,
    p: &StrengthParams,
    sampler: &Sampler,
    n_samples: usize,
    tol: f64,
) -> CertReport {
    assert!(n_samples >= 1);
    let coefficient = p.mu * p.eta - p.rho * p.gamma;
    let cert = Certificate::StronglyMonotone {
        modulus: coefficient,
    };
    let violations = sampler.pairs(n_samples).into_iter().map(|(x, y)| {
        let dx = &x - &y;
        let gx = f_op.apply(&x).scale(p.mu).axpy(-p.rho, &v_op.apply(&x));
        let gy = f_op.apply(&y).scale(p.mu).axpy(-p.rho, &v_op.apply(&y));
        let dg = &gx - &gy;
        coefficient * dx.inner(&dx) - dg.inner(&dx)
    });
    CertReport::from_violations(cert, violations, tol)
}

/// Contraction bound || (I - lambda mu F)x - (I - lambda mu F)y || <=
/// (1 - lambda nu) ||x - y||.
pub fn contraction_factor_check(
    f_op: &CertifiedOperator,
    lambda: f64,
    p: &StrengthParams,
    sampler: &Sampler,
    n_samples: usize,
    tol: f64,
) -> Result<CertReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::StrengthDomain(format!(
            "lambda must lie in (0,1), got {lambda}"
        )));
    }
    assert!(n_samples >= 1);
    let nu = p.nu()?;
    let factor = 1.0 - lambda * nu;
    let cert = Certificate::Lipschitz { constant: factor };
    let violations = sampler.pairs(n_samples).into_iter().map(|(x, y)| {
        let gx = x.axpy(-lambda * p.mu, &f_op.apply(&x));
        let gy = y.axpy(-lambda * p.mu, &f_op.apply(&y));
        (&gx - &gy).norm() - factor * (&x - &y).norm()
    });
    Ok(CertReport::from_violations(cert, violations, tol))
}

/// Valid ism modulus 1 / lambda_max(M) for the linear map of a symmetric
/// positive semidefinite nonzero matrix.
pub fn derive_ism_from_psd(m: &LinearMap) -> Result<f64> {
    let eigs = m.sym_eigenvalues()?;
    let lam_min = *eigs.first().unwrap();
    let lam_max = *eigs.last().unwrap();
    if lam_min < -1e-10 * lam_max.abs().max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: lam_min,
        });
    }
    if lam_max <= 0.0 {
        return Err(Error::NotPsd {
            min_eigenvalue: lam_min,
        });
    }
    Ok(1.0 / lam_max)
}

/// Nearly nonexpansive bound of an iterate oracle over seeded pairs, plus a
/// self-map check against the feasible set when one is supplied.
pub fn certify_iterates(
    oracle: &IterateOracle,
    set: Option<&ConvexSet>,
    sampler: &Sampler,
    powers: &[u32],
    n_pairs: usize,
    tol: f64,
) -> CertReport {
    assert!(n_pairs >= 1 && !powers.is_empty());
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for &n in powers {
        let a_n = oracle.near_bound(n);
        for (x, y) in sampler.pairs(n_pairs) {
            let (x, y) = match set {
                Some(c) => (
                    c.project(&x).expect("sampler projection"),
                    c.project(&y).expect("sampler projection"),
                ),
                None => (x, y),
            };
            let tx = oracle.power(n, &x);
            let ty = oracle.power(n, &y);
            let mut violation = tx.dist(&ty) - x.dist(&y) - a_n;
            if let Some(c) = set {
                violation = violation.max(c.violation(&tx)).max(c.violation(&ty));
            }
            worst = worst.max(violation);
            samples += 1;
        }
    }
    CertReport {
        certificate: Certificate::Nonexpansive,
        passed: worst <= tol,
        worst_violation: worst,
        samples,
    }
}
