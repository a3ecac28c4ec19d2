//! Equilibrium bifunctions, convex penalty functions, and the resolvent
//! map T_r that turns the mixed equilibrium subproblem into a computable
//! single-valued firmly nonexpansive operator.
//!
//! For a bifunction represented as G(z, y) = <g(z), y - z> the default
//! inner solver is the frozen-argument proximal fixed point
//!
//!   z_{k+1} = argmin_{y in C}  phi(y) + <g(z_k), y> + (1/2r) ||y - x||^2,
//!
//! iterated until ||z_{k+1} - z_k|| <= tol. That loop contracts with factor
//! r * Lip(g), so construction rejects specifications where the factor
//! reaches 0.9 unless the projected-gradient inner solver is configured;
//! the latter exploits the (1/r)-strong monotonicity of the proximal term
//! and converges for every admissible radius. Each argmin is closed-form
//! for phi = 0 and solved by projected gradient with stepsize
//! 1/(lambda_max(Q) + 1/r) for quadratic phi.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{LinearMap, Vector};
use crate::ops::CertifiedOperator;
use crate::sets::ConvexSet;

/// Contraction factor at which the frozen-argument loop is rejected.
const MAX_FROZEN_CONTRACTION: f64 = 0.9;

type BifunctionFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

/// Equilibrium bifunction G: C x C -> R. The structured variants satisfy
/// condition (A1) (G(x, x) = 0) exactly; monotonicity and the remaining
/// conditions are declared, and sampled where a check is possible.
#[derive(Clone)]
pub enum BifunctionSpec {
    Zero,
    /// G(z, y) = <g(z), y - z>. Monotone iff g is monotone; `monotone`
    /// records the declaration.
    LinearRepresentable {
        g: CertifiedOperator,
        monotone: bool,
    },
    /// Black-box bifunction. No inner solver exists for it; it participates
    /// only in violation checks over its probe grid.
    Custom {
        callback: BifunctionFn,
        declared_a1_a4: bool,
        probe_grid: Vec<Vector>,
    },
}

impl fmt::Debug for BifunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BifunctionSpec::Zero => write!(f, "BifunctionSpec::Zero"),
            BifunctionSpec::LinearRepresentable { g, monotone } => {
                write!(
                    f,
                    "BifunctionSpec::LinearRepresentable({g:?}, monotone = {monotone})"
                )
            }
            BifunctionSpec::Custom {
                declared_a1_a4,
                probe_grid,
                ..
            } => write!(
                f,
                "BifunctionSpec::Custom(declared = {declared_a1_a4}, probes = {})",
                probe_grid.len()
            ),
        }
    }
}

impl BifunctionSpec {
    pub fn linear(g: CertifiedOperator) -> Self {
        // g monotone iff it carries a nonnegative monotonicity modulus
        let monotone = g.strong_monotonicity().map(|m| m >= 0.0).unwrap_or(false);
        BifunctionSpec::LinearRepresentable { g, monotone }
    }

    pub fn value(&self, z: &Vector, y: &Vector) -> f64 {
        match self {
            BifunctionSpec::Zero => 0.0,
            BifunctionSpec::LinearRepresentable { g, .. } => g.apply(z).inner(&(y - z)),
            BifunctionSpec::Custom { callback, .. } => callback(z, y),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BifunctionSpec::Zero)
    }

    /// Sampled check of the equilibrium conditions that admit one:
    /// G(x, x) = 0 and G(x, y) + G(y, x) <= 0 over seeded pairs projected
    /// onto the set. Returns the worst violation (nonpositive when clean).
    pub fn check_equilibrium_conditions(
        &self,
        set: &ConvexSet,
        sampler: &crate::sampling::Sampler,
        n_samples: usize,
        tol: f64,
    ) -> Result<f64> {
        assert!(n_samples >= 1);
        let mut worst = f64::NEG_INFINITY;
        for (x, y) in sampler.pairs(n_samples) {
            let x = set.project(&x)?;
            let y = set.project(&y)?;
            let diagonal = self.value(&x, &x).abs();
            let monotone = self.value(&x, &y) + self.value(&y, &x);
            worst = worst.max(diagonal).max(monotone);
        }
        if worst > tol {
            return Err(Error::InvalidResolventSpec(format!(
                "equilibrium conditions violated by {worst:.3e} on samples"
            )));
        }
        Ok(worst)
    }
}

/// Proper convex penalty phi. Quadratic curvature matrices are checked for
/// symmetry and positive semidefiniteness at construction, and the gradient
/// Lipschitz constant is cached for the inner stepsize.
#[derive(Clone, Debug)]
pub enum ConvexFnSpec {
    Zero,
    Quadratic(QuadraticFn),
}

#[derive(Clone, Debug)]
pub struct QuadraticFn {
    curvature: LinearMap,
    slope: Vector,
    lip_grad: f64,
}

impl ConvexFnSpec {
    /// phi(y) = 0.5 <Q y, y> + <q, y> with symmetric PSD Q.
    pub fn quadratic(curvature: LinearMap, slope: Vector) -> Result<Self> {
        if curvature.dim() != slope.dim() {
            return Err(Error::InvalidResolventSpec(
                "quadratic penalty: matrix and slope dimensions differ".into(),
            ));
        }
        let eigs = curvature.sym_eigenvalues()?;
        let lam_min = *eigs.first().unwrap();
        let lam_max = *eigs.last().unwrap();
        if lam_min < -1e-10 * lam_max.abs().max(1.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: lam_min,
            });
        }
        Ok(ConvexFnSpec::Quadratic(QuadraticFn {
            curvature,
            slope,
            lip_grad: lam_max.max(0.0),
        }))
    }

    pub fn value(&self, y: &Vector) -> f64 {
        match self {
            ConvexFnSpec::Zero => 0.0,
            ConvexFnSpec::Quadratic(q) => 0.5 * q.curvature.apply(y).inner(y) + q.slope.inner(y),
        }
    }

    fn grad(&self, y: &Vector) -> Vector {
        match self {
            ConvexFnSpec::Zero => Vector::zeros(y.dim()),
            ConvexFnSpec::Quadratic(q) => &q.curvature.apply(y) + &q.slope,
        }
    }

    fn lip_grad(&self) -> f64 {
        match self {
            ConvexFnSpec::Zero => 0.0,
            ConvexFnSpec::Quadratic(q) => q.lip_grad,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ConvexFnSpec::Zero)
    }
}

/// Inner iteration used to evaluate the resolvent of a linear-representable
/// bifunction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InnerSolver {
    /// Picard iteration on the frozen-argument proximal map; contracts with
    /// factor r * Lip(g).
    #[default]
    FrozenArgument,
    /// Projected gradient on the strongly monotone variational formulation;
    /// converges for any radius.
    ProjectedGradient,
}

/// Inner-solver options for the resolvent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerOpts {
    pub tol: f64,
    pub max_iters: usize,
    pub solver: InnerSolver,
}

impl Default for InnerOpts {
    fn default() -> Self {
        InnerOpts {
            tol: 1e-11,
            max_iters: 10_000,
            solver: InnerSolver::FrozenArgument,
        }
    }
}

impl InnerOpts {
    pub fn projected_gradient() -> Self {
        InnerOpts {
            solver: InnerSolver::ProjectedGradient,
            ..Default::default()
        }
    }
}

/// Full description of the resolvent T_r of (G, phi) over C at radius r.
#[derive(Clone, Debug)]
pub struct ResolventSpec {
    bifunction: BifunctionSpec,
    phi: ConvexFnSpec,
    set: ConvexSet,
    r: f64,
    inner: InnerOpts,
}

impl ResolventSpec {
    /// Validated constructor. Requires r > 0; for linear-representable
    /// bifunctions g must carry a Lipschitz certificate, and under the
    /// frozen-argument solver the contraction factor r * Lip(g) must stay
    /// below 0.9. The feasible set must be bounded unless the caller
    /// declares the coercivity condition that guarantees nonemptiness on
    /// unbounded sets.
    pub fn new(
        bifunction: BifunctionSpec,
        phi: ConvexFnSpec,
        set: ConvexSet,
        r: f64,
        inner: InnerOpts,
        coercivity_declared: bool,
    ) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidResolventSpec(format!(
                "r must be positive, got {r}"
            )));
        }
        if let BifunctionSpec::LinearRepresentable { g, monotone } = &bifunction {
            if !monotone {
                return Err(Error::InvalidResolventSpec(
                    "linear-representable bifunction must be declared monotone".into(),
                ));
            }
            let lip = g.lipschitz().ok_or_else(|| {
                Error::InvalidResolventSpec(
                    "linear-representable bifunction needs a Lipschitz certificate on g".into(),
                )
            })?;
            let contraction = r * lip;
            if inner.solver == InnerSolver::FrozenArgument && contraction >= MAX_FROZEN_CONTRACTION
            {
                return Err(Error::InvalidResolventSpec(format!(
                    "frozen-argument iteration would contract with factor r*Lip(g) = \
                     {contraction:.3} >= {MAX_FROZEN_CONTRACTION}; configure the \
                     projected-gradient inner solver for this radius"
                )));
            }
        }
        if !set.is_bounded() && !coercivity_declared {
            return Err(Error::InvalidResolventSpec(
                "unbounded feasible set requires a declared coercivity condition".into(),
            ));
        }
        Ok(Self {
            bifunction,
            phi,
            set,
            r,
            inner,
        })
    }

    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Self::new(
            self.bifunction.clone(),
            self.phi.clone(),
            self.set.clone(),
            r,
            self.inner,
            true, // existence already vetted at first construction
        )
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn inner_opts(&self) -> InnerOpts {
        self.inner
    }

    /// T_r(x): the unique z in C with
    /// G(z, y) + phi(y) - phi(z) + (1/r) <y - z, z - x> >= 0 for all y in C.
    pub fn evaluate(&self, x: &Vector) -> Result<Vector> {
        match &self.bifunction {
            BifunctionSpec::Zero => self.prox_step(x, None),
            BifunctionSpec::LinearRepresentable { g, .. } => match self.inner.solver {
                InnerSolver::FrozenArgument => self.frozen_argument(g, x),
                InnerSolver::ProjectedGradient => self.projected_gradient_vi(g, x),
            },
            BifunctionSpec::Custom { declared_a1_a4, .. } => {
                if !declared_a1_a4 {
                    Err(Error::UndeclaredCustomBifunction)
                } else {
                    Err(Error::CustomBifunctionUnsupported)
                }
            }
        }
    }

    fn frozen_argument(&self, g: &CertifiedOperator, x: &Vector) -> Result<Vector> {
        let mut z = self.set.project(x)?;
        for _ in 0..self.inner.max_iters {
            let frozen = g.apply(&z);
            let next = self.prox_step(x, Some(&frozen))?;
            let change = next.dist(&z);
            z = next;
            if change <= self.inner.tol {
                return Ok(z);
            }
        }
        let lip = g.lipschitz().unwrap_or(f64::NAN);
        Err(Error::ResolventStalled {
            iterations: self.inner.max_iters,
            contraction: self.r * lip,
        })
    }

    /// Projected gradient on the variational form: find z in C with
    /// <h(z), y - z> >= 0 for all y in C, h(z) = g(z) + grad phi(z) +
    /// (z - x)/r. h is strongly monotone with modulus >= 1/r, so the step
    /// m / L^2 contracts regardless of the radius.
    fn projected_gradient_vi(&self, g: &CertifiedOperator, x: &Vector) -> Result<Vector> {
        let lip_g = g.lipschitz().expect("checked at construction");
        let eta_g = g.strong_monotonicity().unwrap_or(0.0).max(0.0);
        let m = 1.0 / self.r + eta_g;
        let l = lip_g + self.phi.lip_grad() + 1.0 / self.r;
        let step = m / (l * l);
        let mut z = self.set.project(x)?;
        for _ in 0..self.inner.max_iters {
            let mut h = g.apply(&z);
            h = &h + &self.phi.grad(&z);
            h = h.axpy(1.0 / self.r, &(&z - x));
            let next = self.set.project(&z.axpy(-step, &h))?;
            let change = next.dist(&z);
            z = next;
            if change <= self.inner.tol {
                return Ok(z);
            }
        }
        Err(Error::ResolventStalled {
            iterations: self.inner.max_iters,
            contraction: self.r * lip_g,
        })
    }

    /// argmin over C of phi(y) + <c, y> + (1/2r) ||y - x||^2.
    fn prox_step(&self, x: &Vector, linear_term: Option<&Vector>) -> Result<Vector> {
        match &self.phi {
            ConvexFnSpec::Zero => {
                // objective = (1/2r) ||y - (x - r c)||^2 + const
                let target = match linear_term {
                    Some(c) => x.axpy(-self.r, c),
                    None => x.clone(),
                };
                self.set.project(&target)
            }
            ConvexFnSpec::Quadratic(q) => {
                // projected gradient on a strongly convex quadratic
                let step = 1.0 / (q.lip_grad + 1.0 / self.r);
                let mut y = self.set.project(x)?;
                for _ in 0..self.inner.max_iters {
                    let mut grad = &q.curvature.apply(&y) + &q.slope;
                    if let Some(c) = linear_term {
                        grad = &grad + c;
                    }
                    grad = grad.axpy(1.0 / self.r, &(&y - x));
                    let next = self.set.project(&y.axpy(-step, &grad))?;
                    let change = next.dist(&y);
                    y = next;
                    if change <= self.inner.tol {
                        return Ok(y);
                    }
                }
                Err(Error::ResolventStalled {
                    iterations: self.inner.max_iters,
                    contraction: f64::NAN,
                })
            }
        }
    }

    /// Largest violation of the defining inequality of z = T_r(x) over the
    /// probe points: max over y of the negative part of
    /// G(z, y) + phi(y) - phi(z) + (1/r) <y - z, z - x>. Zero means no
    /// violation detected. Probes must belong to C.
    pub fn violation(&self, x: &Vector, z: &Vector, probe_ys: &[Vector]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let phi_z = self.phi.value(z);
        for y in probe_ys {
            if !self.set.contains(y, 1e-8) {
                return Err(Error::ProbeOutsideSet);
            }
            let lhs = self.bifunction.value(z, y) + self.phi.value(y) - phi_z
                + (y - z).inner(&(z - x)) / self.r;
            worst = worst.max(-lhs);
        }
        Ok(worst)
    }

    /// Violation over the probe grid a custom bifunction carries; falls
    /// back to the box corners of bounded sets for structured variants.
    pub fn violation_on_probe_grid(&self, x: &Vector, z: &Vector) -> Result<f64> {
        let grid: Vec<Vector> = match &self.bifunction {
            BifunctionSpec::Custom { probe_grid, .. } => probe_grid.clone(),
            _ => match self.set.bounding_box() {
                Some((lo, hi)) => {
                    let mut pts = vec![self.set.project(&lo)?, self.set.project(&hi)?];
                    pts.push(self.set.project(&(&lo + &hi).scale(0.5))?);
                    pts
                }
                None => Vec::new(),
            },
        };
        if grid.is_empty() {
            return Err(Error::InvalidResolventSpec(
                "no probe grid available for violation check".into(),
            ));
        }
        self.violation(x, z, &grid)
    }
}

/// Residual of the generalized mixed equilibrium problem at x:
/// || x - T_r(x - r B x) ||. Zero (up to inner tolerance) iff x solves the
/// problem for (G, phi, B). `r_probe` must lie in (0, 2 theta) where theta
/// is B's declared ism modulus.
pub fn gmep_residual(
    bifunction: &BifunctionSpec,
    phi: &ConvexFnSpec,
    b_op: &CertifiedOperator,
    set: &ConvexSet,
    r_probe: f64,
    x: &Vector,
    inner: InnerOpts,
) -> Result<f64> {
    let theta = b_op
        .ism_modulus()
        .ok_or_else(|| Error::InvalidResolventSpec("B needs a declared ism modulus".into()))?;
    if !(r_probe > 0.0 && r_probe < 2.0 * theta) {
        return Err(Error::InvalidResolventSpec(format!(
            "r_probe must lie in (0, {}), got {r_probe}",
            2.0 * theta
        )));
    }
    let spec = ResolventSpec::new(
        bifunction.clone(),
        phi.clone(),
        set.clone(),
        r_probe,
        inner,
        true,
    )?;
    let shifted = x.axpy(-r_probe, &b_op.apply(x));
    Ok(x.dist(&spec.evaluate(&shifted)?))
}
