//! JSON run configuration. Unknown keys are rejected everywhere: numeric
//! experiments must fail loudly, not silently accept a typo.
//!
//! Operators come from a fixed named registry; arbitrary code is not
//! expressible in a config file. Custom operators require library use.

use serde::{Deserialize, Serialize};
use tripoint::{
    make_selection, make_singleton, random_psd, BifunctionSpec, CertifiedOperator, ConvexFnSpec,
    ConvexSet, InnerOpts, IterateOracle, LinearMap, Problem, Schedule, SchemeConfig, SchemeVariant,
    SeqDesc, Solution, StrengthParams, Vector,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemSpec,
    /// Overrides the generator's schedule when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    pub stopping: StoppingSpec,
    pub outputs: OutputSpec,
    /// Variant pair for the `compare` subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSpec {
    pub max_iters: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub trace_path: String,
    pub summary_path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub variants: [SchemeVariant; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)] // configs are parsed once, size is irrelevant
pub enum ProblemSpec {
    /// Selection over a bounded set with constant viscosity target.
    Selection {
        dim: usize,
        set: SetSpec,
        v: Vec<f64>,
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x1: Option<Vec<f64>>,
    },
    /// Seeded instance with a single interior common solution.
    Singleton {
        dim: usize,
        set: SetSpec,
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x1: Option<Vec<f64>>,
    },
    /// Fully spelled-out configuration from the operator registry.
    Inline {
        set: SetSpec,
        #[serde(default)]
        bifunction: BifunctionCfg,
        #[serde(default)]
        phi: PhiCfg,
        operators: OperatorsCfg,
        target: TargetCfg,
        strengths: StrengthParams,
        variant: SchemeVariant,
        x1: Vec<f64>,
        /// Declares the coercivity condition permitting an unbounded set.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        coercivity_declared: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    WholeSpace { dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Simplex { dim: usize, scale: f64 },
    Intersection { members: Vec<SetSpec> },
}

/// Named operator registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero,
    Identity,
    ScaledIdentity {
        factor: f64,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    TranslationToPoint {
        point: Vec<f64>,
    },
    PsdFromSeed {
        seed: u64,
        dim: usize,
        spectral_norm: f64,
    },
    Constant {
        value: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorsCfg {
    pub vi: OperatorSpec,
    pub gmep: OperatorSpec,
    pub guide: OperatorSpec,
    pub viscosity: OperatorSpec,
    pub regularizer: OperatorSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetCfg {
    pub op: OperatorSpec,
    /// Slack sequence of the nearly nonexpansive bound (zero by default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near: Option<SeqDesc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BifunctionCfg {
    #[default]
    Zero,
    Linear {
        g: OperatorSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiCfg {
    #[default]
    Zero,
    Quadratic {
        matrix: Vec<Vec<f64>>,
        slope: Vec<f64>,
    },
}

/// Configuration shape or value errors, distinct from validation-report
/// failures (those map to their own exit code).
#[derive(Debug)]
pub struct MalformedConfig(pub String);

impl std::fmt::Display for MalformedConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "malformed config: {}", self.0)
    }
}

impl std::error::Error for MalformedConfig {}

type BuildResult<T> = Result<T, MalformedConfig>;

fn bad<T>(msg: impl Into<String>) -> BuildResult<T> {
    Err(MalformedConfig(msg.into()))
}

fn vector(coords: &[f64], what: &str) -> BuildResult<Vector> {
    Vector::new(coords.to_vec()).map_err(|e| MalformedConfig(format!("{what}: {e}")))
}

impl SetSpec {
    pub fn build(&self) -> BuildResult<ConvexSet> {
        let set = match self {
            SetSpec::WholeSpace { dim } => ConvexSet::whole_space(*dim),
            SetSpec::Box { lo, hi } => {
                ConvexSet::boxed(vector(lo, "box lo")?, vector(hi, "box hi")?)
            }
            SetSpec::Ball { center, radius } => {
                ConvexSet::ball(vector(center, "ball center")?, *radius)
            }
            SetSpec::Halfspace { normal, offset } => {
                ConvexSet::halfspace(vector(normal, "halfspace normal")?, *offset)
            }
            SetSpec::Hyperplane { normal, offset } => {
                ConvexSet::hyperplane(vector(normal, "hyperplane normal")?, *offset)
            }
            SetSpec::Simplex { dim, scale } => ConvexSet::simplex(*dim, *scale),
            SetSpec::Intersection { members } => {
                let members: BuildResult<Vec<ConvexSet>> =
                    members.iter().map(|m| m.build()).collect();
                ConvexSet::intersection(members?)
            }
        };
        set.map_err(|e| MalformedConfig(e.to_string()))
    }
}

impl OperatorSpec {
    pub fn build(&self) -> BuildResult<CertifiedOperator> {
        match self {
            OperatorSpec::Zero => Ok(CertifiedOperator::zero()),
            OperatorSpec::Identity => Ok(CertifiedOperator::identity()),
            OperatorSpec::ScaledIdentity { factor } => {
                if !factor.is_finite() {
                    return bad("scaled_identity factor must be finite");
                }
                Ok(CertifiedOperator::scaled_identity(*factor))
            }
            OperatorSpec::Affine { matrix, offset } => {
                let map = LinearMap::from_rows(matrix.clone())
                    .map_err(|e| MalformedConfig(e.to_string()))?;
                CertifiedOperator::affine(map, vector(offset, "affine offset")?)
                    .map_err(|e| MalformedConfig(e.to_string()))
            }
            OperatorSpec::TranslationToPoint { point } => Ok(CertifiedOperator::translation_to(
                vector(point, "translation point")?,
            )),
            OperatorSpec::PsdFromSeed {
                seed,
                dim,
                spectral_norm,
            } => {
                if *dim == 0 || !(*spectral_norm > 0.0) {
                    return bad("psd_from_seed needs dim >= 1 and spectral_norm > 0");
                }
                CertifiedOperator::linear(random_psd(*dim, *seed, *spectral_norm))
                    .map_err(|e| MalformedConfig(e.to_string()))
            }
            OperatorSpec::Constant { value } => Ok(CertifiedOperator::constant(vector(
                value,
                "constant value",
            )?)),
        }
    }
}

impl ProblemSpec {
    /// Build the problem; the seed feeds seeded generators.
    pub fn build(&self, seed: u64) -> BuildResult<Problem> {
        match self {
            ProblemSpec::Selection {
                dim,
                set,
                v,
                rho,
                x1,
            } => {
                let set = set.build()?;
                let mut prob = make_selection(*dim, set, vector(v, "v")?, *rho)
                    .map_err(|e| MalformedConfig(e.to_string()))?;
                if let Some(x1) = x1 {
                    prob.x1 = vector(x1, "x1")?;
                }
                Ok(prob)
            }
            ProblemSpec::Singleton { dim, set, p, x1 } => {
                let set = set.build()?;
                let mut prob = make_singleton(seed, *dim, set, vector(p, "p")?)
                    .map_err(|e| MalformedConfig(e.to_string()))?;
                if let Some(x1) = x1 {
                    prob.x1 = vector(x1, "x1")?;
                }
                Ok(prob)
            }
            ProblemSpec::Inline {
                set,
                bifunction,
                phi,
                operators,
                target,
                strengths,
                variant,
                x1,
                coercivity_declared,
            } => {
                let set = set.build()?;
                let bifunction = match bifunction {
                    BifunctionCfg::Zero => BifunctionSpec::Zero,
                    BifunctionCfg::Linear { g } => BifunctionSpec::linear(g.build()?),
                };
                let phi = match phi {
                    PhiCfg::Zero => ConvexFnSpec::Zero,
                    PhiCfg::Quadratic { matrix, slope } => {
                        let map = LinearMap::from_rows(matrix.clone())
                            .map_err(|e| MalformedConfig(e.to_string()))?;
                        ConvexFnSpec::quadratic(map, vector(slope, "phi slope")?)
                            .map_err(|e| MalformedConfig(e.to_string()))?
                    }
                };
                let target_op = target.op.build()?;
                let oracle = match &target.near {
                    None => IterateOracle::from_map(&target_op),
                    Some(seq) => {
                        let seq = *seq;
                        let op = target_op.clone();
                        IterateOracle::from_family(
                            move |n, x| {
                                let mut y = op.apply(x);
                                for _ in 1..n {
                                    y = op.apply(&y);
                                }
                                y
                            },
                            move |n| seq.value(n),
                        )
                    }
                };
                let cfg = SchemeConfig {
                    set,
                    bifunction,
                    phi,
                    vi_op: operators.vi.build()?,
                    gmep_op: operators.gmep.build()?,
                    guide: operators.guide.build()?,
                    viscosity: operators.viscosity.build()?,
                    regularizer: operators.regularizer.build()?,
                    target: oracle,
                    strengths: *strengths,
                    variant: *variant,
                    inner: InnerOpts::default(),
                    coercivity_declared: *coercivity_declared,
                };
                let ism_a = cfg
                    .effective_ism_a()
                    .map_err(|e| MalformedConfig(e.to_string()))?;
                let ism_b = cfg
                    .effective_ism_b()
                    .map_err(|e| MalformedConfig(e.to_string()))?;
                let near = target.near.unwrap_or(SeqDesc::Constant { c: 0.0 });
                let sch = Schedule::canonical(
                    if ism_a.is_finite() { ism_a } else { 1.0 },
                    if ism_b.is_finite() { ism_b } else { 1.0 },
                    near,
                );
                let x1 = vector(x1, "x1")?;
                Ok(Problem {
                    cfg,
                    sch,
                    x1,
                    solution: Solution::Unknown,
                    seed,
                })
            }
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> BuildResult<Self> {
        serde_json::from_str(text).map_err(|e| MalformedConfig(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Build the problem and apply the schedule override.
    pub fn build_problem(&self) -> BuildResult<Problem> {
        let mut prob = self.problem.build(self.seed)?;
        if let Some(sch) = self.schedule {
            prob.sch = sch;
        }
        Ok(prob)
    }
}
