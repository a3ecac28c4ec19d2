//! Convex-set descriptors with exact metric projections.
//!
//! Every primitive carries a closed-form nearest-point map; intersections
//! are projected by cyclic alternating projection with increments (Dykstra),
//! run to a tight tolerance so downstream iterations can treat the result
//! as exact.

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Tolerance for the alternating-projection loop on intersections.
/// Exceeding the cycle cap is an error, never a silent approximation.
pub const PROJECTION_TOL: f64 = 1e-10;
const DYKSTRA_MAX_CYCLES: usize = 10_000;

/// Nonempty closed convex subset of the ambient space.
#[derive(Clone, Debug)]
pub enum ConvexSet {
    WholeSpace {
        dim: usize,
    },
    Box {
        lo: Vector,
        hi: Vector,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    /// { x : <normal, x> <= offset }
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    /// { x : <normal, x> = offset }
    Hyperplane {
        normal: Vector,
        offset: f64,
    },
    /// { x : x >= 0, sum x = scale }
    Simplex {
        dim: usize,
        scale: f64,
    },
    /// Intersection of primitives, declared nonempty and probed at
    /// construction.
    Intersection {
        members: Vec<ConvexSet>,
    },
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be >= 1".into()));
        }
        Ok(ConvexSet::WholeSpace { dim })
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::InvalidSet(
                "box bounds have different dimensions".into(),
            ));
        }
        if lo.as_slice().iter().zip(hi.as_slice()).any(|(l, h)| l > h) {
            return Err(Error::InvalidSet(
                "box requires lo <= hi componentwise".into(),
            ));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    /// Axis-aligned box [lo, hi]^dim with scalar bounds.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::filled(dim, lo), Vector::filled(dim, hi))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidSet(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::InvalidSet("halfspace normal must be nonzero".into()));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::InvalidSet(
                "hyperplane normal must be nonzero".into(),
            ));
        }
        Ok(ConvexSet::Hyperplane { normal, offset })
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be >= 1".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidSet(format!(
                "simplex scale must be positive, got {scale}"
            )));
        }
        Ok(ConvexSet::Simplex { dim, scale })
    }

    /// Members must be primitives. Nonemptiness is probed by running the
    /// alternating projection from the origin and checking membership of
    /// the limit in every member.
    pub fn intersection(members: Vec<ConvexSet>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidSet(
                "intersection needs at least one member".into(),
            ));
        }
        if members
            .iter()
            .any(|m| matches!(m, ConvexSet::Intersection { .. }))
        {
            return Err(Error::InvalidSet(
                "intersection members must be primitives".into(),
            ));
        }
        let dim = members[0].dim();
        if members.iter().any(|m| m.dim() != dim) {
            return Err(Error::InvalidSet(
                "intersection members have mixed dimensions".into(),
            ));
        }
        let set = ConvexSet::Intersection { members };
        // feasibility probe
        let probe = set.project(&Vector::zeros(dim)).map_err(|e| {
            Error::InfeasibleIntersection(format!("alternating projection did not settle ({e})"))
        })?;
        if let ConvexSet::Intersection { members } = &set {
            for (i, m) in members.iter().enumerate() {
                if !m.contains(&probe, 1e-6) {
                    return Err(Error::InfeasibleIntersection(format!(
                        "probe point violates member {i} by {:.3e}",
                        m.violation(&probe)
                    )));
                }
            }
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::WholeSpace { dim } => *dim,
            ConvexSet::Box { lo, .. } => lo.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { normal, .. } => normal.dim(),
            ConvexSet::Hyperplane { normal, .. } => normal.dim(),
            ConvexSet::Simplex { dim, .. } => *dim,
            ConvexSet::Intersection { members } => members[0].dim(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::WholeSpace { .. }
            | ConvexSet::Halfspace { .. }
            | ConvexSet::Hyperplane { .. } => false,
            ConvexSet::Box { .. } | ConvexSet::Ball { .. } | ConvexSet::Simplex { .. } => true,
            ConvexSet::Intersection { members } => members.iter().any(|m| m.is_bounded()),
        }
    }

    /// Axis-aligned bounding box, `None` when the set is unbounded.
    pub fn bounding_box(&self) -> Option<(Vector, Vector)> {
        match self {
            ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexSet::Ball { center, radius } => {
                let r = Vector::filled(center.dim(), *radius);
                Some((center - &r, center + &r))
            }
            ConvexSet::Simplex { dim, scale } => {
                Some((Vector::zeros(*dim), Vector::filled(*dim, *scale)))
            }
            ConvexSet::Intersection { members } => {
                // intersect the boxes of bounded members
                let mut acc: Option<(Vector, Vector)> = None;
                for m in members {
                    if let Some((lo, hi)) = m.bounding_box() {
                        acc = Some(match acc {
                            None => (lo, hi),
                            Some((alo, ahi)) => {
                                let nlo = Vector::from_raw(
                                    alo.as_slice()
                                        .iter()
                                        .zip(lo.as_slice())
                                        .map(|(a, b)| a.max(*b))
                                        .collect(),
                                );
                                let nhi = Vector::from_raw(
                                    ahi.as_slice()
                                        .iter()
                                        .zip(hi.as_slice())
                                        .map(|(a, b)| a.min(*b))
                                        .collect(),
                                );
                                (nlo, nhi)
                            }
                        });
                    }
                }
                acc
            }
            _ => None,
        }
    }

    /// Signed constraint violation in distance units: positive outside,
    /// non-positive inside, strictly negative strictly inside (for sets
    /// with interior). `-inf` for the whole space.
    pub fn violation(&self, x: &Vector) -> f64 {
        assert_eq!(self.dim(), x.dim(), "violation: dimension mismatch");
        match self {
            ConvexSet::WholeSpace { .. } => f64::NEG_INFINITY,
            ConvexSet::Box { lo, hi } => x
                .as_slice()
                .iter()
                .zip(lo.as_slice().iter().zip(hi.as_slice()))
                .map(|(xi, (l, h))| (l - xi).max(xi - h))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexSet::Ball { center, radius } => x.dist(center) - radius,
            ConvexSet::Halfspace { normal, offset } => (normal.inner(x) - offset) / normal.norm(),
            ConvexSet::Hyperplane { normal, offset } => {
                (normal.inner(x) - offset).abs() / normal.norm()
            }
            ConvexSet::Simplex { scale, .. } => {
                let nonneg = x
                    .as_slice()
                    .iter()
                    .map(|xi| -xi)
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = x.as_slice().iter().sum();
                nonneg.max((sum - scale).abs())
            }
            ConvexSet::Intersection { members } => members
                .iter()
                .map(|m| m.violation(x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// True iff every defining inequality holds within `tol` (distance units).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        self.violation(x) <= tol
    }

    /// Nearest point of the set. Closed-form for primitives; alternating
    /// projection for intersections (the only fallible case).
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        assert_eq!(self.dim(), x.dim(), "project: dimension mismatch");
        Ok(match self {
            ConvexSet::WholeSpace { .. } => x.clone(),
            ConvexSet::Box { lo, hi } => Vector::from_raw(
                x.as_slice()
                    .iter()
                    .zip(lo.as_slice().iter().zip(hi.as_slice()))
                    .map(|(xi, (l, h))| xi.max(*l).min(*h))
                    .collect(),
            ),
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let dist = d.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / dist, &d)
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.inner(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / normal.inner(normal), normal)
                }
            }
            ConvexSet::Hyperplane { normal, offset } => {
                let excess = normal.inner(x) - offset;
                x.axpy(-excess / normal.inner(normal), normal)
            }
            ConvexSet::Simplex { scale, .. } => project_simplex(x, *scale),
            ConvexSet::Intersection { members } => dykstra(members, x)?,
        })
    }
}

/// Sort-and-threshold projection onto { y >= 0, sum y = scale }.
fn project_simplex(x: &Vector, scale: f64) -> Vector {
    let mut sorted: Vec<f64> = x.as_slice().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - scale) / (j as f64 + 1.0);
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    Vector::from_raw(x.as_slice().iter().map(|xi| (xi - tau).max(0.0)).collect())
}

/// Boyle-Dykstra cyclic projection with increments. Converges to the exact
/// projection when the intersection is nonempty.
fn dykstra(members: &[ConvexSet], x0: &Vector) -> Result<Vector> {
    let mut x = x0.clone();
    let mut increments = vec![Vector::zeros(x0.dim()); members.len()];
    let mut last_change = f64::INFINITY;
    for _cycle in 0..DYKSTRA_MAX_CYCLES {
        let cycle_start = x.clone();
        for (member, p) in members.iter().zip(increments.iter_mut()) {
            let shifted = &x + p;
            let projected = member.project(&shifted)?;
            *p = &shifted - &projected;
            x = projected;
        }
        last_change = x.dist(&cycle_start);
        if last_change <= PROJECTION_TOL {
            return Ok(x);
        }
    }
    Err(Error::ProjectionIterationExceeded {
        iterations: DYKSTRA_MAX_CYCLES,
        change: last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(coords: &[f64]) -> Vector {
        Vector::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn box_clamp() {
        let set = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(set.project(&v(&[2.0, -1.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn ball_radial_scaling() {
        let set = ConvexSet::ball(Vector::zeros(2), 1.0).unwrap();
        let p = set.project(&v(&[3.0, 4.0])).unwrap();
        assert!(p.dist(&v(&[0.6, 0.8])) < 1e-15);
    }

    #[test]
    fn halfspace_subtracts_positive_part() {
        let set = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert_eq!(set.project(&v(&[2.0, 3.0])).unwrap(), v(&[0.0, 3.0]));
    }

    #[test]
    fn members_are_fixed_points() {
        let sets = [
            ConvexSet::cube(3, -1.0, 2.0).unwrap(),
            ConvexSet::ball(v(&[0.5, 0.5, 0.0]), 2.0).unwrap(),
            ConvexSet::halfspace(v(&[1.0, 1.0, 1.0]), 5.0).unwrap(),
            ConvexSet::whole_space(3).unwrap(),
        ];
        let inside = v(&[0.25, 0.5, 0.0]);
        for set in &sets {
            assert_eq!(set.project(&inside).unwrap(), inside, "{set:?}");
        }
    }

    #[test]
    fn hyperplane_projection() {
        // <(1,1), x> = 2, project (3,3) -> (1,1)
        let set = ConvexSet::hyperplane(v(&[1.0, 1.0]), 2.0).unwrap();
        let p = set.project(&v(&[3.0, 3.0])).unwrap();
        assert!(p.dist(&v(&[1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn simplex_projection_known_point() {
        // project (1,0) onto the unit simplex in 2-D: already on it
        let set = ConvexSet::simplex(2, 1.0).unwrap();
        let p = set.project(&v(&[1.0, 0.0])).unwrap();
        assert!(p.dist(&v(&[1.0, 0.0])) < 1e-12);
        // project (1,1): by symmetry (0.5, 0.5)
        let q = set.project(&v(&[1.0, 1.0])).unwrap();
        assert!(q.dist(&v(&[0.5, 0.5])) < 1e-12);
        // a far point with a negative coordinate
        let w = set.project(&v(&[2.0, -1.0])).unwrap();
        assert!(w.dist(&v(&[1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn contains_examples() {
        let unit = ConvexSet::cube(1, 0.0, 1.0).unwrap();
        assert!(unit.contains(&v(&[0.5]), 0.0));
        assert!(!unit.contains(&v(&[1.0000001]), 1e-9));
        let ball = ConvexSet::ball(Vector::zeros(2), 1.0).unwrap();
        assert!(ball.contains(&v(&[1.0, 0.0]), 0.0));
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(ConvexSet::halfspace(Vector::zeros(2), 1.0).is_err());
        assert!(ConvexSet::hyperplane(Vector::zeros(2), 1.0).is_err());
    }

    #[test]
    fn bad_box_rejected() {
        assert!(ConvexSet::boxed(v(&[1.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn intersection_probe_accepts_feasible() {
        let set = ConvexSet::intersection(vec![
            ConvexSet::cube(2, 0.0, 2.0).unwrap(),
            ConvexSet::ball(Vector::zeros(2), 1.5).unwrap(),
        ])
        .unwrap();
        let p = set.project(&v(&[3.0, 3.0])).unwrap();
        assert!(set.contains(&p, 1e-6));
    }

    #[test]
    fn intersection_probe_rejects_empty() {
        let err = ConvexSet::intersection(vec![
            ConvexSet::cube(1, 0.0, 1.0).unwrap(),
            ConvexSet::cube(1, 2.0, 3.0).unwrap(),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn intersection_rejects_nested() {
        let inner = ConvexSet::intersection(vec![ConvexSet::cube(1, 0.0, 1.0).unwrap()]).unwrap();
        assert!(ConvexSet::intersection(vec![inner]).is_err());
    }

    #[test]
    fn dykstra_matches_closed_form_box_halfspace() {
        // box [0,1]^2 with halfspace x+y <= 1: projection of (1,1) is (0.5,0.5)
        let set = ConvexSet::intersection(vec![
            ConvexSet::cube(2, 0.0, 1.0).unwrap(),
            ConvexSet::halfspace(v(&[1.0, 1.0]), 1.0).unwrap(),
        ])
        .unwrap();
        let p = set.project(&v(&[1.0, 1.0])).unwrap();
        assert!(p.dist(&v(&[0.5, 0.5])) < 1e-8, "{p:?}");
    }
}
