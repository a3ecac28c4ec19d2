//! Finite-dimensional realization of the ambient real Hilbert space:
//! dense vectors with the Euclidean inner product, and square dense maps.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Element of the ambient space. Coordinates are finite 64-bit reals and the
/// dimension is fixed within one problem instance.
#[derive(Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vector({:?})", self.coords)
    }
}

impl Vector {
    /// Validating constructor: at least one coordinate, all finite.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector coordinates",
            });
        }
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Self {
            coords: vec![value; dim],
        }
    }

    /// Trusted constructor for arithmetic results; finiteness is re-checked
    /// by the iteration loop, not here.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Euclidean inner product. Panics on dimension mismatch.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "inner product requires equal dimensions ({} vs {})",
            self.dim(),
            other.dim()
        );
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.coords.iter().map(|a| c * a).collect())
    }

    /// self + c * other
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "axpy requires equal dimensions");
        Self::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "addition requires equal dimensions");
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "subtraction requires equal dimensions"
        );
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, c: f64) -> Vector {
        self.scale(c)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

/// Dense square real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct LinearMap {
    dim: usize,
    entries: Vec<f64>,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap(dim = {})", self.dim)
    }
}

impl LinearMap {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidSet("matrix must be at least 1x1".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::InvalidSet(format!(
                    "matrix must be square; got a row of length {} in a {}-row matrix",
                    row.len(),
                    dim
                )));
            }
            entries.extend_from_slice(row);
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix entries",
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1);
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty());
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.iter().enumerate() {
            m.entries[i * dim + i] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub(crate) fn set_entry(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.dim + j] = v;
    }

    /// Matrix-vector product. Panics on dimension mismatch.
    pub fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(
            self.dim,
            x.dim(),
            "matrix of dimension {} applied to vector of dimension {}",
            self.dim,
            x.dim()
        );
        let xs = x.as_slice();
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            out.push(row.iter().zip(xs).map(|(a, b)| a * b).sum());
        }
        Vector::from_raw(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| c * e).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set_entry(j, i, self.entry(i, j));
            }
        }
        t
    }

    /// A^T A; symmetric PSD for any A.
    pub fn gram(&self) -> Self {
        let n = self.dim;
        let mut g = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.entry(k, i) * self.entry(k, j);
                }
                g.set_entry(i, j, s);
            }
        }
        g
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    /// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation
    /// method, ascending. Errors if the matrix is visibly asymmetric.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        let scale = self.entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let asym = self.max_asymmetry();
        if asym > 1e-10 * scale.max(1.0) {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym,
            });
        }
        let n = self.dim;
        let mut a = self.entries.clone();
        // symmetrize to kill roundoff-level asymmetry
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = avg;
                a[j * n + i] = avg;
            }
        }
        let off = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
            s.sqrt()
        };
        let frob = (a.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1e-300);
        for _sweep in 0..100 {
            if off(&a) <= 1e-14 * frob {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(eigs)
    }

    /// Largest eigenvalue of a symmetric matrix.
    pub fn sym_max_eigenvalue(&self) -> Result<f64> {
        Ok(*self
            .sym_eigenvalues()?
            .last()
            .expect("matrix has at least one eigenvalue"))
    }

    /// Spectral norm (largest singular value), valid for any square matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.gram()
            .sym_max_eigenvalue()
            .expect("gram matrix is symmetric by construction")
            .max(0.0)
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_orthogonal_axes() {
        let x = Vector::new(vec![1.0, 0.0]).unwrap();
        let y = Vector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(x.inner(&y), 0.0);
    }

    #[test]
    fn inner_hand_sum() {
        let x = Vector::new(vec![1.0, 2.0]).unwrap();
        let y = Vector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(x.inner(&y), 11.0);
    }

    #[test]
    fn norm_three_four_five() {
        let x = Vector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(x.norm(), 5.0);
    }

    #[test]
    fn norm_zero() {
        assert_eq!(Vector::zeros(3).norm(), 0.0);
    }

    #[test]
    fn apply_identity() {
        let x = Vector::new(vec![5.0, -2.0]).unwrap();
        assert_eq!(LinearMap::identity(2).apply(&x), x);
    }

    #[test]
    fn apply_zero_matrix() {
        let x = Vector::new(vec![5.0, -2.0]).unwrap();
        assert_eq!(LinearMap::zeros(2).apply(&x), Vector::zeros(2));
    }

    #[test]
    fn apply_coordinate_swap() {
        let m = LinearMap::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = Vector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(m.apply(&x), Vector::new(vec![2.0, 1.0]).unwrap());
    }

    #[test]
    #[should_panic(expected = "equal dimensions")]
    fn inner_dimension_mismatch_panics() {
        let x = Vector::zeros(2);
        let y = Vector::zeros(3);
        let _ = x.inner(&y);
    }

    #[test]
    #[should_panic(expected = "applied to vector")]
    fn apply_dimension_mismatch_panics() {
        let _ = LinearMap::identity(2).apply(&Vector::zeros(3));
    }

    #[test]
    fn constructor_rejects_nan_and_empty() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn jacobi_diagonal_eigenvalues() {
        let m = LinearMap::diagonal(&[4.0, 1.0, 2.5]);
        let eigs = m.sym_eigenvalues().unwrap();
        assert_eq!(eigs, vec![1.0, 2.5, 4.0]);
    }

    #[test]
    fn jacobi_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = LinearMap::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = m.sym_eigenvalues().unwrap();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let m = LinearMap::from_rows(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(m.sym_eigenvalues().is_err());
    }

    #[test]
    fn spectral_norm_of_rotation_is_one() {
        let m = LinearMap::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!((m.spectral_norm() - 1.0).abs() < 1e-12);
    }
}
