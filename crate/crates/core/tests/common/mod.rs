//! Shared oracles for the integration suites. Everything here is written
//! independently of the library's implementation paths so tests cross-check
//! rather than echo.
#![allow(dead_code)] // each test target uses a subset

use tripoint::{LinearMap, Vector};

pub fn v(coords: &[f64]) -> Vector {
    Vector::new(coords.to_vec()).unwrap()
}

/// Largest eigenvalue of a symmetric PSD matrix by plain power iteration
/// (independent of the library's Jacobi path).
pub fn power_iteration_lambda_max(m: &LinearMap, iters: usize) -> f64 {
    let dim = m.dim();
    let mut x = Vector::new((0..dim).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = m.apply(&x);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = x.inner(&y) / x.inner(&x);
        x = y.scale(1.0 / norm);
    }
    lambda
}

/// Componentwise clamp onto a cube, written directly.
pub fn clamp_cube(x: &Vector, lo: f64, hi: f64) -> Vector {
    Vector::new(x.as_slice().iter().map(|c| c.max(lo).min(hi)).collect()).unwrap()
}

/// Independent single-loop reference for the selection recursion
/// x_{n+1} = P_C[(1 - alpha_n) x_n + alpha_n * rho * v] on a cube, with
/// alpha_n = 1/(n+1).
pub fn selection_reference(
    x1: &Vector,
    rho_v: &Vector,
    lo: f64,
    hi: f64,
    iters: u32,
) -> Vec<Vector> {
    let mut xs = vec![x1.clone()];
    let mut x = x1.clone();
    for n in 1..=iters {
        let alpha = 1.0 / (n as f64 + 1.0);
        let mixed = Vector::new(
            x.as_slice()
                .iter()
                .zip(rho_v.as_slice())
                .map(|(xi, ti)| (1.0 - alpha) * xi + alpha * ti)
                .collect(),
        )
        .unwrap();
        x = clamp_cube(&mixed, lo, hi);
        xs.push(x.clone());
    }
    xs
}

/// Independently coded stationary damped-target loop
/// x_{n+1} = P_C[alpha_n rho V x_n + T x_n - alpha_n mu F(T x_n)].
#[allow(clippy::too_many_arguments)]
pub fn stationary_reference<T, Vm, F>(
    x1: &Vector,
    iters: u32,
    alpha: impl Fn(u32) -> f64,
    rho: f64,
    mu: f64,
    t_map: T,
    v_map: Vm,
    f_map: F,
    project: impl Fn(&Vector) -> Vector,
) -> Vec<Vector>
where
    T: Fn(&Vector) -> Vector,
    Vm: Fn(&Vector) -> Vector,
    F: Fn(&Vector) -> Vector,
{
    let mut xs = vec![x1.clone()];
    let mut x = x1.clone();
    for n in 1..=iters {
        let a = alpha(n);
        let w = t_map(&x);
        let t = &v_map(&x).scale(a * rho) + &w.axpy(-a * mu, &f_map(&w));
        x = project(&t);
        xs.push(x.clone());
    }
    xs
}
