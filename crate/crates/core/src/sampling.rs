//! Deterministic sampling used by certification and problem generation.
//!
//! One PRNG algorithm everywhere: ChaCha8 seeded from a `u64`, so every
//! certification report and every generated problem is reproducible
//! bit-for-bit across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{LinearMap, Vector};
use crate::sets::ConvexSet;

/// Default seed for certification samplers when callers do not supply one.
pub const DEFAULT_CERT_SEED: u64 = 0x5EED;

/// Half-width inflation factor applied to a set's bounding box.
const INFLATION: f64 = 1.5;
/// Fallback sampling box for unbounded sets.
const UNBOUNDED_EXTENT: f64 = 10.0;

/// Uniform sampler over an axis-aligned box. Calls are idempotent: the
/// stream restarts from the seed, so `vectors(k)` is always the same
/// prefix of the same stream.
#[derive(Clone, Debug)]
pub struct Sampler {
    lo: Vector,
    hi: Vector,
    seed: u64,
}

impl Sampler {
    pub fn new(lo: Vector, hi: Vector, seed: u64) -> Result<Self> {
        // reuse box validation
        let b = ConvexSet::boxed(lo, hi)?;
        match b {
            ConvexSet::Box { lo, hi } => Ok(Self { lo, hi, seed }),
            _ => unreachable!(),
        }
    }

    /// Sampler over the bounding box of `set` with half-widths inflated by
    /// 50%, so samples land both inside and outside the set. Unbounded sets
    /// fall back to `[-10, 10]^dim`.
    pub fn around_set(set: &ConvexSet, seed: u64) -> Self {
        let (lo, hi) = match set.bounding_box() {
            Some((lo, hi)) => {
                let center = (&lo + &hi).scale(0.5);
                let half = (&hi - &lo).scale(0.5 * INFLATION);
                (&center - &half, &center + &half)
            }
            None => (
                Vector::filled(set.dim(), -UNBOUNDED_EXTENT),
                Vector::filled(set.dim(), UNBOUNDED_EXTENT),
            ),
        };
        Self { lo, hi, seed }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// First `count` vectors of the stream.
    pub fn vectors(&self, count: usize) -> Vec<Vector> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }

    /// First `count` pairs of the stream (consumes two draws per pair).
    pub fn pairs(&self, count: usize) -> Vec<(Vector, Vector)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| (self.draw(&mut rng), self.draw(&mut rng)))
            .collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vector {
        Vector::from_raw(
            self.lo
                .as_slice()
                .iter()
                .zip(self.hi.as_slice())
                .map(|(l, h)| l + rng.gen::<f64>() * (h - l))
                .collect(),
        )
    }
}

/// Seeded random symmetric positive semidefinite matrix with spectral norm
/// scaled to `spectral_norm`. Built as R^T R from uniform entries.
pub fn random_psd(dim: usize, seed: u64, spectral_norm: f64) -> LinearMap {
    assert!(dim >= 1);
    assert!(spectral_norm > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let r = LinearMap::from_rows(rows).expect("finite uniform entries");
    let gram = r.gram();
    let top = gram.sym_max_eigenvalue().expect("gram matrix is symmetric");
    assert!(top > 0.0, "degenerate random matrix");
    gram.scaled(spectral_norm / top)
}
