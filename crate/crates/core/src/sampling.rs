//! Reproducible sampling keyed by `(seed, index)` and deterministic parallel
//! reductions.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Generator for sample `index` under `seed`. Streams are independent, so
/// samples can be drawn in any order or in parallel.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian_vector<R: rand::Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Uniform point on the unit sphere in `R^n`.
pub fn unit_vector<R: rand::Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// A maximum with the sample index that attained it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extreme {
    pub value: f64,
    pub index: u64,
}

fn better(a: Extreme, b: Extreme) -> Extreme {
    // NaN loses; ties go to the lower index
    if b.value.is_nan() {
        return a;
    }
    if a.value.is_nan() || b.value > a.value || (b.value == a.value && b.index < a.index) {
        b
    } else {
        a
    }
}

/// Parallel maximum of `f(index)` over `0..count`, ties broken by the lowest
/// index. The result does not depend on thread scheduling.
pub fn par_max<F>(count: u64, f: F) -> Option<Extreme>
where
    F: Fn(u64) -> f64 + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| Extreme {
            value: f(i),
            index: i,
        })
        .reduce_with(better)
}

/// Parallel minimum, ties broken by the lowest index.
pub fn par_min<F>(count: u64, f: F) -> Option<Extreme>
where
    F: Fn(u64) -> f64 + Sync,
{
    par_max(count, |i| -f(i)).map(|e| Extreme {
        value: -e.value,
        index: e.index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = unit_vector(&mut rng_for(7, 3), 7);
        let b = unit_vector(&mut rng_for(7, 3), 7);
        let c = unit_vector(&mut rng_for(7, 4), 7);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reductions_break_ties_by_index() {
        let m = par_max(1000, |i| (i % 10) as f64).unwrap();
        assert_eq!(m, Extreme { value: 9.0, index: 9 });
        let m = par_min(1000, |i| (i % 10) as f64).unwrap();
        assert_eq!(m, Extreme { value: 0.0, index: 0 });
        assert!(par_max(0, |_| 0.0).is_none());
    }
}
