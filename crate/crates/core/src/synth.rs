//! Seeded synthetic datasets for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{ArfError, Result};

/// Isotropic Gaussian blobs, one per center, `n_per_class` samples each.
/// Samples are interleaved by class.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    std_dev: f64,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let dim = centers.first().map_or(0, Vec::len);
    if centers.len() < 2 || dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(ArfError::InvalidConfig(
            "need at least two centers of equal, non-zero dimension".into(),
        ));
    }
    let noise = Normal::new(0.0, std_dev)
        .map_err(|e| ArfError::InvalidConfig(format!("bad standard deviation: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(centers.len() * n_per_class * dim);
    let mut labels = Vec::with_capacity(centers.len() * n_per_class);
    for _ in 0..n_per_class {
        for (class, center) in centers.iter().enumerate() {
            features.extend(center.iter().map(|&c| c + noise.sample(&mut rng)));
            labels.push(class);
        }
    }
    Dataset::from_flat(features, dim, labels, centers.len())
}

/// Two blobs at `-separation/2` and `+separation/2` along every axis.
pub fn two_blobs(dim: usize, separation: f64, n_per_class: usize, seed: u64) -> Result<Dataset> {
    let half = separation / 2.0;
    gaussian_blobs(&[vec![-half; dim], vec![half; dim]], 1.0, n_per_class, seed)
}

/// `n` points drawn uniformly from per-feature `[lo, hi]` boxes.
pub fn uniform_points(ranges: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            ranges
                .iter()
                .map(|&(lo, hi)| {
                    if hi > lo {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape_and_determinism() {
        let a = two_blobs(3, 2.0, 50, 1).unwrap();
        assert_eq!((a.len(), a.n_features(), a.num_classes()), (100, 3, 2));
        assert_eq!(a.class_counts(), vec![50, 50]);
        assert_eq!(a, two_blobs(3, 2.0, 50, 1).unwrap());
        assert!(gaussian_blobs(&[vec![0.0]], 1.0, 5, 0).is_err());
    }

    #[test]
    fn uniform_points_stay_in_range() {
        let pts = uniform_points(&[(0.0, 1.0), (5.0, 5.0)], 100, 3);
        assert!(pts
            .iter()
            .all(|p| (0.0..1.0).contains(&p[0]) && p[1] == 5.0));
    }
}
