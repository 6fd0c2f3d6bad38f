//! Synthetic Gaussian mixtures for benchmarks and tests.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::metric::Point;
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Mixture<T> {
    pub points: Vec<Point<T>>,
    /// Component means; component `i` is centred at `i·separation·sigma` on
    /// the first axis.
    pub means: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub sigma: T,
}

/// `n` points from `k` isotropic Gaussians with standard deviation `sigma`,
/// components chosen uniformly per point.
pub fn gaussian_mixture<T: Scalar>(k: usize, n: usize, dim: usize, sigma: f64, separation: f64, seed: u64) -> Mixture<T> {
    assert!(k >= 1 && dim >= 1 && sigma > 0.0);
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let means: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut c = vec![0.0; dim];
            c[0] = i as f64 * separation * sigma;
            c
        })
        .collect();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for id in 0..n {
        let label = rng.random_range(0..k);
        let coords = means[label].iter().map(|&mu| T::of(mu + noise.sample(&mut rng))).collect();
        points.push(Point::coords(id, coords));
        labels.push(label);
    }
    let means = means.into_iter().map(|c| c.into_iter().map(T::of).collect()).collect();
    Mixture { points, means, labels, sigma: T::of(sigma) }
}
