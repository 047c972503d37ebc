use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::svm::Sample;

/// Probability that a synthetic feature entry is nonzero.
pub const NONZERO_FRACTION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    /// Labelling hyperplane normal; `y = +1` iff `<x_bar, z> >= 0`.
    pub x_bar: Point<f64>,
}

/// Uniform draw from `{x : ||x||^2 <= t}`: Gaussian direction, radius `sqrt(t) U^(1/n)`.
pub fn random_point_in_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, t: f64) -> Point<f64> {
    let mut dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: f64 = rng.random();
    let r = t.sqrt() * u.powf(1.0 / n as f64);
    if norm > 0.0 {
        for v in &mut dir {
            *v *= r / norm;
        }
    }
    Point::from_vec_unchecked(dir)
}

fn draw_samples<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    x_bar: &Point<f64>,
) -> Vec<Sample<f64>> {
    let mask = Bernoulli::new(NONZERO_FRACTION).expect("valid probability");
    let n = x_bar.dim();
    (0..count)
        .map(|_| {
            let z: Vec<f64> = (0..n)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(rng);
                    if mask.sample(rng) {
                        g
                    } else {
                        0.0
                    }
                })
                .collect();
            let z = Point::from_vec_unchecked(z);
            let y = if x_bar.dot(&z) >= 0.0 { 1 } else { -1 };
            Sample { z, y }
        })
        .collect()
}

/// Sparse Gaussian features labelled by a random hyperplane through the origin.
///
/// `x_bar` is drawn first, then `ns` training and `k_test` test samples, all
/// from one ChaCha8 stream seeded with `seed`.
pub fn generate_synthetic(
    n: usize,
    ns: usize,
    k_test: usize,
    t: f64,
    seed: u64,
) -> Result<SyntheticData> {
    if n == 0 || ns == 0 || k_test == 0 {
        return Err(Error::invalid("size", "n, NS and K_test must all be at least 1"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("t", "must be finite and positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_bar = random_point_in_ball(&mut rng, n, t);
    let train = draw_samples(&mut rng, ns, &x_bar);
    let test = draw_samples(&mut rng, k_test, &x_bar);
    Ok(SyntheticData {
        train: Dataset::new("synthetic-train", train)?,
        test: Dataset::new("synthetic-test", test)?,
        x_bar,
    })
}
