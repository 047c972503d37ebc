//! Regularized hinge-loss SVM over a Euclidean ball:
//!
//! `min_{||x||^2 <= t}  lambda1 x^T Sigma x + E[max(0, 1 - y <z, x>)]`
//!
//! with the expectation taken over the training set. Each sample's hinge is
//! smoothed separately with `omega(u) = u^2 / 2` on `u in [0, 1]`, so
//! `Omega = 1/2` and `sigma_omega = 1`.

mod gap;
mod hinge;

pub use gap::{dual_value, duality_gap, DUAL_MAX_ITER, DUAL_TOL};
pub use hinge::{hinge, smoothed_hinge};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ball::{BallSet, ProxSetup};
use crate::data::{random_point_in_ball, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{covariance as dense_covariance, SymMatrix};
use crate::oracle::{ObjectiveEval, OracleBatch, StochasticOracle};
use crate::point::Point;
use crate::scalar::Scalar;
use crate::smoothing::StructureConstants;
use hinge::smoothed_hinge_unchecked;

/// `max_U omega` for `omega(u) = u^2 / 2` on `[0, 1]`.
pub const OMEGA: f64 = 0.5;
/// Strong-convexity modulus of `omega`.
pub const SIGMA_OMEGA: f64 = 1.0;
/// Relative tolerance of the power iteration for `||Sigma||`.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
const POWER_SEED: u64 = 0x5eed_5167;
/// Random evaluation points used by [`SvmModel::estimate_sigma2`].
pub const SIGMA2_POINTS: usize = 100;
/// Samples per parallel work unit when evaluating a batch.
const CHUNK: usize = 512;

/// Labelled feature vector; `y` is `+1` or `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub z: Point<T>,
    pub y: i8,
}

impl<T: Scalar> Sample<T> {
    pub fn new(z: Point<T>, y: i8) -> Result<Self> {
        if y != 1 && y != -1 {
            return Err(Error::invalid("label", format!("{y} is not +1 or -1")));
        }
        Ok(Self { z, y })
    }

    pub fn label(&self) -> T {
        if self.y > 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn margin(&self, x: &Point<T>) -> T {
        self.label() * self.z.dot(x)
    }
}

/// Sample covariance of the training features (biased normalization).
pub fn covariance<T: Scalar>(train: &Dataset<T>) -> Result<SymMatrix<T>> {
    dense_covariance(train.dim(), train.samples().iter().map(|s| s.z.as_slice()))
}

/// `(lambda1 x^T Sigma x, 2 lambda1 Sigma x)`.
pub fn f_value_grad<T: Scalar>(
    x: &Point<T>,
    lambda1: T,
    sigma: &SymMatrix<T>,
) -> Result<(T, Point<T>)> {
    let sx = sigma.matvec(x)?;
    Ok((lambda1 * sx.dot(x), sx.scaled(T::lit(2.0) * lambda1)))
}

/// Batch oracle on an explicit list of samples: means of `f + h_mu` and of
/// `2 lambda1 Sigma x - u y z`.
pub fn stochastic_oracle<T: Scalar>(
    x: &Point<T>,
    batch: &[Sample<T>],
    mu: T,
    lambda1: T,
    sigma: &SymMatrix<T>,
) -> Result<OracleBatch<T>> {
    if batch.is_empty() {
        return Err(Error::invalid("batch", "must contain at least one sample"));
    }
    if !(mu.is_finite() && mu > T::zero()) {
        return Err(Error::invalid("mu", "smoothing parameter must be finite and positive"));
    }
    let (fv, mut grad) = f_value_grad(x, lambda1, sigma)?;
    let m = T::from_usize_lossy(batch.len());
    let mut hv = T::zero();
    let mut u_sum = T::zero();
    for s in batch {
        s.z.ensure_dim(x.dim())?;
        let (v, u) = smoothed_hinge_unchecked(s.margin(x), mu);
        hv += v;
        u_sum += u;
        if u > T::zero() {
            grad.axpy(-(u * s.label()) / m, &s.z);
        }
    }
    Ok(OracleBatch {
        value: fv + hv / m,
        grad,
        u_mean: u_sum / m,
        m: batch.len(),
    })
}

/// `lambda1 x^T Sigma x + (1/NS) sum max(0, 1 - y_i <z_i, x>)` over `data`.
pub fn exact_objective<T: Scalar>(
    x: &Point<T>,
    data: &Dataset<T>,
    lambda1: T,
    sigma: &SymMatrix<T>,
) -> Result<T> {
    x.ensure_dim(data.dim())?;
    let (fv, _) = f_value_grad(x, lambda1, sigma)?;
    let total: T = data.samples().iter().map(|s| hinge(s.margin(x))).sum();
    Ok(fv + total / T::from_usize_lossy(data.len()))
}

/// Euclidean norm of `(1/NS) sum -y_i z_i`, the operator norm of the mean row map
/// `x -> E[-y <z, x>]`.
pub fn estimate_a_norm<T: Scalar>(train: &Dataset<T>) -> Result<T> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(mean_signed_features(train).norm())
}

fn mean_signed_features<T: Scalar>(train: &Dataset<T>) -> Point<T> {
    let mut acc = Point::zeros(train.dim());
    for s in train.samples() {
        acc.axpy(s.label(), &s.z);
    }
    acc.scaled(T::from_usize_lossy(train.len()).recip())
}

/// `2 lambda1 lambda_max(Sigma)`.
pub fn estimate_lf<T: Scalar>(lambda1: T, sigma: &SymMatrix<T>, rel_tol: T) -> Result<T> {
    if lambda1 == T::zero() {
        return Ok(T::zero());
    }
    let top = sigma.largest_eigenvalue(rel_tol, POWER_MAX_ITER, POWER_SEED)?;
    Ok(T::lit(2.0) * lambda1 * top)
}

/// Fraction of `test` whose label equals `sign(<x, z>)`, with `sign(0) = +1`.
pub fn predict_accuracy<T: Scalar>(x: &Point<T>, test: &Dataset<T>) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    x.ensure_dim(test.dim())?;
    let correct = test
        .samples()
        .iter()
        .filter(|s| {
            let pred = if s.z.dot(x) >= T::zero() { 1 } else { -1 };
            pred == s.y
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Compressed sparse rows of `y_i z_i` for fast margins and gradient updates.
#[derive(Debug, Clone)]
struct SignedRows<T> {
    indptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    norm_sq: Vec<T>,
}

impl<T: Scalar> SignedRows<T> {
    fn from_dataset(data: &Dataset<T>) -> Self {
        let mut indptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut norm_sq = Vec::with_capacity(data.len());
        for s in data.samples() {
            let y = s.label();
            for (j, &v) in s.z.as_slice().iter().enumerate() {
                if v != T::zero() {
                    cols.push(j);
                    vals.push(y * v);
                }
            }
            indptr.push(cols.len());
            norm_sq.push(s.z.norm_sq());
        }
        Self {
            indptr,
            cols,
            vals,
            norm_sq,
        }
    }

    fn len(&self) -> usize {
        self.norm_sq.len()
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    #[inline]
    fn margin(&self, i: usize, x: &[T]) -> T {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
    }

    /// `out += scale * y_i z_i`
    #[inline]
    fn add_row(&self, i: usize, scale: T, out: &mut [T]) {
        let (c, v) = self.row(i);
        for (&j, &a) in c.iter().zip(v) {
            out[j] += scale * a;
        }
    }
}

/// Training-set data for the SVM problem with `lambda1` and ball radius `t`.
#[derive(Debug, Clone)]
pub struct SvmModel<T> {
    pub lambda1: T,
    set: BallSet<T>,
    sigma: SymMatrix<T>,
    sigma_norm: T,
    rows: SignedRows<T>,
    mean_yz: Point<T>,
}

impl<T: Scalar> SvmModel<T> {
    pub fn new(train: &Dataset<T>, lambda1: T, t: T) -> Result<Self> {
        let sigma = covariance(train)?;
        Self::with_covariance(train, lambda1, t, sigma)
    }

    /// Uses a caller-supplied `Sigma` (symmetric PSD, matching dimension).
    pub fn with_covariance(
        train: &Dataset<T>,
        lambda1: T,
        t: T,
        sigma: SymMatrix<T>,
    ) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 >= T::zero()) {
            return Err(Error::invalid("lambda1", "must be finite and nonnegative"));
        }
        if sigma.dim() != train.dim() {
            return Err(Error::DimensionMismatch {
                expected: train.dim(),
                got: sigma.dim(),
            });
        }
        if !sigma.is_symmetric(T::lit(1e-12)) {
            return Err(Error::invalid("Sigma", "not symmetric"));
        }
        let sigma_norm = sigma.largest_eigenvalue(T::lit(POWER_TOL), POWER_MAX_ITER, POWER_SEED)?;
        let mean_yz = mean_signed_features(train);
        Ok(Self {
            lambda1,
            set: BallSet::new(t, train.dim())?,
            sigma,
            sigma_norm,
            rows: SignedRows::from_dataset(train),
            mean_yz,
        })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn num_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn set(&self) -> &BallSet<T> {
        &self.set
    }

    pub fn prox_setup(&self) -> ProxSetup<T> {
        ProxSetup::euclidean(self.set)
    }

    pub fn sigma(&self) -> &SymMatrix<T> {
        &self.sigma
    }

    /// `lambda_max(Sigma)`.
    pub fn sigma_norm(&self) -> T {
        self.sigma_norm
    }

    /// `(1/NS) sum y_i z_i`.
    pub fn mean_signed_features(&self) -> &Point<T> {
        &self.mean_yz
    }

    pub fn a_norm(&self) -> T {
        self.mean_yz.norm()
    }

    pub fn l_f(&self) -> T {
        T::lit(2.0) * self.lambda1 * self.sigma_norm
    }

    pub fn max_row_norm_sq(&self) -> T {
        self.rows
            .norm_sq
            .iter()
            .copied()
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn f_value_grad(&self, x: &Point<T>) -> Result<(T, Point<T>)> {
        f_value_grad(x, self.lambda1, &self.sigma)
    }

    pub fn margin(&self, i: usize, x: &Point<T>) -> T {
        self.rows.margin(i, x.as_slice())
    }

    pub fn exact_objective(&self, x: &Point<T>) -> Result<T> {
        x.ensure_dim(self.dim())?;
        let (fv, _) = self.f_value_grad(x)?;
        let xs = x.as_slice();
        let h: T = (0..self.rows.len()).map(|i| hinge(self.rows.margin(i, xs))).sum();
        Ok(fv + h / T::from_usize_lossy(self.rows.len()))
    }

    pub fn smoothed_objective(&self, x: &Point<T>, mu: T) -> Result<T> {
        x.ensure_dim(self.dim())?;
        let (fv, _) = self.f_value_grad(x)?;
        let xs = x.as_slice();
        let h: T = (0..self.rows.len())
            .map(|i| smoothed_hinge_unchecked(self.rows.margin(i, xs), mu).0)
            .sum();
        Ok(fv + h / T::from_usize_lossy(self.rows.len()))
    }

    /// Full-batch smoothed value, gradient and mean maximizer over the training set.
    pub fn full_oracle(&self, x: &Point<T>, mu: T) -> Result<OracleBatch<T>> {
        let idx: Vec<usize> = (0..self.rows.len()).collect();
        self.batch_at_indices(x, mu, &idx)
    }

    /// Oracle batch over the given training indices (repeats allowed).
    pub fn batch_at_indices(&self, x: &Point<T>, mu: T, idx: &[usize]) -> Result<OracleBatch<T>> {
        x.ensure_dim(self.dim())?;
        if idx.is_empty() {
            return Err(Error::invalid("batch", "must contain at least one sample"));
        }
        if !(mu.is_finite() && mu > T::zero()) {
            return Err(Error::invalid("mu", "smoothing parameter must be finite and positive"));
        }
        let n = self.dim();
        let xs = x.as_slice();
        let eval_chunk = |chunk: &[usize]| -> (T, T, Vec<T>) {
            let mut g = vec![T::zero(); n];
            let mut hv = T::zero();
            let mut us = T::zero();
            for &i in chunk {
                let (v, u) = smoothed_hinge_unchecked(self.rows.margin(i, xs), mu);
                hv += v;
                us += u;
                if u > T::zero() {
                    self.rows.add_row(i, -u, &mut g);
                }
            }
            (hv, us, g)
        };
        // chunk boundaries are fixed, so the reduction order never depends on the thread count
        let partials: Vec<(T, T, Vec<T>)> = if idx.len() > CHUNK {
            idx.par_chunks(CHUNK).map(eval_chunk).collect()
        } else {
            vec![eval_chunk(idx)]
        };
        let mut hsum = T::zero();
        let mut usum = T::zero();
        let mut gsum = vec![T::zero(); n];
        for (hv, us, g) in partials {
            hsum += hv;
            usum += us;
            for (a, b) in gsum.iter_mut().zip(g) {
                *a += b;
            }
        }
        let m = T::from_usize_lossy(idx.len());
        let (fv, mut grad) = self.f_value_grad(x)?;
        for (gi, hi) in (0..n).zip(gsum) {
            grad[gi] += hi / m;
        }
        Ok(OracleBatch {
            value: fv + hsum / m,
            grad,
            u_mean: usum / m,
            m: idx.len(),
        })
    }

    /// Mean squared deviation of single-sample gradients at `x` over `idx`.
    ///
    /// Only the hinge part varies between samples; the `2 lambda1 Sigma x` term
    /// cancels in the deviation and is omitted.
    pub fn gradient_variance_at(&self, x: &Point<T>, mu: T, idx: &[usize]) -> Result<T> {
        x.ensure_dim(self.dim())?;
        if idx.is_empty() {
            return Err(Error::invalid("batch", "must contain at least one sample"));
        }
        let n = self.dim();
        let xs = x.as_slice();
        let grads: Vec<Vec<T>> = idx
            .iter()
            .map(|&i| {
                let mut g = vec![T::zero(); n];
                let (_, u) = smoothed_hinge_unchecked(self.rows.margin(i, xs), mu);
                if u > T::zero() {
                    self.rows.add_row(i, -u, &mut g);
                }
                g
            })
            .collect();
        let k = T::from_usize_lossy(idx.len());
        let mut mean = vec![T::zero(); n];
        for g in &grads {
            for (a, &b) in mean.iter_mut().zip(g) {
                *a += b;
            }
        }
        for a in &mut mean {
            *a /= k;
        }
        let total: T = grads
            .iter()
            .map(|g| g.iter().zip(&mean).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>())
            .sum();
        Ok(total / k)
    }

    /// Average gradient variance at `SIGMA2_POINTS` random points of the ball,
    /// each from `ceil(NS / 100)` single samples drawn with replacement (at
    /// least two, so small datasets still yield a variance).
    pub fn estimate_sigma2(&self, mu: T, seed: u64) -> Result<T> {
        let ns = self.num_samples();
        let per_point = ns.div_ceil(100).max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = T::zero();
        for _ in 0..SIGMA2_POINTS {
            let x: Point<T> =
                random_point_in_ball(&mut rng, self.dim(), self.set.radius_sq().as_f64()).cast();
            let idx: Vec<usize> = (0..per_point).map(|_| rng.random_range(0..ns)).collect();
            acc += self.gradient_variance_at(&x, mu, &idx)?;
        }
        Ok(acc / T::from_usize_lossy(SIGMA2_POINTS))
    }

    pub fn structure_constants(&self, sigma2: T) -> Result<StructureConstants<T>> {
        StructureConstants::new(
            self.a_norm(),
            T::lit(OMEGA),
            T::lit(SIGMA_OMEGA),
            self.l_f(),
            sigma2,
        )
    }

    pub fn oracle(&self, mu: T) -> Result<SmoothedHingeOracle<'_, T>> {
        if !(mu.is_finite() && mu > T::zero()) {
            return Err(Error::invalid("mu", "smoothing parameter must be finite and positive"));
        }
        Ok(SmoothedHingeOracle { model: self, mu })
    }
}

/// Sampling oracle for the smoothed SVM objective at a fixed `mu`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedHingeOracle<'a, T> {
    pub model: &'a SvmModel<T>,
    pub mu: T,
}

impl<T: Scalar> StochasticOracle<T> for SmoothedHingeOracle<'_, T> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn sample_batch<R: Rng + ?Sized>(
        &self,
        x: &Point<T>,
        m: usize,
        rng: &mut R,
    ) -> Result<OracleBatch<T>> {
        if m == 0 {
            return Err(Error::invalid("m", "batch size must be at least 1"));
        }
        let ns = self.model.num_samples();
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..ns)).collect();
        self.model.batch_at_indices(x, self.mu, &idx)
    }
}

impl<T: Scalar> ObjectiveEval<T> for SmoothedHingeOracle<'_, T> {
    fn smoothed(&self, x: &Point<T>) -> T {
        self.model.smoothed_objective(x, self.mu).unwrap_or(T::nan())
    }
    fn exact(&self, x: &Point<T>) -> T {
        self.model.exact_objective(x).unwrap_or(T::nan())
    }
}

#[cfg(test)]
mod tests;
