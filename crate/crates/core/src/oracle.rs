//! Stochastic first-order oracle abstraction.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::point::Point;
use crate::scalar::Scalar;

/// Mini-batch average of `m` stochastic value/gradient samples at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleBatch<T> {
    pub value: T,
    pub grad: Point<T>,
    /// Batch average of the inner maximizers, in `[0, 1]`.
    pub u_mean: T,
    pub m: usize,
}

/// Unbiased stochastic oracle for a smoothed objective `psi_mu`.
///
/// Implementations must return batch means whose expectation is
/// `psi_mu(x)` / `grad psi_mu(x)`, with single-sample gradient variance bounded
/// by the `sigma2` used to size the batch. All randomness must come from `rng`.
pub trait StochasticOracle<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn sample_batch<R: Rng + ?Sized>(
        &self,
        x: &Point<T>,
        m: usize,
        rng: &mut R,
    ) -> Result<OracleBatch<T>>;
}

/// Deterministic objective evaluations used for trace rows.
pub trait ObjectiveEval<T>: Sync {
    fn smoothed(&self, x: &Point<T>) -> T;
    fn exact(&self, x: &Point<T>) -> T;
}

/// Simple oracles for exercising solvers.
pub mod toy {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::error::Error;

    /// Gradient is identically zero.
    #[derive(Debug, Clone, Copy)]
    pub struct ZeroOracle {
        pub dim: usize,
    }

    impl<T: Scalar> StochasticOracle<T> for ZeroOracle {
        fn dim(&self) -> usize {
            self.dim
        }
        fn sample_batch<R: Rng + ?Sized>(
            &self,
            x: &Point<T>,
            m: usize,
            _rng: &mut R,
        ) -> Result<OracleBatch<T>> {
            x.ensure_dim(self.dim)?;
            Ok(OracleBatch {
                value: T::zero(),
                grad: Point::zeros(self.dim),
                u_mean: T::zero(),
                m,
            })
        }
    }

    /// `f(x) = (curvature / 2) ||x - target||^2`, optionally with additive
    /// isotropic Gaussian gradient noise of per-coordinate standard deviation `noise`.
    #[derive(Debug, Clone)]
    pub struct QuadraticOracle<T> {
        pub target: Point<T>,
        pub curvature: T,
        pub noise: T,
    }

    impl<T: Scalar> QuadraticOracle<T> {
        pub fn value(&self, x: &Point<T>) -> T {
            self.curvature * x.sub(&self.target).norm_sq() / T::lit(2.0)
        }
    }

    impl<T: Scalar> StochasticOracle<T> for QuadraticOracle<T> {
        fn dim(&self) -> usize {
            self.target.dim()
        }
        fn sample_batch<R: Rng + ?Sized>(
            &self,
            x: &Point<T>,
            m: usize,
            rng: &mut R,
        ) -> Result<OracleBatch<T>> {
            x.ensure_dim(self.target.dim())?;
            if m == 0 {
                return Err(Error::invalid("m", "batch size must be at least 1"));
            }
            let mut grad = x.sub(&self.target).scaled(self.curvature);
            if self.noise > T::zero() {
                let scale = self.noise / T::from_usize_lossy(m).sqrt();
                for i in 0..grad.dim() {
                    let e: f64 = StandardNormal.sample(rng);
                    grad[i] += scale * T::lit(e);
                }
            }
            Ok(OracleBatch {
                value: self.value(x),
                grad,
                u_mean: T::zero(),
                m,
            })
        }
    }

    impl<T: Scalar> ObjectiveEval<T> for QuadraticOracle<T> {
        fn smoothed(&self, x: &Point<T>) -> T {
            self.value(x)
        }
        fn exact(&self, x: &Point<T>) -> T {
            self.value(x)
        }
    }
}
