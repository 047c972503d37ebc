//! The Euclidean-ball feasible set `{x : ||x||^2 <= t}` and its prox machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::scalar::Scalar;

/// Absolute slack on `||x||^2 - t` accepted by the membership test.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSet<T> {
    radius_sq: T,
    dim: usize,
}

impl<T: Scalar> BallSet<T> {
    pub fn new(radius_sq: T, dim: usize) -> Result<Self> {
        if !(radius_sq.is_finite() && radius_sq > T::zero()) {
            return Err(Error::invalid("radius_sq", "must be finite and positive"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        Ok(Self { radius_sq, dim })
    }

    pub fn radius_sq(&self) -> T {
        self.radius_sq
    }

    pub fn radius(&self) -> T {
        self.radius_sq.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Slack used by [`contains`](Self::contains); widened for low-precision scalars.
    pub fn tolerance(&self) -> T {
        let rounding = T::lit(8.0) * T::epsilon() * self.radius_sq;
        T::lit(FEASIBILITY_TOL).max(rounding)
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        x.dim() == self.dim && x.norm_sq() <= self.radius_sq + self.tolerance()
    }

    fn check(&self, p: &Point<T>) -> Result<()> {
        p.ensure_dim(self.dim)?;
        if !p.is_finite() {
            return Err(Error::NonFinite("projection input"));
        }
        Ok(())
    }

    /// Euclidean projection onto the ball by radial scaling.
    pub fn project(&self, p: &Point<T>) -> Result<Point<T>> {
        self.check(p)?;
        Ok(self.project_unchecked(p))
    }

    pub(crate) fn project_unchecked(&self, p: &Point<T>) -> Point<T> {
        let nsq = p.norm_sq();
        if nsq <= self.radius_sq + self.tolerance() {
            p.clone()
        } else {
            p.scaled(self.radius_sq.sqrt() / nsq.sqrt())
        }
    }

    /// `argmin_{y in X} <g, y> + ||y - x||^2 / (2 gamma)`, i.e. `project(x - gamma g)`.
    pub fn prox_step(&self, x: &Point<T>, g: &Point<T>, gamma: T) -> Result<Point<T>> {
        if !(gamma.is_finite() && gamma > T::zero()) {
            return Err(Error::invalid("gamma", "step size must be finite and positive"));
        }
        self.check(x)?;
        self.check(g)?;
        let trial = x.add_scaled(-gamma, g);
        if !trial.is_finite() {
            return Err(Error::NonFinite("prox step"));
        }
        Ok(self.project_unchecked(&trial))
    }

    /// Generalized projected gradient `(x - prox_step(x, g, gamma)) / gamma`.
    pub fn generalized_projected_gradient(
        &self,
        x: &Point<T>,
        g: &Point<T>,
        gamma: T,
    ) -> Result<Point<T>> {
        let next = self.prox_step(x, g, gamma)?;
        Ok(x.sub(&next).scaled(gamma.recip()))
    }
}

/// Prox-function data: `d(x) = ||x - center||^2 / 2` over a ball.
///
/// Only the Euclidean prox-function is implemented; `sigma_d`, `d_max` and
/// `center` are carried explicitly so solver code never assumes them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxSetup<T> {
    pub set: BallSet<T>,
    /// Strong-convexity modulus of `d`.
    pub sigma_d: T,
    /// Upper bound on `max_X d`.
    pub d_max: T,
    /// Minimizer of `d`.
    pub center: Point<T>,
}

impl<T: Scalar> ProxSetup<T> {
    pub fn euclidean(set: BallSet<T>) -> Self {
        Self {
            sigma_d: T::one(),
            d_max: set.radius_sq() / T::lit(2.0),
            center: Point::zeros(set.dim()),
            set,
        }
    }

    pub fn prox_value(&self, x: &Point<T>) -> T {
        x.sub(&self.center).norm_sq() / T::lit(2.0)
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}
