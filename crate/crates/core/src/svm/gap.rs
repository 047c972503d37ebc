//! Dual value and primal-dual gap for the SVM instance.
//!
//! For a scalar multiplier `u in [0, 1]`,
//! `phi(u) = min_{x in X} lambda1 x^T Sigma x + u (1 - <a, x>)` with
//! `a = (1/NS) sum y_i z_i`. Since every hinge dominates `u (1 - s_i)`,
//! `phi(u) <= psi(x)` for all feasible `x`.

use crate::error::{Error, Result};
use crate::point::Point;
use crate::scalar::Scalar;

use super::SvmModel;

/// Stopping tolerance on the generalized projected gradient norm.
pub const DUAL_TOL: f64 = 1e-8;
pub const DUAL_MAX_ITER: usize = 100_000;
const STEP_REG: f64 = 1e-12;

/// `phi(u_hat)`, computed by fixed-step projected gradient on the ball.
pub fn dual_value<T: Scalar>(model: &SvmModel<T>, u_hat: T, tol: T) -> Result<T> {
    if !(u_hat >= T::zero() && u_hat <= T::one()) {
        return Err(Error::invalid("u_hat", "must lie in [0, 1]"));
    }
    let set = model.set();
    let a = model.mean_signed_features();
    let lambda1 = model.lambda1;
    let lip = T::lit(2.0) * lambda1 * model.sigma_norm() + T::lit(STEP_REG);
    let step = lip.recip();
    let objective = |x: &Point<T>| -> Result<T> {
        let (fv, _) = model.f_value_grad(x)?;
        Ok(fv + u_hat * (T::one() - a.dot(x)))
    };

    let mut x = Point::zeros(model.dim());
    let mut best = objective(&x)?;
    for _ in 0..DUAL_MAX_ITER {
        let (_, fg) = model.f_value_grad(&x)?;
        let grad = fg.add_scaled(-u_hat, a);
        let next = set.prox_step(&x, &grad, step)?;
        let pg_norm = x.sub(&next).norm() / step;
        x = next;
        let v = objective(&x)?;
        best = best.min(v);
        if pg_norm <= tol {
            return Ok(v);
        }
    }
    Err(Error::NotConverged {
        what: "dual subproblem",
        iterations: DUAL_MAX_ITER,
        best: best.as_f64(),
    })
}

/// `psi(x_hat) - phi(u_hat)` with the exact (nonsmooth) training objective.
pub fn duality_gap<T: Scalar>(model: &SvmModel<T>, x_hat: &Point<T>, u_hat: T, tol: T) -> Result<T> {
    let primal = model.exact_objective(x_hat)?;
    Ok(primal - dual_value(model, u_hat, tol)?)
}
