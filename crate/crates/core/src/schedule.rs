//! Step-size schedule with constant weights `alpha_k = 1/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule<T> {
    pub k: usize,
    /// Weight of iterate `k` (always one half).
    pub alpha: T,
    /// Cumulative weight `sum_{i<=k} alpha_i = (k + 1) / 2`.
    pub a_cum: T,
    /// Mixing weight of `z_k` in `x_{k+1}`: `1 / (k + 2)`.
    pub tau: T,
    /// Prox step `1 / (L sqrt(A_k)) = sqrt(2) / (L sqrt(k + 1))`.
    pub gamma: T,
    pub lipschitz: T,
}

impl<T: Scalar> Schedule<T> {
    pub fn at(k: usize, lipschitz: T) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > T::zero()) {
            return Err(Error::invalid("L", "Lipschitz constant must be finite and positive"));
        }
        let half = T::lit(0.5);
        let kk = T::from_usize_lossy(k);
        let a_cum = (kk + T::one()) * half;
        Ok(Self {
            k,
            alpha: half,
            a_cum,
            tau: (kk + T::lit(2.0)).recip(),
            gamma: (lipschitz * a_cum.sqrt()).recip(),
            lipschitz,
        })
    }

    /// Checks `alpha_0 in (0, 1]` and `alpha_{k+1}^2 <= sqrt(A_{k+1})` for this `k`.
    pub fn satisfies_weight_conditions(&self) -> bool {
        let next = Schedule::at(self.k + 1, self.lipschitz).expect("valid L");
        let first_ok = self.k != 0 || (self.alpha > T::zero() && self.alpha <= T::one());
        first_ok && next.alpha * next.alpha <= next.a_cum.sqrt()
    }
}

/// Free-function form of [`Schedule::at`].
pub fn schedule_at<T: Scalar>(k: usize, lipschitz: T) -> Result<Schedule<T>> {
    Schedule::at(k, lipschitz)
}
