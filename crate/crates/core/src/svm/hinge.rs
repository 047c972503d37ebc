use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `max(0, 1 - s)` for margin `s = y <z, x>`.
pub fn hinge<T: Scalar>(s: T) -> T {
    (T::one() - s).max(T::zero())
}

/// Smoothed hinge `max_{0<=u<=1} u (1 - s) - mu u^2 / 2` and its maximizer.
///
/// Returns `(value, u)`:
/// * `s > 1`: `(0, 0)`
/// * `1 - mu <= s <= 1`: `((1 - s)^2 / (2 mu), (1 - s) / mu)`
/// * `s < 1 - mu`: `(1 - s - mu / 2, 1)`
pub fn smoothed_hinge<T: Scalar>(s: T, mu: T) -> Result<(T, T)> {
    if !(mu.is_finite() && mu > T::zero()) {
        return Err(Error::invalid("mu", "smoothing parameter must be finite and positive"));
    }
    Ok(smoothed_hinge_unchecked(s, mu))
}

#[inline]
pub(crate) fn smoothed_hinge_unchecked<T: Scalar>(s: T, mu: T) -> (T, T) {
    let gap = T::one() - s;
    if gap < T::zero() {
        (T::zero(), T::zero())
    } else if gap <= mu {
        (gap * gap / (T::lit(2.0) * mu), gap / mu)
    } else {
        (gap - mu / T::lit(2.0), T::one())
    }
}
