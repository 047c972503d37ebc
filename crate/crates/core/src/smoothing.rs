//! Smoothing parameter, iteration budget and batch size selection.
//!
//! Given the structure constants of the max-type term (operator norm `||A||`,
//! `Omega = max_U omega`, modulus `sigma_omega`), the smooth part's Lipschitz
//! constant `L_f` and the oracle variance bound `sigma^2`, these routines fix
//! `N`, `m` and `mu` before the solver starts and never revise them.

use serde::Serialize;

use crate::ball::ProxSetup;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative downward nudge applied before every ceiling.
const CEIL_NUDGE: f64 = 1e-9;

/// `6 - sqrt(2)`, the constant shared by every bound below.
fn six_minus_sqrt2<T: Scalar>() -> T {
    T::lit(6.0) - T::lit(2.0).sqrt()
}

fn nudged_ceil<T: Scalar>(v: T) -> T {
    (v * (T::one() - T::lit(CEIL_NUDGE))).ceil()
}

fn to_count<T: Scalar>(v: T, name: &'static str) -> Result<usize> {
    v.to_usize()
        .ok_or_else(|| Error::invalid(name, format!("value {v} does not fit an iteration count")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureConstants<T> {
    /// Operator norm `||A||`.
    pub a_norm: T,
    /// `max_U omega`.
    pub omega: T,
    /// Strong-convexity modulus of `omega`.
    pub sigma_omega: T,
    /// Lipschitz constant of the gradient of the smooth part `f`.
    pub l_f: T,
    /// Variance bound of a single stochastic gradient.
    pub sigma2: T,
}

impl<T: Scalar> StructureConstants<T> {
    pub fn new(a_norm: T, omega: T, sigma_omega: T, l_f: T, sigma2: T) -> Result<Self> {
        let c = Self {
            a_norm,
            omega,
            sigma_omega,
            l_f,
            sigma2,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a_norm", self.a_norm),
            ("omega", self.omega),
            ("sigma_omega", self.sigma_omega),
            ("l_f", self.l_f),
            ("sigma2", self.sigma2),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if self.omega <= T::zero() {
            return Err(Error::invalid("omega", "must be positive"));
        }
        if self.sigma_omega <= T::zero() {
            return Err(Error::invalid("sigma_omega", "must be positive"));
        }
        Ok(())
    }

    fn a_norm_sq_nonzero(&self) -> Result<T> {
        if self.a_norm <= T::zero() {
            return Err(Error::DegenerateOperator);
        }
        Ok(self.a_norm * self.a_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingParams<T> {
    pub mu: T,
    /// Gradient Lipschitz constant of the smoothed max term, `||A||^2 / (mu sigma_omega)`.
    pub l_h_mu: T,
    /// `L_f + L_h_mu`.
    pub l_total: T,
    /// Iteration limit `N`; the solver performs `N + 1` iterations.
    pub n_iter: usize,
    /// Batch size `m >= 1`.
    pub batch: usize,
}

impl<T: Scalar> SmoothingParams<T> {
    /// Assembles parameters from an explicit `(N, m, mu)` triple.
    pub fn with_values(
        n_iter: usize,
        batch: usize,
        mu: T,
        c: &StructureConstants<T>,
    ) -> Result<Self> {
        if batch == 0 {
            return Err(Error::invalid("m", "batch size must be at least 1"));
        }
        let (l_h_mu, l_total) = lipschitz_total(mu, c)?;
        if l_total <= T::zero() {
            return Err(Error::invalid("L", "total Lipschitz constant must be positive"));
        }
        Ok(Self {
            mu,
            l_h_mu,
            l_total,
            n_iter,
            batch,
        })
    }

    /// `N` from the accuracy target, then `m` and `mu` from `N`.
    pub fn for_accuracy(eps: T, c: &StructureConstants<T>, prox: &ProxSetup<T>) -> Result<Self> {
        let n_iter = iteration_budget(eps, c, prox)?;
        let batch = batch_size(n_iter, c)?;
        let mu = smoothing_parameter(n_iter, batch, c, prox)?;
        Self::with_values(n_iter, batch, mu, c)
    }

    /// Total number of single-sample oracle calls, `(N + 1) m`.
    pub fn oracle_budget(&self) -> usize {
        (self.n_iter + 1) * self.batch
    }
}

/// Iteration limit `N` guaranteeing an `eps`-accurate expected gap.
///
/// `N + 1 = ceil(4 (6 - sqrt 2) D Omega ||A||^2 / (sigma_d sigma_omega eps^2)
///              + 2 (6 - sqrt 2) L_f D / (sigma_d eps))`, clamped so `N + 1 >= 1`.
pub fn iteration_budget<T: Scalar>(
    eps: T,
    c: &StructureConstants<T>,
    prox: &ProxSetup<T>,
) -> Result<usize> {
    if !(eps.is_finite() && eps > T::zero()) {
        return Err(Error::invalid("eps", "accuracy must be finite and positive"));
    }
    c.validate()?;
    let k = six_minus_sqrt2::<T>();
    let d = prox.d_max;
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    let nonsmooth = four * k * d * c.omega * c.a_norm * c.a_norm
        / (prox.sigma_d * c.sigma_omega * eps * eps);
    let smooth = two * k * c.l_f * d / (prox.sigma_d * eps);
    let iters = nudged_ceil(nonsmooth + smooth).max(T::one());
    Ok(to_count(iters, "N")? - 1)
}

/// Batch size `m = ceil(sqrt 2 sigma^2 sigma_omega sqrt(N + 1) / (||A||^2 Omega))`, at least 1.
pub fn batch_size<T: Scalar>(n_iter: usize, c: &StructureConstants<T>) -> Result<usize> {
    c.validate()?;
    let a2 = c.a_norm_sq_nonzero()?;
    let n1 = T::from_usize_lossy(n_iter + 1);
    let raw = T::lit(2.0).sqrt() * c.sigma2 * c.sigma_omega * n1.sqrt() / (a2 * c.omega);
    to_count(nudged_ceil(raw).max(T::one()), "m")
}

/// Smoothing parameter balancing the `mu` and `1/mu` terms of the gap bound.
pub fn smoothing_parameter<T: Scalar>(
    n_iter: usize,
    batch: usize,
    c: &StructureConstants<T>,
    prox: &ProxSetup<T>,
) -> Result<T> {
    if batch == 0 {
        return Err(Error::invalid("m", "batch size must be at least 1"));
    }
    c.validate()?;
    let a2 = c.a_norm_sq_nonzero()?;
    let m = T::from_usize_lossy(batch);
    let two_n1 = T::lit(2.0) * T::from_usize_lossy(n_iter + 1);
    let num = a2 * (six_minus_sqrt2::<T>() * m * prox.d_max).sqrt();
    let den = (two_n1 * prox.sigma_d * c.sigma_omega).sqrt()
        * (m * a2 * c.omega + two_n1.sqrt() * c.sigma_omega * c.sigma2).sqrt();
    let mu = num / den;
    if !(mu.is_finite() && mu > T::zero()) {
        return Err(Error::invalid("mu", format!("computed value {mu} is not positive and finite")));
    }
    Ok(mu)
}

/// Returns `(L_h_mu, L_total)` with `L_h_mu = ||A||^2 / (mu sigma_omega)`.
pub fn lipschitz_total<T: Scalar>(mu: T, c: &StructureConstants<T>) -> Result<(T, T)> {
    if !(mu.is_finite() && mu > T::zero()) {
        return Err(Error::invalid("mu", "smoothing parameter must be finite and positive"));
    }
    let l_h_mu = c.a_norm * c.a_norm / (mu * c.sigma_omega);
    Ok((l_h_mu, c.l_f + l_h_mu))
}

/// The three terms of the expected-gap bound as a function of `mu`:
/// `mu [Omega + sqrt(2(N+1)) sigma_omega sigma^2 / (m ||A||^2)]`,
/// `(6 - sqrt 2) ||A||^2 D / (2 (N+1) sigma_d sigma_omega mu)` and
/// `(6 - sqrt 2) L_f D / (2 (N+1) sigma_d)`.
pub fn gap_bound_terms<T: Scalar>(
    mu: T,
    n_iter: usize,
    batch: usize,
    c: &StructureConstants<T>,
    prox: &ProxSetup<T>,
) -> Result<(T, T, T)> {
    let a2 = c.a_norm_sq_nonzero()?;
    let n1 = T::from_usize_lossy(n_iter + 1);
    let two = T::lit(2.0);
    let m = T::from_usize_lossy(batch);
    let k = six_minus_sqrt2::<T>();
    let first = mu * (c.omega + (two * n1).sqrt() * c.sigma_omega * c.sigma2 / (m * a2));
    let second = k * a2 * prox.d_max / (two * n1 * prox.sigma_d * c.sigma_omega * mu);
    let third = k * c.l_f * prox.d_max / (two * n1 * prox.sigma_d);
    Ok((first, second, third))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallSet;
    use approx::assert_relative_eq;

    fn prox_with(d: f64) -> ProxSetup<f64> {
        ProxSetup::euclidean(BallSet::new(2.0 * d, 2).unwrap())
    }

    fn consts(a: f64, omega: f64, l_f: f64, sigma2: f64) -> StructureConstants<f64> {
        StructureConstants::new(a, omega, 1.0, l_f, sigma2).unwrap()
    }

    #[test]
    fn budget_unit_case() {
        // 4 (6 - sqrt 2) 0.25 = 4.5858 -> N + 1 = 5
        let n = iteration_budget(1.0, &consts(1.0, 0.5, 0.0, 0.0), &prox_with(0.5)).unwrap();
        assert_eq!(n, 4);
    }

    #[test]
    fn budget_degenerate_objective() {
        let n = iteration_budget(0.3, &consts(0.0, 0.5, 0.0, 1.0), &prox_with(0.5)).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn budget_rejects_bad_eps() {
        let c = consts(1.0, 0.5, 0.0, 0.0);
        assert!(iteration_budget(0.0, &c, &prox_with(0.5)).is_err());
        assert!(iteration_budget(-0.1, &c, &prox_with(0.5)).is_err());
    }

    #[test]
    fn budget_nudge_avoids_spurious_round_up() {
        // choose eps so the expression is exactly 10 in real arithmetic
        let k = 6.0 - 2f64.sqrt();
        let eps = (4.0 * k * 0.25 / 10.0).sqrt();
        let n = iteration_budget(eps, &consts(1.0, 0.5, 0.0, 0.0), &prox_with(0.5)).unwrap();
        assert_eq!(n, 9);
    }

    #[test]
    fn batch_size_examples() {
        assert_eq!(batch_size(100, &consts(1.0, 0.5, 0.0, 0.0)).unwrap(), 1);
        // sqrt 2 * sqrt 8 / (4 * 0.5) = 2
        assert_eq!(batch_size(7, &consts(2.0, 0.5, 0.0, 1.0)).unwrap(), 2);
        assert!(matches!(
            batch_size(7, &consts(0.0, 0.5, 0.0, 1.0)),
            Err(Error::DegenerateOperator)
        ));
    }

    #[test]
    fn smoothing_parameter_unit_case() {
        let mu = smoothing_parameter(1, 1, &consts(1.0, 0.5, 0.0, 0.0), &prox_with(0.5)).unwrap();
        let expected = (0.5 * (6.0 - 2f64.sqrt())).sqrt() / (2.0 * 0.5f64.sqrt());
        assert_relative_eq!(mu, expected, max_relative = 1e-14);
        assert_relative_eq!(mu, 1.0707, max_relative = 1e-4);
    }

    #[test]
    fn smoothing_parameter_noiseless_specialization() {
        let k = 6.0 - 2f64.sqrt();
        for &(a, d, n) in &[(0.3, 5.0, 10usize), (2.0, 0.1, 999), (1.0, 1.0, 0)] {
            let c = consts(a, 0.5, 0.7, 0.0);
            let mu = smoothing_parameter(n, 1, &c, &prox_with(d)).unwrap();
            let closed = a * (k * d / (2.0 * (n as f64 + 1.0) * 0.5)).sqrt();
            assert_relative_eq!(mu, closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn smoothing_parameter_minimizes_bound() {
        let c = consts(0.8, 0.5, 0.3, 2.0);
        let prox = prox_with(5.0);
        let (n, m) = (120, 7);
        let mu = smoothing_parameter(n, m, &c, &prox).unwrap();
        let total = |mu: f64| {
            let (a, b, _) = gap_bound_terms(mu, n, m, &c, &prox).unwrap();
            a + b
        };
        // golden-section search over mu as an independent check
        let (mut lo, mut hi) = (1e-6, 10.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if total(a) < total(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        assert_relative_eq!(mu, 0.5 * (lo + hi), max_relative = 1e-6);
        let (t1, t2, _) = gap_bound_terms(mu, n, m, &c, &prox).unwrap();
        assert!((t1 - t2).abs() / t1 <= 1e-9);
    }

    #[test]
    fn lipschitz_examples() {
        let c = consts(2.0, 0.5, 1.0, 0.0);
        assert_eq!(lipschitz_total(0.5, &c).unwrap(), (8.0, 9.0));
        let (half, _) = lipschitz_total(1.0, &c).unwrap();
        assert_eq!(half, 4.0);
        let c0 = consts(0.0, 0.5, 1.0, 0.0);
        assert_eq!(lipschitz_total(0.5, &c0).unwrap(), (0.0, 1.0));
        assert!(lipschitz_total(0.0, &c).is_err());
    }

    #[test]
    fn constants_validation() {
        assert!(StructureConstants::new(1.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(StructureConstants::new(1.0, 0.5, 0.0, 0.0, 0.0).is_err());
        assert!(StructureConstants::new(-1.0, 0.5, 1.0, 0.0, 0.0).is_err());
        assert!(StructureConstants::new(1.0, 0.5, 1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn monotonicity() {
        let prox = prox_with(2.0);
        let mut last = usize::MAX;
        for i in 1..50 {
            let eps = i as f64 * 0.02;
            let n = iteration_budget(eps, &consts(0.7, 0.5, 0.4, 1.0), &prox).unwrap();
            assert!(n <= last);
            last = n;
        }
        let mut last = 0;
        for i in 0..50 {
            let a = 0.1 + i as f64 * 0.05;
            let n = iteration_budget(0.1, &consts(a, 0.5, 0.4, 1.0), &prox).unwrap();
            assert!(n >= last);
            last = n;
        }
        let mut last = 0;
        for i in 0..50 {
            let m = batch_size(i * 37, &consts(0.7, 0.5, 0.4, 1.0)).unwrap();
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn f32_path() {
        let c = StructureConstants::<f32>::new(1.0, 0.5, 1.0, 0.0, 0.0).unwrap();
        let prox = ProxSetup::euclidean(BallSet::new(1.0f32, 2).unwrap());
        assert_eq!(iteration_budget(1.0f32, &c, &prox).unwrap(), 4);
    }
}
