//! Small dense symmetric-matrix toolkit: covariance, mat-vec, power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::{dot, Point};
use crate::scalar::Scalar;

/// Row-major dense `n x n` symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.n + i] = d;
        }
        m
    }

    /// Builds from row-major data; fails unless the entries are finite and symmetric to 1e-12.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        let m = Self { n, data };
        if !m.is_symmetric(T::lit(1e-12)) {
            return Err(Error::invalid("matrix", "not symmetric"));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn matvec(&self, x: &Point<T>) -> Result<Point<T>> {
        x.ensure_dim(self.n)?;
        Ok(self.matvec_slice(x.as_slice()))
    }

    pub(crate) fn matvec_slice(&self, x: &[T]) -> Point<T> {
        Point::from_vec_unchecked((0..self.n).map(|i| dot(self.row(i), x)).collect())
    }

    /// `x^T M x`
    pub fn quad_form(&self, x: &Point<T>) -> Result<T> {
        Ok(self.matvec(x)?.dot(x))
    }

    /// Largest eigenvalue by power iteration with a seeded random start.
    ///
    /// Stops when the Rayleigh quotient changes by at most `rel_tol` relative to
    /// its magnitude. Intended for positive semidefinite input.
    pub fn largest_eigenvalue(&self, rel_tol: T, max_iter: usize, seed: u64) -> Result<T> {
        if self.n == 0 {
            return Ok(T::zero());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start: Vec<T> = (0..self.n)
            .map(|_| T::lit(rng.random_range(-1.0..1.0)))
            .collect();
        let mut v = Point::from_vec_unchecked(start);
        let nv = v.norm();
        v = v.scaled(nv.recip());
        let mut lambda = T::zero();
        for it in 0..max_iter {
            let w = self.matvec_slice(v.as_slice());
            let next = w.dot(&v);
            let nw = w.norm();
            if nw == T::zero() {
                return Ok(T::zero());
            }
            v = w.scaled(nw.recip());
            if it > 0 && (next - lambda).abs() <= rel_tol * next.abs() {
                return Ok(next);
            }
            lambda = next;
        }
        Err(Error::NotConverged {
            what: "power iteration",
            iterations: max_iter,
            best: lambda.as_f64(),
        })
    }

    pub fn cast<U: Scalar>(&self) -> SymMatrix<U> {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Biased sample covariance `(1/NS) sum z z^T - (1/NS^2) (sum z)(sum z)^T`.
///
/// Zero entries are skipped when accumulating outer products.
pub fn covariance<'a, T: Scalar>(
    dim: usize,
    rows: impl ExactSizeIterator<Item = &'a [T]>,
) -> Result<SymMatrix<T>> {
    let ns = rows.len();
    if ns == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut second = vec![T::zero(); dim * dim];
    let mut sum = vec![T::zero(); dim];
    let mut nz: Vec<(usize, T)> = Vec::with_capacity(dim);
    for z in rows {
        if z.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: z.len(),
            });
        }
        nz.clear();
        nz.extend(z.iter().copied().enumerate().filter(|&(_, v)| v != T::zero()));
        for &(i, zi) in &nz {
            sum[i] += zi;
            let row = &mut second[i * dim..(i + 1) * dim];
            for &(j, zj) in nz.iter().filter(|&&(j, _)| j >= i) {
                row[j] += zi * zj;
            }
        }
    }
    let nsf = T::from_usize_lossy(ns);
    let mut data = vec![T::zero(); dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v = second[i * dim + j] / nsf - (sum[i] * sum[j]) / (nsf * nsf);
            data[i * dim + j] = v;
            data[j * dim + i] = v;
        }
    }
    Ok(SymMatrix { n: dim, data })
}
