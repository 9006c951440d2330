//! Perron root of a nonnegative matrix by power iteration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Dense<T>) -> Dense<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                let src = &other.data[k * n..(k + 1) * n];
                for (r, &b) in row.iter_mut().zip(src) {
                    *r = *r + a * b;
                }
            }
        });
        Dense { n, data: out }
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

/// Leading eigenvalue of a nonnegative irreducible matrix.
///
/// The matrix is first squared `squarings` times, which raises the ratio of
/// the two leading eigenvalues to the power `2^squarings`; the returned value
/// is the root of the powered matrix's Perron root.
pub fn perron_root<T: Real>(m: &Dense<T>, squarings: u32, rel_tol: f64, max_iter: usize) -> Result<T> {
    let mut p = m.clone();
    for _ in 0..squarings {
        p = p.matmul(&p);
    }
    let n = m.n;
    let mut v = vec![T::one() / T::count(n); n];
    let mut lambda = T::zero();
    for it in 0..max_iter {
        let w = p.matvec(&v);
        let norm: T = w.iter().copied().sum();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::EigenNotConverged { iterations: it });
        }
        v = w.into_iter().map(|x| x / norm).collect();
        if it > 0 && (norm - lambda).abs() <= T::lit(rel_tol) * norm {
            let exponent = T::lit(2f64.powi(squarings as i32)).recip();
            return Ok(norm.powf(exponent));
        }
        lambda = norm;
    }
    Err(Error::EigenNotConverged { iterations: max_iter })
}
