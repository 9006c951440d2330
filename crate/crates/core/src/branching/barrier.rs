//! Absorbing barriers indexed by generation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spine_law::StabilityIndex;

/// Upper barrier `a i^{exponent}` (or `eps i` in linear mode), with an
/// optional lower barrier `(a - b) i^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec<T> {
    pub a: T,
    pub exponent: T,
    pub lower_offset: Option<T>,
    pub linear_eps: Option<T>,
    /// No barrier at all.
    pub absent: bool,
}

impl<T: Real> BarrierSpec<T> {
    /// `a i^{1/(1+alpha)}`.
    pub fn power(a: T, alpha: StabilityIndex<T>) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::param("a", "must be positive"));
        }
        Ok(Self { a, exponent: alpha.barrier_exponent(), lower_offset: None, linear_eps: None, absent: false })
    }

    /// Corridor `[(a - b) i^{1/(1+alpha)}, a i^{1/(1+alpha)}]`, `b > 0`.
    pub fn two_barrier(a: T, b: T, alpha: StabilityIndex<T>) -> Result<Self> {
        if !(b > T::zero()) || !b.is_finite() {
            return Err(Error::param("b", "must be positive"));
        }
        Ok(Self { lower_offset: Some(b), ..Self::power(a, alpha)? })
    }

    /// `eps i`.
    pub fn linear(eps: T) -> Self {
        Self { a: T::zero(), exponent: T::one(), lower_offset: None, linear_eps: Some(eps), absent: false }
    }

    pub fn none() -> Self {
        Self { a: T::zero(), exponent: T::one(), lower_offset: None, linear_eps: None, absent: true }
    }

    /// Same shape with a different coefficient `a`.
    pub fn with_a(&self, a: T) -> Self {
        Self { a, ..*self }
    }

    pub fn upper(&self, i: u64) -> T {
        if self.absent {
            return T::infinity();
        }
        let x = T::lit(i as f64);
        match self.linear_eps {
            Some(eps) => eps * x,
            None => self.a * x.powf(self.exponent),
        }
    }

    pub fn lower(&self, i: u64) -> T {
        match (self.lower_offset, self.absent) {
            (Some(b), false) => (self.a - b) * T::lit(i as f64).powf(self.exponent),
            _ => T::neg_infinity(),
        }
    }

    pub fn contains(&self, i: u64, x: T) -> bool {
        x <= self.upper(i) && x >= self.lower(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let al = StabilityIndex::new(2.0f64).unwrap();
        let p = BarrierSpec::power(2.0, al).unwrap();
        assert!((p.upper(8) - 4.0).abs() < 1e-14);
        assert_eq!(p.lower(8), f64::NEG_INFINITY);
        let t = BarrierSpec::two_barrier(2.0, 0.5, al).unwrap();
        assert!((t.lower(8) - 3.0).abs() < 1e-14);
        assert!(t.upper(5) > t.lower(5));
        assert!(BarrierSpec::two_barrier(2.0, 0.0, al).is_err());
        assert_eq!(BarrierSpec::linear(-0.1).upper(10), -1.0);
        assert!(BarrierSpec::<f64>::none().contains(3, 1e300));
    }
}
