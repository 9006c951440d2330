//! Adaptive Gauss-Kronrod quadrature and Gauss-Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

fn gk15<T: Real>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.as_f64().total_cmp(&other.error.as_f64())
    }
}

/// Globally adaptive G7-K15 quadrature on a finite interval.
pub fn integrate<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, opts: QuadOptions) -> Result<Quad<T>> {
    if a == b {
        return Ok(Quad { value: T::zero(), error: T::zero(), intervals: 0 });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::DivergentIntegral(format!("non-finite integrand on [{}, {}]", a.as_f64(), b.as_f64())));
        }
        let target = T::lit(opts.abs_tol).max(T::lit(opts.rel_tol) * total.abs());
        if total_err <= target {
            return Ok(Quad { value: total, error: total_err, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailed { a: a.as_f64(), b: b.as_f64(), error: total_err.as_f64() });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer divisible in this precision.
            return Err(Error::QuadratureFailed { a: a.as_f64(), b: b.as_f64(), error: total_err.as_f64() });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum periodically to shed accumulated cancellation error.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integral over `[a, +inf)` via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<T: Real>(mut f: impl FnMut(T) -> T, a: T, opts: QuadOptions) -> Result<Quad<T>> {
    integrate(
        |t: T| {
            let one_minus = T::one() - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                T::zero()
            }
        },
        T::zero(),
        T::one(),
        opts,
    )
}

/// Integral over `(-inf, b]` via `x = b - t / (1 - t)`.
pub fn integrate_from_neg_infinity<T: Real>(mut f: impl FnMut(T) -> T, b: T, opts: QuadOptions) -> Result<Quad<T>> {
    integrate_to_infinity(|y: T| f(b + b - y), b, opts)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed Gauss-Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { nodes: x.into_iter().map(T::lit).collect(), weights: w.into_iter().map(T::lit).collect() }
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T, a: T, b: T) -> T {
        let half = T::lit(0.5);
        let c = (a + b) * half;
        let h = (b - a) * half;
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<T>() * h
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn points(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5);
        let c = (a + b) * half;
        let h = (b - a) * half;
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, w * h))
    }
}
