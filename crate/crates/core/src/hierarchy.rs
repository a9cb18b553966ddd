//! The operators `K = δ³ − δ` and `J = −δ u δ⁻¹ u δ` on periodic grids.
//!
//! Derivatives are spectral; `δ⁻¹` is the zero-mean periodic antiderivative
//! and refuses integrands whose mean is not zero.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest mean tolerated by `δ⁻¹`.
pub const MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} must be even and at least 16")]
    Size(usize),
    #[error("grids differ: {0} and {1} points")]
    Mismatch(usize, usize),
    #[error("integrand has mean {0:e}; its antiderivative is not periodic")]
    NonzeroMean(f64),
}

/// Samples of a periodic function at `x_k = k L / N`, `L = 2π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    pub n: usize,
    pub length: f64,
    pub samples: Vec<T>,
}

pub trait GridScalar: Float + FloatConst + FftNum {}
impl<T: Float + FloatConst + FftNum> GridScalar for T {}

fn cast<T: GridScalar>(x: f64) -> T {
    T::from(x).expect("representable")
}

impl<T: GridScalar> GridFunction<T> {
    pub fn new(samples: Vec<T>) -> Result<Self, GridError> {
        let n = samples.len();
        if n < 16 || n % 2 == 1 {
            return Err(GridError::Size(n));
        }
        Ok(GridFunction { n, length: 2.0 * PI, samples })
    }

    pub fn from_fn(n: usize, f: impl Fn(T) -> T) -> Result<Self, GridError> {
        let two_pi = T::PI() + T::PI();
        let nt = cast::<T>(n as f64);
        Self::new((0..n).map(|k| f(two_pi * cast::<T>(k as f64) / nt)).collect())
    }

    pub fn constant(n: usize, c: T) -> Result<Self, GridError> {
        Self::new(vec![c; n])
    }

    pub fn x(&self, k: usize) -> T {
        (T::PI() + T::PI()) * cast::<T>(k as f64) / cast::<T>(self.n as f64)
    }

    pub fn mean(&self) -> T {
        self.samples.iter().fold(T::zero(), |a, &b| a + b) / cast::<T>(self.n as f64)
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
    }

    fn same_grid(&self, other: &Self) -> Result<(), GridError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(GridError::Mismatch(self.n, other.n))
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, GridError> {
        self.same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { n: self.n, length: self.length, samples })
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GridError> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|a| a * c)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridFunction { n: self.n, length: self.length, samples: self.samples.iter().map(|&a| f(a)).collect() }
    }
}

/// Forward and inverse transforms for one grid size.
pub struct Spectral<T: GridScalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: GridScalar> Spectral<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Applies the Fourier multiplier `symbol(k)`; the Nyquist mode is dropped.
    pub fn multiplier(&self, f: &GridFunction<T>, symbol: impl Fn(i64) -> Complex<T>) -> GridFunction<T> {
        assert_eq!(f.n, self.n, "transform planned for another grid");
        let mut buf: Vec<Complex<T>> = f.samples.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        let scale = cast::<T>(self.n as f64).recip();
        for (k, c) in buf.iter_mut().enumerate() {
            let m = self.wavenumber(k);
            *c = if k == self.n / 2 { Complex::new(T::zero(), T::zero()) } else { *c * symbol(m) * scale };
        }
        self.inverse.process(&mut buf);
        GridFunction { n: f.n, length: f.length, samples: buf.into_iter().map(|c| c.re).collect() }
    }

    /// `∂^order f`.
    pub fn derivative(&self, f: &GridFunction<T>, order: u32) -> GridFunction<T> {
        self.multiplier(f, |k| Complex::new(T::zero(), cast::<T>(k as f64)).powu(order))
    }

    /// Zero-mean antiderivative, for integrands whose mean is below `MEAN_TOL`.
    pub fn antiderivative(&self, g: &GridFunction<T>) -> Result<GridFunction<T>, GridError> {
        let mean = g.mean().to_f64().unwrap_or(f64::NAN);
        if !(mean.abs() <= MEAN_TOL) {
            return Err(GridError::NonzeroMean(mean));
        }
        Ok(self.multiplier(g, |k| {
            if k == 0 {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::zero(), -cast::<T>(k as f64).recip())
            }
        }))
    }

    /// `K f = f_xxx − f_x`.
    pub fn apply_k(&self, f: &GridFunction<T>) -> GridFunction<T> {
        self.multiplier(f, |k| {
            let kt = cast::<T>(k as f64);
            Complex::new(T::zero(), -(kt * kt * kt) - kt)
        })
    }

    /// `K⁻¹ g` on mean-free data; the symbol `−i k (k² + 1)` vanishes only at `k = 0`.
    pub fn solve_k(&self, g: &GridFunction<T>) -> Result<GridFunction<T>, GridError> {
        let mean = g.mean().to_f64().unwrap_or(f64::NAN);
        if !(mean.abs() <= MEAN_TOL) {
            return Err(GridError::NonzeroMean(mean));
        }
        Ok(self.multiplier(g, |k| {
            if k == 0 {
                return Complex::new(T::zero(), T::zero());
            }
            let kt = cast::<T>(k as f64);
            Complex::new(T::zero(), -(kt * kt * kt) - kt).inv()
        }))
    }

    /// `J f = −∂(u δ⁻¹(u f_x))`.
    pub fn apply_j(&self, u: &GridFunction<T>, f: &GridFunction<T>) -> Result<GridFunction<T>, GridError> {
        let fx = self.derivative(f, 1);
        let inner = self.antiderivative(&u.mul(&fx)?)?;
        Ok(self.derivative(&u.mul(&inner)?, 1).scale(-T::one()))
    }

    /// `‖J v_next − K v‖_∞`.
    pub fn check_recursion(
        &self,
        u: &GridFunction<T>,
        v: &GridFunction<T>,
        v_next: &GridFunction<T>,
    ) -> Result<T, GridError> {
        let lhs = self.apply_j(u, v_next)?;
        Ok(lhs.sub(&self.apply_k(v))?.max_abs())
    }

    /// A pair `(v, v_next)` with `J v_next = K v`, from `v = K⁻¹ J v_next`.
    pub fn manufacture(
        &self,
        u: &GridFunction<T>,
        v_next: &GridFunction<T>,
    ) -> Result<(GridFunction<T>, GridFunction<T>), GridError> {
        let jv = self.apply_j(u, v_next)?;
        Ok((self.solve_k(&jv)?, v_next.clone()))
    }
}

pub fn apply_k<T: GridScalar>(f: &GridFunction<T>) -> GridFunction<T> {
    Spectral::new(f.n).apply_k(f)
}

pub fn apply_j<T: GridScalar>(u: &GridFunction<T>, f: &GridFunction<T>) -> Result<GridFunction<T>, GridError> {
    Spectral::new(f.n).apply_j(u, f)
}

pub fn check_recursion<T: GridScalar>(
    u: &GridFunction<T>,
    v: &GridFunction<T>,
    v_next: &GridFunction<T>,
) -> Result<T, GridError> {
    Spectral::new(v.n).check_recursion(u, v, v_next)
}

/// Fourth-order central differences of `f` at `x`: `(f', f''')`.
pub fn fd4<T: Float>(f: &impl Fn(T) -> T, x: T, h: T) -> (T, T) {
    let c = |k: f64| T::from(k).expect("representable");
    let g = |k: f64| f(x + h * c(k));
    let d1 = (g(-2.0) - c(8.0) * g(-1.0) + c(8.0) * g(1.0) - g(2.0)) / (c(12.0) * h);
    let d3 = (g(-3.0) - c(8.0) * g(-2.0) + c(13.0) * g(-1.0) - c(13.0) * g(1.0) + c(8.0) * g(2.0) - g(3.0))
        / (c(8.0) * h * h * h);
    (d1, d3)
}

/// `K f` at `x` by fourth-order differences.
pub fn fd4_k<T: Float>(f: &impl Fn(T) -> T, x: T, h: T) -> T {
    let (d1, d3) = fd4(f, x, h);
    d3 - d1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64) -> GridFunction<f64> {
        GridFunction::from_fn(64, f).unwrap()
    }

    fn close(a: &GridFunction<f64>, b: &GridFunction<f64>, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(GridFunction::<f64>::new(vec![0.0; 15]), Err(GridError::Size(15)));
        assert_eq!(GridFunction::<f64>::new(vec![0.0; 18]).unwrap().n, 18);
    }

    #[test]
    fn k_of_sine() {
        let k = apply_k(&grid(f64::sin));
        let err = k.sub(&grid(|x| -2.0 * x.cos())).unwrap().max_abs();
        assert!(err < 1e-10, "{err:e}");
        assert!(apply_k(&GridFunction::constant(32, 3.0).unwrap()).max_abs() < 1e-13);
    }

    #[test]
    fn j_with_unit_u_is_minus_derivative() {
        let one = GridFunction::constant(64, 1.0).unwrap();
        let j = apply_j(&one, &grid(f64::sin)).unwrap();
        assert!(close(&j, &grid(|x| -x.cos()), 1e-12));
        let zero = GridFunction::constant(64, 0.0).unwrap();
        assert!(apply_j(&zero, &grid(f64::sin)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn antiderivative_refuses_mean() {
        let s = Spectral::new(64);
        let g = grid(|x| 1.0 + x.cos());
        assert!(matches!(s.antiderivative(&g), Err(GridError::NonzeroMean(m)) if (m - 1.0).abs() < 1e-12));
        let u = grid(|x| 1.0 + 0.5 * x.sin());
        assert!(matches!(apply_j(&u, &grid(f64::cos)), Err(GridError::NonzeroMean(_))));
    }

    #[test]
    fn manufactured_pair_satisfies_recursion() {
        let s = Spectral::new(128);
        let u = GridFunction::from_fn(128, |x: f64| 1.0 + 0.3 * x.sin()).unwrap();
        let v_next = u.map(|a| a * a);
        let (v, v_next) = s.manufacture(&u, &v_next).unwrap();
        assert!(s.check_recursion(&u, &v, &v_next).unwrap() < 1e-10);
        let unrelated = GridFunction::from_fn(128, |x: f64| (2.0 * x).cos()).unwrap();
        assert!(s.check_recursion(&u, &unrelated, &v_next).unwrap() > 1e-2);
    }

    #[test]
    fn fd4_is_exact_on_low_degree_polynomials() {
        let (d1, d3) = fd4(&|x: f64| x * x * x + 2.0 * x, 0.5, 0.1);
        assert!((d1 - 2.75).abs() < 1e-12 && (d3 - 6.0).abs() < 1e-9, "{d1} {d3}");
    }

    #[test]
    fn grid_json_round_trip() {
        let g = GridFunction::from_fn(16, |x: f64| x.cos()).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GridFunction<f64>>(&text).unwrap(), g);
    }
}
