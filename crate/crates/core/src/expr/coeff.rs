use std::cmp::Ordering;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact Gaussian rational `a + b i`.
pub type Coeff = Complex<BigRational>;

/// Small rational used for exponents.
pub type Rat = Ratio<i64>;

pub fn coeff_int(k: i64) -> Coeff {
    Coeff::new(BigRational::from_integer(BigInt::from(k)), BigRational::zero())
}

pub fn coeff_from_rat(r: Rat) -> Coeff {
    Coeff::new(big(r), BigRational::zero())
}

pub(crate) fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// The coefficient as a small real rational, if it is one.
pub fn coeff_to_rat(c: &Coeff) -> Option<Rat> {
    if !c.im.is_zero() {
        return None;
    }
    let n = c.re.numer().to_i64()?;
    let d = c.re.denom().to_i64()?;
    Some(Rat::new(n, d))
}

/// Total order used for canonical sorting: real part first, then imaginary.
pub fn coeff_cmp(a: &Coeff, b: &Coeff) -> Ordering {
    a.re.cmp(&b.re).then_with(|| a.im.cmp(&b.im))
}

pub(crate) fn coeff_powi(c: &Coeff, k: i64) -> Coeff {
    if k == 0 {
        return Coeff::one();
    }
    let base = if k < 0 {
        assert!(!c.is_zero(), "zero raised to a negative power");
        c.inv()
    } else {
        c.clone()
    };
    let mut acc = Coeff::one();
    let mut sq = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &sq;
        }
        sq = &sq * &sq;
        e >>= 1;
    }
    acc
}

/// Exact `q`-th root of a positive rational.
pub(crate) fn rat_root(r: &BigRational, q: u32) -> Option<BigRational> {
    if !r.is_positive() {
        return None;
    }
    let n = r.numer().nth_root(q);
    let d = r.denom().nth_root(q);
    if num_traits::pow(n.clone(), q as usize) == *r.numer()
        && num_traits::pow(d.clone(), q as usize) == *r.denom()
    {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// `c^e` split into a coefficient and a leftover numeric factor that has no
/// exact rational value.
pub(crate) fn coeff_pow(c: &Coeff, e: Rat) -> (Coeff, Option<(Coeff, Rat)>) {
    if e.is_integer() {
        return (coeff_powi(c, e.to_integer()), None);
    }
    if c.is_zero() {
        assert!(e.is_positive(), "zero raised to a negative power");
        return (Coeff::zero(), None);
    }
    if c.is_one() {
        return (Coeff::one(), None);
    }
    let whole = e.floor();
    let frac = e - whole;
    let head = coeff_powi(c, whole.to_integer());
    if c.im.is_zero() && c.re.is_positive() {
        let q = *frac.denom() as u32;
        if let Some(root) = rat_root(&c.re, q) {
            let r = Coeff::new(root, BigRational::zero());
            return (head * coeff_powi(&r, *frac.numer()), None);
        }
    }
    (head, Some((c.clone(), frac)))
}

pub(crate) fn is_real(c: &Coeff) -> bool {
    c.im.is_zero()
}
