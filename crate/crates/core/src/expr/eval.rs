//! Evaluation at sample points and the randomized zero test.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::coeff::{coeff_powi, rat_root};
use super::{Coeff, Expr, Kind, Rat};

/// Scalars an expression can be evaluated in.
pub trait EvalScalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_coeff(c: &Coeff) -> Option<Self>;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;
    /// Principal `q`-th root, `None` when it is not representable.
    fn root(&self, q: u32) -> Option<Self>;
    fn exp(&self) -> Option<Self> {
        None
    }
    fn ln(&self) -> Option<Self> {
        None
    }
    fn magnitude(&self) -> f64;

    fn powi(&self, k: i64) -> Option<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        let mut sq = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq.clone();
            }
            e >>= 1;
            if e > 0 {
                sq = sq.clone() * sq;
            }
        }
        Some(acc)
    }

    fn powr(&self, e: Rat) -> Option<Self> {
        if e.is_integer() {
            return self.powi(e.to_integer());
        }
        self.root(*e.denom() as u32)?.powi(*e.numer())
    }
}

impl EvalScalar for Coeff {
    fn from_coeff(c: &Coeff) -> Option<Self> {
        Some(c.clone())
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) { None } else { Some(Complex::inv(self)) }
    }
    fn root(&self, q: u32) -> Option<Self> {
        if !self.im.is_zero() {
            return None;
        }
        rat_root(&self.re, q).map(|r| Complex::new(r, BigRational::zero()))
    }
    fn powi(&self, k: i64) -> Option<Self> {
        if k < 0 && Zero::is_zero(self) {
            return None;
        }
        Some(coeff_powi(self, k))
    }
    fn magnitude(&self) -> f64 {
        use num_traits::ToPrimitive;
        let re = self.re.to_f64().unwrap_or(f64::INFINITY);
        let im = self.im.to_f64().unwrap_or(f64::INFINITY);
        re.hypot(im)
    }
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl EvalScalar for $t {
            fn from_coeff(c: &Coeff) -> Option<Self> {
                use num_traits::ToPrimitive;
                if !c.im.is_zero() {
                    return None;
                }
                c.re.to_f64().map(|v| v as $t)
            }
            fn zero() -> Self {
                0.0
            }
            fn one() -> Self {
                1.0
            }
            fn is_zero(&self) -> bool {
                *self == 0.0
            }
            fn inv(&self) -> Option<Self> {
                if *self == 0.0 { None } else { Some(1.0 / self) }
            }
            fn root(&self, q: u32) -> Option<Self> {
                if *self >= 0.0 {
                    Some(self.powf(1.0 / q as $t))
                } else if q % 2 == 1 {
                    Some(-(-self).powf(1.0 / q as $t))
                } else {
                    None
                }
            }
            fn exp(&self) -> Option<Self> {
                Some(Float::exp(*self))
            }
            fn ln(&self) -> Option<Self> {
                if *self > 0.0 { Some(Float::ln(*self)) } else { None }
            }
            fn magnitude(&self) -> f64 {
                self.abs() as f64
            }
        }

        impl EvalScalar for Complex<$t> {
            fn from_coeff(c: &Coeff) -> Option<Self> {
                use num_traits::ToPrimitive;
                Some(Complex::new(c.re.to_f64()? as $t, c.im.to_f64()? as $t))
            }
            fn zero() -> Self {
                Zero::zero()
            }
            fn one() -> Self {
                One::one()
            }
            fn is_zero(&self) -> bool {
                Zero::is_zero(self)
            }
            fn inv(&self) -> Option<Self> {
                if Zero::is_zero(self) { None } else { Some(Complex::inv(self)) }
            }
            fn root(&self, q: u32) -> Option<Self> {
                Some(self.powf(1.0 / q as $t))
            }
            fn exp(&self) -> Option<Self> {
                Some(Complex::exp(*self))
            }
            fn ln(&self) -> Option<Self> {
                if Zero::is_zero(self) { None } else { Some(Complex::ln(*self)) }
            }
            fn magnitude(&self) -> f64 {
                self.norm() as f64
            }
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    Pole,
    #[error("`{0}` has no representable value")]
    NoValue(String),
}

/// Evaluates `e`, asking `leaf` for symbols, jets, markers and (when the
/// scalar has no transcendental functions) `exp`/`ln` atoms.
pub fn evaluate<S: EvalScalar>(
    e: &Expr,
    leaf: &mut dyn FnMut(&Expr) -> Option<S>,
) -> Result<S, EvalError> {
    let mut memo = HashMap::new();
    eval_rec(e, leaf, &mut memo)
}

fn eval_rec<S: EvalScalar>(
    e: &Expr,
    leaf: &mut dyn FnMut(&Expr) -> Option<S>,
    memo: &mut HashMap<Expr, S>,
) -> Result<S, EvalError> {
    if let Some(v) = memo.get(e) {
        return Ok(v.clone());
    }
    let v = match e.kind() {
        Kind::Num(c) => S::from_coeff(c).ok_or_else(|| EvalError::NoValue(e.to_string()))?,
        Kind::Sym(_) | Kind::Jet(_) | Kind::Int(..) => {
            leaf(e).ok_or_else(|| EvalError::Unbound(e.to_string()))?
        }
        Kind::Exp(a) => match leaf(e) {
            Some(v) => v,
            None => eval_rec(a, leaf, memo)?.exp().ok_or_else(|| EvalError::NoValue(e.to_string()))?,
        },
        Kind::Ln(a) => match leaf(e) {
            Some(v) => v,
            None => eval_rec(a, leaf, memo)?.ln().ok_or_else(|| EvalError::NoValue(e.to_string()))?,
        },
        Kind::Mul(c, fs) => {
            let mut acc = S::from_coeff(c).ok_or_else(|| EvalError::NoValue(e.to_string()))?;
            for (b, x) in fs {
                let bv = eval_rec(b, leaf, memo)?;
                if bv.is_zero() && *x < Rat::zero() {
                    return Err(EvalError::Pole);
                }
                let p = bv.powr(*x).ok_or_else(|| EvalError::NoValue(format!("({b})^({x})")))?;
                acc = acc * p;
            }
            acc
        }
        Kind::Add(c0, ts) => {
            let mut acc = S::from_coeff(c0).ok_or_else(|| EvalError::NoValue(e.to_string()))?;
            for (m, c) in ts {
                let mv = eval_rec(m, leaf, memo)?;
                let cv = S::from_coeff(c).ok_or_else(|| EvalError::NoValue(e.to_string()))?;
                acc = acc + cv * mv;
            }
            acc
        }
    };
    memo.insert(e.clone(), v.clone());
    Ok(v)
}

/// Outcome of a zero test.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    ZeroStructural,
    ProbablyZero { trials: usize, seed: u64 },
    Nonzero { witness: Witness },
    Error { message: String },
}

impl Verdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, Verdict::ZeroStructural | Verdict::ProbablyZero { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ZeroStructural => "zero-structural",
            Verdict::ProbablyZero { .. } => "probably-zero",
            Verdict::Nonzero { .. } => "nonzero",
            Verdict::Error { .. } => "error",
        }
    }
}

/// Sample point at which an expression did not vanish.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: BTreeMap<String, String>,
    pub value: String,
}

/// Random exact sample points over the Gaussian rationals.
///
/// Each leaf that appears under an exponent with denominator `q` is sampled
/// as a `q`-th power of a positive rational, so its roots stay exact.
pub struct Sampler {
    rng: ChaCha8Rng,
    degrees: BTreeMap<Expr, u32>,
}

const RESAMPLE_LIMIT: usize = 10;

impl Sampler {
    pub fn new(e: &Expr, seed: u64) -> Sampler {
        let mut degrees = BTreeMap::new();
        leaf_degrees(e, 1, &mut degrees);
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), degrees }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Expr> {
        self.degrees.keys()
    }

    pub fn point(&mut self) -> HashMap<Expr, Coeff> {
        let mut out = HashMap::new();
        for (leaf, &deg) in &self.degrees {
            let v = if deg == 1 {
                let p: i64 = self.rng.gen_range(1..=97);
                let q: i64 = self.rng.gen_range(1..=29);
                let s = if self.rng.gen_bool(0.5) { -p } else { p };
                super::coeff_from_rat(Rat::new(s, q))
            } else {
                let p: i64 = self.rng.gen_range(1..=9);
                let q: i64 = self.rng.gen_range(1..=7);
                coeff_powi(&super::coeff_from_rat(Rat::new(p, q)), deg as i64)
            };
            out.insert(leaf.clone(), v);
        }
        out
    }
}

/// Least common multiple of the root degrees each leaf appears under.
pub(crate) fn leaf_degrees(e: &Expr, deg: u32, out: &mut BTreeMap<Expr, u32>) {
    match e.kind() {
        Kind::Num(_) => {}
        Kind::Sym(_) | Kind::Jet(_) | Kind::Int(..) | Kind::Exp(_) | Kind::Ln(_) => {
            let d = out.entry(e.clone()).or_insert(1);
            *d = d.lcm(&deg);
        }
        Kind::Mul(_, fs) => {
            for (b, x) in fs {
                leaf_degrees(b, *x.denom() as u32, out);
            }
        }
        Kind::Add(_, ts) => {
            for (m, _) in ts {
                leaf_degrees(m, 1, out);
            }
        }
    }
}

/// Randomized exact zero test with `trials` independent sample points.
pub fn is_zero(e: &Expr, trials: usize, seed: u64) -> Verdict {
    is_zero_with(e, trials, seed, &HashMap::new())
}

/// Zero test with some leaves pinned to fixed values.
pub fn is_zero_with(
    e: &Expr,
    trials: usize,
    seed: u64,
    fixed: &HashMap<Expr, Coeff>,
) -> Verdict {
    if e.is_zero() {
        return Verdict::ZeroStructural;
    }
    let mut sampler = Sampler::new(e, seed);
    for _ in 0..trials {
        let mut attempt = 0;
        loop {
            let mut point = sampler.point();
            for (k, v) in fixed {
                point.insert(k.clone(), v.clone());
            }
            let r = evaluate::<Coeff>(e, &mut |l| point.get(l).cloned());
            match r {
                Ok(v) if EvalScalar::is_zero(&v) => break,
                Ok(v) => {
                    let point = point
                        .iter()
                        .map(|(k, val)| (k.to_string(), Expr::coeff(val.clone()).to_string()))
                        .collect();
                    return Verdict::Nonzero {
                        witness: Witness { point, value: Expr::coeff(v).to_string() },
                    };
                }
                Err(err) => {
                    attempt += 1;
                    if attempt >= RESAMPLE_LIMIT {
                        return Verdict::Error {
                            message: format!("no valid sample point after {RESAMPLE_LIMIT} tries: {err}"),
                        };
                    }
                }
            }
        }
    }
    Verdict::ProbablyZero { trials, seed }
}

/// Floating evaluation at random points.
///
/// Leaves named in `positive`, or appearing under fractional powers or inside
/// logarithms, are drawn from `(0.1, 3)`; all others from `(-2, 2)`. Returns
/// `(|value|, scale)` per point, where `scale` is the sum of term magnitudes.
pub fn float_sample(
    e: &Expr,
    seed: u64,
    points: usize,
    positive: &[&str],
) -> Result<Vec<(f64, f64)>, EvalError> {
    let mut leaves: BTreeMap<Expr, bool> = BTreeMap::new();
    float_leaves(e, false, &mut leaves);
    for (leaf, pos) in leaves.iter_mut() {
        let name = match leaf.kind() {
            Kind::Sym(s) => s.to_string(),
            Kind::Jet(j) if j.deriv.is_empty() => j.field.to_string(),
            _ => String::new(),
        };
        if positive.contains(&name.as_str()) {
            *pos = true;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(points);
    for _ in 0..points {
        let mut attempt = 0;
        loop {
            let point: HashMap<Expr, Complex<f64>> = leaves
                .iter()
                .map(|(l, &pos)| {
                    let v = if pos { rng.gen_range(0.1..3.0) } else { rng.gen_range(-2.0..2.0) };
                    (l.clone(), Complex::new(v, 0.0))
                })
                .collect();
            let mut leaf = |l: &Expr| point.get(l).cloned();
            let total = evaluate::<Complex<f64>>(e, &mut leaf);
            let scale = e
                .terms()
                .iter()
                .map(|(c, m)| {
                    let cv = <Complex<f64> as EvalScalar>::from_coeff(c).unwrap_or_default();
                    evaluate::<Complex<f64>>(m, &mut leaf).map(|v| (cv * v).norm())
                })
                .sum::<Result<f64, _>>();
            match (total, scale) {
                (Ok(v), Ok(s)) if v.re.is_finite() && v.im.is_finite() => {
                    out.push((v.norm(), s));
                    break;
                }
                (Err(err), _) | (_, Err(err)) => {
                    attempt += 1;
                    if attempt >= RESAMPLE_LIMIT {
                        return Err(err);
                    }
                }
                _ => {
                    attempt += 1;
                    if attempt >= RESAMPLE_LIMIT {
                        return Err(EvalError::Pole);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn float_leaves(e: &Expr, positive: bool, out: &mut BTreeMap<Expr, bool>) {
    match e.kind() {
        Kind::Num(_) => {}
        Kind::Sym(_) | Kind::Jet(_) | Kind::Int(..) => {
            let p = out.entry(e.clone()).or_insert(false);
            *p |= positive;
        }
        Kind::Exp(a) => float_leaves(a, false, out),
        Kind::Ln(a) => float_leaves(a, true, out),
        Kind::Mul(_, fs) => {
            for (b, x) in fs {
                float_leaves(b, !x.is_integer(), out);
            }
        }
        Kind::Add(_, ts) => {
            for (m, _) in ts {
                float_leaves(m, false, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_roots_survive_sampling() {
        let y = Expr::sym("y");
        let e = y.pow(Rat::new(1, 3)) * y.pow(Rat::new(1, 2)) - y.pow(Rat::new(5, 6));
        assert_eq!(e, Expr::zero());
        let f = (y.pow(Rat::new(1, 3)) + Expr::one()).powi(2) - y.pow(Rat::new(2, 3))
            - Expr::num(2) * y.pow(Rat::new(1, 3)) - Expr::one();
        assert_eq!(is_zero(&f, 5, 1), Verdict::ZeroStructural);
    }

    #[test]
    fn rational_function_identity_is_probably_zero() {
        let x = Expr::sym("x");
        let e = (Expr::one() + &x).inv() * (Expr::one() - &x) - (Expr::one() - &x * &x) / (Expr::one() + &x).powi(2);
        let v = is_zero(&e, 10, 42);
        assert!(matches!(v, Verdict::ProbablyZero { .. }), "{v:?}");
    }

    #[test]
    fn nonzero_has_a_witness() {
        let x = Expr::sym("x");
        match is_zero(&(&x * &x - Expr::one()), 5, 7) {
            Verdict::Nonzero { witness } => assert!(witness.point.contains_key("x")),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let x = Expr::sym("x");
        let e = &x + Expr::sym("y");
        assert_eq!(is_zero(&e, 3, 11), is_zero(&e, 3, 11));
    }

    #[test]
    fn float_path_matches_exp_ln() {
        let x = Expr::sym("x");
        let e = Expr::exp(&Expr::ln(&(Expr::one() + &x * &x))) - Expr::one() - &x * &x;
        let r = float_sample(&e, 3, 10, &[]).unwrap();
        assert!(r.iter().all(|(v, _)| *v < 1e-12));
    }
}
