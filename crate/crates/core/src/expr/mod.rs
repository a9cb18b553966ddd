//! Symbolic expressions over the Gaussian rationals.
//!
//! Every [`Expr`] is kept in an expanded canonical form and hash-consed, so two
//! structurally equal expressions share one allocation and compare by pointer.

mod coeff;
mod context;
mod eval;
mod intern;
mod jet;
mod latex;
mod parse;
mod poly;
mod print;
mod rewrite;
mod subst;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use coeff::{coeff_cmp, coeff_from_rat, coeff_int, coeff_to_rat, Coeff, Rat};
pub use context::{Context, Differ};
pub(crate) use eval::leaf_degrees;
pub use eval::{
    evaluate, float_sample, is_zero, is_zero_with, EvalError, EvalScalar, Sampler, Verdict,
    Witness,
};
pub use jet::{Jet, Name};
pub use latex::to_latex;
pub use parse::{parse, parse_with, ParseError, Signature};
pub use rewrite::{Rewritten, RewriteError, RewriteSystem, Rule};
pub use subst::{collect_atoms, collect_jets};

use poly::Poly;

/// Shared, interned expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[doc(hidden)]
pub struct Node {
    kind: Kind,
    hash: u64,
}

/// Canonical node shapes.
///
/// `Mul` holds a coefficient and factors sorted by base with nonzero rational
/// exponents. `Add` holds a constant and monomials with coefficient one, each
/// paired with its coefficient. Sums only appear as factor bases under
/// negative or fractional exponents.
#[derive(Clone)]
pub enum Kind {
    Num(Coeff),
    Sym(Name),
    Jet(Jet),
    Exp(Expr),
    Ln(Expr),
    /// Antiderivative marker: `Int[f; s]`.
    Int(Expr, Name),
    Mul(Coeff, Vec<(Expr, Rat)>),
    Add(Coeff, Vec<(Expr, Coeff)>),
}

impl Expr {
    pub(crate) fn from_kind(kind: Kind) -> Expr {
        intern::intern(kind)
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn zero() -> Expr {
        Expr::num(0)
    }

    pub fn one() -> Expr {
        Expr::num(1)
    }

    pub fn num(k: i64) -> Expr {
        Expr::coeff(coeff_int(k))
    }

    pub fn rat(p: i64, q: i64) -> Expr {
        Expr::coeff(coeff_from_rat(Rat::new(p, q)))
    }

    pub fn coeff(c: Coeff) -> Expr {
        Expr::from_kind(Kind::Num(c))
    }

    /// The imaginary unit.
    pub fn i() -> Expr {
        Expr::coeff(Coeff::new(Default::default(), num_traits::One::one()))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::from_kind(Kind::Sym(Name::from(name)))
    }

    pub fn jet(j: Jet) -> Expr {
        Expr::from_kind(Kind::Jet(j))
    }

    /// Underived dependent variable, e.g. `u` or `v[2]`.
    pub fn field(name: &str, index: Option<u32>) -> Expr {
        Expr::jet(Jet::new(name, index, &[]))
    }

    pub fn exp(arg: &Expr) -> Expr {
        poly::exp(arg)
    }

    pub fn ln(arg: &Expr) -> Expr {
        poly::ln(arg)
    }

    pub fn sqrt(arg: &Expr) -> Expr {
        arg.pow(Rat::new(1, 2))
    }

    /// Antiderivative marker with respect to `var`.
    pub fn int(integrand: &Expr, var: &str) -> Expr {
        poly::int(integrand, &Name::from(var))
    }

    pub fn pow(&self, e: Rat) -> Expr {
        poly::pow(self, e)
    }

    pub fn powi(&self, k: i64) -> Expr {
        self.pow(Rat::from_integer(k))
    }

    /// Power with a symbolic exponent, which must reduce to a real rational.
    pub fn pow_expr(&self, e: &Expr) -> Option<Expr> {
        let Kind::Num(c) = e.kind() else { return None };
        coeff_to_rat(c).map(|r| self.pow(r))
    }

    pub fn inv(&self) -> Expr {
        self.powi(-1)
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut p = Poly::zero();
        for e in items {
            p.add_expr(e, &coeff_int(1));
        }
        p.into_expr()
    }

    pub fn product<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut p = Poly::constant(coeff_int(1));
        for e in items {
            p = p.mul(&Poly::from_expr(e));
        }
        p.into_expr()
    }

    pub fn scale(&self, c: &Coeff) -> Expr {
        let mut p = Poly::zero();
        p.add_expr(self, c);
        p.into_expr()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind(), Kind::Num(c) if num_traits::Zero::is_zero(c))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.kind(), Kind::Num(c) if num_traits::One::is_one(c))
    }

    pub fn as_coeff(&self) -> Option<&Coeff> {
        match self.kind() {
            Kind::Num(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_rat(&self) -> Option<Rat> {
        self.as_coeff().and_then(coeff_to_rat)
    }

    pub fn as_jet(&self) -> Option<&Jet> {
        match self.kind() {
            Kind::Jet(j) => Some(j),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self.kind() {
            Kind::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Terms of the expanded form as `(coefficient, monomial)` pairs. The
    /// monomial of the constant term is `1`.
    pub fn terms(&self) -> Vec<(Coeff, Expr)> {
        match self.kind() {
            Kind::Add(c0, ts) => {
                let mut out: Vec<_> = ts.iter().map(|(m, c)| (c.clone(), m.clone())).collect();
                if !num_traits::Zero::is_zero(c0) {
                    out.push((c0.clone(), Expr::one()));
                }
                out
            }
            Kind::Num(c) if num_traits::Zero::is_zero(c) => vec![],
            Kind::Num(c) => vec![(c.clone(), Expr::one())],
            Kind::Mul(c, fs) => vec![(c.clone(), monomial(fs.clone()))],
            _ => vec![(coeff_int(1), self.clone())],
        }
    }

    /// Factors of a monomial as `(base, exponent)` pairs together with the
    /// numeric coefficient. Sums are returned as a single factor.
    pub fn factors(&self) -> (Coeff, Vec<(Expr, Rat)>) {
        match self.kind() {
            Kind::Num(c) => (c.clone(), vec![]),
            Kind::Mul(c, fs) => (c.clone(), fs.clone()),
            _ => (coeff_int(1), vec![(self.clone(), Rat::from_integer(1))]),
        }
    }

    /// Number of nodes, counting shared children once per occurrence.
    pub fn size(&self) -> usize {
        1 + match self.kind() {
            Kind::Num(_) | Kind::Sym(_) | Kind::Jet(_) => 0,
            Kind::Exp(a) | Kind::Ln(a) | Kind::Int(a, _) => a.size(),
            Kind::Mul(_, fs) => fs.iter().map(|(b, _)| b.size()).sum(),
            Kind::Add(_, ts) => ts.iter().map(|(m, _)| m.size()).sum(),
        }
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn rank(&self) -> u8 {
        match self.kind() {
            Kind::Num(_) => 0,
            Kind::Sym(_) => 1,
            Kind::Jet(_) => 2,
            Kind::Exp(_) => 3,
            Kind::Ln(_) => 4,
            Kind::Int(..) => 5,
            Kind::Mul(..) => 6,
            Kind::Add(..) => 7,
        }
    }
}

pub(crate) fn monomial(fs: Vec<(Expr, Rat)>) -> Expr {
    if fs.is_empty() {
        return Expr::one();
    }
    if fs.len() == 1 && fs[0].1 == Rat::from_integer(1) {
        return fs[0].0.clone();
    }
    Expr::from_kind(Kind::Mul(coeff_int(1), fs))
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        let r = self.rank().cmp(&other.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.kind(), other.kind()) {
            (Kind::Num(a), Kind::Num(b)) => coeff_cmp(a, b),
            (Kind::Sym(a), Kind::Sym(b)) => a.cmp(b),
            (Kind::Jet(a), Kind::Jet(b)) => a.cmp(b),
            (Kind::Exp(a), Kind::Exp(b)) | (Kind::Ln(a), Kind::Ln(b)) => a.cmp(b),
            (Kind::Int(f, s), Kind::Int(g, t)) => s.cmp(t).then_with(|| f.cmp(g)),
            (Kind::Mul(c, fs), Kind::Mul(d, gs)) => {
                cmp_factors(fs, gs).then_with(|| coeff_cmp(c, d))
            }
            (Kind::Add(c, ts), Kind::Add(d, us)) => {
                let mut o = Ordering::Equal;
                for ((m, a), (n, b)) in ts.iter().zip(us) {
                    o = m.cmp(n).then_with(|| coeff_cmp(a, b));
                    if o != Ordering::Equal {
                        break;
                    }
                }
                o.then(ts.len().cmp(&us.len())).then_with(|| coeff_cmp(c, d))
            }
            _ => unreachable!("ranks already compared"),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn cmp_factors(a: &[(Expr, Rat)], b: &[(Expr, Rat)]) -> Ordering {
    for ((x, e), (y, f)) in a.iter().zip(b) {
        let o = x.cmp(y).then(e.cmp(f));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Order of monomials inside a sum: higher total degree first, then by factors.
pub(crate) fn cmp_monomials(a: &Expr, b: &Expr) -> Ordering {
    let da = degree(a);
    let db = degree(b);
    db.cmp(&da).then_with(|| {
        let fa = a.factors().1;
        let fb = b.factors().1;
        cmp_factors(&fa, &fb)
    })
}

fn degree(m: &Expr) -> Rat {
    match m.kind() {
        Kind::Mul(_, fs) => fs.iter().map(|(_, e)| *e).sum(),
        Kind::Num(_) => Rat::from_integer(0),
        _ => Rat::from_integer(1),
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                std::ops::$tr::$method(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$method(&self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                std::ops::$tr::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| {
    let mut p = Poly::from_expr(a);
    p.add_expr(b, &coeff_int(1));
    p.into_expr()
});
binop!(Sub, sub, |a, b| {
    let mut p = Poly::from_expr(a);
    p.add_expr(b, &coeff_int(-1));
    p.into_expr()
});
binop!(Mul, mul, |a, b| Poly::from_expr(a).mul(&Poly::from_expr(b)).into_expr());
binop!(Div, div, |a, b| {
    assert!(!b.is_zero(), "division by the zero expression");
    a * b.inv()
});

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&coeff_int(-1))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(k: i64) -> Expr {
        Expr::num(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expr {
        Expr::field("u", None)
    }

    #[test]
    fn interning_shares_nodes() {
        let a = Expr::sym("x") + u() * Expr::num(2);
        let b = u() * Expr::num(2) + Expr::sym("x");
        assert!(a.ptr_eq(&b));
    }

    #[test]
    fn like_terms_collect() {
        let x = Expr::sym("x");
        let e = &x + &x - Expr::num(2) * &x;
        assert!(e.is_zero());
    }

    #[test]
    fn positive_powers_of_sums_expand() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let s = (&x + &y).powi(2);
        let t = &x * &x + Expr::num(2) * &x * &y + &y * &y;
        assert_eq!(s, t);
    }

    #[test]
    fn reciprocal_of_sum_is_monic() {
        let x = Expr::sym("x");
        let a = (Expr::num(2) + Expr::num(2) * &x).inv();
        let b = Expr::rat(1, 2) * (Expr::one() + &x).inv();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_roots_fold() {
        assert_eq!(Expr::num(16).pow(Rat::new(3, 4)), Expr::num(8));
        let r = Expr::num(2).pow(Rat::new(1, 2));
        assert_eq!(&r * &r, Expr::num(2));
    }

    #[test]
    fn exp_of_sum_splits() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let a = Expr::exp(&(&x + Expr::num(3) * &y));
        let b = Expr::exp(&x) * Expr::exp(&y).powi(3);
        assert_eq!(a, b);
        assert_eq!(Expr::ln(&Expr::exp(&x)), x);
    }

    #[test]
    fn imaginary_unit_squares() {
        assert_eq!(Expr::i() * Expr::i(), Expr::num(-1));
    }
}
