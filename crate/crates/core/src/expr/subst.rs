use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::coeff::coeff_from_rat;
use super::poly::{self, Poly};
use super::{Coeff, Expr, Jet, Kind, Rat};

/// Rebuilds `e` bottom-up. `f` sees every node first and may replace it.
pub(crate) fn rebuild(
    e: &Expr,
    f: &mut dyn FnMut(&Expr) -> Option<Expr>,
    memo: &mut HashMap<Expr, Expr>,
) -> Expr {
    if let Some(r) = memo.get(e) {
        return r.clone();
    }
    let out = match f(e) {
        Some(r) => r,
        None => match e.kind() {
            Kind::Num(_) | Kind::Sym(_) | Kind::Jet(_) => e.clone(),
            Kind::Exp(a) => {
                let b = rebuild(a, f, memo);
                if b == *a { e.clone() } else { Expr::exp(&b) }
            }
            Kind::Ln(a) => {
                let b = rebuild(a, f, memo);
                if b == *a { e.clone() } else { Expr::ln(&b) }
            }
            Kind::Int(a, s) => {
                let b = rebuild(a, f, memo);
                if b == *a { e.clone() } else { poly::int(&b, s) }
            }
            Kind::Mul(c, fs) => {
                let new: Vec<Expr> = fs.iter().map(|(b, _)| rebuild(b, f, memo)).collect();
                if new.iter().zip(fs).all(|(n, (b, _))| n == b) {
                    e.clone()
                } else {
                    let mut p = Poly::constant(c.clone());
                    for (n, (_, x)) in new.iter().zip(fs) {
                        p = p.mul(&Poly::from_expr(&n.pow(*x)));
                    }
                    p.into_expr()
                }
            }
            Kind::Add(c0, ts) => {
                let new: Vec<Expr> = ts.iter().map(|(m, _)| rebuild(m, f, memo)).collect();
                if new.iter().zip(ts).all(|(n, (m, _))| n == m) {
                    e.clone()
                } else {
                    let mut p = Poly::constant(c0.clone());
                    for (n, (_, c)) in new.iter().zip(ts) {
                        p.add_expr(n, c);
                    }
                    p.into_expr()
                }
            }
        },
    };
    memo.insert(e.clone(), out.clone());
    out
}

impl Expr {
    /// Rebuilds every node through the constructors. Canonical input comes
    /// back unchanged.
    pub fn simplify(&self) -> Expr {
        fn go(e: &Expr, memo: &mut HashMap<Expr, Expr>) -> Expr {
            if let Some(r) = memo.get(e) {
                return r.clone();
            }
            let out = match e.kind() {
                Kind::Num(c) => Expr::coeff(c.clone()),
                Kind::Sym(s) => Expr::sym(s),
                Kind::Jet(j) => Expr::jet(j.clone()),
                Kind::Exp(a) => Expr::exp(&go(a, memo)),
                Kind::Ln(a) => Expr::ln(&go(a, memo)),
                Kind::Int(a, s) => poly::int(&go(a, memo), s),
                Kind::Mul(c, fs) => {
                    let mut p = Poly::constant(c.clone());
                    for (b, x) in fs {
                        p = p.mul(&Poly::from_expr(&go(b, memo).pow(*x)));
                    }
                    p.into_expr()
                }
                Kind::Add(c0, ts) => {
                    let mut p = Poly::constant(c0.clone());
                    for (m, c) in ts {
                        p.add_expr(&go(m, memo), c);
                    }
                    p.into_expr()
                }
            };
            memo.insert(e.clone(), out.clone());
            out
        }
        go(self, &mut HashMap::new())
    }

    /// Simultaneous substitution of atoms (or any subexpression) by value.
    pub fn subs(&self, map: &HashMap<Expr, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut memo = HashMap::new();
        rebuild(self, &mut |n| map.get(n).cloned(), &mut memo)
    }

    pub fn subs_with(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        let mut memo = HashMap::new();
        rebuild(self, f, &mut memo)
    }

    pub fn subs_one(&self, from: &Expr, to: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(from.clone(), to.clone());
        self.subs(&m)
    }

    /// Derivative with respect to an atom, all other atoms held fixed.
    pub fn partial(&self, atom: &Expr) -> Expr {
        let mut d = Partial { atom, memo: HashMap::new() };
        derive(&mut d, self)
    }

    pub fn contains(&self, atom: &Expr) -> bool {
        let mut found = false;
        visit(self, &mut |n| {
            if n == atom {
                found = true;
            }
        });
        found
    }

    pub fn has_symbol(&self, name: &str) -> bool {
        let mut found = false;
        visit(self, &mut |n| {
            if n.as_sym() == Some(name) {
                found = true;
            }
        });
        found
    }

    /// Coefficient of `atom^1` in the expanded form, with terms of any other
    /// degree in `atom` dropped. The atom must only occur polynomially.
    pub fn coefficient(&self, atom: &Expr) -> Expr {
        self.degree_part(atom, Rat::one())
    }

    pub fn degree_part(&self, atom: &Expr, k: Rat) -> Expr {
        let mut p = Poly::zero();
        for (c, m) in self.terms() {
            let (_, fs) = m.factors();
            let mut rest = Vec::with_capacity(fs.len());
            let mut deg = Rat::zero();
            for (b, e) in fs {
                if b == *atom {
                    deg = e;
                } else {
                    rest.push((b, e));
                }
            }
            if deg == k {
                p.add_expr(&super::monomial(rest), &c);
            }
        }
        p.into_expr()
    }

    /// Exponents with which `atom` appears as a direct factor, including zero.
    pub fn degrees_in(&self, atom: &Expr) -> BTreeSet<Rat> {
        let mut out = BTreeSet::new();
        for (_, m) in self.terms() {
            let deg = m.factors().1.into_iter().find(|(b, _)| b == atom).map(|(_, e)| e);
            out.insert(deg.unwrap_or_else(Rat::zero));
        }
        out
    }
}

/// Preorder traversal over every node.
pub(crate) fn visit(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    let mut seen = std::collections::HashSet::new();
    fn go(
        e: &Expr,
        f: &mut dyn FnMut(&Expr),
        seen: &mut std::collections::HashSet<Expr>,
    ) {
        if !seen.insert(e.clone()) {
            return;
        }
        f(e);
        match e.kind() {
            Kind::Num(_) | Kind::Sym(_) | Kind::Jet(_) => {}
            Kind::Exp(a) | Kind::Ln(a) | Kind::Int(a, _) => go(a, f, seen),
            Kind::Mul(_, fs) => fs.iter().for_each(|(b, _)| go(b, f, seen)),
            Kind::Add(_, ts) => ts.iter().for_each(|(m, _)| go(m, f, seen)),
        }
    }
    go(e, f, &mut seen)
}

/// Every symbol and jet occurring anywhere in `e`.
pub fn collect_atoms(e: &Expr) -> BTreeSet<Expr> {
    let mut out = BTreeSet::new();
    visit(e, &mut |n| {
        if matches!(n.kind(), Kind::Sym(_) | Kind::Jet(_)) {
            out.insert(n.clone());
        }
    });
    out
}

pub fn collect_jets(e: &Expr) -> BTreeSet<Jet> {
    let mut out = BTreeSet::new();
    visit(e, &mut |n| {
        if let Kind::Jet(j) = n.kind() {
            out.insert(j.clone());
        }
    });
    out
}

/// A derivation: its values on symbols, jets and antiderivative markers fix it
/// on the whole algebra through the product and chain rules.
pub(crate) trait Derivation {
    fn leaf(&mut self, e: &Expr) -> Expr;
    fn memo(&mut self) -> &mut HashMap<Expr, Expr>;
}

pub(crate) fn derive<D: Derivation + ?Sized>(d: &mut D, e: &Expr) -> Expr {
    if let Some(r) = d.memo().get(e) {
        return r.clone();
    }
    let out = match e.kind() {
        Kind::Num(_) => Expr::zero(),
        Kind::Sym(_) | Kind::Jet(_) | Kind::Int(..) => d.leaf(e),
        Kind::Exp(a) => {
            let da = derive(d, a);
            if da.is_zero() { da } else { e * da }
        }
        Kind::Ln(a) => {
            let da = derive(d, a);
            if da.is_zero() { da } else { da / a }
        }
        Kind::Mul(c, fs) => {
            let mut acc = Poly::zero();
            for (k, (b, x)) in fs.iter().enumerate() {
                let db = derive(d, b);
                if db.is_zero() {
                    continue;
                }
                let mut rest = fs.clone();
                rest[k].1 = x - Rat::one();
                if rest[k].1.is_zero() {
                    rest.remove(k);
                }
                let scale: Coeff = c * coeff_from_rat(*x);
                let term = poly::term(scale, rest);
                acc.add_poly(term.mul(&Poly::from_expr(&db)));
            }
            acc.into_expr()
        }
        Kind::Add(_, ts) => {
            let mut acc = Poly::zero();
            for (m, c) in ts {
                let dm = derive(d, m);
                acc.add_expr(&dm, c);
            }
            acc.into_expr()
        }
    };
    d.memo().insert(e.clone(), out.clone());
    out
}

struct Partial<'a> {
    atom: &'a Expr,
    memo: HashMap<Expr, Expr>,
}

impl Derivation for Partial<'_> {
    fn leaf(&mut self, e: &Expr) -> Expr {
        if e == self.atom {
            return Expr::one();
        }
        match e.kind() {
            Kind::Int(f, s) => {
                let df = derive(self, f);
                poly::int(&df, s)
            }
            _ => Expr::zero(),
        }
    }
    fn memo(&mut self) -> &mut HashMap<Expr, Expr> {
        &mut self.memo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_is_simultaneous() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let mut m = HashMap::new();
        m.insert(x.clone(), y.clone());
        m.insert(y.clone(), x.clone());
        assert_eq!((&x - Expr::num(2) * &y).subs(&m), &y - Expr::num(2) * &x);
    }

    #[test]
    fn partial_through_exp_and_sums() {
        let x = Expr::sym("x");
        let e = Expr::exp(&(Expr::num(3) * &x)) / (Expr::one() + &x);
        let d = e.partial(&x);
        let expect = Expr::num(3) * Expr::exp(&(Expr::num(3) * &x)) / (Expr::one() + &x)
            - Expr::exp(&(Expr::num(3) * &x)) * (Expr::one() + &x).powi(-2);
        assert_eq!(d, expect);
    }

    #[test]
    fn coefficient_extraction() {
        let u = Expr::field("u", None);
        let x = Expr::sym("x");
        let e = Expr::num(3) * &u * &x + &x * &x + Expr::num(2) * &u;
        assert_eq!(e.coefficient(&u), Expr::num(3) * &x + Expr::num(2));
        assert_eq!(e.degree_part(&u, Rat::zero()), &x * &x);
    }
}
