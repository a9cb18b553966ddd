//! Expanded working form used by every arithmetic constructor.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use super::coeff::{coeff_pow, is_real, Coeff, Rat};
use super::{cmp_monomials, coeff_int, coeff_to_rat, monomial, Expr, Kind, Name};

type Factors = Vec<(Expr, Rat)>;

/// Sum of coefficient-weighted monomials keyed by their sorted factor lists.
#[derive(Clone, Default)]
pub(crate) struct Poly {
    terms: HashMap<Factors, Coeff>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Coeff) -> Poly {
        let mut p = Poly::zero();
        p.add_term(vec![], c);
        p
    }

    pub fn from_expr(e: &Expr) -> Poly {
        let mut p = Poly::zero();
        p.add_expr(e, &coeff_int(1));
        p
    }

    fn add_term(&mut self, fs: Factors, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(fs) {
            std::collections::hash_map::Entry::Occupied(mut o) => {
                let v = o.get() + c;
                if v.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    /// Adds `scale * e`.
    pub fn add_expr(&mut self, e: &Expr, scale: &Coeff) {
        if scale.is_zero() {
            return;
        }
        match e.kind() {
            Kind::Num(c) => self.add_term(vec![], c * scale),
            Kind::Mul(c, fs) => self.add_term(fs.clone(), c * scale),
            Kind::Add(c0, ts) => {
                self.add_term(vec![], c0 * scale);
                for (m, c) in ts {
                    let fs = match m.kind() {
                        Kind::Mul(_, fs) => fs.clone(),
                        _ => vec![(m.clone(), Rat::one())],
                    };
                    self.add_term(fs, c * scale);
                }
            }
            _ => self.add_term(vec![(e.clone(), Rat::one())], scale.clone()),
        }
    }

    pub fn add_poly(&mut self, other: Poly) {
        if self.terms.is_empty() {
            *self = other;
            return;
        }
        for (fs, c) in other.terms {
            self.add_term(fs, c);
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (fa, ca) in &self.terms {
            for (fb, cb) in &other.terms {
                let fs = merge(fa, fb);
                normalize_into(&mut out, ca * cb, fs);
            }
        }
        out
    }

    fn powi(&self, k: u64) -> Poly {
        let mut acc = Poly::constant(Coeff::one());
        let mut sq = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    pub fn into_expr(self) -> Expr {
        let mut constant = Coeff::zero();
        let mut ts: Vec<(Expr, Coeff)> = Vec::with_capacity(self.terms.len());
        for (fs, c) in self.terms {
            if fs.is_empty() {
                constant = c;
            } else {
                ts.push((monomial(fs), c));
            }
        }
        if ts.is_empty() {
            return Expr::coeff(constant);
        }
        if ts.len() == 1 && constant.is_zero() {
            let (m, c) = ts.pop().unwrap();
            if c.is_one() {
                return m;
            }
            let fs = m.factors().1;
            return Expr::from_kind(Kind::Mul(c, fs));
        }
        ts.sort_by(|a, b| cmp_monomials(&a.0, &b.0));
        Expr::from_kind(Kind::Add(constant, ts))
    }
}

/// Merges two sorted factor lists, adding exponents of equal bases.
fn merge(a: &[(Expr, Rat)], b: &[(Expr, Rat)]) -> Factors {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if !e.is_zero() {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Adds `c * prod(fs)` to `out`, folding numeric bases and expanding sums
/// raised to positive integer powers. `fs` must be sorted and merged.
fn normalize_into(out: &mut Poly, c: Coeff, fs: Factors) {
    if c.is_zero() {
        return;
    }
    let needs_work = fs.iter().any(|(b, e)| match b.kind() {
        Kind::Num(_) => true,
        Kind::Add(..) => e.is_integer() && e.is_positive(),
        Kind::Mul(..) => true,
        _ => false,
    });
    if !needs_work {
        out.add_term(fs, c);
        return;
    }
    let mut coeff = c;
    let mut kept: Factors = Vec::with_capacity(fs.len());
    let mut extra: Vec<Poly> = Vec::new();
    for (b, e) in fs {
        match b.kind() {
            Kind::Num(v) => {
                let (k, rest) = coeff_pow(v, e);
                coeff *= k;
                if let Some((base, fr)) = rest {
                    kept.push((Expr::coeff(base), fr));
                }
            }
            Kind::Add(..) if e.is_integer() && e.is_positive() => {
                extra.push(Poly::from_expr(&b).powi(e.to_integer() as u64));
            }
            Kind::Mul(..) => {
                let mut p = Poly::zero();
                p.add_expr(&pow(&b, e), &Coeff::one());
                extra.push(p);
            }
            _ => kept.push((b, e)),
        }
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Factors = Vec::with_capacity(kept.len());
    for (b, e) in kept {
        match merged.last_mut() {
            Some((lb, le)) if *lb == b => {
                *le += e;
                if le.is_zero() {
                    merged.pop();
                }
            }
            _ => merged.push((b, e)),
        }
    }
    let mut acc = Poly::zero();
    let redo = merged.iter().any(|(b, e)| match b.kind() {
        Kind::Num(_) => !(e.is_positive() && *e < Rat::one()),
        Kind::Add(..) => e.is_integer() && e.is_positive(),
        _ => false,
    });
    if redo {
        normalize_into(&mut acc, coeff, merged);
    } else {
        acc.add_term(merged, coeff);
    }
    for p in extra {
        acc = acc.mul(&p);
    }
    out.add_poly(acc);
}

/// `c * prod(fs)` for a sorted, merged factor list.
pub(crate) fn term(c: Coeff, fs: Factors) -> Poly {
    let mut p = Poly::zero();
    normalize_into(&mut p, c, fs);
    p
}

pub(crate) fn pow(base: &Expr, e: Rat) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    if e.is_one() {
        return base.clone();
    }
    match base.kind() {
        Kind::Num(c) => {
            let mut p = Poly::zero();
            normalize_into(&mut p, Coeff::one(), vec![(Expr::coeff(c.clone()), e)]);
            p.into_expr()
        }
        Kind::Mul(c, fs) => {
            let mut all: Factors = fs.iter().map(|(b, x)| (b.clone(), x * e)).collect();
            all.push((Expr::coeff(c.clone()), e));
            all.sort_by(|a, b| a.0.cmp(&b.0));
            let mut p = Poly::zero();
            normalize_into(&mut p, Coeff::one(), merge_sorted(all));
            p.into_expr()
        }
        Kind::Add(..) => {
            if e.is_integer() && e.is_positive() {
                return Poly::from_expr(base).powi(e.to_integer() as u64).into_expr();
            }
            let (mut lead, content, mut prim) = primitive_part(base);
            // (-s)^q = (-1)^q s^q fails on the principal branch when s < 0,
            // so only the magnitude of a negative lead leaves the radical.
            if is_real(&lead) && lead.re.is_negative() {
                lead = -lead;
                prim = -prim;
            }
            let mut all: Factors = content.iter().map(|(b, x)| (b.clone(), x * e)).collect();
            all.push((Expr::coeff(lead), e));
            all.push((prim, e));
            all.sort_by(|a, b| a.0.cmp(&b.0));
            let mut p = Poly::zero();
            normalize_into(&mut p, Coeff::one(), merge_sorted(all));
            p.into_expr()
        }
        _ => Expr::from_kind(Kind::Mul(Coeff::one(), vec![(base.clone(), e)])),
    }
}

fn merge_sorted(fs: Factors) -> Factors {
    let mut out: Factors = Vec::with_capacity(fs.len());
    for (b, e) in fs {
        match out.last_mut() {
            Some((lb, le)) if *lb == b => *le += e,
            _ => out.push((b, e)),
        }
    }
    out.retain(|(_, e)| !e.is_zero());
    out
}

/// Splits a sum into leading coefficient, common monomial content and a monic
/// primitive sum: `s = lead * content * prim`.
fn primitive_part(s: &Expr) -> (Coeff, Factors, Expr) {
    let ts = s.terms();
    let fls: Vec<Factors> = ts.iter().map(|(_, m)| m.factors().1).collect();
    let mut content: Factors = fls[0].clone();
    for fl in &fls[1..] {
        content.retain_mut(|(b, e)| match fl.iter().find(|(c, _)| c == b) {
            Some((_, f)) => {
                if f < e {
                    *e = *f;
                }
                true
            }
            None => false,
        });
    }
    content.retain(|(b, _)| !matches!(b.kind(), Kind::Num(_)));
    let reduced = if content.is_empty() {
        s.clone()
    } else {
        let inv: Factors = content.iter().map(|(b, e)| (b.clone(), -e)).collect();
        let mut p = Poly::zero();
        for (c, m) in &ts {
            let fs = merge(&m.factors().1, &inv);
            normalize_into(&mut p, c.clone(), fs);
        }
        p.into_expr()
    };
    let lead = match reduced.kind() {
        Kind::Add(_, ts) => ts[0].1.clone(),
        _ => Coeff::one(),
    };
    let prim = reduced.scale(&lead.inv());
    (lead, content, prim)
}

pub(crate) fn exp(arg: &Expr) -> Expr {
    let mut out = Poly::constant(Coeff::one());
    for (c, m) in arg.terms() {
        let factor = match (coeff_to_rat(&c), m.kind()) {
            (Some(r), Kind::Ln(a)) => a.pow(r),
            (Some(r), _) => {
                let atom = Expr::from_kind(Kind::Exp(m.clone()));
                pow(&atom, r)
            }
            (None, _) => Expr::from_kind(Kind::Exp(m.scale(&c))),
        };
        out = out.mul(&Poly::from_expr(&factor));
    }
    out.into_expr()
}

pub(crate) fn ln(arg: &Expr) -> Expr {
    match arg.kind() {
        Kind::Num(c) if c.is_one() => Expr::zero(),
        Kind::Exp(m) => m.clone(),
        Kind::Mul(c, fs) if is_real(c) && c.re.is_positive() => {
            let mut p = Poly::zero();
            if !c.is_one() {
                p.add_expr(&Expr::from_kind(Kind::Ln(Expr::coeff(c.clone()))), &Coeff::one());
            }
            for (b, e) in fs {
                p.add_expr(&ln(b), &super::coeff_from_rat(*e));
            }
            p.into_expr()
        }
        _ => Expr::from_kind(Kind::Ln(arg.clone())),
    }
}

/// Antiderivative marker, linear over numeric coefficients.
pub(crate) fn int(f: &Expr, var: &Name) -> Expr {
    let mut p = Poly::zero();
    for (c, m) in f.terms() {
        let t = if m.is_one() {
            Expr::from_kind(Kind::Sym(var.clone()))
        } else {
            Expr::from_kind(Kind::Int(m, var.clone()))
        };
        p.add_expr(&t, &c);
    }
    p.into_expr()
}
