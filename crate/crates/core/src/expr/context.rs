//! Total derivatives in a jet space.
//!
//! A context names the independent variables, optional intermediate
//! coordinates bound to expressions in them, the variables each field depends
//! on, and first-order derivative rules for particular fields. A rule on
//! `f_w` also fixes every higher jet `f_{J+w}` by differentiating its value.

use std::collections::HashMap;

use super::poly;
use super::subst::{derive, Derivation};
use super::{Expr, Jet, Kind, Name};

#[derive(Clone, Default)]
pub struct Context {
    vars: Vec<Name>,
    bound: Vec<(Name, Expr)>,
    own: HashMap<Name, Vec<Name>>,
    rules: HashMap<(Name, Option<u32>, Name), Expr>,
    frame: Option<(Name, Name)>,
}

impl Context {
    pub fn new(vars: &[&str]) -> Context {
        Context { vars: vars.iter().map(|v| Name::from(*v)).collect(), ..Default::default() }
    }

    pub fn vars(&self) -> &[Name] {
        &self.vars
    }

    /// Declares `name` as a coordinate equal to `value`.
    pub fn bind(&mut self, name: &str, value: Expr) -> &mut Self {
        self.bound.retain(|(n, _)| &**n != name);
        self.bound.push((Name::from(name), value));
        self
    }

    pub fn binding(&self, name: &str) -> Option<&Expr> {
        self.bound.iter().find(|(n, _)| &**n == name).map(|(_, e)| e)
    }

    /// Restricts the arguments of `field` (all indices) to `vars`.
    pub fn depends(&mut self, field: &str, vars: &[&str]) -> &mut Self {
        self.own.insert(Name::from(field), vars.iter().map(|v| Name::from(*v)).collect());
        self
    }

    /// Declares `d field / d var = value`, with `value` written in the
    /// field's own coordinates.
    pub fn rule(&mut self, field: &str, index: Option<u32>, var: &str, value: Expr) -> &mut Self {
        self.rules.insert((Name::from(field), index, Name::from(var)), value);
        self
    }

    /// Antiderivatives in `s` are taken at fixed `z`: their other derivatives
    /// follow from the chain rule through `s` and `z`.
    pub fn frame(&mut self, s: &str, z: &str) -> &mut Self {
        self.frame = Some((Name::from(s), Name::from(z)));
        self
    }

    pub fn own_vars(&self, field: &str) -> &[Name] {
        self.own.get(field).map(|v| v.as_slice()).unwrap_or(&self.vars)
    }

    pub fn differ(&self) -> Differ<'_> {
        Differ { ctx: self, memos: HashMap::new(), jets: HashMap::new() }
    }

    pub fn diff(&self, e: &Expr, var: &str) -> Expr {
        self.differ().diff(e, var)
    }

    /// Successive derivatives, e.g. `&["x", "x", "t"]`.
    pub fn diff_many(&self, e: &Expr, vars: &[&str]) -> Expr {
        let mut d = self.differ();
        vars.iter().fold(e.clone(), |acc, v| d.diff(&acc, v))
    }
}

/// Differentiation session that caches results across calls.
pub struct Differ<'a> {
    ctx: &'a Context,
    memos: HashMap<(Name, bool), HashMap<Expr, Expr>>,
    jets: HashMap<Jet, Expr>,
}

impl<'a> Differ<'a> {
    pub fn context(&self) -> &Context {
        self.ctx
    }

    pub fn diff(&mut self, e: &Expr, var: &str) -> Expr {
        let intrinsic = self.ctx.binding(var).is_some();
        self.pass(e, &Name::from(var), intrinsic)
    }

    pub fn diff_names(&mut self, e: &Expr, vars: &[Name]) -> Expr {
        let mut acc = e.clone();
        for v in vars {
            acc = self.diff(&acc, v);
        }
        acc
    }

    /// Derivative along `var` holding every other coordinate fixed.
    pub fn intrinsic(&mut self, e: &Expr, var: &str) -> Expr {
        self.pass(e, &Name::from(var), true)
    }

    fn pass(&mut self, e: &Expr, var: &Name, intrinsic: bool) -> Expr {
        let memo = self.memos.remove(&(var.clone(), intrinsic)).unwrap_or_default();
        let mut p = Pass { differ: self, var: var.clone(), intrinsic, memo };
        let out = derive(&mut p, e);
        let memo = std::mem::take(&mut p.memo);
        self.memos.insert((var.clone(), intrinsic), memo);
        out
    }

    /// Value of a jet, applying derivative rules where one divides it.
    pub fn jet_value(&mut self, j: &Jet) -> Expr {
        if j.deriv.is_empty() {
            return Expr::jet(j.clone());
        }
        if let Some(v) = self.jets.get(j) {
            return v.clone();
        }
        let mut out = None;
        for (k, w) in j.deriv.iter().enumerate() {
            if k > 0 && j.deriv[k - 1] == *w {
                continue;
            }
            if let Some(rhs) = self.ctx.rules.get(&(j.field.clone(), j.index, w.clone())) {
                let mut rest = j.deriv.clone();
                rest.remove(k);
                let mut acc = rhs.clone();
                for r in &rest {
                    acc = self.pass(&acc, r, true);
                }
                out = Some(acc);
                break;
            }
        }
        let out = out.unwrap_or_else(|| Expr::jet(j.clone()));
        self.jets.insert(j.clone(), out.clone());
        out
    }
}

struct Pass<'d, 'a> {
    differ: &'d mut Differ<'a>,
    var: Name,
    intrinsic: bool,
    memo: HashMap<Expr, Expr>,
}

impl Pass<'_, '_> {
    /// Derivative of a coordinate `w` along the pass variable.
    fn coord(&mut self, w: &Name) -> Expr {
        if *w == self.var {
            return Expr::one();
        }
        if self.intrinsic {
            return Expr::zero();
        }
        match self.differ.ctx.binding(w) {
            Some(b) => {
                let b = b.clone();
                derive(self, &b)
            }
            None => Expr::zero(),
        }
    }
}

impl Derivation for Pass<'_, '_> {
    fn leaf(&mut self, e: &Expr) -> Expr {
        match e.kind() {
            Kind::Sym(s) => self.coord(&s.clone()),
            Kind::Jet(j) => {
                let own: Vec<Name> = self.differ.ctx.own_vars(&j.field).to_vec();
                let mut acc = Vec::new();
                for w in &own {
                    let dw = self.coord(w);
                    if dw.is_zero() {
                        continue;
                    }
                    let v = self.differ.jet_value(&j.with(w));
                    acc.push(v * dw);
                }
                Expr::sum(&acc)
            }
            Kind::Int(f, s) => {
                let (f, s) = (f.clone(), s.clone());
                if let Some((fs, z)) = self.differ.ctx.frame.clone() {
                    if fs == s {
                        let ds = self.coord(&s);
                        let dz = self.coord(&z);
                        let mut out = &f * &ds;
                        if !dz.is_zero() {
                            let fz = self.differ.pass(&f, &z, true);
                            out = out + poly::int(&fz, &s) * dz;
                        }
                        return out;
                    }
                }
                if s == self.var {
                    f
                } else {
                    let df = derive(self, &f);
                    poly::int(&df, &s)
                }
            }
            _ => unreachable!("derivation leaves are symbols, jets and markers"),
        }
    }

    fn memo(&mut self) -> &mut HashMap<Expr, Expr> {
        &mut self.memo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Rat;

    fn u(d: &[&str]) -> Expr {
        Expr::jet(Jet::new("u", None, d))
    }

    #[test]
    fn total_derivative_raises_jets() {
        let ctx = Context::new(&["x", "t"]);
        let e = u(&[]) * u(&["x"]);
        assert_eq!(ctx.diff(&e, "x"), u(&["x"]).powi(2) + u(&[]) * u(&["x", "x"]));
    }

    #[test]
    fn bound_coordinates_use_the_chain_rule() {
        let mut ctx = Context::new(&["x", "t"]);
        ctx.bind("z", Expr::sym("x") - Expr::num(3) * Expr::sym("t")).depends("U", &["z"]);
        let e = Expr::field("U", None);
        let d = ctx.diff(&e, "t");
        assert_eq!(d, Expr::num(-3) * Expr::jet(Jet::new("U", None, &["z"])));
    }

    #[test]
    fn rules_close_under_differentiation() {
        let mut ctx = Context::new(&["z"]);
        let lam = Expr::field("L", None);
        ctx.depends("L", &["z"]).rule("L", None, "z", lam.powi(2));
        let d2 = ctx.diff_many(&lam, &["z", "z"]);
        assert_eq!(d2, Expr::num(2) * lam.powi(3));
    }

    #[test]
    fn markers_differentiate_to_integrand() {
        let ctx = Context::new(&["x", "y"]);
        let a = Expr::field("A", None) * Expr::sym("y").pow(Rat::new(1, 2));
        let m = Expr::int(&a, "y");
        assert_eq!(ctx.diff(&m, "y"), a);
        let dx = ctx.diff(&m, "x");
        let ax = Expr::jet(Jet::new("A", None, &["x"])) * Expr::sym("y").pow(Rat::new(1, 2));
        assert_eq!(dx, Expr::int(&ax, "y"));
    }
}
