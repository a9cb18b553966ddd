//! Lie point symmetries of the spectral problem.
//!
//! A generator `X = ξ^x ∂_x + ξ^y ∂_y + ξ^t ∂_t + Σ η^f ∂_f` is prolonged by
//! `η^{J+k} = D_k η^J - Σ_m (D_k ξ^m) f_{J+m}` and applied to each scalar
//! equation of the pair and to the spectral law. On solutions the result must
//! vanish once the eigenfunction derivatives, `λ_t` and `γ_t` are eliminated.
//!
//! The eigenfunction factor `γ` depends on `(y, t, l)` with the coordinate `l`
//! bound to `λ`, so `∂γ/∂t` below is taken at fixed `λ`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{is_zero, Context, Expr, Jet, Name, RewriteError, RewriteSystem, Rule, Verdict};
use crate::laxpair::{build_lax, LaxPair, MutationOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("jet {0} should have been eliminated on solutions")]
    Uneliminated(String),
    #[error("prolongation order {0} is not supported")]
    Order(usize),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// Constants and arbitrary functions of the symmetry family.
#[derive(Clone, Debug)]
pub struct SymmetryParams {
    pub a2: Expr,
    pub a3: Expr,
    pub b2: Expr,
    pub b3: Expr,
    /// `A₁(y)`.
    pub a1: Expr,
    /// `A_n(y, t)`.
    pub an: Expr,
    /// `γ(y, t, λ)`, written in `y`, `t` and `l`.
    pub gamma: Expr,
}

impl SymmetryParams {
    /// Free constants `a2, a3, b2, b3` and free functions `A1`, `An`, `gamma`.
    pub fn symbolic() -> SymmetryParams {
        SymmetryParams {
            a2: Expr::sym("a2"),
            a3: Expr::sym("a3"),
            b2: Expr::sym("b2"),
            b3: Expr::sym("b3"),
            a1: Expr::field("A1", None),
            an: Expr::field("An", None),
            gamma: Expr::field("gamma", None),
        }
    }

    /// Only the given constants, no arbitrary functions.
    pub fn constants(a2: Expr, a3: Expr, b2: Expr, b3: Expr) -> SymmetryParams {
        SymmetryParams {
            a2,
            a3,
            b2,
            b3,
            a1: Expr::zero(),
            an: Expr::zero(),
            gamma: Expr::zero(),
        }
    }
}

/// Coefficients of a point-symmetry generator.
#[derive(Clone, Debug)]
pub struct Generator {
    pub n: u32,
    pub xi1: Expr,
    pub xi2: Expr,
    pub xi3: Expr,
    pub eta_lambda: Expr,
    pub eta_u: Expr,
    pub eta_w: Vec<Expr>,
    pub eta_v: Vec<Expr>,
    pub eta_phi: Expr,
    pub eta_psi: Expr,
}

impl Generator {
    pub fn zero(n: u32) -> Generator {
        Generator {
            n,
            xi1: Expr::zero(),
            xi2: Expr::zero(),
            xi3: Expr::zero(),
            eta_lambda: Expr::zero(),
            eta_u: Expr::zero(),
            eta_w: vec![Expr::zero(); n as usize],
            eta_v: vec![Expr::zero(); n as usize],
            eta_phi: Expr::zero(),
            eta_psi: Expr::zero(),
        }
    }

    /// `ξ` along `x`, `y`, `t`.
    pub fn xi(&self, var: &str) -> Expr {
        match var {
            "x" => self.xi1.clone(),
            "y" => self.xi2.clone(),
            "t" => self.xi3.clone(),
            _ => Expr::zero(),
        }
    }

    /// `η` of an undifferentiated field.
    pub fn eta(&self, field: &str, index: Option<u32>) -> Expr {
        let at = |v: &Vec<Expr>| {
            index.and_then(|j| v.get(j as usize - 1)).cloned().unwrap_or_else(Expr::zero)
        };
        match field {
            "lam" => self.eta_lambda.clone(),
            "u" => self.eta_u.clone(),
            "w" => at(&self.eta_w),
            "v" => at(&self.eta_v),
            "phi" => self.eta_phi.clone(),
            "psi" => self.eta_psi.clone(),
            _ => Expr::zero(),
        }
    }

    /// Labels of the individual coefficients, in a fixed order.
    pub fn slots(&self) -> Vec<String> {
        let mut out: Vec<String> =
            ["xi1", "xi2", "xi3", "eta_lambda", "eta_u"].iter().map(|s| s.to_string()).collect();
        for j in 1..=self.n {
            out.push(format!("eta_w[{j}]"));
        }
        for j in 1..=self.n {
            out.push(format!("eta_v[{j}]"));
        }
        out.push("eta_phi".into());
        out.push("eta_psi".into());
        out
    }

    fn slot_mut(&mut self, name: &str) -> Option<&mut Expr> {
        let idx = |s: &str| s.split(['[', ']']).nth(1).and_then(|k| k.parse::<usize>().ok());
        Some(match name {
            "xi1" => &mut self.xi1,
            "xi2" => &mut self.xi2,
            "xi3" => &mut self.xi3,
            "eta_lambda" => &mut self.eta_lambda,
            "eta_u" => &mut self.eta_u,
            "eta_phi" => &mut self.eta_phi,
            "eta_psi" => &mut self.eta_psi,
            s if s.starts_with("eta_w[") => self.eta_w.get_mut(idx(s)? - 1)?,
            s if s.starts_with("eta_v[") => self.eta_v.get_mut(idx(s)? - 1)?,
            _ => return None,
        })
    }

    /// Copy with one coefficient multiplied by `factor`.
    pub fn scaled(&self, slot: &str, factor: &Expr) -> Option<Generator> {
        let mut g = self.clone();
        let s = g.slot_mut(slot)?;
        *s = &*s * factor;
        Some(g)
    }

    /// Coefficientwise sum.
    pub fn add(&self, other: &Generator) -> Generator {
        let add = |a: &Vec<Expr>, b: &Vec<Expr>| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Generator {
            n: self.n,
            xi1: &self.xi1 + &other.xi1,
            xi2: &self.xi2 + &other.xi2,
            xi3: &self.xi3 + &other.xi3,
            eta_lambda: &self.eta_lambda + &other.eta_lambda,
            eta_u: &self.eta_u + &other.eta_u,
            eta_w: add(&self.eta_w, &other.eta_w),
            eta_v: add(&self.eta_v, &other.eta_v),
            eta_phi: &self.eta_phi + &other.eta_phi,
            eta_psi: &self.eta_psi + &other.eta_psi,
        }
    }
}

/// Jet space of the (2+1)-dimensional pair together with the arbitrary
/// functions of the symmetry family.
pub fn symmetry_context(n: u32) -> Context {
    let mut ctx = build_lax(n).context;
    ctx.depends("A1", &["y"])
        .depends("An", &["y", "t"])
        .depends("gamma", &["y", "t", "l"])
        .bind("l", Expr::field("lam", None));
    ctx
}

/// The solved family of classical symmetries.
pub fn make_generator(p: &SymmetryParams, n: u32) -> Generator {
    assert!(n >= 1, "hierarchy order starts at 1");
    let ctx = symmetry_context(n);
    let nn = Expr::num(n as i64);
    let lam = Expr::field("lam", None);
    let u = Expr::field("u", None);
    let a1y = ctx.diff(&p.a1, "y");
    let mut g = Generator::zero(n);
    g.xi1 = p.a1.clone();
    g.xi2 = &p.a2 * Expr::sym("y") + &p.b2;
    g.xi3 = &p.a3 * Expr::sym("t") + &p.b3;
    g.eta_lambda = (&p.a2 - &p.a3) / &nn * &lam;
    g.eta_u = (&p.a3 - &p.a2) / (Expr::num(2) * &nn) * &u;
    for j in 1..=n {
        let (ji, ni) = (j as i64, n as i64);
        let cw = (Expr::num(ni - ji + 1) * &p.a2 + Expr::num(ji - 1) * &p.a3) / &nn;
        let mut ew = -cw * Expr::field("w", Some(j));
        if j == 1 {
            ew = ew + &a1y;
        }
        let cv = (Expr::num(2 * (ni - ji) + 1) * &p.a2 + Expr::num(2 * ji - 1) * &p.a3)
            / (Expr::num(2) * &nn);
        let mut ev = -cv * Expr::field("v", Some(j));
        if j == n {
            ev = ev + &p.an;
        }
        g.eta_w[j as usize - 1] = ew;
        g.eta_v[j as usize - 1] = ev;
    }
    g.eta_phi = &p.gamma * Expr::field("phi", None);
    g.eta_psi = &p.gamma * Expr::field("psi", None);
    g
}

/// Prolonged coefficients keyed by jet.
#[derive(Clone, Debug)]
pub struct Prolonged {
    pub order: usize,
    pub coefficients: HashMap<Jet, Expr>,
}

impl Prolonged {
    pub fn get(&self, j: &Jet) -> Option<&Expr> {
        self.coefficients.get(j)
    }
}

fn field_list(n: u32) -> Vec<(&'static str, Option<u32>)> {
    let mut out = vec![("u", None), ("lam", None), ("phi", None), ("psi", None)];
    for j in 1..=n {
        out.push(("w", Some(j)));
        out.push(("v", Some(j)));
    }
    out
}

/// Every multi-index in `vars` of order at most `order`, by increasing order.
fn multi_indices(vars: &[Name], order: usize) -> Vec<Vec<Name>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<Name>> = vec![Vec::new()];
    for _ in 0..order {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().and_then(|l| vars.iter().position(|v| v == l)).unwrap_or(0);
            for v in &vars[start..] {
                let mut k = m.clone();
                k.push(v.clone());
                next.push(k);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Extends the generator to all field jets up to `order`.
pub fn prolong(gen: &Generator, order: usize) -> Result<Prolonged, SymmetryError> {
    if order > 2 {
        return Err(SymmetryError::Order(order));
    }
    prolong_in(gen, order, &symmetry_context(gen.n))
}

pub fn prolong_in(gen: &Generator, order: usize, ctx: &Context) -> Result<Prolonged, SymmetryError> {
    let mut d = ctx.differ();
    let vars: Vec<Name> = ctx.vars().to_vec();
    let dxi: Vec<Vec<Expr>> = vars
        .iter()
        .map(|k| vars.iter().map(|m| d.diff(&gen.xi(m), k)).collect())
        .collect();
    let mut coefficients = HashMap::new();
    for (field, index) in field_list(gen.n) {
        let own: Vec<Name> = ctx.own_vars(field).to_vec();
        for mi in multi_indices(&own, order) {
            let refs: Vec<&str> = mi.iter().map(|s| &**s).collect();
            let jet = Jet::new(field, index, &refs);
            let value = match mi.split_last() {
                None => gen.eta(field, index),
                Some((k, rest)) => {
                    let r: Vec<&str> = rest.iter().map(|s| &**s).collect();
                    let prev = &coefficients[&Jet::new(field, index, &r)];
                    let ki = vars.iter().position(|v| v == k).unwrap();
                    let mut acc = vec![d.diff(prev, k)];
                    for (mi_, m) in vars.iter().enumerate() {
                        if !own.contains(m) || dxi[ki][mi_].is_zero() {
                            continue;
                        }
                        let base = Jet::new(field, index, &r);
                        acc.push(-(&dxi[ki][mi_] * Expr::jet(base.with(m))));
                    }
                    Expr::sum(&acc)
                }
            };
            coefficients.insert(jet, value);
        }
    }
    Ok(Prolonged { order, coefficients })
}

/// `pr X (E)`: explicit coordinates through `ξ`, jets through `η^J`.
pub fn apply_prolonged(gen: &Generator, pro: &Prolonged, e: &Expr) -> Expr {
    let mut acc = Vec::new();
    for v in ["x", "y", "t"] {
        let s = Expr::sym(v);
        if e.contains(&s) {
            acc.push(gen.xi(v) * e.partial(&s));
        }
    }
    for j in crate::expr::collect_jets(e) {
        if let Some(eta) = pro.get(&j) {
            let de = e.partial(&Expr::jet(j.clone()));
            if !de.is_zero() {
                acc.push(eta * de);
            }
        }
    }
    Expr::sum(&acc)
}

/// The four scalar equations of the pair followed by the spectral law.
pub fn scalar_equations(lax: &LaxPair) -> Vec<(String, Expr)> {
    let x = lax.x_equations();
    let t = lax.t_equations();
    let lam = &lax.spectral;
    let law = Expr::jet(Jet::new("lam", None, &["t"]))
        - lam.powi(lax.n as i64) * Expr::jet(Jet::new("lam", None, &["y"]));
    vec![
        ("phi_x".into(), x[0].clone()),
        ("psi_x".into(), x[1].clone()),
        ("phi_t".into(), t[0].clone()),
        ("psi_t".into(), t[1].clone()),
        ("lambda-law".into(), law),
    ]
}

/// `γ_t → lⁿ γ_y`, with `l` the coordinate standing for `λ`.
pub fn gamma_rule(n: u32) -> Rule {
    Rule::new(
        "gamma_t",
        Jet::new("gamma", None, &["t"]),
        Expr::sym("l").powi(n as i64) * Expr::jet(Jet::new("gamma", None, &["y"])),
    )
}

/// Rules used to restrict to solutions: the pair solved for the first
/// derivatives of the eigenfunctions, the spectral law and the `γ` condition.
pub fn on_shell_rules(lax: &LaxPair) -> RewriteSystem {
    let mut rules = lax.eigen_rules();
    let lam = &lax.spectral;
    rules.push(Rule::new(
        "lam_t",
        Jet::new("lam", None, &["t"]),
        lam.powi(lax.n as i64) * Expr::jet(Jet::new("lam", None, &["y"])),
    ));
    rules.push(gamma_rule(lax.n));
    rules
}

/// Residuals of `pr X` on each scalar equation before any substitution.
pub fn raw_residuals(gen: &Generator) -> Result<Vec<(String, Expr)>, SymmetryError> {
    let lax = build_lax(gen.n);
    let pro = prolong(gen, 2)?;
    Ok(scalar_equations(&lax)
        .into_iter()
        .map(|(name, e)| {
            let r = apply_prolonged(gen, &pro, &e);
            (name, r)
        })
        .collect())
}

/// Residuals restricted to solutions, with `l` replaced by `λ`.
pub fn invariance_residuals(
    gen: &Generator,
    lax: &LaxPair,
) -> Result<Vec<(String, Expr)>, SymmetryError> {
    let ctx = symmetry_context(gen.n);
    let pro = prolong_in(gen, 2, &ctx)?;
    let shell = on_shell_rules(lax);
    let banned: Vec<Jet> = shell.rules.iter().map(|r| r.lhs.clone()).collect();
    let l = Expr::sym("l");
    let mut out = Vec::new();
    for (name, e) in scalar_equations(lax) {
        let raw = apply_prolonged(gen, &pro, &e);
        let r = shell.reduce(&raw, &ctx)?.expr.subs_one(&l, &lax.spectral);
        for j in crate::expr::collect_jets(&r) {
            if banned.iter().any(|b| j.quotient(b).is_some()) {
                return Err(SymmetryError::Uneliminated(j.to_string()));
            }
        }
        out.push((name, r));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationCheck {
    pub equation: String,
    pub terms: usize,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    pub n: u32,
    pub equations: Vec<EquationCheck>,
}

impl SymmetryCheck {
    pub fn passed(&self) -> bool {
        self.equations.iter().all(|e| e.verdict.is_zero())
    }
}

pub fn verify_symmetry(gen: &Generator, trials: usize, seed: u64) -> Result<SymmetryCheck, SymmetryError> {
    let lax = build_lax(gen.n);
    let equations = invariance_residuals(gen, &lax)?
        .into_iter()
        .map(|(equation, r)| EquationCheck { equation, terms: r.terms().len(), verdict: is_zero(&r, trials, seed) })
        .collect();
    Ok(SymmetryCheck { n: gen.n, equations })
}

/// How the `t`-dependence of `γ` is specified.
#[derive(Clone, Debug)]
pub enum GammaSpec {
    /// A rule with left side `γ_t`, written in `y`, `t`, `l`.
    Rule(Rule),
    /// An explicit function of `y`, `t` and `l`.
    Explicit(Expr),
}

/// Whether `∂γ/∂t = λⁿ ∂γ/∂y` at fixed `λ`.
pub fn check_gamma_condition(spec: &GammaSpec, n: u32) -> bool {
    let ln = Expr::sym("l").powi(n as i64);
    match spec {
        GammaSpec::Rule(rule) => {
            let j = &rule.lhs;
            if j.field.as_ref() != "gamma" || j.deriv.len() != 1 || j.deriv[0].as_ref() != "t" {
                return false;
            }
            let gy = Expr::jet(Jet::new("gamma", j.index, &["y"]));
            let diff = &rule.rhs - ln * gy;
            is_zero(&diff, 20, 0).is_zero()
        }
        GammaSpec::Explicit(g) => {
            let ctx = Context::new(&["y", "t", "l"]);
            let diff = ctx.diff(g, "t") - ln * ctx.diff(g, "y");
            is_zero(&diff, 20, 0).is_zero()
        }
    }
}

/// Multiplies each coefficient in turn by `-1` and by `2`; every variant must
/// fail to be a symmetry.
pub fn generator_mutations(n: u32, trials: usize, seed: u64) -> Result<Vec<MutationOutcome>, SymmetryError> {
    let gen = make_generator(&SymmetryParams::symbolic(), n);
    let mut out = Vec::new();
    for slot in gen.slots() {
        for k in [-1i64, 2] {
            let g = gen.scaled(&slot, &Expr::num(k)).expect("slot exists");
            let check = verify_symmetry(&g, trials, seed)?;
            out.push(MutationOutcome { mutation: format!("{slot} *= {k}"), killed: !check.passed() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_jet(f: &str, d: &[&str]) -> Expr {
        Expr::jet(Jet::new(f, None, d))
    }

    #[test]
    fn family_shapes() {
        let p = SymmetryParams::symbolic();
        let g = make_generator(&p, 1);
        let an = Expr::field("An", None);
        let v = Expr::field("v", Some(1));
        assert_eq!(g.eta_v[0], an - (Expr::sym("a2") + Expr::sym("a3")) / Expr::num(2) * v);
        let g2 = make_generator(&p, 2);
        let w2 = Expr::field("w", Some(2));
        assert_eq!(g2.eta_w[1], -(Expr::sym("a2") + Expr::sym("a3")) / Expr::num(2) * w2);
        assert_eq!(g2.eta_w[0].coefficient(&sym_jet("A1", &["y"])), Expr::one());
        let mut q = SymmetryParams::symbolic();
        q.a3 = q.a2.clone();
        let g = make_generator(&q, 3);
        assert!(g.eta_lambda.is_zero() && g.eta_u.is_zero());
    }

    #[test]
    fn scaling_prolongs_as_expected() {
        let mut g = Generator::zero(1);
        g.xi1 = Expr::sym("x");
        g.eta_u = Expr::field("u", None);
        let p = prolong(&g, 2).unwrap();
        assert!(p.get(&Jet::new("u", None, &["x"])).unwrap().is_zero());
        assert_eq!(p.get(&Jet::new("u", None, &["x", "x"])).unwrap(), &-sym_jet("u", &["x", "x"]));
    }

    #[test]
    fn first_member_is_invariant() {
        let g = make_generator(&SymmetryParams::symbolic(), 1);
        let c = verify_symmetry(&g, 10, 42).unwrap();
        assert!(c.passed(), "{:#?}", c.equations);
    }

    #[test]
    fn translation_is_structurally_invariant() {
        let p = SymmetryParams::constants(Expr::zero(), Expr::zero(), Expr::one(), Expr::zero());
        let g = make_generator(&p, 1);
        let c = verify_symmetry(&g, 5, 1).unwrap();
        assert!(c.equations.iter().all(|e| e.verdict == Verdict::ZeroStructural), "{:#?}", c.equations);
    }

    #[test]
    fn flipped_eta_u_is_caught() {
        let g = make_generator(&SymmetryParams::symbolic(), 1);
        let bad = g.scaled("eta_u", &Expr::num(-1)).unwrap();
        assert!(!verify_symmetry(&bad, 10, 42).unwrap().passed());
    }

    #[test]
    fn gamma_condition() {
        assert!(check_gamma_condition(&GammaSpec::Rule(gamma_rule(2)), 2));
        assert!(check_gamma_condition(&GammaSpec::Explicit(Expr::num(3)), 1));
        let wrong = Rule::new("gamma_t", Jet::new("gamma", None, &["t"]), sym_jet("gamma", &["y"]));
        assert!(!check_gamma_condition(&GammaSpec::Rule(wrong), 1));
        // Any function of y + lⁿ t works.
        let s = Expr::sym("y") + Expr::sym("l").powi(2) * Expr::sym("t");
        assert!(check_gamma_condition(&GammaSpec::Explicit(s.powi(3)), 2));
        assert!(!check_gamma_condition(&GammaSpec::Explicit(s.powi(3)), 1));
    }
}
