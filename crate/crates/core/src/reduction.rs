//! Similarity reductions of the spectral problem to 1+1 dimensions.
//!
//! Each case is stored as formulas in the expression grammar: reduced
//! variables `z1`, `z2`, the ansatz for `λ` and the fields, the eigenfunction
//! gauge `exp(G)`, the equation for `Γ`, and the target reduced pair and
//! hierarchy. The checks substitute the ansatz into the (2+1)-dimensional
//! objects, express the result in `(z1, z2)` and compare.
//!
//! `G` is the antiderivative of `weight·Γ` along the characteristic through
//! `s` (`y` or `t`) at fixed `z2`; its `z2`-derivative is fixed so that the
//! gauge factor drops out of the evolution equation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{
    is_zero, parse_with, Context, Expr, Jet, Name, ParseError, Rat, RewriteError, RewriteSystem,
    Rule, Signature, Verdict,
};
use crate::laxpair::{
    check_residual, compatibility_residual, evolution_matrix, reference_hierarchy,
    spectral_matrix, spectral_sum, LaxError, LaxPair, MutationOutcome,
};
use crate::symmetry::{make_generator, Generator, SymmetryParams};

pub const CATALOG_JSON: &str = include_str!("../data/catalog.json");
pub const CATALOG_SCHEMA: &str = "laxforge-catalog";

/// Expected number of non-isospectral cases; the census flags any mismatch.
pub const STATED_NON_ISOSPECTRAL: usize = 6;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("case {case}, field `{field}`: {source}")]
    Parse { case: String, field: String, source: ParseError },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("trivial pattern: no parameter is active")]
    TrivialPattern,
    #[error("activation pattern {0} matches no reduction")]
    NoCase(String),
    #[error("parameter `{0}` must be a nonzero rational constant")]
    Param(String),
    #[error("equation `{0}` has no linear leading jet")]
    NoLeader(String),
    #[error(transparent)]
    Lax(#[from] LaxError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Catalog {
    pub schema: String,
    pub version: u32,
    pub cases: Vec<CaseSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub top: String,
    pub flux: String,
}

/// A formula that differs from the encoded one and is kept for comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Alternative {
    pub field: String,
    pub value: Option<String>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub active: Vec<String>,
    pub params: BTreeMap<String, String>,
    pub s: String,
    pub z1: String,
    pub z2: String,
    pub inverse: BTreeMap<String, String>,
    pub lambda: String,
    pub law: String,
    pub u: String,
    pub w_first: String,
    pub w: String,
    pub v: String,
    pub v_last: String,
    pub weight: String,
    pub gauge: String,
    pub gamma_pde: String,
    pub lead: String,
    pub drift: String,
    pub hierarchy: HierarchySpec,
    pub first_integral: String,
    #[serde(default)]
    pub alternatives: Vec<Alternative>,
}

const PARAMS: [&str; 4] = ["a2", "b2", "a3", "b3"];

impl CaseSpec {
    /// Copy with one formula replaced; `inverse.<key>` addresses the map.
    pub fn with_field(&self, field: &str, value: &str) -> Option<CaseSpec> {
        let mut c = self.clone();
        let v = value.to_string();
        match field {
            "z1" => c.z1 = v,
            "z2" => c.z2 = v,
            "lambda" => c.lambda = v,
            "law" => c.law = v,
            "u" => c.u = v,
            "w_first" => c.w_first = v,
            "w" => c.w = v,
            "v" => c.v = v,
            "v_last" => c.v_last = v,
            "weight" => c.weight = v,
            "gauge" => c.gauge = v,
            "gamma_pde" => c.gamma_pde = v,
            "lead" => c.lead = v,
            "drift" => c.drift = v,
            "hierarchy.top" => c.hierarchy.top = v,
            "hierarchy.flux" => c.hierarchy.flux = v,
            f => {
                let key = f.strip_prefix("inverse.")?;
                c.inverse.insert(key.to_string(), v);
            }
        }
        Some(c)
    }
}

impl Catalog {
    pub fn embedded() -> Catalog {
        Catalog::from_json(CATALOG_JSON).expect("embedded catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Catalog, ReductionError> {
        let c: Catalog = serde_json::from_str(text).map_err(|e| ReductionError::Catalog(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), ReductionError> {
        if self.schema != CATALOG_SCHEMA {
            return Err(ReductionError::Catalog(format!("unexpected schema `{}`", self.schema)));
        }
        let mut seen: Vec<(String, Vec<String>)> = Vec::new();
        for case in &self.cases {
            let mut pat = case.active.clone();
            pat.sort();
            if pat.iter().any(|p| !PARAMS.contains(&p.as_str())) || pat.is_empty() {
                return Err(ReductionError::Catalog(format!("case {}: bad activation pattern", case.id)));
            }
            if let Some((other, _)) = seen.iter().find(|(id, p)| *id == case.id || *p == pat) {
                return Err(ReductionError::Catalog(format!(
                    "cases {} and {} overlap",
                    other, case.id
                )));
            }
            for p in &case.active {
                if !case.params.contains_key(p) {
                    return Err(ReductionError::Catalog(format!("case {}: no value for {p}", case.id)));
                }
            }
            seen.push((case.id.clone(), pat));
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.cases.iter().map(|c| c.id.clone()).collect()
    }

    pub fn spec(&self, id: &str) -> Result<&CaseSpec, ReductionError> {
        self.cases.iter().find(|c| c.id == id).ok_or_else(|| ReductionError::UnknownCase(id.to_string()))
    }

    /// The case whose active parameters are exactly `active`.
    pub fn by_pattern(&self, active: &[&str]) -> Result<&CaseSpec, ReductionError> {
        if active.is_empty() {
            return Err(ReductionError::TrivialPattern);
        }
        let mut want: Vec<String> = active.iter().map(|s| s.to_string()).collect();
        want.sort();
        self.cases
            .iter()
            .find(|c| {
                let mut p = c.active.clone();
                p.sort();
                p == want
            })
            .ok_or_else(|| ReductionError::NoCase(format!("({})", want.join(", "))))
    }

    /// Case `id` at order `n` with its stored parameter values.
    pub fn instantiate(&self, id: &str, n: u32) -> Result<ReductionCase, ReductionError> {
        ReductionCase::new(self.spec(id)?, n, &BTreeMap::new())
    }
}

/// The spectral law of `spec` with `r = a3/a2` set to `r`, including values
/// outside the case's activation pattern such as `r = 0`.
pub fn law_at_ratio(spec: &CaseSpec, n: u32, r: Rat) -> Result<Expr, ReductionError> {
    let mut sig = Signature::standard().with_param("n", Expr::num(n as i64));
    sig.set_param("r", rat_expr(r));
    parse_with(&spec.law, &sig).map_err(|source| ReductionError::Parse {
        case: spec.id.clone(),
        field: "law".into(),
        source,
    })
}

/// Whether the reduced spectral parameter moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spectrality {
    Isospectral,
    NonIsospectral,
}

/// One fully instantiated reduction.
#[derive(Clone, Debug)]
pub struct ReductionCase {
    pub id: String,
    pub n: u32,
    /// All four constants, zero when inactive.
    pub params: BTreeMap<String, Rat>,
    /// `a3/a2`, when `a2 ≠ 0`.
    pub r: Option<Rat>,
    pub s: Name,
    pub z1: Expr,
    pub z2: Expr,
    pub inverse: Vec<(Expr, Expr)>,
    pub lambda: Expr,
    /// `dΛ/dz2`.
    pub law: Expr,
    pub u: Expr,
    pub w: Vec<Expr>,
    pub v: Vec<Expr>,
    pub weight: Expr,
    pub gauge: Expr,
    pub gamma_pde: Expr,
    pub lead: Expr,
    pub drift: Expr,
    pub top: Expr,
    pub flux: Expr,
    pub first_integral: Option<Expr>,
    pub spec: CaseSpec,
}

fn rat_expr(r: Rat) -> Expr {
    Expr::rat(*r.numer(), *r.denom())
}

impl ReductionCase {
    /// Instantiates `spec` at order `n`; `overrides` replace stored constants.
    pub fn new(
        spec: &CaseSpec,
        n: u32,
        overrides: &BTreeMap<String, Rat>,
    ) -> Result<ReductionCase, ReductionError> {
        assert!(n >= 1, "hierarchy order starts at 1");
        let perr = |field: &str, source: ParseError| ReductionError::Parse {
            case: spec.id.clone(),
            field: field.to_string(),
            source,
        };
        let mut sig = Signature::standard().with_param("n", Expr::num(n as i64));
        let mut params = BTreeMap::new();
        for p in PARAMS {
            let value = if let Some(r) = overrides.get(p) {
                *r
            } else if let Some(text) = spec.params.get(p) {
                let e = parse_with(text, &sig).map_err(|e| perr(p, e))?;
                e.as_rat().ok_or_else(|| ReductionError::Param(p.to_string()))?
            } else {
                Rat::from_integer(0)
            };
            let active = spec.active.iter().any(|a| a == p);
            if active == (value == Rat::from_integer(0)) {
                return Err(ReductionError::Param(p.to_string()));
            }
            params.insert(p.to_string(), value);
        }
        for (k, v) in &params {
            sig.set_param(k, rat_expr(*v));
        }
        let a2 = params["a2"];
        let r = if a2 != Rat::from_integer(0) { Some(params["a3"] / a2) } else { None };
        if let Some(r) = r {
            sig.set_param("r", rat_expr(r));
        }
        let parse = |field: &str, text: &str, sig: &Signature| {
            parse_with(text, sig).map_err(|e| perr(field, e))
        };
        let mut w = Vec::new();
        let mut v = Vec::new();
        for j in 1..=n {
            let mut sj = sig.clone();
            sj.set_param("j", Expr::num(j as i64));
            w.push(if j == 1 { parse("w_first", &spec.w_first, &sj)? } else { parse("w", &spec.w, &sj)? });
            v.push(if j == n { parse("v_last", &spec.v_last, &sj)? } else { parse("v", &spec.v, &sj)? });
        }
        let mut inverse = Vec::new();
        for (k, val) in &spec.inverse {
            inverse.push((parse("inverse", k, &sig)?, parse("inverse", val, &sig)?));
        }
        let law = parse("law", &spec.law, &sig)?;
        let first_integral = if law.is_zero() {
            Some(Expr::field("Lam", None))
        } else {
            parse("first_integral", &spec.first_integral, &sig).ok()
        };
        Ok(ReductionCase {
            id: spec.id.clone(),
            n,
            params,
            r,
            s: Name::from(spec.s.as_str()),
            z1: parse("z1", &spec.z1, &sig)?,
            z2: parse("z2", &spec.z2, &sig)?,
            inverse,
            lambda: parse("lambda", &spec.lambda, &sig)?,
            law,
            u: parse("u", &spec.u, &sig)?,
            w,
            v,
            weight: parse("weight", &spec.weight, &sig)?,
            gauge: parse("gauge", &spec.gauge, &sig)?,
            gamma_pde: parse("gamma_pde", &spec.gamma_pde, &sig)?,
            lead: parse("lead", &spec.lead, &sig)?,
            drift: parse("drift", &spec.drift, &sig)?,
            top: parse("hierarchy.top", &spec.hierarchy.top, &sig)?,
            flux: parse("hierarchy.flux", &spec.hierarchy.flux, &sig)?,
            first_integral,
            spec: spec.clone(),
        })
    }

    pub fn param(&self, name: &str) -> Rat {
        self.params.get(name).copied().unwrap_or_else(|| Rat::from_integer(0))
    }

    /// The symmetry generator this case reduces by.
    pub fn generator(&self) -> Generator {
        let c = |k: &str| rat_expr(self.param(k));
        let p = SymmetryParams {
            a2: c("a2"),
            a3: c("a3"),
            b2: c("b2"),
            b3: c("b3"),
            a1: Expr::field("A1", None),
            an: Expr::field("An", None),
            gamma: Expr::field("Gam", None),
        };
        make_generator(&p, self.n)
    }

    fn gam_z2(&self) -> Expr {
        Expr::jet(Jet::new("Gam", None, &["z2"]))
    }

    /// `Γ_{z2}` solved from the stored equation for `Γ`.
    pub fn gamma_rule(&self) -> Option<Expr> {
        let piv = self.gam_z2();
        let c = self.gamma_pde.coefficient(&piv);
        let rest = &self.gamma_pde - &c * &piv;
        if c.is_zero() || rest.contains(&piv) {
            return None;
        }
        Some(-rest / c)
    }

    /// Coordinates `(x, y, t)` with `z1`, `z2` bound to their formulas.
    pub fn full_context(&self, gamma_rule: bool) -> Context {
        let s: &str = &self.s;
        let mut ctx = Context::new(&["x", "y", "t"]);
        ctx.bind("z1", self.z1.clone()).bind("z2", self.z2.clone());
        for f in ["U", "W", "V", "Phi", "Psi"] {
            ctx.depends(f, &["z1", "z2"]);
        }
        ctx.depends("Lam", &["z2"]).rule("Lam", None, "z2", self.law.clone());
        ctx.depends("A1", &["y"]).depends("Ah", &["z2"]);
        for f in ["An", "Gam", "G"] {
            ctx.depends(f, &[s, "z2"]);
        }
        let gam = Expr::field("Gam", None);
        ctx.rule("G", None, s, &self.weight * gam).rule("G", None, "z2", self.gauge.clone());
        if gamma_rule {
            if let Some(r) = self.gamma_rule() {
                ctx.rule("Gam", None, "z2", r);
            }
        }
        ctx.frame(s, "z2");
        ctx
    }

    /// Coordinates `(z1, z2)` of the reduced problem.
    pub fn reduced_context(&self) -> Context {
        let mut ctx = Context::new(&["z1", "z2"]);
        ctx.depends("Lam", &["z2"]).rule("Lam", None, "z2", self.law.clone());
        ctx.depends("Ah", &["z2"]);
        ctx
    }

    /// Rewrites remaining `y`, `t` and `A1` in terms of `(z1, z2)`.
    pub fn back(&self, e: &Expr) -> Expr {
        let map: HashMap<Expr, Expr> = self.inverse.iter().cloned().collect();
        e.subs(&map)
    }

    pub fn eigen_ansatz(&self) -> [Expr; 2] {
        let g = Expr::exp(&Expr::field("G", None));
        [&g * Expr::field("Phi", None), &g * Expr::field("Psi", None)]
    }

    /// `p` and `q` of the (2+1)-dimensional pair under the ansatz.
    pub fn pq(&self) -> (Expr, Expr) {
        let n = self.n;
        let mut p = Vec::new();
        let mut q = Vec::new();
        for j in 1..=n {
            let k = self.lambda.powi((n - j) as i64);
            p.push(&k * &self.w[j as usize - 1]);
            q.push(&k * &self.v[j as usize - 1]);
        }
        (Expr::sum(&p), Expr::sum(&q))
    }

    /// The reduced spectral problem.
    pub fn reduced_lax(&self) -> LaxPair {
        let ctx = self.reduced_context();
        let lam = Expr::field("Lam", None);
        let p = spectral_sum(&lam, "W", self.n);
        let q = spectral_sum(&lam, "V", self.n);
        LaxPair {
            n: self.n,
            space: Name::from("z1"),
            time: Name::from("z2"),
            spectral: lam.clone(),
            x_part: spectral_matrix(&lam, &Expr::field("U", None)),
            lead: self.lead.clone(),
            transverse: None,
            drift: &lam * p + &self.drift,
            t_part: evolution_matrix(&lam, &q, &ctx, "z1"),
            eigen: [Expr::field("Phi", None), Expr::field("Psi", None)],
            context: ctx,
        }
    }

    /// Reduced hierarchy with the pivot jet used for matching.
    pub fn reduced_hierarchy(&self) -> Vec<(String, Expr, Expr)> {
        let n = self.n;
        let u = Expr::field("U", None);
        let jet = |f: &str, j: u32, d: &[&str]| Expr::jet(Jet::new(f, Some(j), d));
        let mut out = Vec::new();
        for j in 1..=n {
            out.push((
                format!("omega[{j}]"),
                jet("W", j, &["z1"]) - &u * jet("V", j, &["z1"]),
                jet("W", j, &["z1"]),
            ));
        }
        for j in 1..n {
            out.push((
                format!("middle[{j}]"),
                jet("V", j, &["z1", "z1"]) - Expr::field("V", Some(j)) + &u * Expr::field("W", Some(j + 1)),
                jet("V", j, &["z1", "z1"]),
            ));
        }
        out.push(("top".into(), self.top.clone(), jet("V", n, &["z1", "z1", "z1"])));
        out.push(("flux".into(), self.flux.clone(), jet("W", 1, &["z1"])));
        out
    }

    pub fn spectrality(&self) -> Spectrality {
        classify_spectrality(self)
    }
}

pub fn classify_spectrality(case: &ReductionCase) -> Spectrality {
    if case.law.is_zero() {
        Spectrality::Isospectral
    } else {
        Spectrality::NonIsospectral
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, verdict: Verdict) -> Check {
        Check { name: name.into(), verdict, note: None }
    }

    fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

pub fn all_zero(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.verdict.is_zero())
}

fn explicit_coords(e: &Expr) -> Vec<&'static str> {
    ["x", "y", "t"].into_iter().filter(|v| e.has_symbol(v)).collect()
}

/// Divides `full` by the ratio of the `pivot` coefficients and compares with
/// `target`. Explicit `x`, `y`, `t` left after division count as failure.
fn match_by_pivot(name: &str, full: &Expr, target: &Expr, pivot: &Expr, trials: usize, seed: u64) -> Check {
    let cf = full.coefficient(pivot);
    let ct = target.coefficient(pivot);
    if cf.is_zero() || ct.is_zero() {
        return Check::new(name, Verdict::Error { message: format!("pivot {pivot} is missing") });
    }
    let factor = cf / ct;
    let reduced = full / &factor;
    let verdict = is_zero(&(&reduced - target), trials, seed);
    let left = explicit_coords(&reduced);
    let check = Check::new(name, verdict);
    if left.is_empty() {
        check.with_note(format!("factor {factor}"))
    } else if check.verdict.is_zero() {
        check.with_note(format!("factor {factor}; explicit {} left after cancellation", left.join(", ")))
    } else {
        Check::new(name, Verdict::Error { message: format!("explicit {} remains", left.join(", ")) })
    }
}

/// Substitutes the ansatz into the pair and compares each scalar equation
/// with the reduced pair, plus consistency of the gauge and of `Γ`.
pub fn verify_reduced_lax(case: &ReductionCase, trials: usize, seed: u64) -> Vec<Check> {
    let ctx = case.full_context(true);
    let mut d = ctx.differ();
    let n = case.n as i64;
    let lam = &case.lambda;
    let u = &case.u;
    let (p, q) = case.pq();
    let eig = case.eigen_ansatz();
    let m = spectral_matrix(lam, u).apply(&eig);
    let nmat = evolution_matrix(lam, &q, &ctx, "x").apply(&eig);
    let red = case.reduced_lax();
    let rx = red.x_equations();
    let rt = red.t_equations();
    let names = ["Phi", "Psi"];
    let mut out = Vec::new();
    for k in 0..2 {
        let full = d.diff(&eig[k], "x") - &m[k];
        let pivot = Expr::jet(Jet::new(names[k], None, &["z1"]));
        out.push(match_by_pivot(&format!("x-part[{k}]"), &case.back(&full), &rx[k], &pivot, trials, seed));
    }
    for k in 0..2 {
        let full = d.diff(&eig[k], "t")
            - lam.powi(n) * d.diff(&eig[k], "y")
            - lam * &p * d.diff(&eig[k], "x")
            - &nmat[k];
        let pivot = Expr::jet(Jet::new(names[k], None, &["z2"]));
        out.push(match_by_pivot(&format!("t-part[{k}]"), &case.back(&full), &rt[k], &pivot, trials, seed));
    }
    out.extend(gauge_checks(case, trials, seed));
    out
}

/// The spectral law, the gauge and the equation for `Γ` against the chain
/// rule through the reduced variables.
pub fn gauge_checks(case: &ReductionCase, trials: usize, seed: u64) -> Vec<Check> {
    let n = case.n as i64;
    let s: &str = &case.s;
    let plain = case.full_context(false);
    let mut d = plain.differ();
    let lam = &case.lambda;
    let law = d.diff(lam, "t") - lam.powi(n) * d.diff(lam, "y");
    let gauge = {
        let g = Expr::field("G", None);
        d.diff(&g, "t") - lam.powi(n) * d.diff(&g, "y")
    };
    let gam = Expr::field("Gam", None);
    let derived = d.diff(&gam, "t") - lam.powi(n) * d.diff(&gam, "y");
    let mut out = vec![
        Check::new("lambda-law", is_zero(&case.back(&law), trials, seed)),
        Check::new("gauge", is_zero(&case.back(&gauge), trials, seed)),
        match_by_pivot("gamma-equation", &case.back(&derived), &case.gamma_pde, &case.gam_z2(), trials, seed),
    ];
    // G_s and G_{z2} must commute modulo the equation for Γ.
    let mut red = Context::new(&[s, "z2"]);
    red.depends("Lam", &["z2"]).rule("Lam", None, "z2", case.law.clone());
    red.depends("Ah", &["z2"]).depends("Gam", &[s, "z2"]);
    match case.gamma_rule() {
        Some(r) => {
            red.rule("Gam", None, "z2", r);
            let mixed = red.diff(&case.gauge, s) - red.diff(&(&case.weight * &gam), "z2");
            out.push(Check::new("gauge-integrability", is_zero(&mixed, trials, seed)));
        }
        None => out.push(Check::new(
            "gauge-integrability",
            Verdict::Error { message: "equation for Gam is not solvable for Gam_z2".into() },
        )),
    }
    out
}

fn is_field_jet(j: &Jet) -> bool {
    matches!(&*j.field, "U" | "W" | "V")
}

fn rank(j: &Jet) -> (usize, usize, String, Option<u32>, Vec<Name>) {
    (j.order(), j.count("z2"), j.field.to_string(), j.index, j.deriv.clone())
}

/// Orients equations into rewrite rules, in order, each solved for its
/// highest-ranked linear jet after reduction by the earlier rules.
pub fn orient(eqs: &[(String, Expr)], ctx: &Context) -> Result<RewriteSystem, ReductionError> {
    let mut sys = RewriteSystem::new(Vec::new());
    for (name, e) in eqs {
        let e = sys.reduce(e, ctx)?.expr;
        let mut best: Option<(Jet, Expr)> = None;
        for j in crate::expr::collect_jets(&e) {
            if !is_field_jet(&j) {
                continue;
            }
            let atom = Expr::jet(j.clone());
            let c = e.coefficient(&atom);
            if c.is_zero() || c.contains(&atom) || (&e - &c * &atom).contains(&atom) {
                continue;
            }
            if best.as_ref().map_or(true, |(b, _)| rank(&j) > rank(b)) {
                best = Some((j, c));
            }
        }
        let (lead, c) = best.ok_or_else(|| ReductionError::NoLeader(name.clone()))?;
        let atom = Expr::jet(lead.clone());
        let rhs = -(&e - &c * &atom) / c;
        sys.push(Rule::new(name, lead, rhs));
    }
    Ok(sys)
}

/// Compatibility of the reduced pair modulo the reduced hierarchy, and the
/// ansatz substituted directly into the (2+1)-dimensional hierarchy.
pub fn verify_reduced_hierarchy(
    case: &ReductionCase,
    trials: usize,
    seed: u64,
) -> Result<Vec<Check>, ReductionError> {
    let mut out = reduced_compatibility(case, &case.reduced_hierarchy(), trials, seed)?;
    out.extend(direct_hierarchy(case, trials, seed));
    Ok(out)
}

fn reduced_compatibility(
    case: &ReductionCase,
    eqs: &[(String, Expr, Expr)],
    trials: usize,
    seed: u64,
) -> Result<Vec<Check>, ReductionError> {
    let lax = case.reduced_lax();
    let pairs: Vec<(String, Expr)> = eqs.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect();
    let ideal = orient(&pairs, &lax.context)?;
    let res = compatibility_residual(&lax)?;
    let check = check_residual(case.n, &res, &ideal, &lax.context, trials, seed)?;
    Ok(check
        .entries
        .into_iter()
        .map(|e| Check::new(format!("curvature[{}][{}]", e.row, e.col), e.verdict))
        .collect())
}

/// Value of a jet of `u`, `w`, `v` or `λ` under the ansatz.
fn ansatz_jet(case: &ReductionCase, d: &mut crate::expr::Differ<'_>, j: &Jet) -> Option<Expr> {
    let base = match (&*j.field, j.index) {
        ("u", None) => case.u.clone(),
        ("lam", None) => case.lambda.clone(),
        ("w", Some(k)) => case.w.get(k as usize - 1)?.clone(),
        ("v", Some(k)) => case.v.get(k as usize - 1)?.clone(),
        _ => return None,
    };
    Some(d.diff_names(&base, &j.deriv))
}

fn direct_hierarchy(case: &ReductionCase, trials: usize, seed: u64) -> Vec<Check> {
    let ctx = case.full_context(true);
    let mut d = ctx.differ();
    let targets = case.reduced_hierarchy();
    let find = |name: &str| targets.iter().find(|t| t.0 == name).cloned();
    let mut out = Vec::new();
    for (name, e) in reference_hierarchy(case.n) {
        let mut map = HashMap::new();
        for j in crate::expr::collect_jets(&e) {
            if let Some(v) = ansatz_jet(case, &mut d, &j) {
                map.insert(Expr::jet(j), v);
            }
        }
        let full = case.back(&e.subs(&map));
        let target = match name.as_str() {
            "lambda-law" => None,
            "u_t" => find("top"),
            "u_y" => find("flux"),
            other => {
                let j = other.split(['[', ']']).nth(1).unwrap_or("");
                if other.starts_with("w[") {
                    find(&format!("omega[{j}]"))
                } else {
                    find(&format!("middle[{j}]"))
                }
            }
        };
        let label = format!("direct:{name}");
        out.push(match target {
            None => Check::new(label, is_zero(&full, trials, seed)),
            Some((_, t, piv)) => match_by_pivot(&label, &full, &t, &piv, trials, seed),
        });
    }
    out
}

/// `X(F) = η` for every ansatz relation, with `γ` read as `Γ`.
pub fn invariance_checks(case: &ReductionCase, trials: usize, seed: u64) -> Vec<Check> {
    let gen = case.generator();
    let ctx = case.full_context(false);
    let mut d = ctx.differ();
    let mut x_of = |e: &Expr| {
        let mut acc = Vec::new();
        for v in ["x", "y", "t"] {
            let xi = gen.xi(v);
            if !xi.is_zero() {
                acc.push(xi * d.diff(e, v));
            }
        }
        Expr::sum(&acc)
    };
    let eig = case.eigen_ansatz();
    let mut subst = HashMap::new();
    subst.insert(Expr::field("lam", None), case.lambda.clone());
    subst.insert(Expr::field("u", None), case.u.clone());
    subst.insert(Expr::field("phi", None), eig[0].clone());
    subst.insert(Expr::field("psi", None), eig[1].clone());
    for j in 1..=case.n {
        subst.insert(Expr::field("w", Some(j)), case.w[j as usize - 1].clone());
        subst.insert(Expr::field("v", Some(j)), case.v[j as usize - 1].clone());
    }
    let mut items: Vec<(String, Expr, Expr)> = vec![
        ("z1".into(), case.z1.clone(), Expr::zero()),
        ("z2".into(), case.z2.clone(), Expr::zero()),
        ("lambda".into(), case.lambda.clone(), gen.eta_lambda.clone()),
        ("u".into(), case.u.clone(), gen.eta_u.clone()),
    ];
    for j in 1..=case.n {
        let k = j as usize - 1;
        items.push((format!("w[{j}]"), case.w[k].clone(), gen.eta_w[k].clone()));
        items.push((format!("v[{j}]"), case.v[k].clone(), gen.eta_v[k].clone()));
    }
    items.push(("phi".into(), eig[0].clone(), gen.eta_phi.clone()));
    items.push(("psi".into(), eig[1].clone(), gen.eta_psi.clone()));
    items
        .into_iter()
        .map(|(name, f, eta)| {
            let r = x_of(&f) - eta.subs(&subst);
            Check::new(format!("invariant:{name}"), is_zero(&case.back(&r), trials, seed))
        })
        .collect()
}

/// The case matching the generator's constants, with its ansatz validated
/// against the generator.
#[derive(Clone, Debug)]
pub struct Characteristic {
    pub case: ReductionCase,
    pub checks: Vec<Check>,
}

fn constant_part(e: &Expr, var: &str) -> Result<(Rat, Rat), ReductionError> {
    let s = Expr::sym(var);
    let a = e.coefficient(&s);
    let b = e - &a * &s;
    let ar = a.as_rat().ok_or_else(|| ReductionError::Param(format!("coefficient of {var}")))?;
    let br = b.as_rat().ok_or_else(|| ReductionError::Param(format!("constant along {var}")))?;
    Ok((ar, br))
}

pub fn characteristic_reduce(
    gen: &Generator,
    catalog: &Catalog,
    trials: usize,
    seed: u64,
) -> Result<Characteristic, ReductionError> {
    let (a2, b2) = constant_part(&gen.xi2, "y")?;
    let (a3, b3) = constant_part(&gen.xi3, "t")?;
    let values = [("a2", a2), ("b2", b2), ("a3", a3), ("b3", b3)];
    let active: Vec<&str> =
        values.iter().filter(|(_, v)| *v != Rat::from_integer(0)).map(|(k, _)| *k).collect();
    let spec = catalog.by_pattern(&active)?;
    let overrides: BTreeMap<String, Rat> = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let case = ReductionCase::new(spec, gen.n, &overrides)?;
    let checks = invariance_checks(&case, trials, seed);
    Ok(Characteristic { case, checks })
}

/// `dH/dz2 = 0` along the spectral law.
pub fn verify_first_integral(case: &ReductionCase, trials: usize, seed: u64) -> Check {
    match &case.first_integral {
        None => Check::new("first-integral", Verdict::Error { message: "no first integral stored".into() }),
        Some(h) => {
            let dh = case.reduced_context().diff(h, "z2");
            Check::new("first-integral", is_zero(&dh, trials, seed))
        }
    }
}

/// Stored alternative formulas, each of which must fail verification.
pub fn alternative_outcomes(
    case: &ReductionCase,
    trials: usize,
    seed: u64,
) -> Result<Vec<MutationOutcome>, ReductionError> {
    let mut out = Vec::new();
    for alt in &case.spec.alternatives {
        let Some(value) = &alt.value else { continue };
        let Some(spec) = case.spec.with_field(&alt.field, value) else {
            return Err(ReductionError::Catalog(format!("unknown field `{}`", alt.field)));
        };
        let variant = ReductionCase::new(&spec, case.n, &case.params)?;
        let checks = verify_reduced_lax(&variant, trials, seed);
        out.push(MutationOutcome { mutation: format!("{} = {}", alt.field, value), killed: !all_zero(&checks) });
    }
    Ok(out)
}

/// Drops each term of the two case-specific hierarchy equations in turn;
/// the reduced compatibility must then fail.
pub fn hierarchy_mutations(
    case: &ReductionCase,
    trials: usize,
    seed: u64,
) -> Result<Vec<MutationOutcome>, ReductionError> {
    let base = case.reduced_hierarchy();
    let mut out = Vec::new();
    for name in ["top", "flux"] {
        let idx = base.iter().position(|e| e.0 == name).unwrap();
        for (c, m) in base[idx].1.terms() {
            let term = m.scale(&c);
            let mut eqs = base.clone();
            eqs[idx].1 = &eqs[idx].1 - &term;
            let killed = match reduced_compatibility(case, &eqs, trials, seed) {
                Ok(checks) => !all_zero(&checks),
                Err(_) => true,
            };
            out.push(MutationOutcome { mutation: format!("{name} without {term}"), killed });
        }
    }
    Ok(out)
}

/// Spectrality of every case, against the stated count.
#[derive(Clone, Debug, Serialize)]
pub struct Census {
    pub non_isospectral: Vec<String>,
    pub isospectral: Vec<String>,
    pub stated_non_isospectral: usize,
    pub discrepancy: bool,
}

pub fn census(catalog: &Catalog, n: u32) -> Result<Census, ReductionError> {
    let mut non = Vec::new();
    let mut iso = Vec::new();
    for id in catalog.ids() {
        let case = catalog.instantiate(&id, n)?;
        match classify_spectrality(&case) {
            Spectrality::NonIsospectral => non.push(id),
            Spectrality::Isospectral => iso.push(id),
        }
    }
    let discrepancy = non.len() != STATED_NON_ISOSPECTRAL;
    Ok(Census { non_isospectral: non, isospectral: iso, stated_non_isospectral: STATED_NON_ISOSPECTRAL, discrepancy })
}
