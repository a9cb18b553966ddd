//! The verification runs behind each subcommand.

use std::collections::HashMap;
use std::time::Instant;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use twofloat::TwoFloat;

use crate::expr::{evaluate, is_zero, parse, Expr};
use crate::hierarchy::{fd4_k, GridError, GridFunction, Spectral};
use crate::laxpair::{
    build_lax, compatibility_residual, extract_hierarchy, hierarchy_ideal, ideal_mutations,
    verify_zero_curvature,
};
use crate::numeric::{
    conserved_check, convergence_order, exact_residual_modulo, float_eval_residual, float_residual_modulo, integrate_lambda,
    LambdaLaw, Outcome,
};
use crate::reduction::{
    alternative_outcomes, census, characteristic_reduce, hierarchy_mutations, invariance_checks,
    verify_first_integral, verify_reduced_hierarchy, verify_reduced_lax, Catalog, Check, ReductionCase,
    Spectrality,
};
use crate::report::{Expect, Record, Report, Scope, Section};
use crate::symmetry::{
    check_gamma_condition, gamma_rule, generator_mutations, make_generator, verify_symmetry, GammaSpec,
    SymmetryParams,
};

pub const MAX_N: u32 = 4;
/// Tolerance of the double-precision residual path.
pub const FLOAT_TOL: f64 = 1e-12;
/// Grid used by `ops-check`.
pub const OPS_GRID: usize = 256;
pub const LINEARITY_GRID: usize = 64;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("n must be between 1 and {MAX_N}, got {0}")]
    Order(u32),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub n: u32,
    pub trials: usize,
    pub seed: u64,
    pub mutations: bool,
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { n: 1, trials: 20, seed: 42, mutations: false, timings: false }
    }
}

impl RunOptions {
    fn check(&self) -> Result<(), CommandError> {
        if (1..=MAX_N).contains(&self.n) {
            Ok(())
        } else {
            Err(CommandError::Order(self.n))
        }
    }

    fn scope(&self, case: Option<&str>) -> Scope {
        Scope { n: self.n, case: case.map(str::to_string), trials: self.trials, seed: self.seed }
    }

    fn ms(&self, t: Instant) -> Option<f64> {
        self.timings.then(|| (t.elapsed().as_secs_f64() * 1e4).round() / 10.0)
    }
}

fn checks(scope: &Scope, prefix: &str, cs: &[Check]) -> Vec<Record> {
    cs.iter()
        .map(|c| {
            let r = scope.verdict(&format!("{prefix}{}", c.name), &c.verdict, Expect::Zero);
            match &c.note {
                Some(n) if r.detail.is_none() => r.detail(n.clone()),
                _ => r,
            }
        })
        .collect()
}

/// Zero curvature of the pair and the equations read off from it.
pub fn cmd_verify_lax(opts: &RunOptions) -> Result<Report, CommandError> {
    opts.check()?;
    let n = opts.n;
    let scope = opts.scope(None);
    let mut report = Report::new("verify-lax", n, None, opts.trials, opts.seed, Catalog::embedded().version);
    let lax = build_lax(n);
    let ideal = hierarchy_ideal(n);

    let mut curv = Section::new("zero curvature", None);
    let t = Instant::now();
    match verify_zero_curvature(&lax, &ideal, opts.trials, opts.seed) {
        Ok(c) => {
            for e in &c.entries {
                curv.records.push(
                    scope
                        .verdict(&format!("curvature[{}][{}]", e.row, e.col), &e.verdict, Expect::Zero)
                        .detail(format!("{} raw terms", e.raw_terms)),
                );
            }
        }
        Err(e) => curv.records.push(scope.error("curvature", e.to_string())),
    }
    if let Some(r) = curv.records.last_mut() {
        r.wall_ms = opts.ms(t);
    }
    match compatibility_residual(&lax) {
        Ok(res) => {
            for (i, row) in res.entries.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    let v = exact_residual_modulo(e, &ideal, &lax.context, opts.trials, opts.seed);
                    curv.records.push(scope.verdict(&format!("on-shell-curvature[{i}][{k}]"), &v, Expect::Zero));
                    let name = format!("float-curvature[{i}][{k}]");
                    curv.records.push(match float_residual_modulo(e, &ideal, &lax.context, opts.trials, opts.seed) {
                        Ok(f) => scope.numeric(&name, f.max_relative, FLOAT_TOL, Expect::Zero),
                        Err(err) => scope.error(&name, err.to_string()),
                    });
                }
            }
        }
        Err(e) => curv.records.push(scope.error("float-curvature", e.to_string())),
    }
    report.sections.push(curv);

    let mut ext = Section::new("hierarchy extraction", None);
    match extract_hierarchy(&lax) {
        Ok(eqs) => {
            let expected = 2 * n as usize + 2;
            ext.records.push(
                scope.flag("equation-count", eqs.len() == expected).detail(format!("{} of {expected}", eqs.len())),
            );
            for (k, e) in eqs.iter().enumerate() {
                let r = scope.flag(&format!("equation[{k}]"), e.matched.is_some());
                let how = match (&e.matched, e.differentiated) {
                    (Some(m), true) => format!("x-derivative of {m}: {}", e.expr),
                    (Some(m), false) => format!("{m}: {}", e.expr),
                    (None, _) => format!("unmatched: {}", e.expr),
                };
                ext.records.push(r.detail(how));
            }
            ext.fact("equations", eqs.iter().map(|e| e.expr.clone()).collect::<Vec<_>>());
        }
        Err(e) => ext.records.push(scope.error("extract", e.to_string())),
    }
    report.sections.push(ext);

    if opts.mutations {
        let mut m = Section::new("mutations", None);
        match ideal_mutations(n, opts.trials, opts.seed) {
            Ok(ms) => m.records.extend(ms.iter().map(|o| scope.mutant(&o.mutation, o.killed))),
            Err(e) => m.records.push(scope.error("mutations", e.to_string())),
        }
        report.sections.push(m);
    }
    Ok(report.finish())
}

/// Invariance of the spectral problem under the symmetry family.
pub fn cmd_verify_symmetry(opts: &RunOptions) -> Result<Report, CommandError> {
    opts.check()?;
    let n = opts.n;
    let scope = opts.scope(None);
    let mut report = Report::new("verify-symmetry", n, None, opts.trials, opts.seed, Catalog::embedded().version);
    let gen = make_generator(&SymmetryParams::symbolic(), n);
    let mut inv = Section::new("invariance", None);
    let t = Instant::now();
    match verify_symmetry(&gen, opts.trials, opts.seed) {
        Ok(c) => {
            for e in &c.equations {
                inv.records.push(
                    scope.verdict(&e.equation, &e.verdict, Expect::Zero).detail(format!("{} terms on shell", e.terms)),
                );
            }
        }
        Err(e) => inv.records.push(scope.error("invariance", e.to_string())),
    }
    if let Some(r) = inv.records.last_mut() {
        r.wall_ms = opts.ms(t);
    }
    let mut gam = Section::new("gamma condition", None);
    gam.records.push(scope.flag("gamma-rule", check_gamma_condition(&GammaSpec::Rule(gamma_rule(n)), n)));
    let travelling = parse(&format!("l*exp(y + l^{n}*t)")).expect("valid");
    gam.records.push(scope.flag("gamma-travelling-wave", check_gamma_condition(&GammaSpec::Explicit(travelling), n)));
    let wrong = parse("y*t").expect("valid");
    gam.records.push(scope.flag("gamma-rejects-y*t", !check_gamma_condition(&GammaSpec::Explicit(wrong), n)));
    report.sections.push(inv);
    report.sections.push(gam);
    if opts.mutations {
        let mut m = Section::new("mutations", None);
        match generator_mutations(n, opts.trials, opts.seed) {
            Ok(ms) => m.records.extend(ms.iter().map(|o| scope.mutant(&o.mutation, o.killed))),
            Err(e) => m.records.push(scope.error("mutations", e.to_string())),
        }
        report.sections.push(m);
    }
    Ok(report.finish())
}

fn reduce_case(case: &ReductionCase, catalog: &Catalog, opts: &RunOptions) -> Section {
    let scope = opts.scope(Some(&case.id));
    let (trials, seed) = (opts.trials, opts.seed);
    let mut s = Section::new(format!("case {}", case.id), Some(case.id.clone()));
    let t = Instant::now();
    match characteristic_reduce(&case.generator(), catalog, trials, seed) {
        Ok(ch) => {
            s.records.push(scope.flag("characteristic-case", ch.case.id == case.id).detail(ch.case.id.clone()));
            s.records.extend(checks(&scope, "", &ch.checks));
        }
        Err(e) => s.records.push(scope.error("characteristic-case", e.to_string())),
    }
    if ch_missing(&s) {
        s.records.extend(checks(&scope, "", &invariance_checks(case, trials, seed)));
    }
    s.records.extend(checks(&scope, "lax:", &verify_reduced_lax(case, trials, seed)));
    match verify_reduced_hierarchy(case, trials, seed) {
        Ok(cs) => s.records.extend(checks(&scope, "hierarchy:", &cs)),
        Err(e) => s.records.push(scope.error("hierarchy", e.to_string())),
    }
    let fi = verify_first_integral(case, trials, seed);
    s.records.extend(checks(&scope, "", &[fi]));
    let spectrality = case.spectrality();
    s.fact("spectrality", spectrality);
    s.fact("z1", case.z1.to_string());
    s.fact("z2", case.z2.to_string());
    s.fact("law", case.law.to_string());
    match integrate_lambda(case, 1.0f64, (0.0, 0.5), 1e-10, seed) {
        Ok(traj) => {
            let ok = traj.completed();
            let mut r = scope.flag("lambda-smoke-run", ok).detail(format!(
                "{} accepted, {} rejected steps on [0, 0.5]",
                traj.accepted, traj.rejected
            ));
            if let Outcome::BlowUp { estimate, .. } = traj.outcome {
                r = r.detail(format!("blow-up near z2 = {estimate:.6}"));
            }
            s.records.push(r);
            if spectrality == Spectrality::Isospectral {
                let constant = traj.points.iter().all(|p| p.1 == 1.0);
                s.records.push(scope.flag("lambda-constant", constant));
            }
            if let Ok(d) = conserved_check(case, &traj) {
                s.records.push(scope.numeric("first-integral-drift", d, 1e-8, Expect::Zero));
            }
        }
        Err(e) => s.records.push(scope.error("lambda-smoke-run", e.to_string())),
    }
    match alternative_outcomes(case, trials, seed) {
        Ok(alts) => s.records.extend(alts.iter().map(|o| scope.mutant(&format!("alternative {}", o.mutation), o.killed))),
        Err(e) => s.records.push(scope.error("alternatives", e.to_string())),
    }
    if opts.mutations {
        match hierarchy_mutations(case, trials, seed) {
            Ok(ms) => s.records.extend(ms.iter().map(|o| scope.mutant(&o.mutation, o.killed))),
            Err(e) => s.records.push(scope.error("mutations", e.to_string())),
        }
    }
    if let Some(r) = s.records.last_mut() {
        r.wall_ms = opts.ms(t);
    }
    s
}

fn ch_missing(s: &Section) -> bool {
    s.records.iter().any(|r| r.name == "characteristic-case" && r.verdict == "error")
}

/// Reductions of the listed cases, or of all cases when `cases` is empty.
pub fn cmd_reduce(catalog: &Catalog, cases: &[String], opts: &RunOptions) -> Result<Report, CommandError> {
    opts.check()?;
    let ids: Vec<String> = if cases.is_empty() { catalog.ids() } else { cases.to_vec() };
    for id in &ids {
        if catalog.spec(id).is_err() {
            return Err(CommandError::UnknownCase(id.clone()));
        }
    }
    let single = (ids.len() == 1).then(|| ids[0].clone());
    let mut report = Report::new("reduce", opts.n, single, opts.trials, opts.seed, catalog.version);
    for id in &ids {
        let scope = opts.scope(Some(id));
        match catalog.instantiate(id, opts.n) {
            Ok(case) => report.sections.push(reduce_case(&case, catalog, opts)),
            Err(e) => {
                let mut s = Section::new(format!("case {id}"), Some(id.clone()));
                s.records.push(scope.error("instantiate", e.to_string()));
                report.sections.push(s);
            }
        }
    }
    if cases.is_empty() {
        let mut s = Section::new("census", None);
        match census(catalog, opts.n) {
            Ok(c) => {
                s.fact("non_isospectral", &c.non_isospectral);
                s.fact("isospectral", &c.isospectral);
                s.fact("stated_non_isospectral", c.stated_non_isospectral);
                s.fact("discrepancy", c.discrepancy);
                if c.discrepancy {
                    s.fact(
                        "note",
                        format!(
                            "{} non-isospectral cases found, {} stated",
                            c.non_isospectral.len(),
                            c.stated_non_isospectral
                        ),
                    );
                }
            }
            Err(e) => s.records.push(opts.scope(None).error("census", e.to_string())),
        }
        report.sections.push(s);
    }
    Ok(report.finish())
}

/// Closed-form `Λ(z2)` with `Λ(0) = L0`, where the law separates into
/// elementary functions.
pub fn closed_form(case: &ReductionCase) -> Option<Expr> {
    let n = case.n;
    let text = if case.law.is_zero() {
        "L0".to_string()
    } else {
        match case.id.as_str() {
            "I.3" => format!("(L0^(-{n}) - z2)^(-1/{n})"),
            "III.1" => format!("(L0^{n} - z2)^(1/{n})"),
            _ => return None,
        }
    };
    Some(parse(&text).expect("valid closed form"))
}

/// `d/dz2` of the closed form minus the law along it, at random points.
pub fn closed_form_residual(case: &ReductionCase, form: &Expr) -> Option<f64> {
    let ctx = crate::expr::Context::new(&["z2"]);
    let lhs = ctx.diff(form, "z2");
    let mut map = HashMap::new();
    map.insert(Expr::field("Lam", None), form.clone());
    let res = lhs - case.law.subs(&map);
    if is_zero(&res, 5, 1).is_zero() {
        return Some(0.0);
    }
    float_eval_residual(&res, 20, 1).ok().map(|r| r.max_relative)
}

pub struct SolveOptions {
    pub lambda0: f64,
    pub z_end: f64,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { lambda0: 1.0, z_end: 0.9, tol: 1e-12 }
    }
}

/// Integrates the spectral law of one case.
pub fn cmd_solve_lambda(
    catalog: &Catalog,
    id: &str,
    opts: &RunOptions,
    solve: &SolveOptions,
) -> Result<Report, CommandError> {
    opts.check()?;
    let case = catalog.instantiate(id, opts.n).map_err(|_| CommandError::UnknownCase(id.to_string()))?;
    let scope = opts.scope(Some(id));
    let mut report = Report::new("solve-lambda", opts.n, Some(id.to_string()), opts.trials, opts.seed, catalog.version);
    let mut s = Section::new(format!("case {id} spectral law"), Some(id.to_string()));
    s.fact("law", case.law.to_string());
    s.fact("spectrality", case.spectrality());
    let t = Instant::now();
    let traj = integrate_lambda(&case, solve.lambda0, (0.0, solve.z_end), solve.tol, opts.seed)
        .map_err(|e| CommandError::Usage(e.to_string()))?;
    let mut r = scope.flag("integration", traj.completed()).detail(format!(
        "{} accepted, {} rejected steps",
        traj.accepted, traj.rejected
    ));
    match &traj.outcome {
        Outcome::BlowUp { at, estimate } => r = r.detail(format!("blow-up at z2 = {at:.9}, singularity near {estimate:.9}")),
        Outcome::DenominatorCrossing { at, denominator } => {
            r = r.detail(format!("denominator {denominator} vanishes at z2 = {at:.9}"))
        }
        Outcome::Completed => {}
    }
    s.records.push(r.timed(opts.ms(t)));
    if case.spectrality() == Spectrality::Isospectral {
        let dev = traj.points.iter().fold(0.0f64, |m, p| m.max((p.1 - solve.lambda0).abs()));
        s.records.push(scope.numeric("constant-trajectory", dev, 0.0, Expect::Zero));
    }
    match conserved_check(&case, &traj) {
        Ok(d) => s.records.push(scope.numeric("first-integral-drift", d, 1e4 * solve.tol, Expect::Zero)),
        Err(e) => s.fact("first_integral", e.to_string()),
    }
    if let Some(form) = closed_form(&case) {
        s.fact("closed_form", form.to_string());
        if let Some(v) = closed_form_residual(&case, &form) {
            s.records.push(scope.numeric("closed-form-solves-law", v, FLOAT_TOL, Expect::Zero));
        }
        let exact = |z: f64| eval_closed(&form, z, solve.lambda0);
        if traj.completed() {
            s.records.push(scope.numeric("closed-form-error", traj.max_error(exact), 1e-8, Expect::Zero));
        }
        if !case.law.is_zero() {
            let law = LambdaLaw::new(case.law.clone());
            match convergence_order(&law, 0.0, solve.lambda0, solve.z_end, exact, &[16, 32, 64, 128, 256]) {
                Ok(p) if p.is_infinite() => {
                    s.records.push(scope.flag("convergence-order", true).detail("exact to roundoff".to_string()))
                }
                Ok(p) => s.records.push(scope.flag("convergence-order", p >= 4.0).detail(format!("observed order {p:.3}"))),
                Err(e) => s.records.push(scope.error("convergence-order", e.to_string())),
            }
        }
    }
    s.fact("trajectory", &traj);
    report.sections.push(s);
    Ok(report.finish())
}

fn eval_closed(form: &Expr, z: f64, l0: f64) -> f64 {
    let zs = Expr::sym("z2");
    let ls = Expr::sym("L0");
    evaluate::<f64>(form, &mut |leaf| {
        if *leaf == zs {
            Some(z)
        } else if *leaf == ls {
            Some(l0)
        } else {
            None
        }
    })
    .unwrap_or(f64::NAN)
}

/// Random trigonometric polynomial with modes `1..=modes`.
pub fn band_limited(rng: &mut ChaCha8Rng, modes: usize) -> Vec<(f64, f64)> {
    (1..=modes).map(|_| (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect()
}

pub fn trig_eval<T: Float>(coef: &[(f64, f64)], x: T) -> T {
    let mut acc = T::zero();
    for (k, &(a, b)) in coef.iter().enumerate() {
        let kx = x * T::from(k + 1).expect("representable");
        acc = acc + T::from(a).expect("representable") * kx.sin() + T::from(b).expect("representable") * kx.cos();
    }
    acc
}

/// Grid checks of `K`, `J` and `δ⁻¹`.
pub fn cmd_ops_check(opts: &RunOptions) -> Result<Report, CommandError> {
    opts.check()?;
    let scope = opts.scope(None);
    let mut report = Report::new("ops-check", opts.n, None, opts.trials, opts.seed, Catalog::embedded().version);
    let n = OPS_GRID;
    let sp = Spectral::<f64>::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let grid = |f: &dyn Fn(f64) -> f64| GridFunction::from_fn(n, f).expect("valid grid");
    let err = |e: GridError| CommandError::Usage(e.to_string());

    let mut k = Section::new("operator K", None);
    let coef = band_limited(&mut rng, 3);
    let f = grid(&|x| trig_eval(&coef, x));
    let kf = sp.apply_k(&f);
    let h = TwoFloat::from(2f64.powi(-10));
    let fd = |x: f64| -> f64 { fd4_k(&|t: TwoFloat| trig_eval(&coef, t), TwoFloat::from(x), h).into() };
    let dev = (0..n).fold(0.0f64, |m, i| m.max((kf.samples[i] - fd(f.x(i))).abs()));
    k.records.push(scope.numeric("spectral-vs-fd4", dev, 1e-8, Expect::Zero).detail(format!("N = {n}, h = 2^-10")));
    let c = GridFunction::constant(n, rng.gen_range(-2.0..2.0)).map_err(err)?;
    k.records.push(scope.numeric("annihilates-constants", sp.apply_k(&c).max_abs(), 1e-12, Expect::Zero));
    let g = grid(&|x| trig_eval(&band_limited(&mut ChaCha8Rng::seed_from_u64(opts.seed ^ 1), 3), x));
    // Roundoff in the top modes grows like k³, so linearity is checked on a
    // coarser grid where that floor is below the tolerance.
    let small = Spectral::<f64>::new(LINEARITY_GRID);
    let fs = GridFunction::from_fn(LINEARITY_GRID, |x| trig_eval(&coef, x)).map_err(err)?;
    let gs = GridFunction::from_fn(LINEARITY_GRID, |x: f64| (3.0 * x).sin() - 0.5 * x.cos()).map_err(err)?;
    let a = rng.gen_range(-2.0..2.0);
    let (kf_a, kg) = (small.apply_k(&fs).scale(a), small.apply_k(&gs));
    let lin = small.apply_k(&fs.scale(a).add(&gs).map_err(err)?).sub(&kf_a.add(&kg).map_err(err)?).map_err(err)?;
    let size = kf_a.max_abs() + kg.max_abs();
    k.records.push(
        scope
            .numeric("linear", lin.max_abs() / size, 1e-12, Expect::Zero)
            .detail(format!("N = {LINEARITY_GRID}, relative to |K(af)| + |Kg|")),
    );
    report.sections.push(k);

    let mut inv = Section::new("antiderivative", None);
    let fx = sp.derivative(&f, 1);
    let back = sp.antiderivative(&fx).map_err(err)?;
    let mean = f.mean();
    let round = back.sub(&f.map(|v| v - mean)).map_err(err)?.max_abs();
    inv.records.push(scope.numeric("inverse-of-derivative", round, 1e-12, Expect::Zero));
    let g0 = g.map(|v| v - g.mean());
    let there = sp.derivative(&sp.antiderivative(&g0).map_err(err)?, 1).sub(&g0).map_err(err)?.max_abs();
    inv.records.push(scope.numeric("derivative-of-inverse", there, 1e-12, Expect::Zero));
    let biased = g0.map(|v| v + 0.25);
    let refused = matches!(sp.antiderivative(&biased), Err(GridError::NonzeroMean(_)));
    inv.records.push(scope.flag("refuses-nonzero-mean", refused));
    report.sections.push(inv);

    let mut j = Section::new("operator J and recursion", None);
    let u = grid(&|x| 1.0 + 0.3 * x.sin() + 0.1 * (2.0 * x).cos());
    let one = GridFunction::constant(n, 1.0).map_err(err)?;
    let sine = grid(&f64::sin);
    let jm = sp.apply_j(&one, &sine).map_err(err)?.sub(&grid(&|x| -x.cos())).map_err(err)?.max_abs();
    j.records.push(scope.numeric("unit-u-is-minus-derivative", jm, 1e-12, Expect::Zero));
    j.records.push(scope.numeric("annihilates-constants", sp.apply_j(&u, &c).map_err(err)?.max_abs(), 1e-12, Expect::Zero));
    // v = F(u) makes u v_x an exact derivative, so J v is defined.
    let mut next = u.map(|a| a * a);
    let mut worst = 0.0f64;
    for step in 0..opts.n.max(1) {
        let (v, vn) = sp.manufacture(&u, &next).map_err(err)?;
        let r = sp.check_recursion(&u, &v, &vn).map_err(err)?;
        worst = worst.max(r);
        next = if step % 2 == 0 { u.map(|a| a.sin()) } else { u.map(|a| a * a * a) };
    }
    j.records.push(scope.numeric("manufactured-recursion", worst, 1e-8, Expect::Zero).detail(format!("{} pairs", opts.n)));
    let unrelated = sp.check_recursion(&u, &f, &u.map(|a| a * a)).map_err(err)?;
    j.records.push(scope.numeric("unrelated-pair", unrelated, 1e-8, Expect::Nonzero));
    let refused = matches!(sp.apply_j(&grid(&|x| 1.0 + 0.5 * x.sin()), &grid(&f64::cos)), Err(GridError::NonzeroMean(_)));
    j.records.push(scope.flag("refuses-nonperiodic-integrand", refused));
    report.sections.push(j);
    Ok(report.finish())
}
