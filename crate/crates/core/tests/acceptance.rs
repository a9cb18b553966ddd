//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::time::{Duration, Instant};

use common::{build, tree, VARS};
use laxforge::commands::{cmd_ops_check, cmd_reduce, cmd_verify_lax, cmd_verify_symmetry, FLOAT_TOL, RunOptions};
use laxforge::expr::{collect_jets, parse_with, Context, Expr, Signature};
use laxforge::laxpair::{build_lax, extract_hierarchy};
use laxforge::numeric::{convergence_order, integrate_lambda, LambdaLaw};
use laxforge::reduction::{census, Catalog};
use laxforge::report::{Expect, Report};
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const TRIALS: usize = 20;
const SEED: u64 = 42;
const PROP_CASES: u32 = 1000;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn opts(n: u32, mutations: bool) -> RunOptions {
    RunOptions { n, trials: TRIALS, seed: SEED, mutations, timings: false }
}

fn failed(r: &Report) -> Vec<String> {
    r.records().filter(|x| !x.passed).map(|x| format!("{} [{}]", x.name, x.verdict)).collect()
}

fn zero_curvature() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=3 {
        let t = Instant::now();
        let r = cmd_verify_lax(&opts(n, false)).expect("valid order");
        let secs = t.elapsed().as_secs_f64();
        let bad = failed(&r);
        if !bad.is_empty() {
            return outcome(false, format!("n={n}: {}", bad.join(", ")));
        }
        let sampled: Vec<_> = r.records().filter(|x| x.name.starts_with("on-shell-curvature")).collect();
        let exact_ok = sampled.len() == 4
            && sampled.iter().all(|x| x.trials >= TRIALS && (x.verdict == "probably-zero" || x.verdict == "zero-structural"));
        let worst = r
            .records()
            .filter(|x| x.name.starts_with("float-curvature"))
            .filter_map(|x| x.value)
            .fold(0.0f64, f64::max);
        if !exact_ok || worst > FLOAT_TOL || secs >= 30.0 {
            return outcome(false, format!("n={n}: rational {exact_ok}, float {worst:.1e}, {secs:.2}s"));
        }
        notes.push(format!("n={n} float {worst:.1e} {secs:.2}s"));
    }
    outcome(true, notes.join("; "))
}

fn extraction() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=3u32 {
        let eqs = match extract_hierarchy(&build_lax(n)) {
            Ok(e) => e,
            Err(e) => return outcome(false, format!("n={n}: {e}")),
        };
        let matched = eqs.iter().filter(|e| e.matched.is_some()).count();
        let want = 2 * n as usize + 2;
        if eqs.len() != want || matched != want {
            return outcome(false, format!("n={n}: {} equations, {matched} matched, want {want}", eqs.len()));
        }
        notes.push(format!("n={n} {want}/{want}"));
    }
    outcome(true, notes.join("; "))
}

fn symmetry() -> Outcome {
    let mut notes = Vec::new();
    for n in 1..=2 {
        let r = cmd_verify_symmetry(&opts(n, true)).expect("valid order");
        let mutants: Vec<_> = r.records().filter(|x| x.expect == Expect::Nonzero).collect();
        let killed = mutants.iter().filter(|x| x.passed).count();
        let bad = failed(&r);
        if !bad.is_empty() || mutants.is_empty() {
            return outcome(false, format!("n={n}: {} ; {killed}/{} killed", bad.join(", "), mutants.len()));
        }
        notes.push(format!("n={n} killed {killed}/{}", mutants.len()));
    }
    outcome(true, notes.join("; "))
}

fn mentions_original_variables(e: &Expr) -> bool {
    e.has_symbol("y")
        || e.has_symbol("t")
        || collect_jets(e).iter().any(|j| j.deriv.iter().any(|d| &**d == "y" || &**d == "t"))
}

fn reductions() -> Outcome {
    let cat = Catalog::embedded();
    let mut notes = Vec::new();
    for n in 1..=2 {
        let t = Instant::now();
        let r = cmd_reduce(&cat, &[], &opts(n, true)).expect("valid order");
        let secs = t.elapsed();
        let bad = failed(&r);
        if !bad.is_empty() {
            return outcome(false, format!("n={n}: {}", bad.join(", ")));
        }
        let cases = r.sections.iter().filter(|s| s.case.is_some()).count();
        for id in cat.ids() {
            let case = cat.instantiate(&id, n).expect("catalog case");
            let lax = case.reduced_lax();
            let mut exprs: Vec<Expr> = case.reduced_hierarchy().into_iter().map(|(_, e, _)| e).collect();
            exprs.extend(lax.x_part.0.iter().chain(lax.t_part.0.iter()).flatten().cloned());
            exprs.extend([lax.lead.clone(), lax.drift.clone(), case.law.clone()]);
            if exprs.iter().any(mentions_original_variables) {
                return outcome(false, format!("{id} n={n}: y or t left in the reduced system"));
            }
        }
        if cases != 8 || (n == 2 && secs >= Duration::from_secs(120)) {
            return outcome(false, format!("n={n}: {cases} cases in {secs:.2?}"));
        }
        notes.push(format!("n={n} 8 cases {:.2}s", secs.as_secs_f64()));
    }
    outcome(true, notes.join("; "))
}

fn spectrality_census() -> Outcome {
    let c = match census(&Catalog::embedded(), 1) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let ok = c.non_isospectral == ["I.1", "I.2", "I.3", "II.1", "III.1"]
        && c.isospectral == ["II.2", "II.3", "III.2"]
        && c.discrepancy
        && c.stated_non_isospectral == 6;
    outcome(
        ok,
        format!(
            "non-isospectral {:?}, isospectral {:?}, stated {} flagged {}",
            c.non_isospectral, c.isospectral, c.stated_non_isospectral, c.discrepancy
        ),
    )
}

fn lambda_numerics() -> Outcome {
    let cat = Catalog::embedded();
    let dev = |id: &str, n: u32, z1: f64, exact: &dyn Fn(f64) -> f64| -> f64 {
        let case = cat.instantiate(id, n).expect("catalog case");
        match integrate_lambda(&case, 1.0f64, (0.0, z1), 1e-12, SEED) {
            Ok(t) if t.completed() => t.max_error(exact),
            _ => f64::INFINITY,
        }
    };
    let e13 = dev("I.3", 1, 0.9, &|z| 1.0 / (1.0 - z));
    let e31 = dev("III.1", 2, 0.99, &|z| (1.0 - z).sqrt());
    let mut constant = true;
    for id in ["II.2", "II.3", "III.2"] {
        for n in 1..=2 {
            let case = cat.instantiate(id, n).expect("catalog case");
            for l0 in [0.3, 1.0, 2.5] {
                let t = integrate_lambda(&case, l0, (0.0, 2.0), 1e-10, SEED).expect("integrates");
                constant &= t.completed() && t.points.iter().all(|p| p.1 == l0);
            }
        }
    }
    let law = LambdaLaw::new(cat.instantiate("I.3", 1).expect("catalog case").law);
    let steps = [16, 32, 64, 128, 256];
    let order = convergence_order(&law, 0.0, 1.0, 0.9, |z: f64| 1.0 / (1.0 - z), &steps).unwrap_or(f64::NAN);
    let ok = e13 <= 1e-8 && e31 <= 1e-8 && constant && order >= 4.0;
    outcome(ok, format!("I.3 {e13:.1e}, III.1 {e31:.1e}, constant {constant}, order {order:.2}"))
}

fn operators() -> Outcome {
    let r = cmd_ops_check(&opts(3, false)).expect("valid order");
    let value = |name: &str| r.records().find(|x| x.name == name).and_then(|x| x.value).unwrap_or(f64::INFINITY);
    let fd = value("spectral-vs-fd4");
    let round = value("inverse-of-derivative").max(value("derivative-of-inverse"));
    let rec = value("manufactured-recursion");
    let ok = r.passed && fd <= 1e-8 && round <= 1e-12 && rec <= 1e-8;
    outcome(ok, format!("K vs fd4 {fd:.1e}, round trip {round:.1e}, recursion {rec:.1e}"))
}

fn properties() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: PROP_CASES, failure_persistence: None, ..Config::default() });
    let ctx = Context::new(&VARS);
    let sig = Signature::standard();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut run = |name: &str, r: Result<(), String>| {
        ok &= r.is_ok();
        notes.push(match r {
            Ok(()) => format!("{name} {PROP_CASES}"),
            Err(e) => format!("{name} failed: {e}"),
        });
    };
    let fail = |m: String| TestCaseError::fail(m);
    run(
        "idempotence",
        runner
            .run(&tree(), |t| {
                let e = build(&t);
                let once = e.simplify();
                if once != e || once.simplify() != once {
                    return Err(fail(format!("{e}")));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    run(
        "commutation",
        runner
            .run(&(tree(), 0usize..3, 0usize..3), |(t, v, w)| {
                let e = build(&t);
                let (v, w) = (VARS[v], VARS[w]);
                if ctx.diff(&ctx.diff(&e, v), w) != ctx.diff(&ctx.diff(&e, w), v) {
                    return Err(fail(format!("{e}")));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    run(
        "leibniz",
        runner
            .run(&(tree(), tree(), 0usize..3), |(a, b, v)| {
                let (a, b, v) = (build(&a), build(&b), VARS[v]);
                let lhs = ctx.diff(&(&a * &b), v);
                let rhs = &a * ctx.diff(&b, v) + &b * ctx.diff(&a, v);
                if !(lhs - rhs).is_zero() {
                    return Err(fail(format!("{a} * {b}")));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    run(
        "round-trip",
        runner
            .run(&tree(), |t| {
                let e = build(&t);
                match parse_with(&e.to_string(), &sig) {
                    Ok(back) if back == e => Ok(()),
                    other => Err(fail(format!("{e} -> {other:?}"))),
                }
            })
            .map_err(|e| e.to_string()),
    );
    outcome(ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("zero curvature n=1..3", zero_curvature),
        ("hierarchy extraction n=1..3", extraction),
        ("symmetry family n=1,2", symmetry),
        ("reductions n=1,2", reductions),
        ("spectrality census", spectrality_census),
        ("spectral law numerics", lambda_numerics),
        ("recursion operators", operators),
        ("kernel properties", properties),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.ok {
            failures += 1;
        }
        let verdict = if o.ok { "PASS" } else { "FAIL" };
        println!("{verdict} {} {name} ({:.2}s): {}", k + 1, t.elapsed().as_secs_f64(), o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
