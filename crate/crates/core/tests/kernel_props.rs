mod common;

use common::{build, tree, VARS};
use laxforge::expr::{evaluate, is_zero, parse_with, Context, Expr, Rat, Signature};
use num_complex::Complex;
use proptest::prelude::*;

fn ctx() -> Context {
    Context::new(&VARS)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn simplify_is_idempotent(t in tree()) {
        let e = build(&t);
        let once = e.simplify();
        prop_assert_eq!(&once, &e);
        prop_assert_eq!(once.simplify(), once);
    }

    #[test]
    fn derivatives_commute(t in tree(), v in 0usize..3, w in 0usize..3) {
        let e = build(&t);
        let c = ctx();
        let vw = c.diff(&c.diff(&e, VARS[v]), VARS[w]);
        let wv = c.diff(&c.diff(&e, VARS[w]), VARS[v]);
        prop_assert_eq!(vw, wv);
    }

    #[test]
    fn leibniz_rule(a in tree(), b in tree(), v in 0usize..3) {
        let (a, b) = (build(&a), build(&b));
        let c = ctx();
        let lhs = c.diff(&(&a * &b), VARS[v]);
        let rhs = &a * c.diff(&b, VARS[v]) + &b * c.diff(&a, VARS[v]);
        prop_assert!((lhs - rhs).is_zero());
    }

    #[test]
    fn print_parse_round_trip(t in tree()) {
        let e = build(&t);
        let text = e.to_string();
        let back = parse_with(&text, &Signature::standard());
        prop_assert!(back.is_ok(), "{} does not parse: {:?}", text, back);
        prop_assert_eq!(back.unwrap(), e, "via {}", text);
    }

    #[test]
    fn antiderivative_inverts_derivative(t in tree(), v in 0usize..3, w in 0usize..3) {
        let e = build(&t);
        let c = ctx();
        let i = Expr::int(&e, VARS[v]);
        prop_assert_eq!(c.diff(&i, VARS[v]), e.clone());
        let other = c.diff(&i, VARS[w]);
        if v != w {
            prop_assert_eq!(c.diff(&other, VARS[v]), c.diff(&e, VARS[w]));
        }
    }

    #[test]
    fn expanded_square_is_zero_by_sampling(a in tree(), b in tree(), seed in any::<u64>()) {
        let (a, b) = (build(&a), build(&b));
        let lhs = (&a + &b).powi(2);
        let rhs = &a * &a + Expr::num(2) * &a * &b + &b * &b;
        prop_assert!(is_zero(&(lhs - rhs), 3, seed).is_zero());
    }

    #[test]
    fn radicals_of_sums_keep_the_principal_branch(
        a in -9i64..10, b in -9i64..10, q in prop_oneof![Just((1i64, 2i64)), Just((-1, 2)), Just((1, 3)), Just((-3, 2))],
        z in -5.0f64..5.0,
    ) {
        prop_assume!(a != 0 && b != 0);
        let s = Expr::num(a) + Expr::num(b) * Expr::sym("z");
        let e = s.pow(Rat::new(q.0, q.1));
        let mut leaf = |l: &Expr| (l.as_sym() == Some("z")).then(|| Complex::new(z, 0.0));
        let got = evaluate::<Complex<f64>>(&e, &mut leaf).unwrap();
        let base = Complex::new(a as f64 + b as f64 * z, 0.0);
        let want = base.powf(q.0 as f64 / q.1 as f64);
        prop_assert!((got - want).norm() <= 1e-9 * (1.0 + want.norm()), "{} at z = {}: {} vs {}", e, z, got, want);
    }
}
