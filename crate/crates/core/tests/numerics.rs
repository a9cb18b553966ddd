use laxforge::expr::{parse, Expr};
use laxforge::numeric::*;
use laxforge::reduction::Catalog;
use laxforge::Trajectory32;
use proptest::prelude::*;

/// Classical RK4 with a fixed small step, written out here so the adaptive
/// integrator is checked against something it shares no code with.
fn rk4(f: impl Fn(f64, f64) -> f64, y0: f64, z1: f64, steps: usize) -> f64 {
    let h = z1 / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let z = i as f64 * h;
        let k1 = f(z, y);
        let k2 = f(z + h / 2.0, y + h / 2.0 * k1);
        let k3 = f(z + h / 2.0, y + h / 2.0 * k2);
        let k4 = f(z + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

fn max_dev(points: &[(f64, f64)], exact: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|&(z, l)| (l - exact(z)).abs()).fold(0.0, f64::max)
}

#[test]
fn square_law_case_matches_reciprocal() {
    let cat = Catalog::embedded();
    let case = cat.instantiate("I.3", 1).unwrap();
    let t = integrate_lambda(&case, 1.0f64, (0.0, 0.9), 1e-12, 42).unwrap();
    assert!(t.completed());
    assert!(max_dev(&t.points, |z| 1.0 / (1.0 - z)) <= 1e-8);
}

#[test]
fn root_law_case_matches_square_root() {
    let cat = Catalog::embedded();
    let case = cat.instantiate("III.1", 2).unwrap();
    let t = integrate_lambda(&case, 1.0f64, (0.0, 0.99), 1e-12, 42).unwrap();
    assert!(t.completed());
    assert!(max_dev(&t.points, |z| (1.0 - z).sqrt()) <= 1e-8);
}

#[test]
fn laws_without_closed_form_agree_with_rk4() {
    let cat = Catalog::embedded();
    for (id, n) in [("I.1", 1), ("I.1", 2), ("I.2", 1), ("I.2", 2), ("II.1", 1), ("II.1", 2)] {
        let case = cat.instantiate(id, n).unwrap();
        let law = LambdaLaw::new(case.law.clone());
        let t = integrate_lambda(&case, 1.0f64, (0.0, 0.5), 1e-12, 42).unwrap();
        assert!(t.completed(), "{id} n={n}: {:?}", t.outcome);
        let &(z_end, l_end) = t.points.last().unwrap();
        let want = rk4(|z, l| law.rhs_at(z, l).unwrap(), 1.0, z_end, 20_000);
        assert!((l_end - want).abs() < 1e-9, "{id} n={n}: {l_end} vs {want}");
    }
}

#[test]
fn first_integrals_are_conserved() {
    let cat = Catalog::embedded();
    for id in cat.ids() {
        for n in 1..=2 {
            let case = cat.instantiate(&id, n).unwrap();
            let t = integrate_lambda(&case, 1.0f64, (0.0, 0.5), 1e-12, 42).unwrap();
            let drift = conserved_check(&case, &t).unwrap();
            assert!(drift <= 1e-8, "{id} n={n}: {drift}");
        }
    }
}

#[test]
fn convergence_order_is_at_least_four() {
    let cat = Catalog::embedded();
    let case = cat.instantiate("I.3", 1).unwrap();
    let law = LambdaLaw::new(case.law.clone());
    let p = convergence_order(&law, 0.0, 1.0, 0.9, |z: f64| 1.0 / (1.0 - z), &[16, 32, 64, 128, 256]).unwrap();
    assert!(p >= 4.0, "{p}");
}

#[test]
fn single_precision_trajectory() {
    let law = LambdaLaw::new(parse("Lam^2").unwrap());
    let t: Trajectory32 = law.integrate(1.0f32, (0.0, 0.5), 1e-5, None).unwrap();
    assert!(t.completed());
    assert!(t.max_error(|z| 1.0 / (1.0 - z)) < 1e-4);
}

#[test]
fn square_law_blows_up_at_one() {
    let law = LambdaLaw::new(parse("Lam^2").unwrap());
    let t = law.integrate(1.0f64, (0.0, 1.5), 1e-10, None).unwrap();
    match t.outcome {
        Outcome::BlowUp { estimate, .. } => assert!((estimate - 1.0).abs() < 1e-3),
        o => panic!("{o:?}"),
    }
}

#[test]
fn trajectories_are_reproducible_and_serialize() {
    let cat = Catalog::embedded();
    let case = cat.instantiate("II.1", 1).unwrap();
    let a = integrate_lambda(&case, 0.7f64, (0.0, 0.4), 1e-10, 5).unwrap();
    let b = integrate_lambda(&case, 0.7f64, (0.0, 0.4), 1e-10, 5).unwrap();
    assert_eq!(a.points, b.points);
    let json = serde_json::to_string(&a).unwrap();
    assert!(json.contains("\"case\":\"II.1\""));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn isospectral_trajectories_are_constant(l0 in 0.05f64..5.0, z1 in 0.1f64..3.0, k in 0usize..3, n in 1u32..3) {
        let cat = Catalog::embedded();
        let id = ["II.2", "II.3", "III.2"][k];
        let case = cat.instantiate(id, n).unwrap();
        let t = integrate_lambda(&case, l0, (0.0, z1), 1e-10, 1).unwrap();
        prop_assert!(t.completed());
        prop_assert!(t.points.iter().all(|&(_, l)| l == l0));
    }

    #[test]
    fn square_law_from_any_start(l0 in 0.1f64..2.0) {
        // Λ = l0 / (1 - l0 z) until the pole at 1/l0
        let law = LambdaLaw::new(parse("Lam^2").unwrap());
        let end = 0.8 / l0;
        let t = law.integrate(l0, (0.0, end), 1e-12, None).unwrap();
        prop_assert!(t.completed());
        let scale = l0 / (1.0 - l0 * end);
        prop_assert!(t.max_error(|z| l0 / (1.0 - l0 * z)) <= 1e-9 * scale);
    }
}

#[test]
fn law_reads_denominators() {
    let law = LambdaLaw::new(parse("Lam/(1 + z2*Lam)").unwrap());
    assert_eq!(law.denominators.len(), 1);
    assert!(!law.is_isospectral());
    assert!(LambdaLaw::new(Expr::zero()).is_isospectral());
}
