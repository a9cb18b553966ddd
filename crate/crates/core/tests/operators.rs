use laxforge::commands::trig_eval;
use laxforge::hierarchy::{fd4, fd4_k, GridError};
use laxforge::{Grid, Grid32, Spectral32, Spectral64};
use proptest::prelude::*;
use twofloat::TwoFloat;

/// `K f` of a trigonometric polynomial by differentiating each mode by hand.
fn k_exact(coef: &[(f64, f64)], x: f64) -> f64 {
    coef.iter().enumerate().fold(0.0, |acc, (j, &(a, b))| {
        let k = (j + 1) as f64;
        let (s, c) = (k * x).sin_cos();
        // d/dx: a k c - b k s ; d³/dx³: -a k³ c + b k³ s
        acc + (-a * k.powi(3) * c + b * k.powi(3) * s) - (a * k * c - b * k * s)
    })
}

fn coefs(modes: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=modes)
}

#[test]
fn spectral_k_matches_hand_derivative_at_256() {
    let coef = [(0.3, -0.2), (0.1, 0.4), (-0.25, 0.05)];
    let sp = Spectral64::new(256);
    let f = Grid::from_fn(256, |x| trig_eval(&coef, x)).unwrap();
    let kf = sp.apply_k(&f);
    let dev = (0..256).map(|i| (kf.samples[i] - k_exact(&coef, f.x(i))).abs()).fold(0.0, f64::max);
    // Roundoff in the top modes is amplified by k³: about 1e-16 * 128³.
    assert!(dev < 2e-9, "{dev}");
}

#[test]
fn spectral_k_matches_fd4_in_double_double_at_256() {
    let coef = [(0.3, -0.2), (0.1, 0.4), (-0.25, 0.05)];
    let sp = Spectral64::new(256);
    let f = Grid::from_fn(256, |x| trig_eval(&coef, x)).unwrap();
    let kf = sp.apply_k(&f);
    let h = TwoFloat::from(2f64.powi(-10));
    let dev = (0..256)
        .map(|i| {
            let fd: f64 = fd4_k(&|t: TwoFloat| trig_eval(&coef, t), TwoFloat::from(f.x(i)), h).into();
            (kf.samples[i] - fd).abs()
        })
        .fold(0.0, f64::max);
    assert!(dev <= 1e-8, "{dev}");
}

#[test]
fn fd4_is_fourth_order() {
    let f = |x: f64| (2.0 * x).sin();
    let err = |h: f64| {
        let (d1, d3) = fd4(&f, 0.3, h);
        ((d1 - 2.0 * 0.6f64.cos()).abs(), (d3 + 8.0 * 0.6f64.cos()).abs())
    };
    let (a1, a3) = err(0.02);
    let (b1, b3) = err(0.01);
    assert!((a1 / b1).log2() > 3.8, "{}", (a1 / b1).log2());
    assert!((a3 / b3).log2() > 3.8, "{}", (a3 / b3).log2());
}

#[test]
fn single_precision_grid() {
    let sp = Spectral32::new(32);
    let f = Grid32::from_fn(32, |x: f32| (2.0 * x).sin()).unwrap();
    let want = Grid32::from_fn(32, |x: f32| -10.0 * (2.0 * x).cos()).unwrap();
    let dev = sp.apply_k(&f).sub(&want).unwrap().max_abs();
    assert!(dev < 2e-3, "{dev}");
}

#[test]
fn mismatched_grids_are_refused() {
    let a = Grid::constant(16, 1.0).unwrap();
    let b = Grid::constant(32, 1.0).unwrap();
    assert!(matches!(a.add(&b), Err(GridError::Mismatch(16, 32))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn k_is_linear(f in coefs(4), g in coefs(4), a in -3.0f64..3.0) {
        let sp = Spectral64::new(64);
        let f = Grid::from_fn(64, |x| trig_eval(&f, x)).unwrap();
        let g = Grid::from_fn(64, |x| trig_eval(&g, x)).unwrap();
        let lhs = sp.apply_k(&f.scale(a).add(&g).unwrap());
        let rhs = sp.apply_k(&f).scale(a).add(&sp.apply_k(&g)).unwrap();
        let size = 1.0 + lhs.max_abs();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() / size < 1e-10);
    }

    #[test]
    fn antiderivative_round_trip(c in coefs(6)) {
        let sp = Spectral64::new(128);
        let f = Grid::from_fn(128, |x| trig_eval(&c, x)).unwrap();
        let back = sp.antiderivative(&sp.derivative(&f, 1)).unwrap();
        prop_assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
        let there = sp.derivative(&sp.antiderivative(&f).unwrap(), 1);
        prop_assert!(there.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn k_inverse_round_trip(c in coefs(5)) {
        let sp = Spectral64::new(64);
        let f = Grid::from_fn(64, |x| trig_eval(&c, x)).unwrap();
        let back = sp.solve_k(&sp.apply_k(&f)).unwrap();
        prop_assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn j_is_linear_and_kills_constants(c in coefs(3), a in -2.0f64..2.0, k in -2.0f64..2.0) {
        let sp = Spectral64::new(64);
        let u = Grid::from_fn(64, |x| 1.5 + 0.5 * trig_eval(&c, x)).unwrap();
        // Functions of u keep u f_x an exact derivative.
        let f = u.map(|v| v * v);
        let g = u.map(|v| (v + k).sin());
        let lhs = sp.apply_j(&u, &f.scale(a).add(&g).unwrap()).unwrap();
        let rhs = sp.apply_j(&u, &f).unwrap().scale(a).add(&sp.apply_j(&u, &g).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-9);
        let constant = Grid::constant(64, k).unwrap();
        prop_assert!(sp.apply_j(&u, &constant).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn manufactured_pairs_satisfy_recursion(c in coefs(3), p in 1u32..4) {
        let sp = Spectral64::new(128);
        let u = Grid::from_fn(128, |x| 1.5 + 0.4 * trig_eval(&c, x)).unwrap();
        let next = u.map(|v| v.powi(p as i32));
        let (v, vn) = sp.manufacture(&u, &next).unwrap();
        prop_assert!(sp.check_recursion(&u, &v, &vn).unwrap() <= 1e-8);
    }
}
