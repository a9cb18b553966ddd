//! Random expression trees shared by the property suites.
#![allow(dead_code)]

use laxforge::expr::{Expr, Jet, Rat};
use proptest::prelude::*;

pub const VARS: [&str; 3] = ["x", "y", "t"];

#[derive(Clone, Debug)]
pub enum Tree {
    Num(i64, i64),
    Imag,
    Sym(usize),
    Jet(usize, Vec<usize>),
    Add(Box<Tree>, Box<Tree>),
    Sub(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Pow(Box<Tree>, i64, i64),
    Exp(Box<Tree>),
    Ln(Box<Tree>),
    Int(Box<Tree>, usize),
}

pub fn jet(k: usize, d: &[usize]) -> Expr {
    let deriv: Vec<&str> = d.iter().map(|&i| VARS[i]).collect();
    match k {
        0 => Expr::jet(Jet::new("u", None, &deriv)),
        1 => Expr::jet(Jet::new("w", Some(1), &deriv)),
        2 => Expr::jet(Jet::new("v", Some(2), &deriv)),
        _ => Expr::jet(Jet::new("phi", None, &deriv)),
    }
}

pub fn build(t: &Tree) -> Expr {
    match t {
        Tree::Num(p, q) => Expr::rat(*p, *q),
        Tree::Imag => Expr::i(),
        Tree::Sym(k) => Expr::sym(["x", "y", "t", "a", "b"][*k]),
        Tree::Jet(k, d) => jet(*k, d),
        Tree::Add(a, b) => build(a) + build(b),
        Tree::Sub(a, b) => build(a) - build(b),
        Tree::Mul(a, b) => build(a) * build(b),
        Tree::Pow(a, p, q) => {
            let base = build(a);
            let e = Rat::new(*p, *q);
            // Keep away from 0^(-k) and from powers of bare numbers, which
            // fold into surds.
            if base.as_coeff().is_some() {
                base
            } else {
                base.pow(e)
            }
        }
        Tree::Exp(a) => Expr::exp(&build(a)),
        Tree::Ln(a) => {
            let arg = build(a);
            if arg.as_coeff().is_some() {
                arg
            } else {
                Expr::ln(&arg)
            }
        }
        Tree::Int(a, v) => Expr::int(&build(a), VARS[*v]),
    }
}

pub fn leaf() -> impl Strategy<Value = Tree> {
    prop_oneof![
        (-6i64..7, 1i64..5).prop_map(|(p, q)| Tree::Num(p, q)),
        Just(Tree::Imag),
        (0usize..5).prop_map(Tree::Sym),
        (0usize..4, proptest::collection::vec(0usize..3, 0..3)).prop_map(|(k, d)| Tree::Jet(k, d)),
    ]
}

pub fn tree() -> impl Strategy<Value = Tree> {
    leaf().prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Add(Box::new(a), Box::new(b))),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Sub(Box::new(a), Box::new(b))),
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Tree::Mul(Box::new(a), Box::new(b))),
            2 => (inner.clone(), prop_oneof![Just((2, 1)), Just((-1, 1)), Just((1, 2)), Just((-3, 2)), Just((2, 3))])
                .prop_map(|(a, (p, q))| Tree::Pow(Box::new(a), p, q)),
            1 => inner.clone().prop_map(|a| Tree::Exp(Box::new(a))),
            1 => inner.clone().prop_map(|a| Tree::Ln(Box::new(a))),
            1 => (inner, 0usize..3).prop_map(|(a, v)| Tree::Int(Box::new(a), v)),
        ]
    })
}
