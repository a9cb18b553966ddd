//! Plain-text rendering in the same grammar the parser reads.

use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Coeff, Expr, Kind, Rat};

pub(crate) fn rational_str(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn coeff_str(c: &Coeff) -> String {
    if c.im.is_zero() {
        return rational_str(&c.re);
    }
    let im = if c.im.is_one() {
        "I".to_string()
    } else if (-&c.im).is_one() {
        "-I".to_string()
    } else {
        format!("{}*I", rational_str(&c.im))
    };
    if c.re.is_zero() {
        return im;
    }
    if c.im.is_negative() {
        format!("{} - {}", rational_str(&c.re), im.trim_start_matches('-'))
    } else {
        format!("{} + {}", rational_str(&c.re), im)
    }
}

fn exponent_str(e: Rat) -> String {
    if e.is_integer() {
        format!("^{}", e.to_integer())
    } else {
        format!("^({}/{})", e.numer(), e.denom())
    }
}

fn simple_base(b: &Expr) -> bool {
    match b.kind() {
        Kind::Num(c) => c.im.is_zero() && c.re.is_integer() && !c.re.is_negative(),
        Kind::Sym(_) | Kind::Jet(_) | Kind::Exp(_) | Kind::Ln(_) | Kind::Int(..) => true,
        _ => false,
    }
}

fn factor_str(b: &Expr, e: Rat) -> String {
    let base = if simple_base(b) { b.to_string() } else { format!("({b})") };
    if e.is_one() { base } else { format!("{base}{}", exponent_str(e)) }
}

/// `c * prod(fs)` with a leading `-` when `c` is a negative real.
fn product_str(c: &Coeff, fs: &[(Expr, Rat)]) -> String {
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (b, e) in fs {
        if e.is_negative() {
            den.push(factor_str(b, -e));
        } else {
            num.push(factor_str(b, *e));
        }
    }
    let mut out = String::new();
    let real = c.im.is_zero();
    let mag = if real { c.re.abs() } else { BigRational::one() };
    if real && c.re.is_negative() {
        out.push('-');
    }
    let lead = if real {
        if mag.is_one() { None } else { Some(rational_str(&mag)) }
    } else {
        Some(format!("({})", coeff_str(c)))
    };
    match (lead, num.is_empty()) {
        (Some(l), true) => out.push_str(&l),
        (Some(l), false) => {
            let _ = write!(out, "{l}*{}", num.join("*"));
        }
        (None, true) => out.push('1'),
        (None, false) => out.push_str(&num.join("*")),
    }
    if !den.is_empty() {
        if den.len() == 1 {
            let _ = write!(out, "/{}", den[0]);
        } else {
            let _ = write!(out, "/({})", den.join("*"));
        }
    }
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Num(c) => write!(f, "{}", coeff_str(c)),
            Kind::Sym(s) => write!(f, "{s}"),
            Kind::Jet(j) => write!(f, "{j}"),
            Kind::Exp(a) => write!(f, "exp({a})"),
            Kind::Ln(a) => write!(f, "ln({a})"),
            Kind::Int(a, s) => write!(f, "Int[{a}; {s}]"),
            Kind::Mul(c, fs) => write!(f, "{}", product_str(c, fs)),
            Kind::Add(c0, ts) => {
                for (k, (m, c)) in ts.iter().enumerate() {
                    let (_, fs) = m.factors();
                    let neg = c.im.is_zero() && c.re.is_negative();
                    if k == 0 {
                        write!(f, "{}", product_str(c, &fs))?;
                    } else if neg {
                        write!(f, " - {}", product_str(&-c, &fs))?;
                    } else {
                        write!(f, " + {}", product_str(c, &fs))?;
                    }
                }
                if !c0.is_zero() {
                    if c0.im.is_zero() && c0.re.is_negative() {
                        write!(f, " - {}", coeff_str(&-c0))?;
                    } else if c0.im.is_zero() {
                        write!(f, " + {}", coeff_str(c0))?;
                    } else {
                        write!(f, " + ({})", coeff_str(c0))?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Jet;

    #[test]
    fn renders_readably() {
        let u = Expr::field("u", None);
        let vx = Expr::jet(Jet::new("v", Some(1), &["x"]));
        let e = Expr::rat(-3, 2) * &u / &vx + Expr::num(2);
        assert_eq!(e.to_string(), "-3/2*u/v[1]_x + 2");
        let s = (Expr::one() + &u).pow(Rat::new(-1, 2));
        assert_eq!(s.to_string(), "1/(u + 1)^(1/2)");
        assert_eq!((Expr::i() * Expr::rat(1, 2) * &u).to_string(), "(1/2*I)*u");
    }
}
