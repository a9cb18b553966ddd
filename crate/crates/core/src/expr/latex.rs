use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Coeff, Expr, Jet, Kind, Rat};

fn name_tex(s: &str) -> String {
    let greek = [
        ("lam", "\\lambda"),
        ("Lam", "\\Lambda"),
        ("w", "\\omega"),
        ("W", "\\Omega"),
        ("phi", "\\phi"),
        ("Phi", "\\Phi"),
        ("psi", "\\psi"),
        ("Psi", "\\Psi"),
        ("gamma", "\\gamma"),
        ("Gam", "\\Gamma"),
        ("Ah", "\\hat{A}_1"),
    ];
    for (k, v) in greek {
        if s == k {
            return v.to_string();
        }
    }
    let digits = s.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) && digits.len() < s.len() {
        let head = &s[..s.len() - digits.len()];
        return format!("{}_{{{}}}", name_tex(head), digits);
    }
    if s.chars().count() > 1 {
        format!("\\mathrm{{{s}}}")
    } else {
        s.to_string()
    }
}

fn jet_tex(j: &Jet) -> String {
    let mut out = name_tex(&j.field);
    if let Some(i) = j.index {
        out = format!("{out}^{{[{i}]}}");
    }
    if !j.deriv.is_empty() {
        let d: Vec<String> = j.deriv.iter().map(|v| name_tex(v)).collect();
        out = format!("{{{out}}}_{{{}}}", d.join(""));
    }
    out
}

fn rat_tex(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

fn coeff_tex(c: &Coeff) -> String {
    if c.im.is_zero() {
        return rat_tex(&c.re);
    }
    let im = if c.im.is_one() { "i".to_string() } else { format!("{}i", rat_tex(&c.im)) };
    if c.re.is_zero() { im } else { format!("\\left({} + {}\\right)", rat_tex(&c.re), im) }
}

fn factor_tex(b: &Expr, e: Rat) -> String {
    let base = match b.kind() {
        Kind::Sym(_) | Kind::Jet(_) => to_latex(b),
        Kind::Num(c) if c.im.is_zero() && c.re.is_integer() && c.re.is_positive() => to_latex(b),
        _ => format!("\\left({}\\right)", to_latex(b)),
    };
    if e.is_one() {
        base
    } else if e.is_integer() {
        format!("{base}^{{{}}}", e.to_integer())
    } else {
        format!("{base}^{{{}/{}}}", e.numer(), e.denom())
    }
}

fn product_tex(c: &Coeff, fs: &[(Expr, Rat)]) -> String {
    let num: Vec<String> =
        fs.iter().filter(|(_, e)| e.is_positive()).map(|(b, e)| factor_tex(b, *e)).collect();
    let den: Vec<String> =
        fs.iter().filter(|(_, e)| e.is_negative()).map(|(b, e)| factor_tex(b, -e)).collect();
    let real = c.im.is_zero();
    let sign = if real && c.re.is_negative() { "-" } else { "" };
    let mag = if real { Coeff::new(c.re.abs(), Zero::zero()) } else { c.clone() };
    let lead = if mag.is_one() { String::new() } else { coeff_tex(&mag) };
    let top = if num.is_empty() && lead.is_empty() {
        "1".to_string()
    } else {
        format!("{lead}{}", num.join(" "))
    };
    if den.is_empty() {
        format!("{sign}{top}")
    } else {
        format!("{sign}\\frac{{{top}}}{{{}}}", den.join(" "))
    }
}

/// LaTeX rendering for reports.
pub fn to_latex(e: &Expr) -> String {
    match e.kind() {
        Kind::Num(c) => coeff_tex(c),
        Kind::Sym(s) => name_tex(s),
        Kind::Jet(j) => jet_tex(j),
        Kind::Exp(a) => format!("e^{{{}}}", to_latex(a)),
        Kind::Ln(a) => format!("\\ln\\left({}\\right)", to_latex(a)),
        Kind::Int(a, s) => format!("\\int {}\\,\\mathrm{{d}}{}", to_latex(a), name_tex(s)),
        Kind::Mul(c, fs) => product_tex(c, fs),
        Kind::Add(c0, ts) => {
            let mut out = String::new();
            for (k, (m, c)) in ts.iter().enumerate() {
                let t = product_tex(c, &m.factors().1);
                if k > 0 && !t.starts_with('-') {
                    out.push_str(" + ");
                } else if k > 0 {
                    out.push(' ');
                }
                out.push_str(&t);
            }
            if !c0.is_zero() {
                let t = coeff_tex(c0);
                if t.starts_with('-') {
                    out.push(' ');
                } else {
                    out.push_str(" + ");
                }
                out.push_str(&t);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greek_and_fractions() {
        let lam = Expr::field("lam", None);
        let e = Expr::rat(1, 2) * lam.pow(Rat::new(1, 2));
        assert_eq!(to_latex(&e), "\\frac{1}{2}\\lambda^{1/2}");
        let j = Expr::jet(Jet::new("v", Some(2), &["x", "x"]));
        assert_eq!(to_latex(&j), "{v^{[2]}}_{xx}");
    }
}
