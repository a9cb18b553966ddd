//! Pratt parser for the expression grammar.
//!
//! ```text
//! expr    := expr ('+'|'-'|'*'|'/') expr | expr '^' expr | '-' expr | atom
//! atom    := number | 'I' | name index? suffix? | func '(' expr ')'
//!          | 'Int' '[' expr ';' name ']' | '(' expr ')'
//! index   := '[' expr ']'
//! suffix  := '_' letters | '_' '{' name (',' name)* '}'
//! func    := 'sqrt' | 'exp' | 'ln'
//! ```
//!
//! Names declared as fields, or carrying an index or suffix, become jets;
//! parameters are replaced by their values; anything else is a symbol.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::{Coeff, Expr, Jet};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: {}", self.offset, self.message)
    }
}

/// Names the parser treats specially.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    fields: HashSet<String>,
    params: HashMap<String, Expr>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Fields used throughout: the hierarchy, its reductions and the
    /// symmetry data.
    pub fn standard() -> Signature {
        let mut s = Signature::new();
        for f in [
            "u", "w", "v", "phi", "psi", "lam", "U", "W", "V", "Phi", "Psi", "Lam", "A1", "An",
            "gamma", "Gam", "G", "Ah",
        ] {
            s.fields.insert(f.to_string());
        }
        s
    }

    pub fn with_field(mut self, name: &str) -> Signature {
        self.fields.insert(name.to_string());
        self
    }

    pub fn with_param(mut self, name: &str, value: Expr) -> Signature {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn set_param(&mut self, name: &str, value: Expr) {
        self.params.insert(name.to_string(), value);
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &Signature::standard())
}

pub fn parse_with(src: &str, sig: &Signature) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, sig, end: src.len() };
    let e = p.expr(0)?;
    match p.peek() {
        None => Ok(e),
        Some((off, t)) => Err(err(off, format!("unexpected `{t}`"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Sym(c) => write!(f, "{c}"),
        }
    }
}

fn err(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError { offset, message: message.into() }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let whole: String = chars[i..j].iter().map(|p| p.1).collect();
            let mut value = BigRational::from_integer(whole.parse::<BigInt>().unwrap());
            if j < chars.len() && chars[j].1 == '.' {
                let mut k = j + 1;
                while k < chars.len() && chars[k].1.is_ascii_digit() {
                    k += 1;
                }
                let frac: String = chars[j + 1..k].iter().map(|p| p.1).collect();
                if !frac.is_empty() {
                    let scale = num_traits::pow(BigInt::from(10), frac.len());
                    value += BigRational::new(frac.parse::<BigInt>().unwrap(), scale);
                }
                j = k;
            }
            out.push((off, Tok::Num(value)));
            i = j;
        } else if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_alphanumeric() {
                j += 1;
            }
            out.push((off, Tok::Ident(chars[i..j].iter().map(|p| p.1).collect())));
            i = j;
        } else if "+-*/^()[]{},;_".contains(c) {
            out.push((off, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(err(off, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    sig: &'a Signature,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, Tok)> {
        self.tokens.get(self.pos).cloned()
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let t = self.peek().ok_or_else(|| err(self.end, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some((_, Tok::Sym(d))) if d == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        let off = self.offset();
        if self.eat(c) { Ok(()) } else { Err(err(off, format!("expected `{c}`"))) }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next()? {
            (_, Tok::Ident(s)) => Ok(s),
            (off, t) => Err(err(off, format!("expected a name, found `{t}`"))),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let (off, tok) = self.next()?;
        let mut lhs = match tok {
            Tok::Num(n) => Expr::coeff(Coeff::new(n, BigRational::zero())),
            Tok::Sym('-') => -self.expr(5)?,
            Tok::Sym('+') => self.expr(5)?,
            Tok::Sym('(') => {
                let e = self.expr(0)?;
                self.expect(')')?;
                e
            }
            Tok::Ident(name) => self.primary(off, name)?,
            t => return Err(err(off, format!("unexpected `{t}`"))),
        };
        loop {
            let (off, op) = match self.peek() {
                Some((off, Tok::Sym(c))) if "+-*/^".contains(c) => (off, c),
                _ => break,
            };
            let (lbp, rbp) = match op {
                '+' | '-' => (1, 2),
                '*' | '/' => (3, 4),
                _ => (7, 6),
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => {
                    if rhs.is_zero() {
                        return Err(err(off, "division by zero"));
                    }
                    lhs / rhs
                }
                _ => {
                    if lhs.is_zero() && rhs.as_rat().is_some_and(|r| r <= 0.into()) {
                        return Err(err(off, "zero raised to a non-positive power"));
                    }
                    lhs.pow_expr(&rhs)
                        .ok_or_else(|| err(off, format!("exponent `{rhs}` is not a rational number")))?
                }
            };
        }
        Ok(lhs)
    }

    fn call_arg(&mut self) -> Result<Expr, ParseError> {
        self.expect('(')?;
        let e = self.expr(0)?;
        self.expect(')')?;
        Ok(e)
    }

    fn primary(&mut self, off: usize, name: String) -> Result<Expr, ParseError> {
        match name.as_str() {
            "I" => return Ok(Expr::i()),
            "sqrt" => return Ok(Expr::sqrt(&self.call_arg()?)),
            "exp" => return Ok(Expr::exp(&self.call_arg()?)),
            "ln" => return Ok(Expr::ln(&self.call_arg()?)),
            "Int" => {
                self.expect('[')?;
                let f = self.expr(0)?;
                self.expect(';')?;
                let var = self.ident()?;
                self.expect(']')?;
                return Ok(Expr::int(&f, &var));
            }
            _ => {}
        }
        if matches!(self.peek(), Some((_, Tok::Sym('(')))) {
            return Err(err(off, format!("unknown function `{name}`")));
        }
        let mut index = None;
        if self.eat('[') {
            let ioff = self.offset();
            let e = self.expr(0)?;
            self.expect(']')?;
            let k = e
                .as_rat()
                .filter(|r| r.is_integer() && *r >= 0.into())
                .and_then(|r| r.to_integer().to_u32())
                .ok_or_else(|| err(ioff, format!("index `{e}` is not a nonnegative integer")))?;
            index = Some(k);
        }
        let mut deriv: Vec<String> = Vec::new();
        let mut suffixed = false;
        if self.eat('_') {
            suffixed = true;
            if self.eat('{') {
                loop {
                    deriv.push(self.ident()?);
                    if self.eat('}') {
                        break;
                    }
                    self.expect(',')?;
                }
            } else {
                let soff = self.offset();
                let s = self.ident()?;
                if !s.chars().all(|c| c.is_ascii_alphabetic()) {
                    return Err(err(soff, "multi-character variables need braces, e.g. `_{z1}`"));
                }
                deriv.extend(s.chars().map(|c| c.to_string()));
            }
        }
        if index.is_none() && !suffixed {
            if let Some(v) = self.sig.params.get(&name) {
                return Ok(v.clone());
            }
            if !self.sig.fields.contains(&name) {
                return Ok(Expr::sym(&name));
            }
        }
        let d: Vec<&str> = deriv.iter().map(|s| s.as_str()).collect();
        Ok(Expr::jet(Jet::new(&name, index, &d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Rat;

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2 + 2*x/4 - (1 - x)").unwrap();
        let x = Expr::sym("x");
        assert_eq!(e, -(&x * &x) + Expr::rat(3, 2) * &x - Expr::one());
        assert_eq!(parse("2^3^2").unwrap(), Expr::num(512));
    }

    #[test]
    fn jets_indices_and_params() {
        let sig = Signature::standard().with_param("n", Expr::num(2)).with_param("j", Expr::num(1));
        let e = parse_with("V[j+1]_{z1,z1} + v[n]_xxx + lam^((1-n)/n)", &sig).unwrap();
        let expect = Expr::jet(Jet::new("V", Some(2), &["z1", "z1"]))
            + Expr::jet(Jet::new("v", Some(2), &["x", "x", "x"]))
            + Expr::field("lam", None).pow(Rat::new(-1, 2));
        assert_eq!(e, expect);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse("1 + foo(x)").unwrap_err().offset, 4);
        assert_eq!(parse("x^y").unwrap_err().offset, 1);
        assert_eq!(parse("u_z1").unwrap_err().offset, 2);
        assert!(parse("(x + 1").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("x $ y").is_err());
    }

    #[test]
    fn builtins() {
        let e = parse("exp(ln(y)) + sqrt(4) + Int[A1/y; y] + 0.25").unwrap();
        let y = Expr::sym("y");
        let m = Expr::int(&(Expr::field("A1", None) / &y), "y");
        assert_eq!(e, y + Expr::rat(9, 4) + m);
    }
}
