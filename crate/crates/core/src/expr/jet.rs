use std::fmt;
use std::sync::Arc;

pub type Name = Arc<str>;

/// A dependent variable together with a multi-index of derivatives.
///
/// `deriv` is kept sorted so that mixed partials commute by construction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Jet {
    pub field: Name,
    pub index: Option<u32>,
    pub deriv: Vec<Name>,
}

impl Jet {
    pub fn new(field: &str, index: Option<u32>, deriv: &[&str]) -> Jet {
        let mut d: Vec<Name> = deriv.iter().map(|s| Name::from(*s)).collect();
        d.sort();
        Jet { field: Name::from(field), index, deriv: d }
    }

    pub fn base(&self) -> Jet {
        Jet { field: self.field.clone(), index: self.index, deriv: vec![] }
    }

    pub fn order(&self) -> usize {
        self.deriv.len()
    }

    pub fn same_field(&self, other: &Jet) -> bool {
        self.field == other.field && self.index == other.index
    }

    /// One more derivative in `var`.
    pub fn with(&self, var: &Name) -> Jet {
        let mut d = self.deriv.clone();
        let pos = d.partition_point(|v| v <= var);
        d.insert(pos, var.clone());
        Jet { field: self.field.clone(), index: self.index, deriv: d }
    }

    /// Derivatives in `self` beyond those in `other`, when `other` divides it.
    pub fn quotient(&self, other: &Jet) -> Option<Vec<Name>> {
        if !self.same_field(other) {
            return None;
        }
        let mut rest = self.deriv.clone();
        for v in &other.deriv {
            let pos = rest.iter().position(|w| w == v)?;
            rest.remove(pos);
        }
        Some(rest)
    }

    pub fn count(&self, var: &str) -> usize {
        self.deriv.iter().filter(|v| &***v == var).count()
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field)?;
        if let Some(i) = self.index {
            write!(f, "[{i}]")?;
        }
        if !self.deriv.is_empty() {
            if self.deriv.iter().all(|v| v.chars().count() == 1) {
                write!(f, "_")?;
                for v in &self.deriv {
                    write!(f, "{v}")?;
                }
            } else {
                let parts: Vec<&str> = self.deriv.iter().map(|v| &**v).collect();
                write!(f, "_{{{}}}", parts.join(","))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
