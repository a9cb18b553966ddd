//! Rewriting jets by differential rules.
//!
//! A rule `f_L -> R` also rewrites every jet `f_{L+K}` to `D_K R`, with total
//! derivatives taken in the supplied context.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{collect_jets, Context, Expr, Jet};

#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub lhs: Jet,
    pub rhs: Expr,
}

impl Rule {
    pub fn new(name: &str, lhs: Jet, rhs: Expr) -> Rule {
        Rule { name: name.to_string(), lhs, rhs }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RewriteSystem {
    pub rules: Vec<Rule>,
    pub budget: usize,
}

#[derive(Clone, Debug)]
pub struct Rewritten {
    pub expr: Expr,
    /// Number of jet occurrences rewritten by each rule.
    pub applications: BTreeMap<String, usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("rewriting did not terminate within {0} applications")]
    Budget(usize),
}

impl RewriteSystem {
    pub fn new(rules: Vec<Rule>) -> RewriteSystem {
        RewriteSystem { rules, budget: 10_000 }
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn without(&self, name: &str) -> RewriteSystem {
        RewriteSystem {
            rules: self.rules.iter().filter(|r| r.name != name).cloned().collect(),
            budget: self.budget,
        }
    }

    fn matching(&self, j: &Jet) -> Option<(usize, Vec<super::Name>)> {
        self.rules.iter().enumerate().find_map(|(k, r)| j.quotient(&r.lhs).map(|rest| (k, rest)))
    }

    /// Rewrites to normal form: no jet is divisible by a rule's left side.
    pub fn reduce(&self, e: &Expr, ctx: &Context) -> Result<Rewritten, RewriteError> {
        let mut differ = ctx.differ();
        let mut cache: HashMap<Jet, (usize, Expr)> = HashMap::new();
        let mut applications = BTreeMap::new();
        let mut total = 0usize;
        let mut cur = e.clone();
        loop {
            let mut map = HashMap::new();
            for j in collect_jets(&cur) {
                let hit = match cache.get(&j) {
                    Some(h) => Some(h.clone()),
                    None => self.matching(&j).map(|(k, rest)| {
                        let v = differ.diff_names(&self.rules[k].rhs, &rest);
                        cache.insert(j.clone(), (k, v.clone()));
                        (k, v)
                    }),
                };
                if let Some((k, v)) = hit {
                    *applications.entry(self.rules[k].name.clone()).or_insert(0) += 1;
                    map.insert(Expr::jet(j), v);
                }
            }
            if map.is_empty() {
                return Ok(Rewritten { expr: cur, applications });
            }
            total += map.len();
            if total > self.budget {
                return Err(RewriteError::Budget(self.budget));
            }
            cur = cur.subs(&map);
        }
    }
}
