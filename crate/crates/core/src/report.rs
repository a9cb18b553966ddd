//! Verification reports and their JSON, LaTeX and text renderings.
//!
//! JSON output is canonical: keys are sorted and wall times are left out
//! unless requested, so identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::expr::{Verdict, Witness};

pub const SCHEMA: &str = "report-v1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a check is supposed to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Zero,
    /// Deliberately broken input; the check must not vanish.
    Nonzero,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub name: String,
    pub verdict: String,
    pub expect: Expect,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub trials: usize,
    pub seed: u64,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl Record {
    pub fn detail(mut self, d: impl Into<String>) -> Record {
        self.detail = Some(d.into());
        self
    }

    pub fn timed(mut self, ms: Option<f64>) -> Record {
        self.wall_ms = ms;
        self
    }
}

/// Where records get their `n`, `case`, `trials` and `seed`.
#[derive(Clone, Debug)]
pub struct Scope {
    pub n: u32,
    pub case: Option<String>,
    pub trials: usize,
    pub seed: u64,
}

impl Scope {
    fn base(&self, name: &str, verdict: &str, expect: Expect, passed: bool) -> Record {
        Record {
            name: name.to_string(),
            verdict: verdict.to_string(),
            expect,
            passed,
            witness: None,
            trials: self.trials,
            seed: self.seed,
            n: self.n,
            case: self.case.clone(),
            detail: None,
            value: None,
            tolerance: None,
            wall_ms: None,
        }
    }

    /// A symbolic zero test.
    pub fn verdict(&self, name: &str, v: &Verdict, expect: Expect) -> Record {
        let passed = match expect {
            Expect::Zero => v.is_zero(),
            Expect::Nonzero => matches!(v, Verdict::Nonzero { .. }),
        };
        let mut r = self.base(name, v.label(), expect, passed);
        match v {
            Verdict::Nonzero { witness } => r.witness = Some(witness.clone()),
            Verdict::Error { message } => r.detail = Some(message.clone()),
            _ => {}
        }
        r
    }

    /// A numeric quantity against a tolerance. Values within tolerance are
    /// reported as `probably-zero`.
    pub fn numeric(&self, name: &str, value: f64, tol: f64, expect: Expect) -> Record {
        let small = value.abs() <= tol;
        let verdict = if !value.is_finite() {
            "error"
        } else if value == 0.0 {
            "zero-structural"
        } else if small {
            "probably-zero"
        } else {
            "nonzero"
        };
        let passed = value.is_finite() && (small == (expect == Expect::Zero));
        let mut r = self.base(name, verdict, expect, passed);
        r.value = Some(value);
        r.tolerance = Some(tol);
        r
    }

    /// A yes/no property; failure is reported as `nonzero`.
    pub fn flag(&self, name: &str, ok: bool) -> Record {
        self.base(name, if ok { "zero-structural" } else { "nonzero" }, Expect::Zero, ok)
    }

    /// A mutant: passes when the checks caught it.
    pub fn mutant(&self, name: &str, killed: bool) -> Record {
        self.base(name, if killed { "nonzero" } else { "probably-zero" }, Expect::Nonzero, killed)
    }

    pub fn error(&self, name: &str, message: impl Into<String>) -> Record {
        let mut r = self.base(name, "error", Expect::Zero, false);
        r.detail = Some(message.into());
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub records: Vec<Record>,
    pub facts: BTreeMap<String, Value>,
}

impl Section {
    pub fn new(title: impl Into<String>, case: Option<String>) -> Section {
        Section { title: title.into(), case, records: Vec::new(), facts: BTreeMap::new() }
    }

    pub fn fact(&mut self, key: &str, v: impl Serialize) {
        self.facts.insert(key.to_string(), serde_json::to_value(v).expect("serializable fact"));
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub run_id: String,
    pub command: String,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub trials: usize,
    pub seed: u64,
    pub tool_version: String,
    pub catalog_version: u32,
    pub conventions: Vec<String>,
    pub sections: Vec<Section>,
    pub passed: bool,
    pub counts: BTreeMap<String, usize>,
}

impl Report {
    pub fn new(command: &str, n: u32, case: Option<String>, trials: usize, seed: u64, catalog_version: u32) -> Report {
        let key = serde_json::json!({
            "command": command, "n": n, "case": case, "trials": trials, "seed": seed,
            "tool": TOOL_VERSION, "catalog": catalog_version,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        let run_id: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Report {
            schema: SCHEMA.to_string(),
            run_id,
            command: command.to_string(),
            n,
            case,
            trials,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            catalog_version,
            conventions: vec![
                "lambda and Lambda are sampled positive so that their roots are real".into(),
                "the antiderivative on periodic grids has zero mean".into(),
            ],
            sections: Vec::new(),
            passed: true,
            counts: BTreeMap::new(),
        }
    }

    /// Recomputes the summary fields.
    pub fn finish(mut self) -> Report {
        let mut counts = BTreeMap::new();
        for r in self.sections.iter().flat_map(|s| &s.records) {
            *counts.entry(r.verdict.clone()).or_insert(0) += 1;
            *counts.entry(if r.passed { "passed" } else { "failed" }.to_string()).or_insert(0) += 1;
        }
        self.passed = self.sections.iter().all(Section::passed);
        self.counts = counts;
        self
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.sections.iter().flat_map(|s| &s.records)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Latex,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "latex" => Ok(Format::Latex),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Latex => to_latex(report),
        Format::Text => to_text(report),
    }
}

/// Canonical JSON; `serde_json::Value` keeps object keys sorted.
pub fn to_json(report: &Report) -> String {
    let v = serde_json::to_value(report).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn mark(r: &Record) -> &'static str {
    if r.passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} n={} trials={} seed={} run={}{}",
        report.command,
        report.n,
        report.trials,
        report.seed,
        report.run_id,
        report.case.as_ref().map(|c| format!(" case={c}")).unwrap_or_default()
    );
    for s in &report.sections {
        let _ = writeln!(out, "== {}", s.title);
        for r in &s.records {
            let mut line = format!("{} {} [{}]", mark(r), r.name, r.verdict);
            if let (Some(v), Some(t)) = (r.value, r.tolerance) {
                let _ = write!(line, " value={v:.3e} tol={t:.0e}");
            }
            if let Some(d) = &r.detail {
                let _ = write!(line, " {d}");
            }
            if let Some(ms) = r.wall_ms {
                let _ = write!(line, " ({ms:.1} ms)");
            }
            let _ = writeln!(out, "{line}");
        }
        for (k, v) in &s.facts {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            if text.len() <= 200 {
                let _ = writeln!(out, "  {k}: {text}");
            }
        }
    }
    let _ = writeln!(
        out,
        "{}: {} passed, {} failed",
        if report.passed { "OK" } else { "FAILED" },
        report.counts.get("passed").unwrap_or(&0),
        report.counts.get("failed").unwrap_or(&0)
    );
    out
}

fn tex_escape(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '_' | '&' | '%' | '$' | '#' | '{' | '}' => {
                out.push('\\');
                out.push(ch);
            }
            '^' => out.push_str("\\^{}"),
            '~' => out.push_str("\\~{}"),
            '\\' => out.push_str("\\textbackslash{}"),
            c if c.is_ascii() => out.push(c),
            'λ' => out.push_str("$\\lambda$"),
            'Λ' => out.push_str("$\\Lambda$"),
            'γ' => out.push_str("$\\gamma$"),
            'Γ' => out.push_str("$\\Gamma$"),
            _ => out.push('?'),
        }
    }
    out
}

/// A standalone document with one table per section.
pub fn to_latex(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("\\documentclass{article}\n\\usepackage{longtable}\n\\begin{document}\n");
    let _ = writeln!(
        out,
        "\\section*{{{}}}\n$n = {}$, trials {}, seed {}, run \\texttt{{{}}}.\n",
        tex_escape(&report.command),
        report.n,
        report.trials,
        report.seed,
        report.run_id
    );
    for s in &report.sections {
        let _ = writeln!(out, "\\subsection*{{{}}}", tex_escape(&s.title));
        out.push_str("\\begin{longtable}{lll}\n\\hline\ncheck & verdict & result \\\\\n\\hline\n");
        for r in &s.records {
            let _ = writeln!(out, "{} & {} & {} \\\\", tex_escape(&r.name), tex_escape(&r.verdict), mark(r));
        }
        out.push_str("\\hline\n\\end{longtable}\n");
    }
    let _ = writeln!(
        out,
        "{} passed, {} failed.\n\\end{{document}}",
        report.counts.get("passed").unwrap_or(&0),
        report.counts.get("failed").unwrap_or(&0)
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let scope = Scope { n: 1, case: None, trials: 3, seed: 9 };
        let mut s = Section::new("demo", None);
        s.records.push(scope.flag("a_b", true));
        s.records.push(scope.numeric("drift", 1e-13, 1e-12, Expect::Zero));
        s.records.push(scope.mutant("drop x", true));
        s.fact("z", 1);
        s.fact("a", "text");
        let mut r = Report::new("demo", 1, None, 3, 9, 1);
        r.sections.push(s);
        r.finish()
    }

    #[test]
    fn json_is_canonical() {
        let text = to_json(&sample());
        assert_eq!(text, to_json(&sample()));
        let v: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
        assert_eq!(v["schema"], "report-v1");
    }

    #[test]
    fn run_id_depends_on_inputs() {
        let a = Report::new("x", 1, None, 20, 42, 1).run_id;
        assert_eq!(a, Report::new("x", 1, None, 20, 42, 1).run_id);
        assert_ne!(a, Report::new("x", 1, None, 20, 43, 1).run_id);
    }

    #[test]
    fn text_and_latex() {
        let r = sample();
        assert!(r.passed);
        let t = to_text(&r);
        assert_eq!(t.lines().filter(|l| l.starts_with("PASS")).count(), 3);
        let l = to_latex(&r);
        assert!(l.contains("a\\_b & zero-structural & PASS"));
        assert!(l.ends_with("\\end{document}\n"));
    }

    #[test]
    fn numeric_verdicts() {
        let s = Scope { n: 1, case: None, trials: 0, seed: 0 };
        assert_eq!(s.numeric("x", 0.0, 1e-8, Expect::Zero).verdict, "zero-structural");
        assert!(!s.numeric("x", 1.0, 1e-8, Expect::Zero).passed);
        assert!(s.numeric("x", 1.0, 1e-8, Expect::Nonzero).passed);
        assert!(!s.numeric("x", f64::NAN, 1e-8, Expect::Zero).passed);
    }
}
