//! Outcome of one estimate check.
//!
//! Record format, one `key = value` per line:
//!
//! ```text
//! check = contraction
//! left = 1.2e-1
//! right = 1.3e-1
//! margin = 1e-2
//! tolerance = 0e0
//! pass = true
//! runtime = 2.5e-1
//! param.eps = 1e-3
//! const.growth = 5e0
//! note = free text
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// `pass ⟺ right − left ≥ −tolerance`. Checks fold any relative slack into
/// `right` (for instance `bound·(1 + tol)`) and say so in `constants`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub check: String,
    pub left: f64,
    pub right: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub params: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
    pub runtime: f64,
    pub note: String,
}

impl EstimateReport {
    pub fn new(check: impl Into<String>, left: f64, right: f64, tolerance: f64) -> Self {
        let margin = right - left;
        EstimateReport {
            check: check.into(),
            left,
            right,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            params: BTreeMap::new(),
            constants: BTreeMap::new(),
            runtime: 0.0,
            note: String::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn constant(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.into(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn runtime(mut self, seconds: f64) -> Self {
        self.runtime = seconds;
        self
    }

    /// Joins the parameters as `k=v` pairs, in key order.
    pub fn params_label(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
    }

    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "check = {}", self.check);
        let _ = writeln!(s, "left = {:e}", self.left);
        let _ = writeln!(s, "right = {:e}", self.right);
        let _ = writeln!(s, "margin = {:e}", self.margin);
        let _ = writeln!(s, "tolerance = {:e}", self.tolerance);
        let _ = writeln!(s, "pass = {}", self.pass);
        let _ = writeln!(s, "runtime = {:e}", self.runtime);
        for (k, v) in &self.params {
            let _ = writeln!(s, "param.{k} = {v}");
        }
        for (k, v) in &self.constants {
            let _ = writeln!(s, "const.{k} = {v:e}");
        }
        if !self.note.is_empty() {
            let _ = writeln!(s, "note = {}", self.note.replace('\n', " "));
        }
        s
    }

    pub fn parse_record(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut report = EstimateReport::new("", 0.0, 0.0, 0.0);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(i + 1, "expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(p) = k.strip_prefix("param.") {
                report.params.insert(p.into(), v.into());
            } else if let Some(c) = k.strip_prefix("const.") {
                let x = v.parse().map_err(|_| err(i + 1, format!("bad number {v:?}")))?;
                report.constants.insert(c.into(), x);
            } else {
                fields.insert(k, (i + 1, v));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| err(0, format!("missing key {k:?}")));
        let num = |k: &str| -> Result<f64> {
            let (line, v) = get(k)?;
            v.parse().map_err(|_| err(line, format!("bad number {v:?}")))
        };
        report.check = get("check")?.1.to_string();
        report.left = num("left")?;
        report.right = num("right")?;
        report.margin = num("margin")?;
        report.tolerance = num("tolerance")?;
        report.runtime = num("runtime")?;
        let (line, pass) = get("pass")?;
        report.pass = pass.parse().map_err(|_| err(line, format!("bad flag {pass:?}")))?;
        report.note = fields.get("note").map(|(_, v)| v.to_string()).unwrap_or_default();
        Ok(report)
    }
}

/// Suite summary: one row per report, columns
/// `check  params  left  right  margin  pass`, tab separated.
pub fn summary_table(reports: &[EstimateReport]) -> String {
    let mut s = String::from("check\tparams\tleft\tright\tmargin\tpass\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{}\t{}\t{:e}\t{:e}\t{:e}\t{}",
            r.check,
            r.params_label(),
            r.left,
            r.right,
            r.margin,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_margin() {
        assert!(EstimateReport::new("a", 1.0, 1.0, 0.0).pass);
        assert!(!EstimateReport::new("a", 1.1, 1.0, 0.0).pass);
        assert!(EstimateReport::new("a", 1.1, 1.0, 0.2).pass);
    }

    #[test]
    fn record_round_trip() {
        let r = EstimateReport::new("contraction", 0.1234567891234, 1.05, 0.0)
            .param("eps", 1e-3)
            .param("lambda", 5)
            .constant("growth", 5.0)
            .note("pairs=20")
            .runtime(0.5);
        let back = EstimateReport::parse_record(&r.to_record(), Path::new("r.txt")).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn summary_has_one_row_per_report() {
        let rows = [EstimateReport::new("a", 0.0, 1.0, 0.0), EstimateReport::new("b", 2.0, 1.0, 0.0)];
        let t = summary_table(&rows);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(2).unwrap().ends_with("FAIL"));
    }
}
