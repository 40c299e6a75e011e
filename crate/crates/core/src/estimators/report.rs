use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::Result;
use crate::stats::AffineFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    /// Fail if any check failed, indeterminate if any could not be decided,
    /// pass otherwise.
    pub fn combine(checks: &[Check]) -> Self {
        if checks.iter().any(|c| c.passed == Some(false)) {
            Verdict::Fail
        } else if checks.is_empty() || checks.iter().any(|c| c.passed.is_none()) {
            Verdict::Indeterminate
        } else {
            Verdict::Pass
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One named pass/fail condition. `passed` is `None` when the data cannot
/// decide it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    pub fn undecided(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: None,
            detail: detail.into(),
        }
    }
}

/// A single estimate. Monte Carlo values carry a standard error; values
/// computed deterministically set `exact`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub label: String,
    pub t: f64,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    pub exact: bool,
    pub reference: Option<f64>,
    /// Replicas that contributed.
    pub samples: usize,
    /// Replicas left out (zero mass, truncation, no events).
    pub excluded: usize,
    /// Replicas whose outcome could not be decided.
    pub indeterminate: usize,
}

impl EstimateRow {
    pub fn monte_carlo(label: &str, t: f64, estimate: f64, se: f64, samples: usize) -> Self {
        Self {
            label: label.to_string(),
            t,
            estimate,
            standard_error: Some(se),
            exact: false,
            reference: None,
            samples,
            excluded: 0,
            indeterminate: 0,
        }
    }

    pub fn exact(label: &str, t: f64, value: f64) -> Self {
        Self {
            label: label.to_string(),
            t,
            estimate: value,
            standard_error: None,
            exact: true,
            reference: None,
            samples: 0,
            excluded: 0,
            indeterminate: 0,
        }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded = excluded;
        self
    }

    pub fn with_indeterminate(mut self, indeterminate: usize) -> Self {
        self.indeterminate = indeterminate;
        self
    }
}

/// Least-squares line with a normal-approximation 95% interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

impl SlopeFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let f = AffineFit::fit(xs, ys)?;
        let half = 1.96 * f.slope_se;
        Some(Self {
            slope: f.slope,
            intercept: f.intercept,
            slope_se: f.slope_se,
            ci_low: f.slope - half,
            ci_high: f.slope + half,
            points: xs.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    /// Short description of the asymptotic statement under test.
    pub claim: String,
    pub config: ExperimentConfig,
    pub rows: Vec<EstimateRow>,
    pub fit: Option<SlopeFit>,
    pub reference: Option<f64>,
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, claim: &str, config: &ExperimentConfig) -> Self {
        Self {
            name: name.to_string(),
            claim: claim.to_string(),
            config: config.clone(),
            rows: Vec::new(),
            fit: None,
            reference: None,
            tolerance: config.tolerance,
            checks: Vec::new(),
            verdict: Verdict::Indeterminate,
            notes: Vec::new(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Rows carrying `label`, in order.
    pub fn series(&self, label: &str) -> Vec<&EstimateRow> {
        self.rows.iter().filter(|r| r.label == label).collect()
    }

    pub(crate) fn finish(mut self) -> Self {
        self.verdict = Verdict::combine(&self.checks);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat table of all rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "experiment,label,t,estimate,standard_error,exact,reference,samples,excluded,indeterminate"
        )?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.name,
                r.label,
                r.t,
                r.estimate,
                opt(r.standard_error),
                r.exact,
                opt(r.reference),
                r.samples,
                r.excluded,
                r.indeterminate
            )?;
        }
        Ok(())
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!("{} [{}]: {}\n", self.name, self.claim, self.verdict);
        if let (Some(fit), Some(reference)) = (self.fit, self.reference) {
            s += &format!(
                "  slope {:.5} (95% CI {:.5}..{:.5}), reference {:.5}\n",
                fit.slope, fit.ci_low, fit.ci_high, reference
            );
        }
        for c in &self.checks {
            let mark = match c.passed {
                Some(true) => "ok",
                Some(false) => "FAILED",
                None => "undecided",
            };
            s += &format!("  {:<14} {:<9} {}\n", c.name, mark, c.detail);
        }
        for n in &self.notes {
            s += &format!("  note: {n}\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_combination() {
        let ok = Check::new("a", true, "");
        let bad = Check::new("b", false, "");
        let unk = Check::undecided("c", "");
        assert_eq!(Verdict::combine(std::slice::from_ref(&ok)), Verdict::Pass);
        assert_eq!(
            Verdict::combine(&[ok.clone(), unk.clone()]),
            Verdict::Indeterminate
        );
        assert_eq!(Verdict::combine(&[unk, bad]), Verdict::Fail);
        assert_eq!(Verdict::combine(&[]), Verdict::Indeterminate);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let cfg = ExperimentConfig::default();
        let mut r = ExperimentReport::new("demo", "claim", &cfg);
        r.rows
            .push(EstimateRow::monte_carlo("p", 1.0, 0.25, 0.01, 100).with_reference(0.3));
        r.rows.push(EstimateRow::exact("u", 2.0, 0.5));
        r.checks.push(Check::new("x", true, "fine"));
        let r = r.finish();
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("demo,u,2,0.5,,true,,0,0,0"));
    }
}
