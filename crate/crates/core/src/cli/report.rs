//! Run reports, serialized as one TOML document per run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use crate::model_hnr::{ClassificationVerdict, VerdictTag};

pub const REPORT_FILE: &str = "report.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    /// Unix seconds; the only field allowed to differ between identical runs.
    pub timestamp: u64,
    pub disclaimer: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub lattice_points: usize,
    pub random_points: usize,
    pub total_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<String>,
    pub max_pde_residual: f64,
    pub steps: Vec<StepReport>,
}

impl From<&ClassificationVerdict> for VerdictReport {
    fn from(v: &ClassificationVerdict) -> Self {
        VerdictReport {
            tag: v.tag.label(),
            a: match v.tag {
                VerdictTag::Example2 { a } => Some(a),
                _ => None,
            },
            failed_step: v.failed_step().map(|s| s.name().to_string()),
            max_pde_residual: v.max_pde_residual,
            steps: v
                .evidence
                .iter()
                .map(|e| StepReport {
                    step: e.step.name().to_string(),
                    residual: e.residual,
                    tolerance: e.tolerance,
                    passed: e.passed,
                    points: e.points,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub points: usize,
    /// points where evaluation failed; each counts as a failure
    pub errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictReport>,
}

impl CheckResult {
    pub fn skipped(name: &str, tolerance: f64, note: impl Into<String>) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            status: Status::Skipped,
            max_residual: 0.0,
            mean_residual: 0.0,
            tolerance,
            points: 0,
            errors: 0,
            note: Some(note.into()),
            verdict: None,
        }
    }

    /// Summarizes per-point residuals; passes iff there are no errors and
    /// the largest residual is within tolerance.
    pub fn from_residuals(name: &str, tolerance: f64, residuals: &[Result<f64, String>]) -> CheckResult {
        let ok: Vec<f64> = residuals.iter().filter_map(|r| r.as_ref().ok()).map(|v| v.abs()).collect();
        let errors = residuals.len() - ok.len();
        let max = ok.iter().copied().fold(0.0, f64::max);
        let mean = if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 };
        let first_error = residuals.iter().find_map(|r| r.as_ref().err()).cloned();
        CheckResult {
            name: name.to_string(),
            status: if errors == 0 && max <= tolerance && !residuals.is_empty() { Status::Pass } else { Status::Fail },
            max_residual: max,
            mean_residual: mean,
            tolerance,
            points: residuals.len(),
            errors,
            note: first_error.map(|e| format!("{errors} point(s) failed to evaluate; first: {e}")),
            verdict: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Meta,
    pub grid: GridSummary,
    pub summary: Summary,
    pub manifest: Manifest,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn load(path: &Path) -> Result<Report, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("malformed report {}: {e}", path.display()))
    }
}
