//! Check entries, artifact I/O and the aggregated report document.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Computed value disagrees with a printed one; both are kept.
    Reconcile,
    /// Informational; never affects the exit code.
    Reported,
}

/// One numeric verdict with the tolerance it was judged at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Reference value the measurement is compared against, if any.
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, value: f64, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            reference: None,
            tolerance: None,
            status,
            detail: detail.into(),
        }
    }

    /// Pass when `ok`, fail otherwise.
    pub fn pass_if(name: &str, value: f64, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(
            name,
            value,
            if ok { Status::Pass } else { Status::Fail },
            detail,
        )
    }

    /// `|value - reference| <= tolerance` passes; otherwise `miss` is the status.
    pub fn against(name: &str, value: f64, reference: f64, tolerance: f64, miss: Status) -> Self {
        let ok = (value - reference).abs() <= tolerance;
        Self {
            name: name.into(),
            value,
            reference: Some(reference),
            tolerance: Some(tolerance),
            status: if ok { Status::Pass } else { miss },
            detail: format!("|{value:.6} - {reference:.6}| vs {tolerance:.1e}"),
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }
}

/// 0 when every check passes, 2 when any fails or needs reconciliation.
pub fn exit_code(checks: &[Check]) -> i32 {
    if checks
        .iter()
        .all(|c| matches!(c.status, Status::Pass | Status::Reported))
    {
        0
    } else {
        2
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub tool_version: String,
    pub core_version: String,
    pub seed: u64,
    /// Artifacts that were found and merged, by file name.
    pub artifacts: Vec<String>,
    /// Wall-clock timings live in this file so that the document itself is
    /// reproducible.
    pub timing_file: String,
}

/// Everything a run produced, each section copied verbatim from its
/// artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub hypotheses: Option<serde_json::Value>,
    pub connections: Option<serde_json::Value>,
    pub crossings: Vec<serde_json::Value>,
    pub minimizer: Option<serde_json::Value>,
    pub flow: Option<serde_json::Value>,
    /// Every check of every section.
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let pass = Check::pass_if("a", 1.0, true, "");
        let info = Check::new("b", 0.3, Status::Reported, "");
        assert_eq!(exit_code(&[pass.clone(), info.clone()]), 0);
        assert_eq!(exit_code(&[]), 0);
        let rec = Check::against("c", 0.45, 0.4416, 1e-3, Status::Reconcile);
        assert_eq!(rec.status, Status::Reconcile);
        assert_eq!(exit_code(&[pass, info, rec]), 2);
    }
}
