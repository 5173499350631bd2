//! Check reports and their text and JSON renderings.

use std::fmt::Write;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    /// Drops timings so that the rendering depends only on scenario and seed.
    pub fn without_timings(mut self) -> Report {
        for c in &mut self.checks {
            c.elapsed_ms = None;
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scenario: {}", self.scenario).unwrap();
        writeln!(out, "seed: {}", self.seed).unwrap();
        for c in &self.checks {
            write!(out, "CHECK {} [{}] {}", c.name, self.scenario, c.status.as_str()).unwrap();
            if let Some(ms) = c.elapsed_ms {
                write!(out, " ({ms} ms)").unwrap();
            }
            out.push('\n');
            if !c.detail.is_empty() {
                writeln!(out, "  {}", c.detail).unwrap();
            }
        }
        let failed = self.checks.iter().filter(|c| c.status == Status::Fail).count();
        writeln!(out, "{} checks, {} failed", self.checks.len(), failed).unwrap();
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
