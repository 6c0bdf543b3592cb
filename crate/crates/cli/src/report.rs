use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported, but not a pass/fail criterion for this scenario.
    Info,
    /// Not applicable (e.g. no observables to compare).
    Skipped,
}

/// One checked invariant: `measured` is compared against `tolerance`
/// according to `criterion` (`"<="` or `">"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
    pub criterion: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl InvariantCheck {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        InvariantCheck { name: name.into(), status, measured, tolerance, criterion: "<=".into(), note: None }
    }

    /// Passes when `measured > threshold`.
    pub fn above(name: &str, measured: f64, threshold: f64) -> Self {
        let status = if measured > threshold { Status::Pass } else { Status::Fail };
        InvariantCheck { name: name.into(), status, measured, tolerance: threshold, criterion: ">".into(), note: None }
    }

    pub fn skipped(name: &str, tolerance: f64, note: &str) -> Self {
        InvariantCheck {
            name: name.into(),
            status: Status::Skipped,
            measured: 0.0,
            tolerance,
            criterion: "<=".into(),
            note: Some(note.into()),
        }
    }

    /// Demotes a pass/fail verdict to informational.
    pub fn info(mut self, note: &str) -> Self {
        self.status = Status::Info;
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub picture: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicTerm {
    pub n: usize,
    pub operator: String,
}

/// Machine-readable summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub picture: Option<usize>,
    pub invariants: Vec<InvariantCheck>,
    /// Artifact paths relative to the output directory when possible.
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub symbolic: Vec<SymbolicTerm>,
    pub timings: Vec<Timing>,
    pub exit_status: i32,
}

impl RunReport {
    pub fn failed(&self) -> Vec<&str> {
        self.invariants.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect()
    }
}
