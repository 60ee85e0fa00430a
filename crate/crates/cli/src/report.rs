//! The structured document written to stderr by every invocation.

use costlam_core::testgen::Outcome;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub command: String,
    pub outcome: Option<Outcome>,
    pub stages: Vec<StageSnapshot>,
    pub traces: Vec<TraceReport>,
    pub cost_table: Vec<CostEntry>,
    pub checks: Vec<CheckRecord>,
    /// Wall-clock milliseconds; only filled in with `--timing` so the document stays reproducible.
    pub timing_ms: Option<u128>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSnapshot {
    pub stage: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub calculus: String,
    pub labels: Vec<String>,
    pub steps: usize,
    pub status: String,
    pub result: String,
}

/// Costs are rendered as decimal strings so that unbounded costs fit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEntry {
    pub label: String,
    pub cost: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub outcome: Outcome,
    pub case: Option<u64>,
    pub term: Option<String>,
    pub detail: Option<String>,
    /// A smaller term failing the same sub-check.
    pub shrunk: Option<String>,
}

impl PipelineReport {
    pub fn new(command: &str) -> PipelineReport {
        PipelineReport { command: command.to_string(), ..PipelineReport::default() }
    }

    pub fn stage(&mut self, stage: &str, text: impl ToString) {
        self.stages.push(StageSnapshot { stage: stage.to_string(), text: text.to_string() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut r = PipelineReport::new("check");
        r.outcome = Some(Outcome::Inconclusive);
        r.stage("cps", "halt @ (x)");
        r.traces.push(TraceReport { calculus: "source".into(), labels: vec!["l".into()], steps: 2, status: "VALUE".into(), result: "x".into() });
        r.cost_table.push(CostEntry { label: "l".into(), cost: "3".into() });
        r.checks.push(CheckRecord {
            name: "types".into(),
            outcome: Outcome::Fail,
            case: Some(4),
            term: Some("x".into()),
            detail: None,
            shrunk: Some("x".into()),
        });
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<PipelineReport>(&s).unwrap(), r);
        assert!(s.contains("\"INCONCLUSIVE\""));
    }
}
