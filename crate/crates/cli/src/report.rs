use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::manifest::reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub lhs: String,
    pub rhs: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    /// The relation checked, from the bundled manifest.
    pub reference: String,
    pub inputs: BTreeMap<String, String>,
    pub outcome: Outcome,
    /// First failing (or else first inconclusive) witness.
    pub counterexample: Option<Witness>,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    /// Combines witnesses: any fail fails, else any inconclusive is inconclusive.
    pub fn new(check_id: &str, inputs: &[(&str, String)], witnesses: Vec<Witness>) -> Self {
        let reference = reference(check_id)
            .unwrap_or_else(|| panic!("check id {check_id} missing from manifest"))
            .to_string();
        let find = |o: Outcome| witnesses.iter().find(|w| w.outcome == o).cloned();
        let counterexample = find(Outcome::Fail).or_else(|| find(Outcome::Inconclusive));
        let outcome = counterexample.as_ref().map_or(Outcome::Pass, |w| w.outcome);
        CheckReport {
            check_id: check_id.to_string(),
            reference,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            outcome,
            counterexample,
            witnesses,
        }
    }
}

pub fn witness(label: impl Into<String>, lhs: impl ToString, rhs: impl ToString, ok: bool) -> Witness {
    Witness {
        label: label.into(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
    }
}

pub fn witness_with(label: impl Into<String>, lhs: impl ToString, rhs: impl ToString, outcome: Outcome) -> Witness {
    Witness {
        label: label.into(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        outcome,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn from_reports(reports: &[CheckReport]) -> Self {
        let mut t = Table::new(&["check_id", "label", "lhs", "rhs", "outcome"]);
        for r in reports {
            for w in &r.witnesses {
                t.push(vec![
                    r.check_id.clone(),
                    w.label.clone(),
                    w.lhs.clone(),
                    w.rhs.clone(),
                    outcome_str(w.outcome).to_string(),
                ]);
            }
        }
        t
    }
}

pub fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Inconclusive => "inconclusive",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: u128,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub command: String,
    pub engine_version: String,
    pub outcome: Outcome,
    pub data: serde_json::Value,
    pub reports: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<Timing>,
}

/// Overall outcome: fail beats inconclusive beats pass.
pub fn overall(reports: &[CheckReport]) -> Outcome {
    if reports.iter().any(|r| r.outcome == Outcome::Fail) {
        Outcome::Fail
    } else if reports.iter().any(|r| r.outcome == Outcome::Inconclusive) {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    }
}

/// What a subcommand produces; also the cache record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub document: Document,
    pub table: Table,
}
