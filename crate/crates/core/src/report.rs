//! Deterministic machine-readable run reports.
//!
//! Reports are JSON documents with schema `ncx-report/1`: every truncation
//! parameter is echoed so results are self-describing, and all maps are
//! ordered, so identical inputs and configuration produce byte-identical
//! output.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Edge,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub details: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub truncation: BTreeMap<String, i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    /// sha256 of every input file, keyed by the argument name
    pub inputs: BTreeMap<String, String>,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub outputs: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            schema: "ncx-report/1".into(),
            command: command.into(),
            inputs: BTreeMap::new(),
            config: BTreeMap::new(),
            checks: Vec::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn digest_input(&mut self, name: &str, bytes: &[u8]) {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(bytes);
        let digest = h.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(name.into(), hex);
    }

    pub fn set_config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn push(&mut self, name: &str, ok: bool, details: impl ToString) {
        self.checks.push(Check {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            details: details.to_string(),
            truncation: BTreeMap::new(),
        });
    }

    pub fn push_edge(&mut self, name: &str, details: impl ToString) {
        self.checks.push(Check {
            name: name.into(),
            status: CheckStatus::Edge,
            details: details.to_string(),
            truncation: BTreeMap::new(),
        });
    }

    pub fn push_truncated(
        &mut self,
        name: &str,
        ok: bool,
        details: impl ToString,
        truncation: BTreeMap<String, i64>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            details: details.to_string(),
            truncation,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// One human-readable line per check.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Edge => "edge",
            };
            out.push_str(&format!("[{tag}] {}: {}\n", c.name, c.details));
        }
        out
    }
}
