//! Versioned JSON envelopes for everything the command line emits.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Cpa,
    Trace,
    Weave,
    Commute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    pub kind: ReportKind,
    pub body: Value,
}

impl ReportDoc {
    pub fn new<T: Serialize>(kind: ReportKind, body: &T) -> serde_json::Result<Self> {
        Ok(ReportDoc {
            schema_version: SCHEMA_VERSION,
            kind,
            body: serde_json::to_value(body)?,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports are plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Outcome of weaving in one order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeaveSummary {
    pub order: Vec<String>,
    pub rules: Vec<String>,
}

/// Outcome of comparing all weaving orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommuteSummary {
    pub orders: Vec<Vec<String>>,
    pub rule_counts: Vec<usize>,
    pub agree: bool,
    /// First pair of orders whose results differ.
    pub witness: Option<(usize, usize)>,
}
