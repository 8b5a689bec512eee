use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// The answer to one query. Text and JSON renderings carry the same facts.
#[derive(Debug, Serialize)]
pub struct Verdict {
    pub query: String,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub stats: BTreeMap<String, u64>,
    /// Human-readable lines; the first states the result.
    #[serde(skip)]
    pub lines: Vec<String>,
}

impl Verdict {
    pub fn new(query: impl Into<String>, result: Value, headline: String) -> Self {
        Verdict {
            query: query.into(),
            result,
            witness: None,
            stats: BTreeMap::new(),
            lines: vec![headline],
        }
    }

    pub fn with_witness(mut self, witness: Value, lines: impl IntoIterator<Item = String>) -> Self {
        self.witness = Some(witness);
        self.lines.extend(lines);
        self
    }

    pub fn stat(mut self, name: &str, value: u64) -> Self {
        self.stats.insert(name.to_string(), value);
        self
    }

    pub fn render_text(&self) -> String {
        let mut out = self.lines.join("\n");
        if !self.stats.is_empty() {
            let stats: Vec<String> = self.stats.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("\nstats: {}", stats.join(" ")));
        }
        out.push('\n');
        out
    }

    pub fn render_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("verdicts serialise");
        out.push('\n');
        out
    }
}
