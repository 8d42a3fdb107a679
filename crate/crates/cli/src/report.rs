//! Command results and their text/JSON renderings.

use std::process::ExitCode;

use serde_json::{Map, Value};

/// Bumped whenever a field is renamed or changes meaning.
pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// A definitive answer.
    Ok,
    /// The property fails, or a searched set is non-empty.
    Violated,
    /// The node budget ran out first.
    Inconclusive,
}

impl Status {
    pub fn keyword(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        }
    }

    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Status::Ok => 0,
            Status::Violated => 1,
            Status::Inconclusive => 2,
        })
    }
}

pub const INPUT_ERROR: u8 = 3;

pub struct Outcome {
    pub command: &'static str,
    pub status: Status,
    pub summary: String,
    pub fields: Map<String, Value>,
}

impl Outcome {
    pub fn new(command: &'static str, status: Status, summary: impl Into<String>) -> Self {
        Outcome { command, status, summary: summary.into(), fields: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn json(&self) -> Value {
        let mut m = self.fields.clone();
        m.insert("schema".into(), SCHEMA_VERSION.into());
        m.insert("command".into(), self.command.into());
        m.insert("status".into(), self.status.keyword().into());
        m.insert("summary".into(), self.summary.clone().into());
        Value::Object(m)
    }

    /// The summary line, then one `key: value` line per field. Multi-line
    /// strings are indented below their key; nested objects use dotted keys.
    pub fn text(&self) -> String {
        let mut s = format!("{}\n", self.summary);
        s += &format!("status: {}\n", self.status.keyword());
        for (k, v) in &self.fields {
            field(&mut s, k, v);
        }
        s
    }
}

fn field(s: &mut String, key: &str, v: &Value) {
    match v {
        Value::String(t) if t.contains('\n') || t.is_empty() => {
            s.push_str(key);
            s.push_str(":\n");
            for line in t.lines() {
                s.push_str("  ");
                s.push_str(line);
                s.push('\n');
            }
        }
        Value::String(t) => {
            s.push_str(&format!("{key}: {t}\n"));
        }
        Value::Object(m) if !m.is_empty() => {
            for (k, v) in m {
                field(s, &format!("{key}.{k}"), v);
            }
        }
        other => s.push_str(&format!("{key}: {other}\n")),
    }
}
