//! Command results and their rendering.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
    Text,
}

/// The natural body of a command, before any `--format` override.
#[derive(Clone, Debug)]
pub enum Payload {
    Json(Value),
    /// Header row first.
    Tsv(Vec<Vec<String>>),
    Text(String),
}

/// Exit code 0 exactly when `status` is not `Fail`.
#[derive(Clone, Debug)]
pub struct CommandResult {
    pub status: Status,
    pub payload: Payload,
    pub diagnostics: Vec<String>,
}

impl CommandResult {
    pub fn new(status: Status, payload: Payload) -> Self {
        Self { status, payload, diagnostics: Vec::new() }
    }

    pub fn pass_if(ok: bool, payload: Payload) -> Self {
        Self::new(if ok { Status::Pass } else { Status::Fail }, payload)
    }

    pub fn with_diagnostic(mut self, msg: impl Into<String>) -> Self {
        self.diagnostics.push(msg.into());
        self
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.status == Status::Fail)
    }

    /// Renders the body in `format`, defaulting to the payload's own kind.
    pub fn render(&self, format: Option<Format>) -> String {
        match (format, &self.payload) {
            (None | Some(Format::Json), Payload::Json(v)) => pretty(v),
            (None | Some(Format::Tsv), Payload::Tsv(rows)) => tsv(rows),
            (None | Some(Format::Text), Payload::Text(s)) => s.clone(),
            (Some(Format::Json), other) => pretty(&serde_json::json!({
                "status": self.status,
                "payload": body_text(other),
                "diagnostics": self.diagnostics,
            })),
            (Some(Format::Text), Payload::Json(v)) => pretty(v),
            (Some(Format::Text), Payload::Tsv(rows)) => tsv(rows),
            (Some(Format::Tsv), Payload::Json(v)) => tsv(&json_rows(v)),
            (Some(Format::Tsv), Payload::Text(s)) => s.clone(),
        }
    }
}

fn body_text(p: &Payload) -> String {
    match p {
        Payload::Json(v) => pretty(v),
        Payload::Tsv(rows) => tsv(rows),
        Payload::Text(s) => s.clone(),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn tsv(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        let _ = writeln!(out, "{}", row.join("\t"));
    }
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// An array of objects becomes one row per element under the first
/// element's keys; anything else becomes `key value` pairs.
fn json_rows(v: &Value) -> Vec<Vec<String>> {
    match v {
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            let keys: Vec<String> = items[0].as_object().expect("object").keys().cloned().collect();
            let mut rows = vec![keys.clone()];
            rows.extend(items.iter().map(|item| keys.iter().map(|k| item.get(k).map(cell).unwrap_or_default()).collect()));
            rows
        }
        Value::Object(map) => {
            let mut rows = vec![vec!["key".to_string(), "value".to_string()]];
            rows.extend(map.iter().map(|(k, v)| vec![k.clone(), cell(v)]));
            rows
        }
        other => vec![vec![cell(other)]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn exit_code_tracks_failure_only() {
        let text = Payload::Text(String::new());
        assert_eq!(CommandResult::new(Status::Pass, text.clone()).exit_code(), 0);
        assert_eq!(CommandResult::new(Status::Report, text.clone()).exit_code(), 0);
        assert_eq!(CommandResult::new(Status::Fail, text).exit_code(), 1);
    }

    #[test]
    fn json_arrays_flatten_to_tsv() {
        let r = CommandResult::new(Status::Pass, Payload::Json(json!([{"a": 1, "b": "x"}, {"a": 2, "b": "y"}])));
        assert_eq!(r.render(Some(Format::Tsv)), "a\tb\n1\tx\n2\ty\n");
    }

    #[test]
    fn text_wraps_into_json_envelope() {
        let r = CommandResult::new(Status::Report, Payload::Text("hi\n".into())).with_diagnostic("note");
        let v: Value = serde_json::from_str(&r.render(Some(Format::Json))).unwrap();
        assert_eq!(v["status"], "report");
        assert_eq!(v["payload"], "hi\n");
        assert_eq!(v["diagnostics"][0], "note");
    }
}
