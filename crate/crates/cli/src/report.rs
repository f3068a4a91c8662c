//! Report document shared by every subcommand.

use polymellin::{Error, QuadratureSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL: &str = "polymellin";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub module: String,
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            module: e.module().to_string(),
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// Machine-readable report. Serialisation is deterministic: top-level keys
/// follow the struct order and keys inside `result` are sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub input: Option<InputInfo>,
    /// Quadrature settings requested on the command line; actual grids are
    /// reported next to each value.
    pub quadrature: Option<QuadratureSpec>,
    pub status: String,
    pub result: Value,
    pub error: Option<ErrorInfo>,
    /// Wall-clock seconds since the epoch, only with `--timestamp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ReportDocument {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        ReportDocument {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            args,
            input: None,
            quadrature: None,
            status: "ok".to_string(),
            result: Value::Null,
            error: None,
            timestamp: None,
        }
    }

    pub fn fail(&mut self, e: &Error) {
        self.status = "error".to_string();
        self.error = Some(ErrorInfo::from(e));
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Indented `key: value` rendering of the same content.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.tool, self.version, self.command);
        if let Some(inp) = &self.input {
            out.push_str(&format!("input: {} (sha256 {})\n", inp.path, inp.sha256));
        }
        out.push_str(&format!("status: {}\n", self.status));
        if let Some(e) = &self.error {
            out.push_str(&format!("error: {}/{}: {}\n", e.module, e.kind, e.message));
        }
        render(&self.result, 0, &mut out);
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| matches!(i, Value::Number(_))) && items.len() <= 8 => {
            let parts: Vec<String> = items.iter().map(|i| i.to_string()).collect();
            Some(format!("[{}]", parts.join(", ")))
        }
        _ => None,
    }
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(item, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}- [{i}]\n"));
                        render(item, depth + 1, out);
                    }
                }
            }
        }
        other => {
            if let Some(s) = scalar(other) {
                out.push_str(&format!("{pad}{s}\n"));
            }
        }
    }
}
