use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

use super::run::Report;
use super::{WorkbenchError, WorkbenchResult};
use crate::algebras::{Bound, VerdictState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "table" => Ok(Self::Table),
            other => Err(format!("unknown format {other:?} (json or table)")),
        }
    }
}

/// JSON with sorted keys, two-space indent, and every float written with 17
/// significant digits. Integers stay integers.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("workbench types serialise to JSON");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        out.push('\n');
        out.extend(std::iter::repeat_n("  ", d));
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                write!(out, "{:.16e}", n.as_f64().expect("finite float")).unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            let flat = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    pad(out, depth + 1);
                }
                write_value(out, item, depth + 1);
            }
            if !flat {
                pad(out, depth);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(out, &map[key], depth + 1);
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

fn fmt_bound(b: Option<&Bound>) -> String {
    match b {
        Some(Bound::Finite(v)) => format!("{v:.3e}"),
        Some(Bound::Infinite) => "inf".into(),
        None => "-".into(),
    }
}

fn table(r: &Report) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>3}  {:<26} {:<8} {:<13} {:>10}  {}",
        "#", "kind", "verdict", "state", "max_resid", "consistency"
    )
    .unwrap();
    for rec in &r.records {
        let verdict = rec.verdict.map_or("-".to_string(), |v| v.to_string());
        let state = match rec.state {
            Some(VerdictState::In) => "in",
            Some(VerdictState::Out) => "out",
            Some(VerdictState::Inconclusive) => "inconclusive",
            None => "-",
        };
        let worst = rec.residuals.values().copied().max_by(|a, b| match (a, b) {
            (Bound::Finite(x), Bound::Finite(y)) => x.total_cmp(y),
            (Bound::Infinite, Bound::Infinite) => std::cmp::Ordering::Equal,
            (Bound::Infinite, _) => std::cmp::Ordering::Greater,
            (_, Bound::Infinite) => std::cmp::Ordering::Less,
        });
        let consistency = if rec.consistency_failures.is_empty() {
            "ok".to_string()
        } else {
            rec.consistency_failures.join("; ")
        };
        writeln!(
            out,
            "{:>3}  {:<26} {:<8} {:<13} {:>10}  {}",
            rec.index,
            rec.kind,
            verdict,
            state,
            fmt_bound(worst.as_ref()),
            consistency
        )
        .unwrap();
    }
    out
}

pub fn emit_report(r: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => canonical_json(r),
        ReportFormat::Table => table(r),
    }
}

/// Reads back a report emitted as JSON.
pub fn parse_report(text: &str) -> WorkbenchResult<Report> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| WorkbenchError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
