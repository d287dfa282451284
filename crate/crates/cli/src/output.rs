use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Writes to `path`, or standard output when `None`.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Renders rows with a header line.
pub fn to_csv<R: Serialize>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

/// 1-based lower-triangle pair with column names.
#[derive(Debug, Serialize)]
pub struct Pair {
    pub k: usize,
    pub l: usize,
    pub name_k: String,
    pub name_l: String,
}

impl Pair {
    pub fn new(k: usize, l: usize, names: &[String]) -> Self {
        Self {
            k: k + 1,
            l: l + 1,
            name_k: names[k].clone(),
            name_l: names[l].clone(),
        }
    }
}
