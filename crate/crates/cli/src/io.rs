//! Plain-text artifacts. Every file starts with the run metadata: CSVs as
//! `# key: value` comment lines, JSON as a top-level `meta` object.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

pub struct Meta {
    pub entries: Vec<(String, String)>,
}

impl Meta {
    pub fn new() -> Self {
        Meta { entries: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn json(&self) -> Value {
        Value::Object(self.entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:?}")
    }
}

pub fn write_csv(path: &Path, meta: &Meta, header: &[String], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut s = String::new();
    for (k, v) in &meta.entries {
        writeln!(s, "# {k}: {v}").unwrap();
    }
    writeln!(s, "{}", header.join(",")).unwrap();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    fs::write(path, s)
}

/// Serialises `body` (which must be a JSON object) with `meta` prepended.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, body: &T) -> std::io::Result<()> {
    let mut out = Map::new();
    out.insert("meta".into(), meta.json());
    match serde_json::to_value(body)? {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("value".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(out))?;
    text.push('\n');
    fs::write(path, text)
}

/// Column names and numeric rows of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_json(path: &Path) -> std::io::Result<Value> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
