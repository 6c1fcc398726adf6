//! Report envelope and its JSON and CSV renderings.

use std::collections::BTreeMap;
use std::time::Duration;

use num_complex::Complex64;
use serde_json::{json, Map, Number, Value};

use crate::config::Format;

/// A float with sixteen significant digits after the point; null when not
/// finite. The formatting fixes the bytes of every report.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    serde_json::from_str::<Number>(&text).map(Value::Number).unwrap_or(Value::Null)
}

pub fn int(x: i128) -> Value {
    serde_json::from_str::<Number>(&x.to_string()).map(Value::Number).expect("integer literal")
}

/// An ordered row under construction.
#[derive(Clone, Debug, Default)]
pub struct Row {
    fields: Map<String, Value>,
    flags: Vec<String>,
}

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn float(self, key: &str, x: f64) -> Self {
        self.set(key, num(x))
    }

    pub fn complex(self, prefix: &str, z: Complex64) -> Self {
        self.float(&format!("{prefix}_re"), z.re).float(&format!("{prefix}_im"), z.im)
    }

    pub fn flag(&mut self, reason: impl Into<String>) {
        self.flags.push(reason.into());
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.fields.get(key).and_then(Value::as_f64)
    }

    fn into_value(self) -> Map<String, Value> {
        let mut m = self.fields;
        m.insert("flags".into(), json!(self.flags));
        m
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub rows: Vec<Row>,
    pub summary: Value,
    pub timings: Option<BTreeMap<String, Duration>>,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self { command, config, rows: Vec::new(), summary: Value::Null, timings: None }
    }

    pub fn flag_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.is_empty()).count()
    }

    pub fn to_json(&self) -> Value {
        let flags: Vec<Value> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.flags.iter().map(move |f| json!({ "row": i, "reason": f })))
            .collect();
        let rows: Vec<Value> = self.rows.iter().cloned().map(|r| Value::Object(r.into_value())).collect();
        let mut env = Map::new();
        env.insert("tool".into(), json!("heckelab"));
        env.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        env.insert("command".into(), json!(self.command));
        env.insert("config".into(), self.config.clone());
        env.insert("rows".into(), Value::Array(rows));
        env.insert("flags".into(), Value::Array(flags));
        env.insert("summary".into(), self.summary.clone());
        if let Some(t) = &self.timings {
            let m: Map<String, Value> =
                t.iter().map(|(k, d)| (k.clone(), num(d.as_secs_f64()))).collect();
            env.insert("timings_seconds".into(), Value::Object(m));
        }
        Value::Object(env)
    }

    /// Rows only, one column per key in first-seen order; missing cells are
    /// empty and flags are joined with ';'.
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let rows: Vec<Map<String, Value>> = self.rows.iter().cloned().map(Row::into_value).collect();
        let mut columns: Vec<String> = Vec::new();
        for r in &rows {
            for k in r.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&columns)?;
        for r in &rows {
            let cells: Vec<String> = columns.iter().map(|c| cell(r.get(c))).collect();
            w.write_record(&cells)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.to_json())? + "\n"),
            Format::Csv => self.to_csv(),
        }
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(a)) => a.iter().map(|x| cell(Some(x))).collect::<Vec<_>>().join(";"),
        Some(other) => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(num(0.5).to_string(), "5.0000000000000000e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(int(-24).to_string(), "-24");
    }

    #[test]
    fn csv_columns() {
        let mut r = Report::new("x", Value::Null);
        let mut row = Row::new().set("a", 1).float("b", 2.0);
        row.flag("one");
        row.flag("two");
        r.rows.push(row);
        r.rows.push(Row::new().set("a", 3).set("c", "z"));
        let text = r.to_csv().unwrap();
        assert_eq!(text, "a,b,flags,c\n1,2.0000000000000000e+0,one;two,\n3,,,z\n");
        assert_eq!(r.flag_count(), 1);
    }
}
