//! Run reports. Everything here is a function of the scenario, flags and
//! seed; timings and cache outcomes are emitted separately.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::scenario::Expectation;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub expected: Expectation,
    pub passed: bool,
    /// `passed` matches `expected`.
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub parameters: Value,
    pub results: Map<String, Value>,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    pub verdict: String,
}

impl Report {
    pub fn new(command: &str, scenario: &str, scenario_hash: &str, parameters: Value) -> Self {
        Self {
            command: command.into(),
            scenario: scenario.into(),
            scenario_hash: scenario_hash.into(),
            parameters,
            results: Map::new(),
            tables: Vec::new(),
            assertions: Vec::new(),
            verdict: String::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn assert(&mut self, name: &str, expected: Expectation, passed: bool, detail: impl Into<String>) {
        let ok = passed == (expected == Expectation::Pass);
        self.assertions.push(Assertion { name: name.into(), expected, passed, ok, detail: detail.into() });
    }

    pub fn all_ok(&self) -> bool {
        self.assertions.iter().all(|a| a.ok)
    }

    pub fn finish(&mut self) {
        self.verdict = if self.all_ok() { "pass" } else { "fail" }.into();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One CSV with a leading `table` column; assertions form the last table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        };
        for t in &self.tables {
            let mut header = vec!["table".to_string()];
            header.extend(t.columns.iter().cloned());
            w.write_record(&header).expect("in-memory write");
            for row in &t.rows {
                let mut rec = vec![t.name.clone()];
                rec.extend(row.iter().map(cell));
                w.write_record(&rec).expect("in-memory write");
            }
        }
        w.write_record(["table", "name", "expected", "passed", "ok", "detail"]).expect("in-memory write");
        for a in &self.assertions {
            let expected = match a.expected {
                Expectation::Pass => "pass",
                Expectation::Fail => "fail",
            };
            w.write_record(["assertions", &a.name, expected, &a.passed.to_string(), &a.ok.to_string(), &a.detail])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}
