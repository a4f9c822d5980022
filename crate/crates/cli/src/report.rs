//! Versioned JSON and CSV reports.
//!
//! Every float is written with 17 significant digits and every rational as a
//! `"p/q"` string, so reports round-trip losslessly.

use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// One pass/fail comparison.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub actual: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// `|actual − expected| ≤ tol`.
    pub fn close(name: &str, expected: f64, actual: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            expected: float(expected),
            actual: float(actual),
            tolerance: Some(tol),
            pass: (actual - expected).abs() <= tol,
        }
    }

    /// `actual ≤ bound`.
    pub fn at_most(name: &str, bound: f64, actual: f64) -> Check {
        Check {
            name: name.into(),
            expected: Value::String(format!("<= {}", sig17(bound))),
            actual: float(actual),
            tolerance: None,
            pass: actual <= bound,
        }
    }

    /// `actual ≥ bound`.
    pub fn at_least(name: &str, bound: f64, actual: f64) -> Check {
        Check {
            name: name.into(),
            expected: Value::String(format!(">= {}", sig17(bound))),
            actual: float(actual),
            tolerance: None,
            pass: actual >= bound,
        }
    }

    /// Exact equality of two displayable values.
    pub fn exact<T: PartialEq + ToString>(name: &str, expected: T, actual: T) -> Check {
        Check {
            name: name.into(),
            pass: expected == actual,
            expected: Value::String(expected.to_string()),
            actual: Value::String(actual.to_string()),
            tolerance: None,
        }
    }

    pub fn holds(name: &str, pass: bool) -> Check {
        Check {
            name: name.into(),
            expected: Value::Bool(true),
            actual: Value::Bool(pass),
            tolerance: None,
            pass,
        }
    }
}

/// A tabular payload, written as CSV under `--format csv`.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub checks: Vec<Check>,
    pub data: Map<String, Value>,
    pub table: Option<Table>,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.into(),
            params: Map::new(),
            checks: Vec::new(),
            data: Map::new(),
            table: None,
            elapsed_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.into(), to_value(value));
        self
    }

    pub fn datum(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.data.insert(key.into(), to_value(value));
        self
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("schema".into(), Value::from(SCHEMA_VERSION));
        out.insert("command".into(), Value::String(self.command.clone()));
        out.insert("params".into(), Value::Object(self.params.clone()));
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(c.name.clone()));
                m.insert("expected".into(), c.expected.clone());
                m.insert("actual".into(), c.actual.clone());
                m.insert("tolerance".into(), c.tolerance.map_or(Value::Null, float));
                m.insert("pass".into(), Value::Bool(c.pass));
                Value::Object(m)
            })
            .collect();
        out.insert("checks".into(), Value::Array(checks));
        if !self.data.is_empty() {
            out.insert("data".into(), Value::Object(self.data.clone()));
        }
        if let Some(t) = &self.table {
            out.insert("table".into(), t.to_json());
        }
        out.insert("verdict".into(), Value::String(if self.passed() { "pass" } else { "fail" }.into()));
        out.insert("elapsed_ms".into(), Value::from(self.elapsed_ms as u64));
        normalize(Value::Object(out))
    }

    /// The table if there is one, else the checks, as CSV.
    pub fn to_csv(&self) -> String {
        let table = match &self.table {
            Some(t) => t.clone(),
            None => {
                let mut t = Table::new(&["name", "expected", "actual", "tolerance", "pass"]);
                for c in &self.checks {
                    t.push(vec![
                        Value::String(c.name.clone()),
                        c.expected.clone(),
                        c.actual.clone(),
                        c.tolerance.map_or(Value::Null, float),
                        Value::Bool(c.pass),
                    ]);
                }
                t
            }
        };
        let mut out = table.columns.join(",");
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(|v| csv_cell(&normalize(v.clone()))).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// `x` with 17 significant digits; non-finite values as strings.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn float(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(sig17(x).parse::<Number>().expect("scientific notation is valid JSON"))
    } else {
        Value::String(x.to_string())
    }
}

fn to_value(value: impl Serialize) -> Value {
    normalize(serde_json::to_value(value).expect("report values serialize"))
}

/// Rewrites every non-integer number with 17 significant digits.
fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n.as_f64().map_or(Value::Number(n), float),
        Value::Array(xs) => Value::Array(xs.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23] {
            let s = float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn verdict_is_conjunction() {
        let mut r = Report::new("t");
        r.check(Check::holds("a", true));
        assert_eq!(r.to_json()["verdict"], "pass");
        r.check(Check::close("b", 1.0, 1.5, 0.1));
        assert_eq!(r.to_json()["verdict"], "fail");
        assert_eq!(r.to_json()["schema"], 1);
    }

    #[test]
    fn csv_quotes_cells() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Value::String("x,y".into()), float(0.5)]);
        let mut r = Report::new("t");
        r.table = Some(t);
        assert_eq!(r.to_csv(), "a,b\n\"x,y\",5.0000000000000000e-1\n");
    }
}
