//! Report assembly: 12-significant-digit numerics, JSON and CSV sinks with a
//! configuration header.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

/// Significant digits used for every number written to a report.
pub const DIGITS: usize = 12;

/// Formats `x` with [`DIGITS`] significant digits, trailing zeros removed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding may carry into a new leading digit; the digit count is
        // still bounded since trailing zeros are dropped
        trim_fraction(&s).to_string()
    } else {
        let s = format!("{x:.prec$e}", prec = DIGITS - 1);
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        format!("{}e{exponent}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to [`DIGITS`] significant digits.
pub fn round(x: f64) -> f64 {
    if x.is_finite() {
        num(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

/// JSON value for `x`; non-finite values become the strings `"inf"`,
/// `"-inf"` or `"nan"`.
pub fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(round(x))
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(num(x)))
}

/// Serializes `value` and rounds every float inside it.
pub fn to_json<T: Serialize>(value: &T) -> Value {
    round_value(serde_json::to_value(value).expect("report values serialize"))
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json_num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A report: the resolved configuration, scalar results and an optional
/// table.
#[derive(Debug, Clone, Default)]
pub struct Report {
    command: String,
    config: Map<String, Value>,
    results: Map<String, Value>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn config(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.config.insert(key.into(), value.into());
        self
    }

    pub fn config_num(self, key: &str, x: f64) -> Self {
        self.config(key, json_num(x))
    }

    pub fn result(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.results.insert(key.into(), value.into());
        self
    }

    pub fn result_num(self, key: &str, x: f64) -> Self {
        self.result(key, json_num(x))
    }

    /// Merges the fields of a serializable struct into the results.
    pub fn results_from<T: Serialize>(mut self, value: &T) -> Self {
        if let Value::Object(map) = to_json(value) {
            self.results.extend(map);
        }
        self
    }

    pub fn table<S: AsRef<str>>(mut self, columns: &[S], rows: Vec<Vec<Value>>) -> Self {
        self.columns = columns.iter().map(|c| c.as_ref().to_string()).collect();
        self.rows = rows;
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_json(&self) -> String {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert("config".into(), Value::Object(self.config.clone()));
        if !self.results.is_empty() {
            root.insert("result".into(), Value::Object(self.results.clone()));
        }
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|r| {
                    Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect())
                })
                .collect();
            root.insert("table".into(), Value::Array(rows));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json renders");
        s.push('\n');
        s
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# command: {}", self.command).unwrap();
        for (k, v) in &self.config {
            writeln!(s, "# {k}: {}", cell(v)).unwrap();
        }
        if self.columns.is_empty() {
            s.push_str("key,value\n");
            let mut flat = vec![];
            for (k, v) in &self.results {
                flatten(k.clone(), v, &mut flat);
            }
            for (k, v) in flat {
                writeln!(s, "{k},{}", cell(v)).unwrap();
            }
        } else {
            for (k, v) in &self.results {
                writeln!(s, "# {k}: {}", cell(v)).unwrap();
            }
            s.push_str(&self.columns.join(","));
            s.push('\n');
            for row in &self.rows {
                let cells: Vec<String> = row.iter().map(cell).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
        }
        s
    }
}

/// Nested objects become `outer.inner` keys.
fn flatten<'a>(key: String, v: &'a Value, out: &mut Vec<(String, &'a Value)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                flatten(format!("{key}.{k}"), inner, out);
            }
        }
        _ => out.push((key, v)),
    }
}

fn cell(v: &Value) -> String {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => num(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    };
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.682_952_910_622_461), "1.68295291062");
        assert_eq!(num(2.0 / 3.0), "0.666666666667");
        assert_eq!(num(1.5), "1.5");
        assert_eq!(num(-0.125), "-0.125");
        assert_eq!(num(1e-9 / 3.0), "3.33333333333e-10");
        assert_eq!(num(6.02e23), "6.02e23");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(9.999_999_999_999_9), "10");
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [std::f64::consts::PI, 1.0 / 7.0, 123456.789012345, 7e-8] {
            assert_eq!(round(round(x)), round(x));
            assert!((round(x) / x - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn csv_carries_config_header() {
        let r = Report::new("moments")
            .config("q", json!(0.5))
            .table(&["n", "EZ"], vec![vec![json!(0), json_num(1.0)]]);
        let csv = r.render(Format::Csv);
        assert!(csv.starts_with("# command: moments\n# q: 0.5\nn,EZ\n0,1"));
        let js: Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(js["config"]["q"], json!(0.5));
        assert_eq!(js["table"][0]["EZ"], json!(1.0));
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        let r = Report::new("x").table(&["a"], vec![vec![json!("p, \"q\"")]]);
        assert!(r.render(Format::Csv).ends_with("a\n\"p, \"\"q\"\"\"\n"));
    }

    #[test]
    fn csv_flattens_nested_results() {
        let r = Report::new("x")
            .result("estimate", json!({"mean": 1.5, "n": 3}))
            .result("bounds", json!([1, 2]));
        assert_eq!(
            r.render(Format::Csv),
            "# command: x\nkey,value\nbounds,\"[1,2]\"\nestimate.mean,1.5\nestimate.n,3\n"
        );
    }

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(json_num(f64::INFINITY), json!("inf"));
        let v = to_json(&vec![1.0 / 3.0]);
        assert_eq!(v, json!([0.333333333333]));
    }
}
