//! Deterministic report formatting: JSON with insertion-ordered keys and
//! CSV, every float rounded to 12 significant digits.

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

pub const SIG_DIGITS: usize = 12;

/// Rounds to [`SIG_DIGITS`] significant digits; the result prints in its
/// shortest round-trip form.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float parses")
}

pub fn num(x: f64) -> Value {
    Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
}

/// Applies [`round_sig`] to every float in `v`.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => *v = num(n.as_f64().expect("f64 number")),
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_json(mut v: Value) -> String {
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// CSV cell for a float; empty when not finite.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        round_sig(x).to_string()
    } else {
        String::new()
    }
}

/// CSV text with a commented preamble carrying the report header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &Map<String, Value>, columns: &[&str]) -> Self {
        let mut text = String::new();
        for (k, v) in header {
            let mut v = v.clone();
            round_floats(&mut v);
            let v = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            writeln!(text, "# {k}: {v}").unwrap();
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
