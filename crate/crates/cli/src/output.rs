//! Deterministic rendering: floats rounded to 15 significant digits,
//! non-finite values as `null`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub fn round15(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    *v = serde_json::Number::from_f64(round15(x))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Cell text for CSV output.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::Number::from_f64(round15(x))
            .map(|n| n.to_string())
            .unwrap_or_default()
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round15(0.1 + 0.2), 0.3);
        assert_eq!(round15(1.0), 1.0);
        assert_eq!(round15(3.874204890000001), 3.87420489);
        let s = to_json(&vec![f64::INFINITY, 0.1 + 0.2]).unwrap();
        assert_eq!(s, "[\n  null,\n  0.3\n]\n");
    }

    #[test]
    fn csv_cells() {
        assert_eq!(num(f64::NAN), "");
        assert_eq!(opt(Some(2.0)), "2.0");
        assert_eq!(num(7.277287785954091e-15), "7.27728778595409e-15");
        let s = csv_string(&["a", "b"], &[vec!["1".into(), "x".into()]]).unwrap();
        assert_eq!(s, "a,b\n1,x\n");
    }
}
