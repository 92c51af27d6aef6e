//! Value parsers shared by the subcommands.

use std::str::FromStr;

use ncpain_core::{BlockMatrix, CMat, Complex64, GridSpec};
use serde_json::Value;

/// `1`, `i`, `2-3i`, `-0.5+2i`.
pub fn complex(s: &str) -> Result<Complex64, String> {
    Complex64::from_str(s.trim()).map_err(|_| format!("not a complex number: {s:?}"))
}

/// `start:end:step`.
pub fn z_range(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, h] = parts[..] else {
        return Err(format!("expected start:end:step, got {s:?}"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    GridSpec::spanning(num(a)?, num(b)?, num(h)?).map_err(|e| e.to_string())
}

fn scalar_value(v: &Value) -> Result<Complex64, String> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|x| Complex64::new(x, 0.0))
            .ok_or_else(|| format!("bad number {n}")),
        Value::String(s) => complex(s),
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number) => {
            Ok(Complex64::new(a[0].as_f64().unwrap_or(0.0), a[1].as_f64().unwrap_or(0.0)))
        }
        other => Err(format!("expected a scalar, got {other}")),
    }
}

enum Entry {
    Scalar(Complex64),
    Matrix(CMat),
}

/// A scalar (number, `"2-3i"` or `[re, im]`) or a square array of scalars.
fn entry(v: &Value) -> Result<Entry, String> {
    if let Ok(c) = scalar_value(v) {
        return Ok(Entry::Scalar(c));
    }
    let rows = v.as_array().ok_or_else(|| format!("expected an entry, got {v}"))?;
    let d = rows.len();
    let mut out = Vec::with_capacity(d);
    for row in rows {
        let row = row
            .as_array()
            .filter(|r| r.len() == d)
            .ok_or("matrix entries must be square arrays")?;
        out.push(row.iter().map(scalar_value).collect::<Result<Vec<_>, _>>()?);
    }
    let refs: Vec<&[Complex64]> = out.iter().map(Vec::as_slice).collect();
    Ok(Entry::Matrix(CMat::from_rows(&refs)))
}

/// A block matrix read from JSON, kept scalar when every entry is scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedMatrix {
    Scalar(BlockMatrix<Complex64>),
    Block(BlockMatrix<CMat>),
}

/// `[[a11, a12], [a21, a22]]`. Scalar entries next to matrix entries are
/// read as multiples of the identity.
pub fn matrix_json(text: &str) -> Result<ParsedMatrix, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let rows = value.as_array().ok_or("expected an array of rows")?;
    let parsed = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| format!("expected a row, got {r}"))?
                .iter()
                .map(entry)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let d = parsed.iter().flatten().find_map(|e| match e {
        Entry::Matrix(m) => Some(ncpain_core::NcRing::dim(m)),
        Entry::Scalar(_) => None,
    });
    let result = match d {
        None => BlockMatrix::from_rows(
            parsed
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|e| match e {
                            Entry::Scalar(c) => c,
                            Entry::Matrix(_) => unreachable!(),
                        })
                        .collect()
                })
                .collect(),
        )
        .map(ParsedMatrix::Scalar),
        Some(d) => BlockMatrix::from_rows(
            parsed
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|e| match e {
                            Entry::Scalar(c) => CMat::scalar(d, c),
                            Entry::Matrix(m) => m,
                        })
                        .collect()
                })
                .collect(),
        )
        .map(ParsedMatrix::Block),
    };
    result.map_err(|e| e.to_string())
}
