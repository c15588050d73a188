//! Minimal CSV output: one header line, `%.12e` numbers, LF endings.

use std::fmt::Write as _;

/// C-style `%.12e`: at least two exponent digits with an explicit sign.
pub fn format_sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Column value: integers print as such, floats in scientific notation.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(usize),
    Float(f64),
}

pub fn render(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        for (k, c) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            match c {
                Cell::Int(i) => write!(out, "{i}").expect("write to string"),
                Cell::Float(f) => out.push_str(&format_sci(*f)),
            }
        }
        out.push('\n');
    }
    out
}
