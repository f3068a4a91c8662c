//! Value parsers for comma-separated numeric flags.

use std::f64::consts::PI;

/// `"0.5,-0.25"` → `[0.5, -0.25]`.
pub fn float_list(text: &str) -> Result<Vec<f64>, String> {
    split(text)
        .map(|item| {
            item.parse::<f64>()
                .map_err(|_| format!("`{item}` is not a number"))
                .and_then(finite)
        })
        .collect()
}

pub fn int_list(text: &str) -> Result<Vec<i64>, String> {
    split(text)
        .map(|item| item.parse::<i64>().map_err(|_| format!("`{item}` is not an integer")))
        .collect()
}

pub fn uint_list(text: &str) -> Result<Vec<u32>, String> {
    split(text)
        .map(|item| {
            item.parse::<u32>()
                .map_err(|_| format!("`{item}` is not a non-negative integer"))
        })
        .collect()
}

/// Comma-separated angles, each a float or a rational multiple of π.
pub fn angle_list(text: &str) -> Result<Vec<f64>, String> {
    split(text).map(angle).collect()
}

/// Semicolon-separated vectors, `"1,2;3,0.5"`.
pub fn float_matrix(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.split(';').map(float_list).collect()
}

pub fn int_matrix(text: &str) -> Result<Vec<Vec<i64>>, String> {
    text.split(';').map(int_list).collect()
}

fn split(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim)
}

fn finite(v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not finite"))
    }
}

/// `1.2`, `pi`, `-pi/2`, `2pi/3`, `2*pi/3`.
///
/// The multiple of π is formed as `(p/q)·π` from the integers in the literal,
/// so `pi/3` is the nearest double to the exact product.
pub fn angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return finite(v);
    }
    let err = || format!("`{t}` is neither a number nor of the form [-][p][*]pi[/q]");
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    let pos = body.find("pi").ok_or_else(err)?;
    let head = body[..pos].trim_end_matches('*');
    let tail = &body[pos + 2..];
    let p: i64 = if head.is_empty() {
        1
    } else {
        head.parse().map_err(|_| err())?
    };
    let q: i64 = match tail.strip_prefix('/') {
        Some(d) => d.parse().map_err(|_| err())?,
        None if tail.is_empty() => 1,
        None => return Err(err()),
    };
    if q == 0 {
        return Err(format!("`{t}` divides by zero"));
    }
    Ok(sign * (p as f64 / q as f64) * PI)
}
