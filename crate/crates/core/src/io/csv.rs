use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One value per line. A non-numeric first line is taken as a header.
pub(super) fn parse<T: Real>(text: &str) -> Result<Vec<T>> {
    let mut values = Vec::new();
    let mut seen_first = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(T::lit(v)),
            Err(_) if !seen_first => {}
            Err(_) => return Err(Error::NonNumeric { line: idx + 1, token: line.to_string() }),
        }
        seen_first = true;
    }
    Ok(values)
}

pub(super) fn write<T: Real, W: Write>(w: &mut W, values: &[T]) -> std::io::Result<()> {
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}
