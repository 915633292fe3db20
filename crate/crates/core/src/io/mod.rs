//! Text formats for vtrees, circuits, datasets and model parameters.
//!
//! All formats are line based. Lines whose first token is `c` are comments and
//! may appear anywhere; blank lines are ignored.

mod circuit_format;
mod dataset;
mod models;
mod vtree_format;

pub use circuit_format::{load_circuit, parse_circuit, parse_circuit_header, serialize_circuit, CircuitHeader};
pub use dataset::{load_dataset, DatasetTable};
pub use models::{parse_linear_model, parse_nb_model, serialize_linear_model, serialize_nb_model};
pub use vtree_format::{parse_vtree, serialize_vtree};

use crate::error::{Error, Result};

/// Non-comment, non-blank lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first() {
            None | Some(&"c") => None,
            Some(_) => Some((i + 1, tokens)),
        }
    })
}

pub(crate) fn field<T: std::str::FromStr>(line: usize, tokens: &[&str], i: usize, what: &str) -> Result<T> {
    let tok = tokens
        .get(i)
        .ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

pub(crate) fn expect_len(line: usize, tokens: &[&str], n: usize) -> Result<()> {
    if tokens.len() == n {
        Ok(())
    } else {
        Err(Error::parse(line, format!("expected {n} fields, found {}", tokens.len())))
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn parse_real(line: usize, tokens: &[&str], i: usize, what: &str) -> Result<f64> {
    let x: f64 = field(line, tokens, i, what)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::parse(line, format!("{what} must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -5.3, 1.0, 0.0, 1e-300, 6.02e23, f64::MIN_POSITIVE, 0.30000000000000004] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_real(0.1), "0.1");
        assert_eq!(format_real(2.0), "2");
        assert_eq!(format_real(1e-300), "1e-300");
    }
}
