//! Small numeric helpers: exact binomial table, compensated summation, sigmoid.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest moment order supported by the binomial table.
pub const MAX_ORDER: usize = 60;

fn table() -> &'static [Vec<u64>] {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(MAX_ORDER + 1);
        for n in 0..=MAX_ORDER {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Row `n` of Pascal's triangle, converted to reals (exact for `n <= 56`).
pub fn binomial_row(n: usize) -> Result<Vec<f64>> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge(n));
    }
    Ok(table()[n].iter().map(|&c| c as f64).collect())
}

/// Exact binomial coefficient for `n <= MAX_ORDER`.
pub fn binomial(n: usize, k: usize) -> Result<u64> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge(n));
    }
    Ok(if k > n { 0 } else { table()[n][k] })
}

pub(crate) fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        Err(Error::OrderTooLarge(k))
    } else {
        Ok(())
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
