//! Taylor approximations of `E[σ(g)]` built from exact moments of `g`.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::moments::{conditional_moments, mc2_moments, MomentVector};
use crate::numeric::check_order;

/// `σ^(k)` written as a polynomial in `s = σ(x)`: `Σ_j c_j s^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativePolynomial {
    order: usize,
    coefficients: Vec<BigInt>,
}

impl DerivativePolynomial {
    /// `P_0(s) = s`.
    pub fn identity() -> Self {
        DerivativePolynomial {
            order: 0,
            coefficients: vec![BigInt::zero(), BigInt::one()],
        }
    }

    /// `P_{k+1}(s) = P_k'(s) * s * (1 - s)`.
    pub fn next(&self) -> Self {
        let c = &self.coefficients;
        let mut out = vec![BigInt::zero(); c.len() + 1];
        for (j, slot) in out.iter_mut().enumerate() {
            if j < c.len() {
                *slot += &c[j] * BigInt::from(j);
            }
            if j >= 1 && j - 1 < c.len() {
                *slot -= &c[j - 1] * BigInt::from(j - 1);
            }
        }
        DerivativePolynomial {
            order: self.order + 1,
            coefficients: out,
        }
    }

    pub fn of_order(k: usize) -> Self {
        (0..k).fold(Self::identity(), |p, _| p.next())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    /// Horner evaluation in exact rational arithmetic.
    pub fn eval_exact(&self, s: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * s + BigRational::from_integer(c.clone()))
    }
}

fn exact_sigmoid(alpha: f64) -> BigRational {
    BigRational::from_float(crate::numeric::sigmoid(alpha)).expect("sigmoid is finite")
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `σ^(k)(alpha)`.
pub fn sigmoid_derivative(k: usize, alpha: f64) -> f64 {
    to_f64(&DerivativePolynomial::of_order(k).eval_exact(&exact_sigmoid(alpha)))
}

/// `σ^(k)(alpha) / k!` for `k = 0..=d`, each rounded once from an exact value.
pub fn sigmoid_taylor_coefficients(d: usize, alpha: f64) -> Vec<f64> {
    let s = exact_sigmoid(alpha);
    let mut poly = DerivativePolynomial::identity();
    let mut factorial = BigInt::one();
    let mut out = Vec::with_capacity(d + 1);
    for k in 0..=d {
        if k > 0 {
            poly = poly.next();
            factorial *= BigInt::from(k);
        }
        out.push(to_f64(&(poly.eval_exact(&s) / BigRational::from_integer(factorial.clone()))));
    }
    out
}

/// Expansion point of the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaMode {
    Zero,
    /// `M_1 / M_0` of the moments being expanded.
    Mean,
    Fixed(f64),
}

impl AlphaMode {
    pub fn resolve(self, moments: &MomentVector) -> f64 {
        match self {
            AlphaMode::Zero => 0.0,
            AlphaMode::Mean => moments.mean(),
            AlphaMode::Fixed(v) => v,
        }
    }
}

impl std::str::FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(AlphaMode::Zero),
            "mean" => Ok(AlphaMode::Mean),
            v => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(AlphaMode::Fixed)
                .ok_or_else(|| Error::Config(format!("alpha must be zero, mean or a number, got {v:?}"))),
        }
    }
}

/// `Σ_{k=0..d} derivatives[k] / k! * M_k(g - alpha)` for a caller-supplied
/// non-linearity whose derivatives at `alpha` are known.
pub fn taylor_with_derivatives(moments: &MomentVector, alpha: f64, derivatives: &[f64]) -> Result<f64> {
    let d = derivatives.len().checked_sub(1).ok_or_else(|| Error::Config("no derivatives given".into()))?;
    if d > moments.order() {
        return Err(Error::Config(format!(
            "degree {d} needs moments up to order {d}, have {}",
            moments.order()
        )));
    }
    let shifted = truncate(moments, d).shifted(alpha)?;
    let mut factorial = 1.0;
    let mut total = 0.0;
    for (k, g) in derivatives.iter().enumerate() {
        if k > 0 {
            factorial *= k as f64;
        }
        total += g / factorial * shifted.get(k);
    }
    Ok(total)
}

/// Degree-`d` sigmoid series around `alpha` from moments of order at least `d`.
pub fn taylor_from_moments(moments: &MomentVector, d: usize, alpha: f64) -> Result<f64> {
    check_order(d)?;
    if d > moments.order() {
        return Err(Error::Config(format!(
            "degree {d} needs moments up to order {d}, have {}",
            moments.order()
        )));
    }
    let shifted = truncate(moments, d).shifted(alpha)?;
    let coeffs = sigmoid_taylor_coefficients(d, alpha);
    Ok(coeffs.iter().zip(shifted.values()).map(|(c, m)| c * m).sum())
}

fn truncate(m: &MomentVector, d: usize) -> MomentVector {
    MomentVector::new(m.values()[..=d].to_vec())
}

/// `T_d(σ∘g, p)` with moments from the pairwise recursion.
pub fn taylor_expectation(pc: &Circuit, rc: &Circuit, d: usize, alpha: AlphaMode) -> Result<f64> {
    check_order(d)?;
    let moments = mc2_moments(pc, rc, d.max(1))?;
    taylor_from_moments(&moments, d, alpha.resolve(&moments))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Classification,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionOptions {
    /// Taylor degree for classification.
    pub order: usize,
    pub alpha: AlphaMode,
}

impl Default for PredictionOptions {
    fn default() -> Self {
        PredictionOptions {
            order: 1,
            alpha: AlphaMode::Mean,
        }
    }
}

/// `E[f(x) | evidence]`: exact for regression, Taylor-approximated for
/// classification with moments conditioned before expanding.
pub fn expected_prediction(
    pc: &Circuit,
    model: &Circuit,
    task: Task,
    evidence: &Evidence,
    options: PredictionOptions,
) -> Result<f64> {
    match task {
        Task::Regression => Ok(conditional_moments(pc, model, evidence, 1)?.get(1)),
        Task::Classification => {
            check_order(options.order)?;
            let m = conditional_moments(pc, model, evidence, options.order.max(1))?;
            taylor_from_moments(&m, options.order, options.alpha.resolve(&m))
        }
    }
}
