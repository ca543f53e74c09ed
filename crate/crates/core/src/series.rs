//! Truncated Taylor series with a log-domain derivative evaluator.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative size of the last retained term below which a truncated
/// derivative sum counts as converged.
pub const SERIES_TOLERANCE: f64 = 1e-8;

/// Coefficients `c_0, c_1, ..., c_max` of a truncated power series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Highest retained order.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `z^i` (zero beyond the truncation order).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation of the partial sum.
    pub fn eval(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Natural log of `f^{(k)}(x) / k!`, the coefficient of `(z - x)^k` in the
    /// expansion around `0 <= x < 1`, computed as
    /// `sum_j C(j, k) c_j x^(j-k)` with log-domain accumulation.
    ///
    /// Requires nonnegative coefficients. Fails when the last retained term
    /// still carries more than [`SERIES_TOLERANCE`] of the sum.
    pub fn ln_shifted_coefficient(&self, k: usize, x: f64) -> Result<f64> {
        self.ln_shifted(k, x, true)
    }

    /// As [`Self::ln_shifted_coefficient`] for a polynomial whose retained
    /// coefficients are complete, so no truncation check applies.
    pub fn ln_polynomial_shifted_coefficient(&self, k: usize, x: f64) -> Result<f64> {
        self.ln_shifted(k, x, false)
    }

    fn ln_shifted(&self, k: usize, x: f64, truncated: bool) -> Result<f64> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Config(format!(
                "expansion point must lie in [0,1), got {x}"
            )));
        }
        if k > self.order() {
            return Err(Error::Accuracy {
                what: "series derivative",
                detail: format!("order {k} exceeds truncation {}", self.order()),
            });
        }
        if x == 0.0 {
            let c = self.coeffs[k];
            return if c > 0.0 {
                Ok(c.ln())
            } else {
                Err(Error::Accuracy {
                    what: "series derivative",
                    detail: format!("coefficient {k} is not positive"),
                })
            };
        }
        let ln_x = x.ln();
        let mut ln_binom = 0.0; // ln C(j, k) for j = k
        let mut logs = Vec::with_capacity(self.coeffs.len() - k);
        for j in k..self.coeffs.len() {
            if j > k {
                ln_binom += (j as f64).ln() - ((j - k) as f64).ln();
            }
            let c = self.coeffs[j];
            if c < 0.0 {
                return Err(Error::Config(
                    "log-domain derivative needs nonnegative coefficients".into(),
                ));
            }
            logs.push(if c > 0.0 {
                ln_binom + (j - k) as f64 * ln_x + c.ln()
            } else {
                f64::NEG_INFINITY
            });
        }
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::NonFinite("series derivative"));
        }
        let scaled: f64 = logs.iter().map(|&l| (l - peak).exp()).sum();
        let last = (logs[logs.len() - 1] - peak).exp();
        if truncated && logs.len() > 1 && last > SERIES_TOLERANCE * scaled {
            return Err(Error::Accuracy {
                what: "series derivative",
                detail: format!(
                    "last term carries {:.3e} of the sum at order {k}, x = {x}; raise the truncation order",
                    last / scaled
                ),
            });
        }
        Ok(peak + scaled.ln())
    }

    /// `f^{(k)}(x) / k!`, see [`Self::ln_shifted_coefficient`].
    pub fn shifted_coefficient(&self, k: usize, x: f64) -> Result<f64> {
        self.ln_shifted_coefficient(k, x).map(f64::exp)
    }
}
