//! Predicted weight densities and ratios for the simulated processes.

use std::sync::OnceLock;

use super::Mode;
use crate::error::{Error, Result};
use crate::poly::{truncated_product, MergePolynomial};
use crate::schroeder::{inhom_ratio_with, phi_taylor};
use crate::series::PowerSeries;

/// Largest series degree used for thinning sums.
const MAX_DEGREE: usize = 4096;

/// Order of the `phi` series behind the disordered limit ratios.
pub const LIMIT_SERIES_ORDER: usize = 1200;

/// `rho_i` after `n` ordered steps of a homogeneous chain:
/// `i / 4^n` up to `2^n`, then `(2^{n+1} - i) / 4^n`.
pub fn ordered_density(n: usize, i: usize) -> f64 {
    if n >= 63 {
        return 0.0;
    }
    let half = 1u64 << n;
    let i = i as u64;
    let scale = 4f64.powi(-(n as i32));
    if i == 0 || i >= 2 * half {
        0.0
    } else if i <= half {
        i as f64 * scale
    } else {
        (2 * half - i) as f64 * scale
    }
}

/// Coefficients `0..=degree` of the `n`-fold composition of `P_r` for
/// `n = 0, 1, ..., steps`.
pub fn composed_coefficients(r: f64, steps: usize, degree: usize) -> Result<Vec<Vec<f64>>> {
    let [a1, a2, a3] = MergePolynomial::new(r)?.coefficients();
    let mut q = vec![0.0; degree + 1];
    if degree >= 1 {
        q[1] = 1.0;
    }
    let mut all = vec![q.clone()];
    for _ in 0..steps {
        let q2 = truncated_product(&q, &q, degree);
        let q3 = truncated_product(&q2, &q, degree);
        for i in 0..=degree {
            q[i] = a1 * q[i] + a2 * q2[i] + a3 * q3[i];
        }
        all.push(q.clone());
    }
    Ok(all)
}

/// Densities `rho_0 .. rho_upto` after `steps` steps from an i.i.d. chain with
/// non-empty density `p`: the homogeneous densities `f_j` thinned binomially,
/// `rho_i = sum_j C(j,i) f_j (1-p)^{j-i} p^i`. Entries whose thinning sum does
/// not converge within the retained degree are `None`.
pub fn finite_densities(
    mode: Mode,
    steps: usize,
    p: f64,
    r: f64,
    upto: usize,
) -> Result<Vec<Option<f64>>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("p must lie in (0,1], got {p}")));
    }
    let max_weight = match mode {
        Mode::Ordered => {
            if steps >= 40 {
                usize::MAX
            } else {
                (1usize << (steps + 1)) - 1
            }
        }
        Mode::Disordered => 3usize.checked_pow(steps as u32).unwrap_or(usize::MAX),
    };
    let wanted = if p == 1.0 {
        upto
    } else {
        (2.0 * upto as f64 / p) as usize + 256
    };
    let degree = wanted
        .min(max_weight)
        .min(MAX_DEGREE)
        .max(upto.min(MAX_DEGREE));
    let f: Vec<f64> = match mode {
        Mode::Ordered => (0..=degree).map(|i| ordered_density(steps, i)).collect(),
        Mode::Disordered => composed_coefficients(r, steps, degree)?
            .pop()
            .unwrap_or_default(),
    };
    if p == 1.0 {
        return Ok((0..=upto)
            .map(|i| Some(f.get(i).copied().unwrap_or(0.0)))
            .collect());
    }
    let complete = degree >= max_weight;
    let series = PowerSeries::from_coeffs(f);
    Ok((0..=upto)
        .map(|i| {
            if complete && i > max_weight {
                return Some(0.0);
            }
            if i > series.order() {
                return None;
            }
            let ln = if complete {
                series.ln_polynomial_shifted_coefficient(i, 1.0 - p)
            } else {
                series.ln_shifted_coefficient(i, 1.0 - p)
            };
            ln.ok().map(|ln| (ln + i as f64 * p.ln()).exp())
        })
        .collect())
}

/// Ratios `rho_i / rho_1` from [`finite_densities`].
pub fn finite_ratios(
    mode: Mode,
    steps: usize,
    p: f64,
    r: f64,
    upto: usize,
) -> Result<Vec<Option<f64>>> {
    let d = finite_densities(mode, steps, p, r, upto.max(1))?;
    let one = d[1];
    Ok(d.iter()
        .take(upto + 1)
        .map(|&x| match (x, one) {
            (Some(x), Some(one)) if one > 0.0 => Some(x / one),
            _ => None,
        })
        .collect())
}

fn limit_series() -> Result<&'static PowerSeries> {
    static SERIES: OnceLock<PowerSeries> = OnceLock::new();
    if let Some(s) = SERIES.get() {
        return Ok(s);
    }
    let s = phi_taylor(LIMIT_SERIES_ORDER)?;
    Ok(SERIES.get_or_init(|| s))
}

/// Limits of `rho_i / rho_1` as the number of steps grows, for the balanced
/// process started with non-empty density `p`: `(i+1-p)/(2-p)` for ordered
/// compression, `Phi^{(i)}(1-p) p^{i-1} / (Phi'(1-p) i!)` for disordered.
pub fn limit_ratios(mode: Mode, p: f64, upto: usize) -> Result<Vec<Option<f64>>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("p must lie in (0,1], got {p}")));
    }
    match mode {
        Mode::Ordered => Ok((0..=upto)
            .map(|i| Some((i as f64 + 1.0 - p) / (2.0 - p)))
            .collect()),
        Mode::Disordered => {
            let series = limit_series()?;
            Ok((0..=upto)
                .map(|i| {
                    if p == 1.0 {
                        let c1 = series.coeff(1);
                        (i <= series.order()).then(|| series.coeff(i) / c1)
                    } else {
                        inhom_ratio_with(series, i, p).ok()
                    }
                })
                .collect())
        }
    }
}
