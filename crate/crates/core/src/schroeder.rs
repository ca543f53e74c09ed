//! Linearizers of the balanced merge polynomial.
//!
//! * `Phi` linearizes `P` at the attracting fixed point 0: `Phi(P(z)) = Phi(z)/4`.
//! * `Psi` linearizes `P` at the repelling fixed point 1: `Psi(P(z)) = 2 Psi(z)`.
//! * `Theta = Phi * Psi^2` is `P`-invariant and almost constant on `(0, 1)`.
//!
//! The Taylor coefficients `phi_i` of `Phi` are the limiting ratios
//! `rho_i / rho_1` of disordered compression.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::poly::{cube_root_factor, inverse_branch, MergePolynomial};
use crate::series::PowerSeries;

/// Iteration count for `Phi`, `Psi` and `Phi^{-1}`.
pub const DEFAULT_ITERATIONS: usize = 48;

/// `|Phi_n|` beyond which the forward recursion is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Width at which the golden-section refinement of Theta's extrema stops.
pub const EXTREMUM_WIDTH: f64 = 1e-12;

const LN4: f64 = 2.0 * std::f64::consts::LN_2;

/// Taylor coefficients `phi_0 = 0, phi_1 = 1, ..., phi_{i_max}` of `Phi`.
///
/// The binomial-times-power factors are accumulated as logarithms so the
/// recurrence stays finite for orders in the thousands.
pub fn phi_taylor(i_max: usize) -> Result<PowerSeries> {
    if i_max < 1 {
        return Err(Error::Config("i_max must be at least 1".into()));
    }
    let mut ln_fact = vec![0.0f64; 2 * i_max + 2];
    for n in 1..ln_fact.len() {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    let ln_binom = |n: usize, k: usize| ln_fact[n] - ln_fact[k] - ln_fact[n - k];

    let mut phi = vec![0.0f64; i_max + 1];
    phi[1] = 1.0;
    for i in 1..i_max {
        let mut acc = 0.0;
        for k in 0..i {
            let m = i - k; // order of the coefficient being reused
            let upper = 2 * m;
            if k + 1 > upper {
                continue;
            }
            let ln_factor = ln_binom(upper, k + 1) - m as f64 * LN4;
            acc += ln_factor.exp() * phi[m];
        }
        let norm = 4.0 / (1.0 - 4f64.powi(-(i as i32)));
        phi[i + 1] = norm * acc;
        if !phi[i + 1].is_finite() {
            return Err(Error::NonFinite("phi recurrence"));
        }
    }
    Ok(PowerSeries::from_coeffs(phi))
}

/// `Phi(z)` by the forward recursion `Phi_{n+1} = Phi_n (1 + Phi_n / 4^n)^2`.
pub fn eval_phi(z: Complex64, n_iter: usize) -> Result<Complex64> {
    let mut value = z;
    let mut scale = 1.0; // 4^-n
    for _ in 0..n_iter {
        let w = value * scale;
        value = value * (1.0 + w) * (1.0 + w);
        let modulus = value.norm();
        if !modulus.is_finite() || modulus > DIVERGENCE_LIMIT {
            return Err(domain("Phi (outside the filled Julia set)", z));
        }
        scale *= 0.25;
    }
    Ok(value)
}

/// `Psi(z)` on the slit plane, via backward orbits under the inverse branch.
pub fn eval_psi(z: Complex64, n_iter: usize) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(domain("Psi", z));
    }
    let mut w = z;
    let mut value = z - 1.0;
    for _ in 0..n_iter {
        w = inverse_branch(w)?;
        value *= 8.0 / (4.0 + w * (3.0 + w));
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("Psi"))
    }
}

/// `Theta(z) = Phi(z) Psi(z)^2`.
pub fn eval_theta(z: Complex64) -> Result<Complex64> {
    let phi = eval_phi(z, DEFAULT_ITERATIONS)?;
    let psi = eval_psi(z, DEFAULT_ITERATIONS)?;
    Ok(phi * psi * psi)
}

fn theta_real(x: f64) -> Result<f64> {
    eval_theta(Complex64::new(x, 0.0)).map(|v| v.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaStats {
    pub a: f64,
    pub grid_points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta0: f64,
    pub argmin: f64,
    pub argmax: f64,
}

/// Extrema of Theta over the fundamental interval `[P(a), a]`.
///
/// A uniform grid locates the extremal cells, then golden-section search
/// refines each one down to [`EXTREMUM_WIDTH`].
pub fn theta_extrema(a: f64, grid_points: usize) -> Result<ThetaStats> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!(
            "anchor a must lie in (0,1), got {a}"
        )));
    }
    if grid_points < 100 {
        return Err(Error::Config("theta grid needs at least 100 points".into()));
    }
    let lo = MergePolynomial::balanced().eval_real(a);
    let step = (a - lo) / grid_points as f64;
    let xs: Vec<f64> = (0..=grid_points).map(|k| lo + step * k as f64).collect();
    let values = xs
        .iter()
        .map(|&x| theta_real(x))
        .collect::<Result<Vec<_>>>()?;

    let (mut kmin, mut kmax) = (0, 0);
    for (k, &v) in values.iter().enumerate() {
        if v < values[kmin] {
            kmin = k;
        }
        if v > values[kmax] {
            kmax = k;
        }
    }
    let bracket = |k: usize| (xs[k.saturating_sub(1)], xs[(k + 1).min(grid_points)]);
    let (argmin, theta_min) = golden_section(bracket(kmin), theta_real)?;
    let (argmax, neg_max) = golden_section(bracket(kmax), |x| theta_real(x).map(|v| -v))?;
    let theta_min = theta_min.min(values[kmin]);
    let theta_max = (-neg_max).max(values[kmax]);
    Ok(ThetaStats {
        a,
        grid_points,
        theta_min,
        theta_max,
        theta0: 0.5 * (theta_min + theta_max),
        argmin,
        argmax,
    })
}

fn golden_section<F>((mut lo, mut hi): (f64, f64), f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > EXTREMUM_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// `(i - 1/4) theta0`, the linear approximation of `phi_i`.
pub fn phi_linear_approx(i: usize, theta0: f64) -> f64 {
    (i as f64 - 0.25) * theta0
}

/// Limiting ratio `rho_i / rho_1` for disordered compression of a chain whose
/// cells start non-empty with probability `p`:
/// `Phi^{(i)}(1-p) p^{i-1} / (Phi'(1-p) i!)`.
pub fn inhom_ratio(i: usize, p: f64, i_max: usize) -> Result<f64> {
    let series = phi_taylor(i_max)?;
    inhom_ratio_with(&series, i, p)
}

/// [`inhom_ratio`] against a prebuilt `phi` series.
pub fn inhom_ratio_with(series: &PowerSeries, i: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!(
            "density p must lie in (0,1], got {p}"
        )));
    }
    if i == 1 {
        return Ok(1.0);
    }
    let x = 1.0 - p;
    let ln_num = series.ln_shifted_coefficient(i, x)?;
    let ln_den = series.ln_shifted_coefficient(1, x)?;
    Ok((ln_num - ln_den + (i as f64 - 1.0) * p.ln()).exp())
}

/// `Phi'(x)` for `0 <= x < 1` from the Taylor series.
pub fn phi_derivative(series: &PowerSeries, x: f64) -> Result<f64> {
    series.shifted_coefficient(1, x)
}

/// `Phi^{-1}(z)` by the recursion that peels one inverse branch per level,
/// `w <- (3 / (T(4^-n w) + 1/T(4^-n w) + 1))^2 w` for `n = N, ..., 1`.
pub fn eval_phi_inverse(z: Complex64, n_iter: usize) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::NonFinite("Phi inverse"));
    }
    let mut w = z;
    for n in (1..=n_iter).rev() {
        let u = w * 4f64.powi(-(n as i32));
        if u.im == 0.0 && u.re < 0.0 {
            return Err(domain("Phi inverse", z));
        }
        let (t, tm1) = cube_root_factor(u);
        let factor = 3.0 / (3.0 + tm1 * tm1 / t);
        w *= factor * factor;
        if !w.is_finite() {
            return Err(Error::NonFinite("Phi inverse"));
        }
    }
    Ok(w)
}

/// `Theta(Phi^{-1}(4^x))` evaluated directly (no period reduction).
pub fn eval_k_unreduced(x: f64) -> Result<f64> {
    let z = eval_phi_inverse(Complex64::new(4f64.powf(x), 0.0), DEFAULT_ITERATIONS)?;
    Ok(eval_theta(z)?.re)
}

/// The 1-periodic function `Theta(Phi^{-1}(4^x))`, evaluated at the
/// representative `x - ceil(x) - 3` so that `4^x` stays well inside the
/// image of `(0, 1)` under `Phi`.
pub fn eval_k_periodic(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("K"));
    }
    eval_k_unreduced(x - x.ceil() - 3.0)
}

/// Sup norm and mean of `K` over one period from `samples` midpoints.
pub fn k_norms(samples: usize) -> Result<(f64, f64)> {
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    for k in 0..samples {
        let v = eval_k_periodic((k as f64 + 0.5) / samples as f64)?;
        sup = sup.max(v.abs());
        sum += v.abs();
    }
    Ok((sup, sum / samples as f64))
}
