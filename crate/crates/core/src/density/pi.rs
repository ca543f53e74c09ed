//! The Poincaré function `Pi`, the entire solution of `P(Pi(z)) = Pi(2z)`
//! with `Pi(0) = 1`, `Pi'(0) = 1`. `Pi(it)` is the characteristic function of
//! the rescaled disordered density.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::PowerSeries;

/// Depth of the inner-argument recursion used by [`eval_pi`].
pub const PI_ITERATIONS: usize = 60;

/// Taylor coefficients of `Pi` and the moments `n! c_n` they encode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiSeries {
    pub series: PowerSeries,
    pub moments: Vec<f64>,
}

/// Solves `P(Pi(z)) = Pi(2z)` order by order.
///
/// Writing `Pi = 1 + u`, `P(1 + u) = 1 + 2u + (5/4)u^2 + (1/4)u^3`, so the
/// coefficient of `z^n` gives `(2^n - 2) c_n = (5/4)[u^2]_n + (1/4)[u^3]_n`,
/// where the right side only involves `c_1 .. c_{n-1}`.
pub fn pi_taylor(n_max: usize) -> Result<PiSeries> {
    if n_max < 1 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    if n_max > 64 {
        return Err(Error::Capacity(format!(
            "Pi series order {n_max} exceeds 64"
        )));
    }
    // u[k] = c_k for k >= 1, u[0] = 0
    let mut u = vec![0.0f64; n_max + 1];
    u[1] = 1.0;
    for n in 2..=n_max {
        let mut sq = 0.0;
        for i in 1..n {
            sq += u[i] * u[n - i];
        }
        let mut cube = 0.0;
        for i in 1..n {
            for j in 1..(n - i) {
                cube += u[i] * u[j] * u[n - i - j];
            }
        }
        u[n] = (1.25 * sq + 0.25 * cube) / (2f64.powi(n as i32) - 2.0);
    }
    let mut coeffs = u;
    coeffs[0] = 1.0;
    let mut factorial = 1.0;
    let mut moments = Vec::with_capacity(n_max + 1);
    for (n, &c) in coeffs.iter().enumerate() {
        if n > 0 {
            factorial *= n as f64;
        }
        moments.push(factorial * c);
    }
    Ok(PiSeries {
        series: PowerSeries::from_coeffs(coeffs),
        moments,
    })
}

/// `Pi(z)` from `Pi_n(z) = Pi_{n-1}(z + 5z^2/2^{n+3} + z^3/2^{2n+3})`,
/// `Pi_0(z) = 1 + z`, applied from the innermost level `n = n_iter` outward.
pub fn eval_pi(z: Complex64, n_iter: usize) -> Result<Complex64> {
    let mut w = z;
    for n in (1..=n_iter).rev() {
        let lin = 5.0 * 2f64.powi(-(n as i32 + 3));
        let cub = 2f64.powi(-(2 * n as i32 + 3));
        w += w * w * (lin + cub * w);
    }
    let value = 1.0 + w;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("Pi"))
    }
}

/// Characteristic function `chi(t) = Pi(it)` of the rescaled density.
pub fn char_function(t: f64) -> Complex64 {
    // Pi is bounded by 1 on the imaginary axis, so this cannot overflow.
    eval_pi(Complex64::new(0.0, t), PI_ITERATIONS).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// `2 Pi^2 + Pi^3`, the combination that appears in every correction integral.
#[inline]
pub fn quad_cubic(pi: Complex64) -> Complex64 {
    pi * pi * (2.0 + pi)
}
