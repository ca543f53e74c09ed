//! Auxiliary functions for the correction integrals:
//! `H(z) = sum_{n>=2} z^n / (n! (2^{n-1} - 1))` (entire) and the lacunary
//! series `G(z) = sum_{j>=0} e^{2^j z} / 2^j` (left half-plane).

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Terms of `G` summed on the imaginary axis.
pub const G_BOUNDARY_TERMS: usize = 60;

/// `e^w - 1 - w` without cancellation for small `|w|`.
pub(crate) fn exp_remainder(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = w * w * 0.5;
        let mut sum = term;
        let mut n = 2.0;
        while term.norm() > 1e-18 * sum.norm() {
            n += 1.0;
            term *= w / n;
            sum += term;
        }
        sum
    } else {
        w.exp() - 1.0 - w
    }
}

fn h_series(z: Complex64) -> Complex64 {
    let mut power = z; // z^n / n!
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 1u32;
    loop {
        n += 1;
        power *= z / n as f64;
        let term = power / (2f64.powi(n as i32 - 1) - 1.0);
        let next = sum + term;
        if next == sum || n > 80 {
            return next;
        }
        sum = next;
    }
}

/// `H(z)`. The power series is summed directly for `|z| <= 1`; larger
/// arguments are halved through `H(2w) = 2H(w) + 2(e^w - 1 - w)`, which keeps
/// the series out of its cancellation regime.
pub fn eval_h(z: Complex64) -> Complex64 {
    if z.norm() <= 1.0 {
        return h_series(z);
    }
    let half = z * 0.5;
    2.0 * eval_h(half) + 2.0 * exp_remainder(half)
}

/// `G(z)` for `Re z <= 0`.
pub fn eval_g(z: Complex64) -> Result<Complex64> {
    if z.re > 0.0 || !z.is_finite() {
        return Err(domain("G (needs Re z <= 0)", z));
    }
    if z.re == 0.0 {
        return Ok(g_partial(z, G_BOUNDARY_TERMS));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 1.0;
    let mut arg = z;
    loop {
        let term = arg.exp() * scale;
        sum += term;
        if term.norm() < 1e-16 {
            return Ok(sum);
        }
        scale *= 0.5;
        arg *= 2.0;
    }
}

/// First `terms` terms of the `G` series.
pub fn g_partial(z: Complex64, terms: usize) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 1.0;
    let mut arg = z;
    for _ in 0..terms {
        sum += arg.exp() * scale;
        scale *= 0.5;
        arg *= 2.0;
    }
    sum
}
