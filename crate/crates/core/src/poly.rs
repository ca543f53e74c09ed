//! The cubic merge polynomial `P_r(z) = a1 z + a2 z^2 + a3 z^3`, its forward
//! iterates, and the explicit inverse branch through the repelling fixed
//! point `z = 1` (balanced case `r = 1/2` only).
//!
//! The coefficients are the probabilities that a surviving cell receives
//! nothing, one donor, or both donors during a compression step, so the
//! `N`-fold composition is the generating function of cell weights.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Default escape radius for forward iteration of the balanced polynomial.
pub const ESCAPE_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergePolynomial {
    r: f64,
    coeffs: [f64; 3],
}

impl MergePolynomial {
    /// Polynomial for a donor that moves right with probability `r`.
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!(
                "merge probability r must lie in (0,1), got {r}"
            )));
        }
        let side = r * (1.0 - r);
        let middle = r * r + (1.0 - r) * (1.0 - r);
        Ok(Self {
            r,
            coeffs: [side, middle, side],
        })
    }

    /// `P(z) = (z + 2z^2 + z^3) / 4`.
    pub fn balanced() -> Self {
        Self {
            r: 0.5,
            coeffs: [0.25, 0.5, 0.25],
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `(a1, a2, a3)`.
    pub fn coefficients(&self) -> [f64; 3] {
        self.coeffs
    }

    pub fn is_balanced(&self) -> bool {
        self.r == 0.5
    }

    /// Multiplier at the attracting fixed point 0.
    pub fn multiplier_at_zero(&self) -> f64 {
        self.coeffs[0]
    }

    /// Multiplier at the repelling fixed point 1 (equal to 2 for every r).
    pub fn multiplier_at_one(&self) -> f64 {
        let [a1, a2, a3] = self.coeffs;
        a1 + 2.0 * a2 + 3.0 * a3
    }

    /// Radius beyond which `|P(z)| > |z|`, never smaller than [`ESCAPE_RADIUS`].
    pub fn escape_radius(&self) -> f64 {
        let [a1, a2, a3] = self.coeffs;
        let bound = (a2 + (a2 * a2 + 4.0 * a3 * (1.0 + a1)).sqrt()) / (2.0 * a3);
        bound.max(ESCAPE_RADIUS)
    }

    #[inline]
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let [a1, a2, a3] = self.coeffs;
        z * (a1 + z * (a2 + z * a3))
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let w = self.eval_unchecked(z);
        if w.is_finite() {
            Ok(w)
        } else {
            Err(Error::NonFinite("merge polynomial"))
        }
    }

    #[inline]
    pub fn eval_real(&self, x: f64) -> f64 {
        let [a1, a2, a3] = self.coeffs;
        x * (a1 + x * (a2 + x * a3))
    }

    /// `n`-fold composition. Fails with the index of the first iterate whose
    /// modulus exceeds the escape radius.
    pub fn iterate(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let radius = self.escape_radius();
        let mut w = z;
        for step in 1..=n {
            w = self.eval_unchecked(w);
            let modulus = w.norm();
            if !modulus.is_finite() || modulus > radius {
                return Err(Error::Escaped { step, modulus });
            }
        }
        Ok(w)
    }

    /// Taylor coefficients of the `n`-fold composition, truncated at `degree`.
    /// Index `i` holds the weight-`i` density after `n` disordered steps.
    pub fn iterate_coefficients(&self, n: usize, degree: usize) -> Vec<f64> {
        let [a1, a2, a3] = self.coeffs;
        let mut q = vec![0.0; degree + 1];
        if degree >= 1 {
            q[1] = 1.0;
        }
        for _ in 0..n {
            let q2 = truncated_product(&q, &q, degree);
            let q3 = truncated_product(&q2, &q, degree);
            for i in 0..=degree {
                q[i] = a1 * q[i] + a2 * q2[i] + a3 * q3[i];
            }
        }
        q
    }
}

impl Default for MergePolynomial {
    fn default() -> Self {
        Self::balanced()
    }
}

pub(crate) fn truncated_product(a: &[f64], b: &[f64], degree: usize) -> Vec<f64> {
    let mut out = vec![0.0; degree + 1];
    for (i, &x) in a.iter().enumerate().take(degree + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(degree + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn on_slit(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

/// `T(u)` and `T(u) - 1` for the cube-root factor of the inverse branch.
///
/// `T = cbrt(A1 + sqrt(A1 - 1) sqrt(A1 + 1))` with `A1 = 54u + 1`. The split
/// square root keeps the branch continuous on the slit plane, and `T - 1` is
/// formed without cancellation so small arguments stay accurate.
#[inline]
pub(crate) fn cube_root_factor(u: Complex64) -> (Complex64, Complex64) {
    let shifted = 54.0 * u;
    let root = shifted.sqrt() * (shifted + 2.0).sqrt();
    let excess = shifted + root; // A2 - 1
    let t = (excess + 1.0).cbrt();
    let t_minus_one = excess / (t * t + t + 1.0);
    (t, t_minus_one)
}

/// Branch of `P^{-1}` (balanced `P`) with `P^{-1}(1) = 1`, analytic on the
/// plane slit along `(-inf, 0]`.
pub fn inverse_branch(z: Complex64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::NonFinite("inverse branch"));
    }
    if on_slit(z) {
        if z == Complex64::new(0.0, 0.0) {
            return Ok(z);
        }
        return Err(domain("inverse branch", z));
    }
    let (t, tm1) = cube_root_factor(z);
    // (T + 1/T - 2) / 3 == (T - 1)^2 / (3T)
    Ok(tm1 * tm1 / (3.0 * t))
}

/// `n`-fold application of [`inverse_branch`].
pub fn inverse_iterates(z: Complex64, n: usize) -> Result<Complex64> {
    let mut w = z;
    for _ in 0..n {
        w = inverse_branch(w)?;
    }
    Ok(w)
}
