//! Rescaled weight densities and the correction terms built from the
//! Poincaré function.
//!
//! All Fourier-type integrals use the trapezoid rule on a uniform grid in the
//! frequency variable `t`. Every integrand is conjugate-symmetric in `t`, so
//! only `t >= 0` is tabulated and the full-line integral is twice the real
//! part of the half-line one.

mod entire;
mod pi;

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schroeder::{eval_psi, DEFAULT_ITERATIONS};
pub use crate::sim::Mode;

pub use entire::{eval_g, eval_h, g_partial, G_BOUNDARY_TERMS};
pub use pi::{char_function, eval_pi, pi_taylor, quad_cubic, PiSeries, PI_ITERATIONS};

/// Uniform frequency grid `t = 0, step, ..., radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid {
    pub radius: f64,
    pub step: f64,
}

impl FourierGrid {
    pub fn new(radius: f64, step: f64) -> Result<Self> {
        if !(radius > 0.0 && step > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!(
                "grid radius and step must be positive, got R = {radius}, h = {step}"
            )));
        }
        if step > 0.05 {
            return Err(Error::Config(format!("grid step {step} exceeds 0.05")));
        }
        let n = radius / step;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Config(format!(
                "radius {radius} is not a whole number of steps {step}"
            )));
        }
        Ok(Self { radius, step })
    }

    /// Grid for density inversion: the `t^-2` tail leaves about `1e-4`.
    pub fn density_default() -> Self {
        Self {
            radius: 1e4,
            step: 0.01,
        }
    }

    /// Grid for the correction, average and residual integrals, whose
    /// integrands decay at least like `t^-3`.
    pub fn correction_default() -> Self {
        Self {
            radius: 500.0,
            step: 0.005,
        }
    }

    pub fn intervals(&self) -> usize {
        (self.radius / self.step).round() as usize
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Largest resolvable `x` for an `e^{-itx}` factor.
    pub fn max_frequency(&self) -> f64 {
        PI / (4.0 * self.step)
    }

    fn check_frequency(&self, x: f64) -> Result<()> {
        let limit = self.max_frequency();
        if x.abs() > limit {
            return Err(Error::Aliasing {
                x,
                step: self.step,
                limit: PI / (4.0 * x.abs()),
            });
        }
        Ok(())
    }
}

/// Trapezoid weights on `[0, R]`: `h/2` at both ends, `h` inside.
#[inline]
fn trapezoid_weight(k: usize, n: usize, h: f64) -> f64 {
    if k == 0 || k == n {
        0.5 * h
    } else {
        h
    }
}

/// `Pi(it)` tabulated on a [`FourierGrid`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: FourierGrid,
    pi: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: FourierGrid) -> Result<Self> {
        let n = grid.intervals();
        let pi = (0..=n)
            .into_par_iter()
            .map(|k| eval_pi(Complex64::new(0.0, grid.t(k)), PI_ITERATIONS))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, pi })
    }

    pub fn grid(&self) -> FourierGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.pi
    }

    /// `a / R` with `a = sup |Pi(it)| t^2` over the last decade of the grid.
    pub fn tail_bound(&self) -> f64 {
        let n = self.grid.intervals();
        let a = (n / 10..=n)
            .map(|k| {
                let t = self.grid.t(k);
                self.pi[k].norm() * t * t
            })
            .fold(0.0, f64::max);
        a / self.grid.radius
    }

    /// `(1/pi) int_0^R Re(e^{-itx} f(t)) dt` for tabulated `f`, trapezoid rule.
    /// The phase factor is advanced by rotation and re-anchored periodically.
    fn inverse_transform<F>(&self, x: f64, f: F) -> f64
    where
        F: Fn(Complex64) -> Complex64,
    {
        let n = self.grid.intervals();
        let h = self.grid.step;
        let rot = Complex64::from_polar(1.0, -h * x);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (k, &pi) in self.pi.iter().enumerate() {
            if k % 4096 == 0 {
                phase = Complex64::from_polar(1.0, -self.grid.t(k) * x);
            }
            acc += trapezoid_weight(k, n, h) * (phase * f(pi)).re;
            phase *= rot;
        }
        acc / PI
    }

    /// Disordered rescaled density by Fourier inversion of `Pi(it)`.
    pub fn rho(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Config(format!(
                "density argument must be >= 0, got {x}"
            )));
        }
        self.grid.check_frequency(x)?;
        Ok(self.inverse_transform(x, |pi| pi))
    }

    /// `R(x) = (1/4pi) int e^{-2itx} (2Pi^2 + Pi^3) dt`, the part of `rho(x)`
    /// not explained by `rho(2x)/2`.
    pub fn remainder(&self, x: f64) -> Result<f64> {
        self.grid.check_frequency(2.0 * x)?;
        Ok(0.5 * self.inverse_transform(2.0 * x, quad_cubic))
    }

    /// Density through the lacunary series:
    /// `rho(x) = (1/4pi) int G(-2itx) (2Pi^2 + Pi^3) dt`.
    ///
    /// `G` is summed over the terms whose frequency `2^{j+1} x` the grid
    /// resolves. The omitted terms equal `2^{1-j} R(2^j x)` at arguments beyond
    /// `pi / (8h)`, where the density has long vanished.
    pub fn rho_via_g(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Config(format!(
                "G-series density needs x > 0, got {x}"
            )));
        }
        let limit = self.grid.max_frequency();
        let terms = (0..64)
            .take_while(|&j| 2f64.powi(j + 1) * x <= limit)
            .count();
        if terms == 0 {
            self.grid.check_frequency(2.0 * x)?;
        }
        let n = self.grid.intervals();
        let h = self.grid.step;
        let rotors: Vec<Complex64> = (0..terms)
            .map(|j| Complex64::from_polar(1.0, -h * 2f64.powi(j as i32 + 1) * x))
            .collect();
        let mut phases = vec![Complex64::new(1.0, 0.0); terms];
        let mut acc = 0.0;
        for (k, &pi) in self.pi.iter().enumerate() {
            if k % 4096 == 0 {
                let t = self.grid.t(k);
                for (j, ph) in phases.iter_mut().enumerate() {
                    *ph = Complex64::from_polar(1.0, -t * 2f64.powi(j as i32 + 1) * x);
                }
            }
            let mut g = Complex64::new(0.0, 0.0);
            let mut scale = 1.0;
            for (ph, rot) in phases.iter_mut().zip(&rotors) {
                g += *ph * scale;
                scale *= 0.5;
                *ph *= rot;
            }
            acc += trapezoid_weight(k, n, h) * (g * quad_cubic(pi)).re;
        }
        Ok(acc / (2.0 * PI))
    }

    /// Full-line trapezoid sum of `t (2Pi(it)^2 + Pi(it)^3)` divided by `2 pi i`.
    /// `Pi(-it)` is evaluated afresh rather than mirrored, so the symmetry of
    /// the integrand is checked rather than assumed: the imaginary part of the
    /// result is `-(1/2pi)` times the integral of the odd function
    /// `t Re(2Pi^2 + Pi^3)` and vanishes only if that symmetry holds.
    pub fn b_integral(&self) -> Result<Complex64> {
        let n = self.grid.intervals();
        let h = self.grid.step;
        let mirrored = (1..=n)
            .into_par_iter()
            .map(|k| eval_pi(Complex64::new(0.0, -self.grid.t(k)), PI_ITERATIONS))
            .collect::<Result<Vec<_>>>()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            let t = self.grid.t(k);
            let w = trapezoid_weight(k, n, h);
            acc += w * t * quad_cubic(self.pi[k]);
            acc += w * (-t) * quad_cubic(mirrored[k - 1]);
        }
        Ok(acc / Complex64::new(0.0, 2.0 * PI))
    }
}

/// Ordered rescaled density: the tent `x` on `[0,1]`, `2-x` on `[1,2]`.
pub fn rho_ordered(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        x
    } else if x > 1.0 && x <= 2.0 {
        2.0 - x
    } else {
        0.0
    }
}

/// Disordered density at a single point (tabulates `Pi` on `grid`).
pub fn rho_disordered(x: f64, grid: FourierGrid) -> Result<f64> {
    grid.check_frequency(x)?;
    Spectrum::new(grid)?.rho(x)
}

/// Disordered density via the `G` series at a single point.
pub fn rho_via_g(x: f64, grid: FourierGrid) -> Result<f64> {
    Spectrum::new(grid)?.rho_via_g(x)
}

/// Density of a chain whose cells start non-empty with probability `p`:
/// `rho_p(x) = rho(x/p) / p`.
pub fn rho_inhomogeneous(x: f64, p: f64, spectrum: &Spectrum, mode: Mode) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!(
            "density p must lie in (0,1], got {p}"
        )));
    }
    if x < 0.0 {
        return Err(Error::Config(format!(
            "density argument must be >= 0, got {x}"
        )));
    }
    let base = match mode {
        Mode::Ordered => rho_ordered(x / p),
        Mode::Disordered => spectrum.rho(x / p)?,
    };
    Ok(base / p)
}

/// Sampled density curves on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub ordered: Vec<f64>,
    pub disordered: Vec<f64>,
}

impl DensityCurve {
    /// Evaluates both rescaled densities (with initial density `p`) on the
    /// uniform grid `0, x_max/points, ..., x_max`.
    pub fn build(spectrum: &Spectrum, x_max: f64, points: usize, p: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config(
                "density curve needs at least 2 points".into(),
            ));
        }
        let xs: Vec<f64> = (0..=points)
            .map(|k| x_max * k as f64 / points as f64)
            .collect();
        let disordered = xs
            .par_iter()
            .map(|&x| rho_inhomogeneous(x, p, spectrum, Mode::Disordered))
            .collect::<Result<Vec<_>>>()?;
        let ordered = xs
            .iter()
            .map(|&x| rho_inhomogeneous(x, p, spectrum, Mode::Ordered))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            xs,
            ordered,
            disordered,
        })
    }

    /// Trapezoid moment `int x^order rho(x) dx` of a column.
    pub fn moment(&self, values: &[f64], order: i32) -> f64 {
        trapezoid_samples(&self.xs, |k| self.xs[k].powi(order) * values[k])
    }
}

fn trapezoid_samples<F: Fn(usize) -> f64>(xs: &[f64], f: F) -> f64 {
    xs.windows(2)
        .enumerate()
        .map(|(k, w)| 0.5 * (w[1] - w[0]) * (f(k) + f(k + 1)))
        .sum()
}

/// Evaluator for the 1-periodic correction `sigma(x)` in
/// `rho(x) = x sigma(log2 x) + o(x)`.
pub struct SigmaEvaluator {
    spectrum: Spectrum,
}

impl SigmaEvaluator {
    pub fn new(grid: FourierGrid) -> Result<Self> {
        Ok(Self {
            spectrum: Spectrum::new(grid)?,
        })
    }

    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        Self { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `sigma(x) = 2^-x rho(2^x) + (2^-x / 4pi) int H(-i t 2^{x+1}) (2Pi^2 + Pi^3) dt`.
    pub fn sigma(&self, x: f64) -> Result<f64> {
        let scale = 2f64.powf(x);
        let rho = self.spectrum.rho(scale)?;
        let grid = self.spectrum.grid;
        let n = grid.intervals();
        let h = grid.step;
        let acc: f64 = self
            .spectrum
            .pi
            .par_iter()
            .enumerate()
            .map(|(k, &pi)| {
                let t = grid.t(k);
                let hv = eval_h(Complex64::new(0.0, -t * 2.0 * scale));
                trapezoid_weight(k, n, h) * (hv * quad_cubic(pi)).re
            })
            .sum();
        // full line = 2 Re(half line)
        Ok((rho + acc / (2.0 * PI)) / scale)
    }

    pub fn average(&self, method: AverageMethod) -> Result<f64> {
        sigma_average_with(&self.spectrum, method)
    }
}

/// `sigma(x)` at a single point.
pub fn sigma(x: f64, grid: FourierGrid) -> Result<f64> {
    SigmaEvaluator::new(grid)?.sigma(x)
}

/// The four closed forms for the period average of `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMethod {
    /// `(1/2ln2) int_0^1 Psi(z)^2 (4z + 3z^2) dz`
    PsiIntegral,
    /// `(-1/ln2) int_{-inf}^0 t (2Pi(t)^2 + Pi(t)^3) dt`
    LeftAxis,
    /// `(-1/ln2) int_0^inf t Re(2Pi(it)^2 + Pi(it)^3) dt`
    RealPart,
    /// `(-2/(pi ln2)) int_0^inf ln t · t Im(2Pi(it)^2 + Pi(it)^3) dt`
    LogImag,
}

impl AverageMethod {
    pub const ALL: [AverageMethod; 4] = [
        AverageMethod::PsiIntegral,
        AverageMethod::LeftAxis,
        AverageMethod::RealPart,
        AverageMethod::LogImag,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AverageMethod::PsiIntegral => "psi_integral",
            AverageMethod::LeftAxis => "left_axis",
            AverageMethod::RealPart => "real_part",
            AverageMethod::LogImag => "log_imag",
        }
    }
}

impl std::str::FromStr for AverageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AverageMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown averaging method '{s}'")))
    }
}

/// Agreement demanded between successive trapezoid refinements.
pub const AVERAGE_TOLERANCE: f64 = 1e-6;

/// Period average of `sigma` by the selected formula on the default
/// correction grid.
pub fn sigma_average(method: AverageMethod) -> Result<f64> {
    match method {
        AverageMethod::PsiIntegral => psi_integral_average(),
        AverageMethod::LeftAxis => left_axis_average(FourierGrid::correction_default()),
        _ => {
            let spectrum = Spectrum::new(FourierGrid::correction_default())?;
            sigma_average_with(&spectrum, method)
        }
    }
}

/// As [`sigma_average`], reusing a tabulated spectrum.
pub fn sigma_average_with(spectrum: &Spectrum, method: AverageMethod) -> Result<f64> {
    match method {
        AverageMethod::PsiIntegral => psi_integral_average(),
        AverageMethod::LeftAxis => left_axis_average(spectrum.grid),
        AverageMethod::RealPart => imaginary_axis_average(spectrum, method),
        AverageMethod::LogImag => imaginary_axis_average(spectrum, method),
    }
}

fn accuracy(what: &'static str, fine: f64, coarse: f64) -> Result<f64> {
    if (fine - coarse).abs() > AVERAGE_TOLERANCE {
        return Err(Error::Accuracy {
            what,
            detail: format!("refinements differ: {fine} vs {coarse}"),
        });
    }
    Ok(fine)
}

/// Trapezoid sum of equally spaced samples with the first Euler-Maclaurin
/// end correction, derivatives taken from one-sided three-point differences.
fn corrected_trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let interior: f64 = values[1..n].iter().sum();
    let plain = h * (interior + 0.5 * (values[0] + values[n]));
    if n < 4 {
        return plain;
    }
    let d0 = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    let d1 = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h);
    plain - h * h / 12.0 * (d1 - d0)
}

/// Corrected trapezoid values at step `h` and at step `2h` (every other sample).
fn two_resolutions(values: &[f64], h: f64) -> (f64, f64) {
    let fine = corrected_trapezoid(values, h);
    let n = values.len() - 1;
    if !n.is_multiple_of(2) {
        return (fine, fine);
    }
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    (fine, corrected_trapezoid(&coarse, 2.0 * h))
}

/// Imaginary-axis formulas, integrated on the tabulated spectrum. The `t^-3`
/// tail of the real-part integrand beyond `R` is added from the constant
/// fitted at `t = R`.
fn imaginary_axis_average(spectrum: &Spectrum, method: AverageMethod) -> Result<f64> {
    let grid = spectrum.grid;
    let n = grid.intervals();
    let values: Vec<f64> = (0..=n)
        .map(|k| {
            let t = grid.t(k);
            let q = quad_cubic(spectrum.pi[k]);
            match method {
                AverageMethod::RealPart => t * q.re,
                _ if k == 0 => 0.0,
                _ => t.ln() * t * q.im,
            }
        })
        .collect();
    let (fine, coarse) = two_resolutions(&values, grid.step);
    let (scale, tail) = match method {
        AverageMethod::RealPart => {
            let r = grid.radius;
            // integrand ~ c / t^3 beyond R
            let c = values[n] * r * r * r;
            (-1.0 / LN_2, c / (2.0 * r * r))
        }
        _ => (-2.0 / (PI * LN_2), 0.0),
    };
    accuracy(
        "sigma average (imaginary axis)",
        scale * (fine + tail),
        scale * (coarse + tail),
    )
}

/// `(-1/ln2) int_{-R}^0 t (2Pi(t)^2 + Pi(t)^3) dt` plus the tail from
/// `Pi(t) ~ a / t^2` with `a` fitted at `t = -R`.
fn left_axis_average(grid: FourierGrid) -> Result<f64> {
    let n = grid.intervals();
    let values = (0..=n)
        .into_par_iter()
        .map(|k| {
            let t = -grid.t(k);
            eval_pi(Complex64::new(t, 0.0), PI_ITERATIONS).map(|pi| t * quad_cubic(pi).re)
        })
        .collect::<Result<Vec<_>>>()?;
    let (fine, coarse) = two_resolutions(&values, grid.step);
    let r = grid.radius;
    let a = eval_pi(Complex64::new(-r, 0.0), PI_ITERATIONS)?.re * r * r;
    // int_{-inf}^{-R} t (2a^2/t^4 + a^3/t^6) dt
    let tail = -(a * a / (r * r) + a * a * a / (4.0 * r.powi(4)));
    accuracy(
        "sigma average (left axis)",
        -(fine + tail) / LN_2,
        -(coarse + tail) / LN_2,
    )
}

/// `(1/2ln2) int_0^1 Psi(z)^2 (4z + 3z^2) dz` with `z = u^2`, which turns the
/// `Psi^2 ~ 1/z` endpoint behaviour into an integrand vanishing at `u = 0`.
/// Trapezoid sums are doubled until successive values agree.
fn psi_integral_average() -> Result<f64> {
    let f = |u: f64| -> Result<f64> {
        if u == 0.0 || u == 1.0 {
            return Ok(0.0);
        }
        let z = u * u;
        let psi = eval_psi(Complex64::new(z, 0.0), DEFAULT_ITERATIONS)?.re;
        Ok(psi * psi * (4.0 * z + 3.0 * z * z) * 2.0 * u)
    };
    let mut n = 64usize;
    let mut sum_interior = {
        // interior nodes of the n-interval rule
        let mut s = 0.0;
        for k in 1..n {
            s += f(k as f64 / n as f64)?;
        }
        s
    };
    let mut previous = sum_interior / n as f64;
    while n < 1 << 20 {
        let mut added = 0.0;
        for k in 0..n {
            added += f((2 * k + 1) as f64 / (2 * n) as f64)?;
        }
        sum_interior += added;
        n *= 2;
        let current = sum_interior / n as f64;
        if (current - previous).abs() < 0.1 * AVERAGE_TOLERANCE {
            return Ok(current / (2.0 * LN_2));
        }
        previous = current;
    }
    Err(Error::Accuracy {
        what: "sigma average (Psi integral)",
        detail: "trapezoid refinement did not settle".into(),
    })
}

/// `|B|`, the modulus of the residual integral that must vanish.
pub fn check_b_zero(grid: FourierGrid) -> Result<f64> {
    Ok(Spectrum::new(grid)?.b_integral()?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::sync::OnceLock;

    fn density_spectrum() -> &'static Spectrum {
        static S: OnceLock<Spectrum> = OnceLock::new();
        S.get_or_init(|| Spectrum::new(FourierGrid::density_default()).unwrap())
    }

    fn correction_spectrum() -> &'static Spectrum {
        static S: OnceLock<Spectrum> = OnceLock::new();
        S.get_or_init(|| Spectrum::new(FourierGrid::correction_default()).unwrap())
    }

    #[test]
    fn density_mass_and_moments() {
        let s = density_spectrum();
        let c = DensityCurve::build(s, 8.0, 800, 1.0).unwrap();
        assert!((c.moment(&c.disordered, 0) - 1.0).abs() < 1e-2);
        assert!((c.moment(&c.disordered, 1) - 1.0).abs() < 1e-2);
        assert!((c.moment(&c.disordered, 2) - 1.25).abs() < 1e-2);
        assert!((c.moment(&c.disordered, 3) - 87.0 / 48.0).abs() < 1e-2);
        assert!((c.moment(&c.ordered, 0) - 1.0).abs() < 1e-6);
        assert!(s.rho(0.0).unwrap().abs() < 2e-3);
        assert!(s.tail_bound() < 1e-3);
    }

    #[test]
    fn inhomogeneous_mass() {
        let c = DensityCurve::build(density_spectrum(), 8.0, 800, 0.5).unwrap();
        assert!((c.moment(&c.disordered, 0) - 1.0).abs() < 1e-2);
        assert!((c.moment(&c.ordered, 0) - 1.0).abs() < 1e-6);
        let s = density_spectrum();
        for &x in &[0.3, 1.1, 2.5] {
            let a = rho_inhomogeneous(x, 1.0, s, Mode::Disordered).unwrap();
            assert_eq!(a, s.rho(x).unwrap());
        }
    }

    #[test]
    fn lacunary_series_matches_inversion() {
        let s = density_spectrum();
        let g = correction_spectrum();
        for k in 0..=59 {
            let x = 0.05 + 0.05 * k as f64;
            let d = (s.rho(x).unwrap() - g.rho_via_g(x).unwrap()).abs();
            assert!(d < 1e-3, "x = {x}: {d}");
        }
        assert!(g.rho_via_g(6.0).unwrap().abs() < 1e-3);
        assert!(g.rho_via_g(0.0).is_err());
    }

    #[test]
    fn remainder_splits_density() {
        // rho(x) = rho(2x)/2 + R(x)
        let s = density_spectrum();
        for &x in &[0.2, 0.7, 1.3] {
            let lhs = s.rho(x).unwrap();
            let rhs = 0.5 * s.rho(2.0 * x).unwrap() + s.remainder(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn sigma_is_periodic_and_matches_small_x_slope() {
        let ev = SigmaEvaluator::from_spectrum(correction_spectrum().clone());
        for k in 0..20 {
            let x = -1.0 + 0.1 * k as f64;
            let d = (ev.sigma(x).unwrap() - ev.sigma(x + 1.0).unwrap()).abs();
            assert!(d < 2e-4, "x = {x}: {d}");
        }
        // rho(x)/x at x = 2^-6 on a long grid, whose o(x) remainder is ~1e-3
        let long = Spectrum::new(FourierGrid::new(2e5, 0.05).unwrap()).unwrap();
        for &u in &[0.0, 0.25, 0.5, 0.75] {
            let x = 2f64.powf(u - 6.0);
            let slope = long.rho(x).unwrap() / x;
            assert!((ev.sigma(u).unwrap() - slope).abs() < 2e-3, "u = {u}");
        }
    }

    #[test]
    fn sigma_refined_grid() {
        let a = sigma(0.25, FourierGrid::correction_default()).unwrap();
        let b = sigma(0.25, FourierGrid::new(1000.0, 0.0025).unwrap()).unwrap();
        assert!((a - b).abs() < 2e-4);
    }

    #[test]
    fn averages_agree() {
        let s = correction_spectrum();
        let values: Vec<f64> = AverageMethod::ALL
            .iter()
            .map(|&m| sigma_average_with(s, m).unwrap())
            .collect();
        for (i, a) in values.iter().enumerate() {
            for b in &values[i + 1..] {
                assert!((a - b).abs() < 2e-4);
            }
        }
        assert!((values[3] - 1.464910).abs() < 1e-5);
        assert!((values[0] - 1.464910).abs() < 1e-4);
    }

    #[test]
    fn residual_integral_vanishes() {
        let b = correction_spectrum().b_integral().unwrap();
        assert!(b.norm() < 1e-6);
        assert!(b.im.abs() < 1e-10);
        let finer = check_b_zero(FourierGrid::new(500.0, 0.0025).unwrap()).unwrap();
        assert!(finer < 1e-6);
    }

    #[test]
    fn ordered_tent() {
        assert_eq!(rho_ordered(1.0), 1.0);
        assert_eq!(rho_ordered(0.5), 0.5);
        assert_eq!(rho_ordered(1.5), 0.5);
        assert_eq!(rho_ordered(3.0), 0.0);
        assert_eq!(rho_ordered(0.0), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(FourierGrid::new(500.0, 0.005).is_ok());
        assert!(FourierGrid::new(500.0, 0.1).is_err());
        assert!(FourierGrid::new(1.0, 0.003).is_err());
        assert!(FourierGrid::new(-1.0, 0.01).is_err());
    }

    #[test]
    fn aliasing_is_rejected() {
        let grid = FourierGrid::new(10.0, 0.05).unwrap();
        let s = Spectrum::new(grid).unwrap();
        assert!(matches!(s.rho(20.0), Err(Error::Aliasing { .. })));
        assert!(s.rho(2.0).is_ok());
    }

    #[test]
    fn inhomogeneous_ordered_scaling() {
        let s = Spectrum::new(FourierGrid::new(10.0, 0.05).unwrap()).unwrap();
        assert_eq!(rho_inhomogeneous(0.5, 0.5, &s, Mode::Ordered).unwrap(), 2.0);
        assert_eq!(rho_inhomogeneous(0.3, 1.0, &s, Mode::Ordered).unwrap(), 0.3);
        assert!(rho_inhomogeneous(0.3, 0.0, &s, Mode::Ordered).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("ordered".parse::<Mode>().unwrap(), Mode::Ordered);
        assert!("sideways".parse::<Mode>().is_err());
        for m in AverageMethod::ALL {
            assert_eq!(m.name().parse::<AverageMethod>().unwrap(), m);
        }
    }
}
