//! Escape-time rasters of the filled Julia set of the merge polynomial.
//!
//! A pixel holds the first iterate index `n >= 1` with `|P^n(z)| > R`, or 0 if
//! the orbit stays within `R` for `max_iter` steps. Pixel centers are placed
//! symmetrically about the midpoint of the bounds, so rasters over bounds
//! symmetric about the real axis are exactly mirror-symmetric.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{MergePolynomial, ESCAPE_RADIUS};

pub const DEFAULT_MAX_ITER: u32 = 256;
pub const MIN_RESOLUTION: usize = 64;
/// Largest gray level a plain PGM can carry.
pub const MAX_GRAY: u32 = 65_535;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Interior,
    /// Index of the first iterate outside the escape radius.
    Escaped(u32),
}

impl Classification {
    pub fn is_interior(self) -> bool {
        self == Classification::Interior
    }

    /// Raster cell value: 0 for interior points.
    pub fn cell(self) -> u32 {
        match self {
            Classification::Interior => 0,
            Classification::Escaped(n) => n,
        }
    }
}

/// Rectangle `[re_min, re_max] x [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            re_min: -3.5,
            re_max: 1.5,
            im_min: -2.0,
            im_max: 2.0,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid bounds {self}")))
        }
    }
}

impl std::fmt::Display for Bounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.re_min, self.re_max, self.im_min, self.im_max
        )
    }
}

/// Parses `re_min,re_max,im_min,im_max`.
impl FromStr for Bounds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bounds '{s}': {e}")))?;
        let [re_min, re_max, im_min, im_max] = parts[..] else {
            return Err(Error::Config(format!(
                "bounds '{s}' need four comma-separated numbers"
            )));
        };
        let b = Self {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        b.validate()?;
        Ok(b)
    }
}

/// Iteration limits for escape-time classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeParams {
    pub max_iter: u32,
    pub escape_radius: f64,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            escape_radius: ESCAPE_RADIUS,
        }
    }
}

impl EscapeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.escape_radius >= ESCAPE_RADIUS) || !self.escape_radius.is_finite() {
            return Err(Error::Config(format!(
                "escape radius must be finite and at least {ESCAPE_RADIUS}, got {}",
                self.escape_radius
            )));
        }
        Ok(())
    }
}

/// Classifies `z` by iterating `P`. The radius is raised to the polynomial's
/// own escape bound when that is larger, so escapes are always genuine.
pub fn classify_point(
    poly: &MergePolynomial,
    z: Complex64,
    params: &EscapeParams,
) -> Result<Classification> {
    params.validate()?;
    Ok(classify(poly, z, params.max_iter, radius(poly, params)))
}

fn radius(poly: &MergePolynomial, params: &EscapeParams) -> f64 {
    params.escape_radius.max(poly.escape_radius())
}

#[inline]
fn classify(poly: &MergePolynomial, z: Complex64, max_iter: u32, radius: f64) -> Classification {
    let limit = radius * radius;
    let mut w = z;
    for n in 1..=max_iter {
        w = poly.eval_unchecked(w);
        let m = w.norm_sqr();
        // NaN compares false, so test the negation
        if !(m <= limit) {
            return Classification::Escaped(n);
        }
    }
    Classification::Interior
}

/// Escape-count image; row 0 is the top edge (`im_max`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Raster {
    pub bounds: Bounds,
    pub width: usize,
    pub height: usize,
    pub params: EscapeParams,
    pub r: f64,
    pub cells: Vec<u32>,
}

fn center(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let mid = 0.5 * (lo + hi);
    mid + (k as f64 - 0.5 * (n as f64 - 1.0)) * step
}

impl Raster {
    /// Center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> Complex64 {
        pixel_center(&self.bounds, self.width, self.height, row, col)
    }

    pub fn cell(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.width + col]
    }

    pub fn interior_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 0).count()
    }

    /// Whether row `k` equals row `height - 1 - k` for every `k`.
    pub fn is_mirror_symmetric(&self) -> bool {
        let w = self.width;
        (0..self.height / 2).all(|k| {
            let j = self.height - 1 - k;
            self.cells[k * w..(k + 1) * w] == self.cells[j * w..(j + 1) * w]
        })
    }

    /// Plain (P2) graymap of the escape counts with the parameters in a
    /// comment line.
    pub fn to_pgm(&self) -> String {
        let maxval = self.params.max_iter.min(MAX_GRAY);
        let mut out = String::new();
        writeln!(out, "P2").unwrap();
        writeln!(out, "{}", self.header_comment()).unwrap();
        writeln!(out, "{} {}", self.width, self.height).unwrap();
        writeln!(out, "{maxval}").unwrap();
        for row in self.cells.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|c| c.min(&maxval).to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    /// CSV `row,col,re,im,escape` preceded by a comment header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header_comment()).unwrap();
        writeln!(out, "row,col,re,im,escape").unwrap();
        for row in 0..self.height {
            for col in 0..self.width {
                let z = self.pixel_center(row, col);
                writeln!(
                    out,
                    "{row},{col},{},{},{}",
                    crate::report::fmt_num(z.re),
                    crate::report::fmt_num(z.im),
                    self.cell(row, col)
                )
                .unwrap();
            }
        }
        out
    }

    fn header_comment(&self) -> String {
        format!(
            "# bounds={} resolution={}x{} max_iter={} escape_radius={} r={}",
            self.bounds,
            self.width,
            self.height,
            self.params.max_iter,
            self.params.escape_radius,
            self.r
        )
    }
}

fn pixel_center(bounds: &Bounds, width: usize, height: usize, row: usize, col: usize) -> Complex64 {
    let re = center(bounds.re_min, bounds.re_max, width, col);
    // rows run downwards from im_max
    let im = center(bounds.im_min, bounds.im_max, height, height - 1 - row);
    Complex64::new(re, im)
}

/// Classifies every pixel center, in parallel over rows.
pub fn filled_julia(
    poly: &MergePolynomial,
    bounds: Bounds,
    width: usize,
    height: usize,
    params: EscapeParams,
) -> Result<Raster> {
    bounds.validate()?;
    params.validate()?;
    if width < MIN_RESOLUTION || height < MIN_RESOLUTION {
        return Err(Error::Config(format!(
            "resolution {width}x{height} is below {MIN_RESOLUTION}x{MIN_RESOLUTION}"
        )));
    }
    let cells_len = width
        .checked_mul(height)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::Capacity(format!("raster {width}x{height} is too large")))?;
    let radius = radius(poly, &params);
    let mut cells = vec![0u32; cells_len];
    cells
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, cell) in out.iter_mut().enumerate() {
                let z = pixel_center(&bounds, width, height, row, col);
                *cell = classify(poly, z, params.max_iter, radius).cell();
            }
        });
    Ok(Raster {
        bounds,
        width,
        height,
        params,
        r: poly.r(),
        cells,
    })
}

/// Decoded plain graymap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub pixels: Vec<u32>,
    pub comments: Vec<String>,
}

/// Parses a plain (P2) graymap. Comments run from `#` to the end of a line.
pub fn parse_pgm(text: &str) -> Result<Graymap> {
    let bad = |msg: String| Error::Decode(format!("pgm: {msg}"));
    let mut comments = Vec::new();
    let mut tokens = Vec::new();
    for line in text.lines() {
        let (data, comment) = match line.find('#') {
            Some(i) => (&line[..i], Some(line[i + 1..].trim())),
            None => (line, None),
        };
        if let Some(c) = comment {
            comments.push(c.to_string());
        }
        tokens.extend(data.split_whitespace());
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some("P2") => {}
        Some(other) => return Err(bad(format!("magic '{other}' is not P2"))),
        None => return Err(bad("empty input".into())),
    }
    let mut number = |what: &str| -> Result<u64> {
        let tok = it.next().ok_or_else(|| bad(format!("missing {what}")))?;
        tok.parse::<u64>()
            .map_err(|_| bad(format!("{what} '{tok}' is not a nonnegative integer")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > MAX_GRAY as u64 {
        return Err(bad(format!("maxval {maxval} outside 1..={MAX_GRAY}")));
    }
    let count = width
        .checked_mul(height)
        .filter(|&n| n <= text.len() as u64)
        .ok_or_else(|| bad(format!("{width}x{height} pixels cannot fit the input")))?;
    let mut pixels = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let v = number("pixel")?;
        if v > maxval {
            return Err(bad(format!("pixel {v} exceeds maxval {maxval}")));
        }
        pixels.push(v as u32);
    }
    if let Some(extra) = it.next() {
        return Err(bad(format!("trailing data '{extra}'")));
    }
    Ok(Graymap {
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        pixels,
        comments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::inverse_iterates;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn classify_default(z: Complex64) -> Classification {
        classify_point(&MergePolynomial::balanced(), z, &EscapeParams::default()).unwrap()
    }

    #[test]
    fn fixed_points_and_an_escape() {
        assert!(classify_default(c(0.0, 0.0)).is_interior());
        assert!(classify_default(c(-3.0, 0.0)).is_interior());
        assert_eq!(classify_default(c(3.0, 0.0)), Classification::Escaped(1));
    }

    #[test]
    fn real_interval_is_interior() {
        for k in 0..1000 {
            let x = -3.0 + 4.0 * k as f64 / 999.0;
            assert!(classify_default(c(x, 0.0)).is_interior(), "x = {x}");
        }
    }

    #[test]
    fn backward_orbit_of_one_half_stays_inside() {
        for n in 0..40 {
            let z = inverse_iterates(c(0.5, 0.0), n).unwrap();
            assert!(classify_default(z).is_interior(), "n = {n}");
            let z = inverse_iterates(c(0.5, 0.3), n).unwrap();
            assert!(classify_default(z).is_interior(), "n = {n}");
        }
    }

    #[test]
    fn parameter_checks() {
        let p = MergePolynomial::balanced();
        let bad = EscapeParams {
            max_iter: 0,
            ..EscapeParams::default()
        };
        assert!(classify_point(&p, c(0.0, 0.0), &bad).is_err());
        let bad = EscapeParams {
            escape_radius: 3.0,
            ..EscapeParams::default()
        };
        assert!(classify_point(&p, c(0.0, 0.0), &bad).is_err());
        let e = EscapeParams::default();
        assert!(filled_julia(&p, Bounds::default(), 63, 64, e).is_err());
        assert!("1,2,3".parse::<Bounds>().is_err());
        assert!("1,0,0,1".parse::<Bounds>().is_err());
        assert_eq!(
            "-3.5,1.5,-2,2".parse::<Bounds>().unwrap(),
            Bounds::default()
        );
    }

    #[test]
    fn default_raster_properties() {
        let p = MergePolynomial::balanced();
        let r = filled_julia(&p, Bounds::default(), 200, 160, EscapeParams::default()).unwrap();
        assert!(r.is_mirror_symmetric());
        assert!(r.interior_count() > 0);
        for row in 0..r.height {
            for col in 0..r.width {
                let z = r.pixel_center(row, col);
                let v = r.cell(row, col);
                if z.norm() > 4.0 {
                    assert_eq!(v, 1);
                }
                if v == 0 {
                    assert!(z.norm() <= 4.0);
                }
            }
        }
    }

    #[test]
    fn pgm_round_trip() {
        let p = MergePolynomial::balanced();
        let r = filled_julia(&p, Bounds::default(), 64, 64, EscapeParams::default()).unwrap();
        let g = parse_pgm(&r.to_pgm()).unwrap();
        assert_eq!((g.width, g.height, g.maxval), (64, 64, 256));
        assert_eq!(g.pixels, r.cells);
        assert!(g.comments[0].starts_with("bounds=-3.5,1.5,-2,2 resolution=64x64"));
    }

    #[test]
    fn pgm_rejects_malformed_input() {
        for text in [
            "",
            "P5 1 1 255 0",
            "P2 2 1 255 0",
            "P2 1 1 255 256",
            "P2 1 1 0 0",
            "P2 1 1 255 0 0",
            "P2 -1 1 255 0",
            "P2 99999999999 99999999999 255 0",
        ] {
            assert!(parse_pgm(text).is_err(), "{text:?}");
        }
        let g = parse_pgm("P2 # c\n2 1\n# d\n9\n3 4").unwrap();
        assert_eq!(g.pixels, vec![3, 4]);
        assert_eq!(g.comments, vec!["c", "d"]);
    }
}
