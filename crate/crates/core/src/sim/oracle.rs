//! Exact weight densities of small cycles by enumerating every donation
//! outcome.

use serde::Serialize;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chain::{compress_step, donate, histogram, Chain, Donations};
use super::Mode;
use crate::error::{Error, Result};

/// Largest number of donation bits enumerated (`2^24` outcomes).
pub const MAX_ENUMERATED_BITS: u32 = 24;

/// Exact densities `densities[i]` of weight `i`, averaged over all outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDensities {
    pub cycle_length: usize,
    pub steps: usize,
    pub mode: Mode,
    pub densities: Vec<f64>,
    /// Every outcome conserved the total mass.
    pub mass_conserved: bool,
}

impl ExactDensities {
    pub fn density(&self, weight: usize) -> f64 {
        self.densities.get(weight).copied().unwrap_or(0.0)
    }
}

/// Enumerates all `2^donors` equally likely donation patterns of a
/// homogeneous cycle. A permutation of the survivors cannot change counts,
/// so disordered mode is exact only for a single step.
pub fn exact_enumeration_oracle(
    cycle_length: usize,
    steps: usize,
    mode: Mode,
) -> Result<ExactDensities> {
    if steps == 0 || cycle_length == 0 || !cycle_length.is_multiple_of(1 << steps.min(63)) {
        return Err(Error::Config(format!(
            "cycle length {cycle_length} must be a positive multiple of 2^{steps}"
        )));
    }
    if mode == Mode::Disordered && steps != 1 {
        return Err(Error::Config(
            "disordered enumeration is exact only for one step".into(),
        ));
    }
    let per_step: Vec<usize> = (0..steps).map(|s| cycle_length >> (s + 1)).collect();
    let bits: usize = per_step.iter().sum();
    if bits > MAX_ENUMERATED_BITS as usize {
        return Err(Error::Capacity(format!(
            "{bits} donation bits exceed the enumeration limit of {MAX_ENUMERATED_BITS}"
        )));
    }
    let start = Chain::from_weights(&vec![1; cycle_length])?;
    let final_len = cycle_length >> steps;
    let mut counts: Vec<u64> = Vec::new();
    let mut mass_conserved = true;
    for outcome in 0u64..(1u64 << bits) {
        let mut chain = start.clone();
        let mut offset = 0;
        for &donors in &per_step {
            let dirs: Vec<bool> = (0..donors)
                .map(|k| (outcome >> (offset + k)) & 1 == 1)
                .collect();
            offset += donors;
            chain = donate(&chain, &Donations::from_directions(&dirs))?;
        }
        mass_conserved &= chain.to_vec().iter().sum::<u64>() == cycle_length as u64;
        let h = histogram(&chain, steps);
        if h.counts.len() > counts.len() {
            counts.resize(h.counts.len(), 0);
        }
        for (c, x) in counts.iter_mut().zip(&h.counts) {
            *c += x;
        }
    }
    let denom = (final_len as f64) * (1u64 << bits) as f64;
    Ok(ExactDensities {
        cycle_length,
        steps,
        mode,
        densities: counts.iter().map(|&c| c as f64 / denom).collect(),
        mass_conserved,
    })
}

/// Simulated against exact density of one weight class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub weight: usize,
    pub exact: f64,
    pub mean: f64,
    /// Standard error of `mean` over the trials.
    pub std_error: f64,
}

impl OracleComparison {
    /// `|mean - exact|` in standard errors; 0 when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let d = (self.mean - self.exact).abs();
        if d == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            d / self.std_error
        }
    }
}

/// Runs `trials` seeded homogeneous simulations of a short cycle and compares
/// the per-trial weight densities with [`exact_enumeration_oracle`].
pub fn compare_with_simulation(
    cycle_length: usize,
    steps: usize,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<Vec<OracleComparison>> {
    let exact = exact_enumeration_oracle(cycle_length, steps, mode)?;
    if trials < 2 {
        return Err(Error::Config("at least two trials are needed".into()));
    }
    let cells = (cycle_length >> steps) as f64;
    let width = 2 * cycle_length;
    let mut sum = vec![0.0; width];
    let mut sum_sq = vec![0.0; width];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Chain::from_weights(&vec![1; cycle_length])?;
    for _ in 0..trials {
        let mut chain = start.clone();
        for _ in 0..steps {
            chain = compress_step(&chain, mode, 0.5, &mut rng)?;
        }
        for (i, n) in histogram(&chain, steps).support() {
            let f = n as f64 / cells;
            sum[i] += f;
            sum_sq[i] += f * f;
        }
    }
    let t = trials as f64;
    Ok((0..width)
        .map(|i| {
            let mean = sum[i] / t;
            let var = (sum_sq[i] / t - mean * mean).max(0.0) * t / (t - 1.0);
            OracleComparison {
                weight: i,
                exact: exact.density(i),
                mean,
                std_error: (var / t).sqrt(),
            }
        })
        .collect())
}
