//! Monte Carlo simulation of ordered and disordered compression on cyclic
//! chains.
//!
//! Replica `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, so
//! a configuration and seed fix every report bit for bit, independently of
//! the thread count.

pub mod chain;
pub mod exchange;
pub mod oracle;
pub mod snapshot;
pub mod theory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chain::{
    arrange, compress_step, donate, histogram, init_chain, init_chain_with, Chain, Donations,
    WeightHistogram, Weights,
};
pub use exchange::{exchangeable_step, initial_counts};
pub use oracle::{
    compare_with_simulation, exact_enumeration_oracle, ExactDensities, OracleComparison,
};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};

/// Whether survivors keep their order or are randomly permuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ordered,
    Disordered,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordered" => Ok(Mode::Ordered),
            "disordered" => Ok(Mode::Disordered),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Ordered => "ordered",
            Mode::Disordered => "disordered",
        })
    }
}

/// How replicas are advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Histogram sampling for disordered runs, materialized chains otherwise.
    #[default]
    Auto,
    /// Materialized chains with explicit permutations.
    Chain,
    /// Exact sampling of histograms of exchangeable chains (disordered only).
    Exchange,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "chain" => Ok(Engine::Chain),
            "exchange" => Ok(Engine::Exchange),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

/// Longest chain the materializing engine accepts.
pub const MAX_CHAIN_LENGTH: u64 = 1 << 32;

/// Parameters of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub length: u64,
    pub steps: usize,
    pub mode: Mode,
    /// Initial density of non-empty cells; 1 is the homogeneous chain.
    pub p: f64,
    /// Probability that a donor sends its weight right.
    pub r: f64,
    pub seed: u64,
    pub replicas: u64,
    pub engine: Engine,
    /// Largest weight entering the deviation summary.
    pub compare_upto: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            length: 1 << 22,
            steps: 2,
            mode: Mode::Ordered,
            p: 1.0,
            r: 0.5,
            seed: 0,
            replicas: 1,
            engine: Engine::Auto,
            compare_upto: 8,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.steps > 62 {
            return Err(Error::Config(format!(
                "steps must lie in 1..=62, got {}",
                self.steps
            )));
        }
        if self.length == 0 || !self.length.is_multiple_of(1u64 << self.steps) {
            return Err(Error::Config(format!(
                "length {} is not a positive multiple of 2^{}",
                self.length, self.steps
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::Config(format!(
                "p must lie in (0,1], got {}",
                self.p
            )));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::Config(format!(
                "r must lie in (0,1), got {}",
                self.r
            )));
        }
        if self.mode == Mode::Ordered && self.r != 0.5 {
            return Err(Error::Config(
                "ordered compression is defined only for r = 1/2".into(),
            ));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        let engine = self.resolved_engine();
        if engine == Engine::Exchange && self.mode == Mode::Ordered {
            return Err(Error::Config(
                "the exchange engine samples disordered compression only".into(),
            ));
        }
        if engine == Engine::Chain && self.length > MAX_CHAIN_LENGTH {
            return Err(Error::Capacity(format!(
                "chain length {} exceeds {MAX_CHAIN_LENGTH}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn resolved_engine(&self) -> Engine {
        match (self.engine, self.mode) {
            (Engine::Auto, Mode::Ordered) => Engine::Chain,
            (Engine::Auto, Mode::Disordered) => Engine::Exchange,
            (e, _) => e,
        }
    }

    fn replica_rng(&self, replica: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }
}

/// Aggregated histogram of one step with the derived ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub histogram: WeightHistogram,
    /// `N_i / N_1` for `i = 0..` the largest weight present.
    pub ratios: Vec<Option<f64>>,
    pub theory_ratios: Vec<Option<f64>>,
}

/// Identification of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimManifest {
    pub seed: u64,
    pub version: String,
    pub engine: Engine,
    pub config: SimConfig,
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub manifest: SimManifest,
    /// Step 0 is the initial chain.
    pub steps: Vec<StepReport>,
    /// Exact finite-step ratios for the final step.
    pub finite_theory_ratios: Vec<Option<f64>>,
    /// Largest `|ratio - theory| / theory` over the compared weights of the
    /// final step.
    pub max_relative_deviation: Option<f64>,
    /// Weight range entering the deviation summary.
    pub compared_weights: (usize, usize),
    /// No weight-1 cell survived, so no ratio is defined.
    pub ratio_undefined: bool,
}

impl RunReport {
    pub fn final_step(&self) -> &StepReport {
        self.steps
            .last()
            .expect("a report always holds the initial step")
    }
}

fn run_replica(config: &SimConfig, replica: u64) -> Result<Vec<WeightHistogram>> {
    let mut rng = config.replica_rng(replica);
    let mut out = Vec::with_capacity(config.steps + 1);
    match config.resolved_engine() {
        Engine::Exchange => {
            let mut counts = initial_counts(config.length, config.p, &mut rng)?;
            out.push(WeightHistogram::from_counts(counts.clone(), 0));
            for step in 1..=config.steps {
                counts = exchangeable_step(&counts, config.r, &mut rng)?;
                out.push(WeightHistogram::from_counts(counts.clone(), step));
            }
        }
        _ => {
            let mut chain = init_chain_with(config.length as usize, config.p, &mut rng)?;
            out.push(histogram(&chain, 0));
            for step in 1..=config.steps {
                let donations = Donations::sample(chain.len() / 2, config.r, &mut rng);
                chain = donate(&chain, &donations)?;
                // the last permutation cannot change any count
                if step < config.steps {
                    arrange(&mut chain, config.mode, &mut rng);
                }
                out.push(histogram(&chain, step));
            }
        }
    }
    Ok(out)
}

/// Theory column: finite-step densities for homogeneous chains, the large-step
/// limits for inhomogeneous balanced chains, finite-step thinning otherwise.
fn theory_column(config: &SimConfig, step: usize, upto: usize) -> Result<Vec<Option<f64>>> {
    if step == 0 {
        return Ok(vec![None; upto + 1]);
    }
    if config.p < 1.0 && config.r == 0.5 {
        theory::limit_ratios(config.mode, config.p, upto)
    } else {
        theory::finite_ratios(config.mode, step, config.p, config.r, upto)
    }
}

/// Runs all replicas and aggregates their histograms step by step.
pub fn run_experiment(config: &SimConfig) -> Result<RunReport> {
    config.validate()?;
    let per_replica = (0..config.replicas)
        .into_par_iter()
        .map(|k| run_replica(config, k))
        .collect::<Result<Vec<_>>>()?;
    let mut merged: Vec<WeightHistogram> = (0..=config.steps)
        .map(|s| WeightHistogram::from_counts(vec![0], s))
        .collect();
    for replica in &per_replica {
        for (m, h) in merged.iter_mut().zip(replica) {
            m.merge(h);
        }
    }
    let mut steps = Vec::with_capacity(merged.len());
    for h in merged {
        let upto = (h.counts.len().saturating_sub(1)).max(config.compare_upto);
        let ratios = (0..=upto).map(|i| h.ratio(i)).collect();
        let theory_ratios = theory_column(config, h.step, upto)?;
        steps.push(StepReport {
            step: h.step,
            histogram: h,
            ratios,
            theory_ratios,
        });
    }
    let last = steps.last().expect("steps >= 1");
    let finite_theory_ratios = theory::finite_ratios(
        config.mode,
        config.steps,
        config.p,
        config.r,
        last.ratios.len() - 1,
    )?;
    let lo = if config.p < 1.0 { 0 } else { 1 };
    let hi = config.compare_upto;
    let ratio_undefined = last.histogram.count(1) == 0;
    let max_relative_deviation = if ratio_undefined {
        None
    } else {
        (lo..=hi)
            .filter_map(|i| match (last.ratios[i], last.theory_ratios[i]) {
                (Some(mc), Some(th)) if th > 0.0 => Some((mc - th).abs() / th),
                _ => None,
            })
            .fold(None, |acc: Option<f64>, d| {
                Some(acc.map_or(d, |a| a.max(d)))
            })
    };
    Ok(RunReport {
        manifest: SimManifest {
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            engine: config.resolved_engine(),
            config: config.clone(),
        },
        steps,
        finite_theory_ratios,
        max_relative_deviation,
        compared_weights: (lo, hi),
        ratio_undefined,
    })
}
