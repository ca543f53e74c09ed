//! Materialized cyclic chains and the compression step.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{Error, Result};

/// Cell storage of a fixed integer width.
pub trait Cell: Copy + Default + Send + Sync + 'static {
    const MAX: u64;
    const BYTES: usize;
    fn get(self) -> u64;
    /// Caller guarantees `v <= Self::MAX`.
    fn put(v: u64) -> Self;
}

macro_rules! impl_cell {
    ($t:ty) => {
        impl Cell for $t {
            const MAX: u64 = <$t>::MAX as u64;
            const BYTES: usize = std::mem::size_of::<$t>();
            #[inline(always)]
            fn get(self) -> u64 {
                self as u64
            }
            #[inline(always)]
            fn put(v: u64) -> Self {
                v as $t
            }
        }
    };
}

impl_cell!(u8);
impl_cell!(u16);
impl_cell!(u32);

/// Weights stored in the narrowest width that covers the current bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Weights {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

macro_rules! dispatch {
    ($w:expr, $v:ident => $body:expr) => {
        match $w {
            Weights::U8($v) => $body,
            Weights::U16($v) => $body,
            Weights::U32($v) => $body,
        }
    };
}

impl Weights {
    fn for_bound(bound: u64, len: usize) -> Result<Self> {
        Ok(if bound <= u8::MAX as u64 {
            Weights::U8(Vec::with_capacity(len))
        } else if bound <= u16::MAX as u64 {
            Weights::U16(Vec::with_capacity(len))
        } else if bound <= u32::MAX as u64 {
            Weights::U32(Vec::with_capacity(len))
        } else {
            return Err(Error::Capacity(format!(
                "cell weight bound {bound} exceeds 32 bits"
            )));
        })
    }

    pub fn len(&self) -> usize {
        dispatch!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes per cell.
    pub fn width(&self) -> usize {
        match self {
            Weights::U8(_) => 1,
            Weights::U16(_) => 2,
            Weights::U32(_) => 4,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        dispatch!(self, v => v[i].get())
    }

    pub fn to_vec(&self) -> Vec<u64> {
        dispatch!(self, v => v.iter().map(|c| c.get()).collect())
    }
}

fn fill<C: Cell>(v: &mut Vec<C>, weights: &[u64]) {
    v.extend(weights.iter().map(|&w| C::put(w)));
}

/// A cyclic chain of cell weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    weights: Weights,
    mass: u64,
    /// Upper bound on every cell weight, used to pick the storage width.
    bound: u64,
}

impl Chain {
    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("chain must have at least one cell".into()));
        }
        let bound = weights.iter().copied().max().unwrap_or(0);
        let mass = weights
            .iter()
            .try_fold(0u64, |acc, &w| acc.checked_add(w))
            .ok_or_else(|| Error::Capacity("chain mass overflows 64 bits".into()))?;
        let mut store = Weights::for_bound(bound, weights.len())?;
        dispatch!(&mut store, v => fill(v, weights));
        Ok(Self {
            weights: store,
            mass,
            bound,
        })
    }

    pub(crate) fn from_storage(weights: Weights) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("chain must have at least one cell".into()));
        }
        let (mass, bound) = dispatch!(&weights, v => v.iter().fold((0u64, 0u64), |(m, b), c| {
            (m + c.get(), b.max(c.get()))
        }));
        Ok(Self {
            weights,
            mass,
            bound,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> u64 {
        self.mass
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.weights.to_vec()
    }
}

/// Initial chain: every cell holds 1 when `p = 1`, otherwise each cell
/// independently holds 1 with probability `p` and 0 otherwise.
pub fn init_chain(length: usize, p: f64, seed: u64) -> Result<Chain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_chain_with(length, p, &mut rng)
}

/// [`init_chain`] drawing from a caller-supplied stream.
pub fn init_chain_with<R: Rng + ?Sized>(length: usize, p: f64, rng: &mut R) -> Result<Chain> {
    if length == 0 || !length.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "chain length must be positive and even, got {length}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("p must lie in (0,1], got {p}")));
    }
    let cells: Vec<u8> = if p == 1.0 {
        vec![1; length]
    } else {
        (0..length).map(|_| rng.gen_bool(p) as u8).collect()
    };
    let mass = cells.iter().map(|&c| c as u64).sum();
    Ok(Chain {
        weights: Weights::U8(cells),
        mass,
        bound: 1,
    })
}

/// Directions chosen by the donors of one step. Donor `k` is cell `2k`; a set
/// bit sends its weight right to cell `2k+1`, a clear bit left to cell `2k-1`
/// (cyclically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Donations {
    bits: Vec<u64>,
    len: usize,
}

impl Donations {
    /// Each donor goes right with probability `r`. For `r = 1/2` one random
    /// bit is consumed per donor.
    pub fn sample<R: RngCore + ?Sized>(donors: usize, r: f64, rng: &mut R) -> Self {
        let words = donors.div_ceil(64);
        let mut bits = vec![0u64; words];
        if r == 0.5 {
            for w in bits.iter_mut() {
                *w = rng.next_u64();
            }
            if !donors.is_multiple_of(64) {
                bits[words - 1] &= (1u64 << (donors % 64)) - 1;
            }
        } else {
            for k in 0..donors {
                if rng.gen_bool(r) {
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
        }
        Self { bits, len: donors }
    }

    /// Explicit directions, `true` meaning right.
    pub fn from_directions(right: &[bool]) -> Self {
        let mut bits = vec![0u64; right.len().div_ceil(64)];
        for (k, &d) in right.iter().enumerate() {
            if d {
                bits[k / 64] |= 1 << (k % 64);
            }
        }
        Self {
            bits,
            len: right.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline(always)]
    pub fn right(&self, k: usize) -> bool {
        (self.bits[k >> 6] >> (k & 63)) & 1 == 1
    }

    /// Number of survivors that receive both neighbouring donors, i.e. `k`
    /// with donor `k` going right and donor `k+1` going left (cyclically).
    /// The same number of survivors receives nothing.
    pub fn double_receivers(&self) -> u64 {
        let n = self.len;
        if n == 0 {
            return 0;
        }
        let words = self.bits.len();
        let mut count = 0u64;
        for i in 0..words {
            let w = self.bits[i];
            let valid = if i + 1 == words && !n.is_multiple_of(64) {
                n % 64
            } else {
                64
            };
            // bit j of `next` is the direction of donor (64 i + j + 1)
            let carry = if i + 1 < words {
                self.bits[i + 1] & 1
            } else {
                self.bits[0] & 1
            };
            let next = if valid == 64 {
                (w >> 1) | (carry << 63)
            } else {
                (w >> 1) | (carry << (valid - 1))
            };
            let mask = if valid == 64 {
                u64::MAX
            } else {
                (1u64 << valid) - 1
            };
            count += (w & !next & mask).count_ones() as u64;
        }
        count
    }
}

fn donate_typed<T: Cell, U: Cell>(w: &[T], d: &Donations, out: &mut Vec<U>) {
    let m = w.len() / 2;
    out.clear();
    out.reserve(m);
    for k in 0..m {
        let own = w[2 * k + 1].get();
        let from_left = if d.right(k) { w[2 * k].get() } else { 0 };
        let next = if k + 1 == m { 0 } else { k + 1 };
        let from_right = if d.right(next) { 0 } else { w[2 * next].get() };
        out.push(U::put(own + from_left + from_right));
    }
}

/// Applies the donations: survivor `k` (old cell `2k+1`) keeps its weight and
/// collects every donor that chose it. Survivors stay in cyclic order.
pub fn donate(chain: &Chain, donations: &Donations) -> Result<Chain> {
    let n = chain.len();
    if !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "cannot compress a chain of odd length {n}"
        )));
    }
    if donations.len() != n / 2 {
        return Err(Error::Config(format!(
            "{} donations for {} donors",
            donations.len(),
            n / 2
        )));
    }
    let bound = chain.bound.saturating_mul(3).min(chain.mass);
    let mut out = Weights::for_bound(bound, n / 2)?;
    macro_rules! run {
        ($src:expr) => {
            match &mut out {
                Weights::U8(o) => donate_typed($src, donations, o),
                Weights::U16(o) => donate_typed($src, donations, o),
                Weights::U32(o) => donate_typed($src, donations, o),
            }
        };
    }
    match &chain.weights {
        Weights::U8(v) => run!(v),
        Weights::U16(v) => run!(v),
        Weights::U32(v) => run!(v),
    }
    Ok(Chain {
        weights: out,
        mass: chain.mass,
        bound,
    })
}

/// Ordered mode keeps the survivors in place; disordered mode applies a
/// uniform random permutation.
pub fn arrange<R: Rng + ?Sized>(chain: &mut Chain, mode: Mode, rng: &mut R) {
    if mode == Mode::Disordered {
        dispatch!(&mut chain.weights, v => v.shuffle(rng));
    }
}

/// One compression step with donation probability `r` (right) per donor.
/// Donations are drawn before the permutation, so both modes consume the
/// same donation bits from a given stream.
pub fn compress_step<R: Rng + ?Sized>(
    chain: &Chain,
    mode: Mode,
    r: f64,
    rng: &mut R,
) -> Result<Chain> {
    if !chain.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "cannot compress a chain of odd length {}",
            chain.len()
        )));
    }
    let donations = Donations::sample(chain.len() / 2, r, rng);
    let mut next = donate(chain, &donations)?;
    arrange(&mut next, mode, rng);
    Ok(next)
}

/// Exact weight counts of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeightHistogram {
    /// `counts[i]` is the number of cells with weight `i`.
    pub counts: Vec<u64>,
    pub total_cells: u64,
    pub mass: u64,
    /// Compression steps applied before the count was taken.
    pub step: usize,
}

impl WeightHistogram {
    pub fn from_counts(mut counts: Vec<u64>, step: usize) -> Self {
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        let total_cells = counts.iter().sum();
        let mass = counts.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        Self {
            counts,
            total_cells,
            mass,
            step,
        }
    }

    pub fn count(&self, weight: usize) -> u64 {
        self.counts.get(weight).copied().unwrap_or(0)
    }

    pub fn density(&self, weight: usize) -> f64 {
        if self.total_cells == 0 {
            0.0
        } else {
            self.count(weight) as f64 / self.total_cells as f64
        }
    }

    /// `N_i / N_1`, or `None` when no cell has weight 1.
    pub fn ratio(&self, weight: usize) -> Option<f64> {
        let n1 = self.count(1);
        (n1 > 0).then(|| self.count(weight) as f64 / n1 as f64)
    }

    /// Adds another histogram of the same step.
    pub fn merge(&mut self, other: &WeightHistogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_cells += other.total_cells;
        self.mass += other.mass;
    }

    /// Weights present, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }
}

fn histogram_typed<T: Cell>(v: &[T], counts: &mut Vec<u64>) {
    for c in v {
        let w = c.get() as usize;
        if w >= counts.len() {
            counts.resize(w + 1, 0);
        }
        counts[w] += 1;
    }
}

/// Exact weight counts of `chain`, tagged with the step index.
pub fn histogram(chain: &Chain, step: usize) -> WeightHistogram {
    let mut counts = vec![0u64; 4];
    dispatch!(&chain.weights, v => histogram_typed(v, &mut counts));
    WeightHistogram::from_counts(counts, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(w: &[u64]) -> Chain {
        Chain::from_weights(w).unwrap()
    }

    #[test]
    fn hand_enumerated_steps() {
        let c = chain(&[1, 1, 1, 1]);
        let both_to_one = Donations::from_directions(&[true, false]);
        assert_eq!(donate(&c, &both_to_one).unwrap().to_vec(), vec![3, 1]);
        let both_to_three = Donations::from_directions(&[false, true]);
        assert_eq!(donate(&c, &both_to_three).unwrap().to_vec(), vec![1, 3]);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&chain(&[3, 1]), 0);
        assert_eq!(h.count(1), 1);
        assert_eq!(h.count(3), 1);
        assert_eq!(h.total_cells, 2);
        let h = histogram(&chain(&[0, 2, 2]), 0);
        assert_eq!(h.counts, vec![1, 0, 2]);
        assert_eq!(h.mass, 4);
        let h = histogram(&init_chain(1024, 1.0, 3).unwrap(), 0);
        assert_eq!(h.counts, vec![0, 1024]);
        assert_eq!(h.ratio(0), Some(0.0));
        assert_eq!(histogram(&chain(&[0, 2]), 0).ratio(2), None);
    }

    #[test]
    fn init_examples() {
        assert_eq!(init_chain(8, 1.0, 11).unwrap().to_vec(), vec![1; 8]);
        let c = init_chain(1_000_000, 0.5, 5).unwrap();
        let frac = c.mass() as f64 / 1e6;
        assert!((frac - 0.5).abs() < 0.002);
        assert_eq!(init_chain(1_000_000, 1.0, 5).unwrap().mass(), 1_000_000);
        assert!(init_chain(7, 1.0, 0).is_err());
        assert!(init_chain(8, 0.0, 0).is_err());
    }

    #[test]
    fn one_homogeneous_step() {
        for mode in [Mode::Ordered, Mode::Disordered] {
            let c = init_chain(1 << 20, 1.0, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let next = compress_step(&c, mode, 0.5, &mut rng).unwrap();
            assert_eq!(next.len(), 1 << 19);
            assert_eq!(next.mass(), 1 << 20);
            let h = histogram(&next, 1);
            for (w, want) in [(1, 0.25), (2, 0.5), (3, 0.25)] {
                assert!((h.density(w) - want).abs() < 0.003, "{mode:?} weight {w}");
            }
        }
    }

    #[test]
    fn double_receivers_matches_direct_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1usize, 2, 3, 63, 64, 65, 128, 200] {
            let d = Donations::sample(n, 0.5, &mut rng);
            let direct = (0..n)
                .filter(|&k| d.right(k) && !d.right((k + 1) % n))
                .count() as u64;
            assert_eq!(d.double_receivers(), direct, "n = {n}");
        }
    }

    #[test]
    fn storage_widens() {
        let mut c = chain(&[200; 64]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(c.weights().width(), 1);
        c = compress_step(&c, Mode::Disordered, 0.5, &mut rng).unwrap();
        assert_eq!(c.weights().width(), 2);
        assert_eq!(c.mass(), 200 * 64);
        for _ in 0..5 {
            c = compress_step(&c, Mode::Disordered, 0.5, &mut rng).unwrap();
        }
        assert_eq!(c.to_vec(), vec![200 * 64]);
    }

    #[test]
    fn odd_chain_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = chain(&[1, 2, 3]);
        assert!(compress_step(&c, Mode::Ordered, 0.5, &mut rng).is_err());
    }
}
