//! Disordered compression sampled at the level of weight histograms.
//!
//! After a uniform permutation every arrangement of the survivors' weights is
//! equally likely, so the chain is fully described by its histogram. Given
//! the donation directions, a step assigns uniformly random items of the
//! multiset to survivor slots that collect zero, one or two donors. That
//! assignment is drawn with multivariate hypergeometric splits and random
//! matchings, whose cost depends on the number of distinct weights rather
//! than on the chain length. The initial chains are i.i.d., hence also
//! exchangeable, so the whole disordered trajectory is sampled exactly.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

use super::chain::Donations;
use crate::error::{Error, Result};

/// Dense weight counts: `counts[i]` cells carry weight `i`.
pub type Counts = Vec<u64>;

fn total(c: &[u64]) -> u64 {
    c.iter().sum()
}

/// Number of marked items among `draws` taken without replacement.
fn hypergeometric<R: Rng + ?Sized>(population: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    if draws == 0 || marked == 0 {
        return 0;
    }
    if marked == population {
        return draws;
    }
    if draws == population {
        return marked;
    }
    if marked > population - marked {
        return draws - hypergeometric(population, population - marked, draws, rng);
    }
    if draws > population - draws {
        return marked - hypergeometric(population, marked, population - draws, rng);
    }
    let mode = ((draws + 1) as f64 * (marked + 1) as f64 / (population + 2) as f64).floor();
    if mode >= 10.0 {
        return Hypergeometric::new(population, marked, draws)
            .expect("parameters are consistent by construction")
            .sample(rng);
    }
    inverse_hypergeometric(population, marked, draws, rng)
}

/// Inversion from `P(X = 0)`, formed in log space. Requires
/// `marked, draws <= population / 2` and a small mode.
fn inverse_hypergeometric<R: Rng + ?Sized>(n: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    let (small, large) = (marked.min(draws), marked.max(draws));
    let ln_p0: f64 = (0..small)
        .map(|j| (-(large as f64) / (n - j) as f64).ln_1p())
        .sum();
    let mut p = ln_p0.exp();
    let mut u: f64 = rng.gen();
    let mut x = 0u64;
    while u > p && x < small {
        u -= p;
        p *= ((marked - x) * (draws - x)) as f64 / ((x + 1) * (n - marked - draws + x + 1)) as f64;
        x += 1;
    }
    x
}

/// Uniformly random sub-multiset of size `k`, returned with its complement.
pub fn split<R: Rng + ?Sized>(c: &[u64], k: u64, rng: &mut R) -> (Counts, Counts) {
    let mut population = total(c);
    debug_assert!(k <= population);
    let mut left = k;
    let mut taken = vec![0u64; c.len()];
    let mut rest = c.to_vec();
    for (i, &n) in c.iter().enumerate() {
        if left == 0 {
            break;
        }
        let x = hypergeometric(population, n, left, rng);
        taken[i] = x;
        rest[i] -= x;
        left -= x;
        population -= n;
    }
    (taken, rest)
}

fn expand(c: &[u64]) -> Vec<u32> {
    let mut v = Vec::with_capacity(total(c) as usize);
    for (i, &n) in c.iter().enumerate() {
        v.extend(std::iter::repeat_n(i as u32, n as usize));
    }
    v
}

fn add_at(out: &mut Counts, i: usize, n: u64) {
    if i >= out.len() {
        out.resize(i + 1, 0);
    }
    out[i] += n;
}

/// Histogram of `a_j + b_{pi(j)}` for a uniformly random bijection `pi`
/// between two multisets of equal size.
pub fn match_sum<R: Rng + ?Sized>(a: &[u64], b: &[u64], rng: &mut R) -> Counts {
    let n = total(a);
    debug_assert_eq!(n, total(b));
    let mut out = vec![0u64; (a.len() + b.len()).max(1)];
    if n == 0 {
        return out;
    }
    let ka = a.iter().filter(|&&x| x > 0).count() as u64;
    let kb = b.iter().filter(|&&x| x > 0).count() as u64;
    if n < 16 * ka * kb {
        let xs = expand(a);
        let mut ys = expand(b);
        ys.shuffle(rng);
        for (x, y) in xs.iter().zip(&ys) {
            add_at(&mut out, (x + y) as usize, 1);
        }
    } else {
        let mut rest = b.to_vec();
        for (i, &na) in a.iter().enumerate() {
            if na == 0 {
                continue;
            }
            let (taken, remaining) = split(&rest, na, rng);
            for (j, &x) in taken.iter().enumerate() {
                if x > 0 {
                    add_at(&mut out, i + j, x);
                }
            }
            rest = remaining;
        }
    }
    out
}

fn add_into(out: &mut Counts, c: &[u64]) {
    if c.len() > out.len() {
        out.resize(c.len(), 0);
    }
    for (o, &x) in out.iter_mut().zip(c) {
        *o += x;
    }
}

fn trim(mut c: Counts) -> Counts {
    while c.len() > 1 && c.last() == Some(&0) {
        c.pop();
    }
    c
}

/// Histogram of an i.i.d. initial chain: cells hold 1 with probability `p`.
pub fn initial_counts<R: Rng + ?Sized>(length: u64, p: f64, rng: &mut R) -> Result<Counts> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("p must lie in (0,1], got {p}")));
    }
    if p == 1.0 {
        return Ok(vec![0, length]);
    }
    let ones = Binomial::new(length, p)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(rng);
    Ok(vec![length - ones, ones])
}

/// One disordered compression step of an exchangeable chain with histogram
/// `c`, donors going right with probability `r`.
pub fn exchangeable_step<R: Rng + ?Sized>(c: &[u64], r: f64, rng: &mut R) -> Result<Counts> {
    let length = total(c);
    if length == 0 || !length.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "cannot compress a chain of length {length}"
        )));
    }
    let m = length / 2;
    let doubles = Donations::sample(m as usize, r, rng).double_receivers();
    let singles = m - 2 * doubles;

    let (survivors, donors) = split(c, m, rng);
    let (s_double, s_rest) = split(&survivors, doubles, rng);
    let (s_single, s_none) = split(&s_rest, singles, rng);
    let (d_single, d_pairs) = split(&donors, singles, rng);
    let (d_first, d_second) = split(&d_pairs, doubles, rng);

    let mut out = s_none;
    add_into(&mut out, &match_sum(&s_single, &d_single, rng));
    let partial = match_sum(&s_double, &d_first, rng);
    add_into(&mut out, &match_sum(&partial, &d_second, rng));
    Ok(trim(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_preserves_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = vec![5, 0, 17, 3, 900];
        for k in [0, 1, 100, 925] {
            let (a, b) = split(&c, k, &mut rng);
            assert_eq!(total(&a), k);
            for i in 0..c.len() {
                assert_eq!(a[i] + b[i], c[i]);
            }
        }
    }

    #[test]
    fn split_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = vec![3000, 1000];
        let trials = 2000;
        let mean: f64 = (0..trials)
            .map(|_| split(&c, 2000, &mut rng).0[0] as f64)
            .sum::<f64>()
            / trials as f64;
        // hypergeometric mean 1500, sd ~ 13.7, so the mean over 2000 has sd ~0.31
        assert!((mean - 1500.0).abs() < 1.5);
    }

    #[test]
    fn hypergeometric_moments_across_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // (population, marked, draws): small mode on a huge population, both
        // complements, and the large-mode regime
        for (n, k, d) in [
            (1u64 << 40, 3, 1 << 38),
            (1 << 24, (1 << 24) - 5, 1 << 23),
            (1 << 24, 40, (1 << 24) - 100_000),
            (1 << 24, 1 << 20, 1 << 22),
        ] {
            let trials = 20_000;
            let xs: Vec<f64> = (0..trials)
                .map(|_| hypergeometric(n, k, d, &mut rng) as f64)
                .collect();
            let mean = xs.iter().sum::<f64>() / trials as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            let (nf, kf, df) = (n as f64, k as f64, d as f64);
            let want_mean = df * kf / nf;
            let want_var = df * kf / nf * (1.0 - kf / nf) * (nf - df) / (nf - 1.0);
            let se = (want_var / trials as f64).sqrt();
            assert!(
                (mean - want_mean).abs() < 5.0 * se,
                "{n} {k} {d}: {mean} vs {want_mean}"
            );
            assert!(
                (var / want_var - 1.0).abs() < 0.06,
                "{n} {k} {d}: {var} vs {want_var}"
            );
        }
    }

    #[test]
    fn matching_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = vec![0, 40_000, 20_000];
        let b = vec![10_000, 30_000, 0, 20_000];
        let out = match_sum(&a, &b, &mut rng);
        assert_eq!(total(&out), 60_000);
        let mass = |c: &[u64]| {
            c.iter()
                .enumerate()
                .map(|(i, &n)| i as u64 * n)
                .sum::<u64>()
        };
        assert_eq!(mass(&out), mass(&a) + mass(&b));
    }

    #[test]
    fn step_conserves_mass_and_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = initial_counts(1 << 20, 0.5, &mut rng).unwrap();
        let mass0: u64 = c.iter().enumerate().map(|(i, &n)| i as u64 * n).sum();
        for step in 1..=10 {
            c = exchangeable_step(&c, 0.5, &mut rng).unwrap();
            assert_eq!(total(&c), 1 << (20 - step));
            let mass: u64 = c.iter().enumerate().map(|(i, &n)| i as u64 * n).sum();
            assert_eq!(mass, mass0);
        }
    }

    #[test]
    fn first_step_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = exchangeable_step(&[0, 1 << 20], 0.5, &mut rng).unwrap();
        let n = (1u64 << 19) as f64;
        for (w, want) in [(1, 0.25), (2, 0.5), (3, 0.25)] {
            assert!((c[w] as f64 / n - want).abs() < 0.003);
        }
    }
}
