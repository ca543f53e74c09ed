use compresslab::sim::{
    arrange, compare_with_simulation, compress_step, donate, exchangeable_step, histogram,
    init_chain, init_chain_with, initial_counts, run_experiment, Chain, Donations, Engine, Mode,
    SimConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mode_strategy() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Ordered), Just(Mode::Disordered)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn steps_conserve_mass_and_halve(
        weights in prop::collection::vec(0u64..300, 1..64),
        mode in mode_strategy(),
        r in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let mut weights = weights;
        if weights.len() % 2 == 1 {
            weights.push(1);
        }
        let chain = Chain::from_weights(&weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next = compress_step(&chain, mode, r, &mut rng).unwrap();
        prop_assert_eq!(next.len(), chain.len() / 2);
        prop_assert_eq!(next.mass(), chain.mass());
        prop_assert_eq!(next.to_vec().iter().sum::<u64>(), chain.mass());
    }

    #[test]
    fn histograms_account_for_cells_and_mass(
        log_len in 3u32..10,
        steps in 1usize..4,
        p in 0.05f64..=1.0,
        mode in mode_strategy(),
        seed in any::<u64>(),
    ) {
        let length = 1u64 << log_len;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chain = init_chain_with(length as usize, p, &mut rng).unwrap();
        let mass = chain.mass();
        for step in 1..=steps.min(log_len as usize) {
            chain = compress_step(&chain, mode, 0.5, &mut rng).unwrap();
            let h = histogram(&chain, step);
            prop_assert_eq!(h.counts.iter().sum::<u64>(), h.total_cells);
            prop_assert_eq!(h.total_cells, length >> step);
            let weighted: u64 = h.support().map(|(i, n)| i as u64 * n).sum();
            prop_assert_eq!(weighted, mass);
        }
    }

    #[test]
    fn exchangeable_steps_conserve_mass(
        log_len in 2u32..24,
        p in 0.01f64..=1.0,
        r in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = initial_counts(1 << log_len, p, &mut rng).unwrap();
        let mass: u64 = c.iter().enumerate().map(|(i, &n)| i as u64 * n).sum();
        for step in 1..=log_len.min(6) {
            c = exchangeable_step(&c, r, &mut rng).unwrap();
            prop_assert_eq!(c.iter().sum::<u64>(), 1u64 << (log_len - step));
            prop_assert_eq!(c.iter().enumerate().map(|(i, &n)| i as u64 * n).sum::<u64>(), mass);
        }
    }

    #[test]
    fn one_step_histogram_ignores_the_permutation(
        weights in prop::collection::vec(0u64..50, 2..64),
        seed in any::<u64>(),
    ) {
        let mut weights = weights;
        if weights.len() % 2 == 1 {
            weights.pop();
        }
        let chain = Chain::from_weights(&weights).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let donations = Donations::sample(chain.len() / 2, 0.5, &mut rng);
        let ordered = donate(&chain, &donations).unwrap();
        let mut disordered = ordered.clone();
        arrange(&mut disordered, Mode::Disordered, &mut rng);
        prop_assert_eq!(histogram(&ordered, 1), histogram(&disordered, 1));
    }
}

#[test]
fn trajectories_and_reports_are_reproducible() {
    let trajectory = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chain = init_chain(1 << 10, 0.7, seed).unwrap();
        let mut all = vec![chain.to_vec()];
        for _ in 0..5 {
            chain = compress_step(&chain, Mode::Disordered, 0.5, &mut rng).unwrap();
            all.push(chain.to_vec());
        }
        all
    };
    assert_eq!(trajectory(3), trajectory(3));
    assert_ne!(trajectory(3), trajectory(4));

    let config = SimConfig {
        length: 1 << 14,
        steps: 4,
        mode: Mode::Disordered,
        p: 0.5,
        seed: 99,
        replicas: 6,
        engine: Engine::Chain,
        ..SimConfig::default()
    };
    let bytes = || serde_json::to_vec(&run_experiment(&config).unwrap()).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(bytes);
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(bytes);
    assert_eq!(serial, parallel);
}

#[test]
fn simulator_matches_enumeration_on_short_cycles() {
    for (steps, mode) in [
        (1, Mode::Ordered),
        (1, Mode::Disordered),
        (2, Mode::Ordered),
        (3, Mode::Ordered),
    ] {
        for c in compare_with_simulation(8, steps, mode, 100_000, 2024).unwrap() {
            assert!(
                c.z_score() <= 3.0,
                "{mode} N={steps} i={}: {} vs {} (se {})",
                c.weight,
                c.mean,
                c.exact,
                c.std_error
            );
        }
    }
}

/// Per-weight means and standard errors over independent replicas.
fn replica_stats(
    engine: Engine,
    length: u64,
    steps: usize,
    p: f64,
    seed: u64,
    replicas: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per: Vec<Vec<u64>> = (0..replicas)
        .map(|_| match engine {
            Engine::Exchange => {
                let mut c = initial_counts(length, p, &mut rng).unwrap();
                for _ in 0..steps {
                    c = exchangeable_step(&c, 0.5, &mut rng).unwrap();
                }
                c
            }
            _ => {
                let mut chain = init_chain_with(length as usize, p, &mut rng).unwrap();
                for _ in 0..steps {
                    chain = compress_step(&chain, Mode::Disordered, 0.5, &mut rng).unwrap();
                }
                histogram(&chain, steps).counts
            }
        })
        .collect();
    let n = per.len() as f64;
    let width = per.iter().map(Vec::len).max().unwrap_or(0);
    (0..width)
        .map(|i| {
            let xs: Vec<f64> = per
                .iter()
                .map(|h| h.get(i).copied().unwrap_or(0) as f64)
                .collect();
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

#[test]
fn histogram_sampler_agrees_with_materialized_chains() {
    for p in [1.0, 0.4] {
        let chain = replica_stats(Engine::Chain, 1 << 10, 3, p, 5, 3000);
        let exchange = replica_stats(Engine::Exchange, 1 << 10, 3, p, 6, 3000);
        for (i, (a, b)) in chain.iter().zip(&exchange).enumerate() {
            let se = (a.1 * a.1 + b.1 * b.1).sqrt();
            if se > 0.0 {
                let z = (a.0 - b.0) / se;
                assert!(z.abs() < 4.0, "p={p} i={i}: {a:?} vs {b:?}");
            } else {
                assert_eq!(a.0, b.0, "p={p} i={i}");
            }
        }
    }
}

#[test]
fn ordered_densities_follow_the_tent() {
    let config = SimConfig {
        length: 1 << 18,
        steps: 3,
        mode: Mode::Ordered,
        seed: 11,
        replicas: 4,
        ..SimConfig::default()
    };
    let report = run_experiment(&config).unwrap();
    let h = &report.final_step().histogram;
    let cells = h.total_cells as f64;
    for i in 0..20 {
        let want = compresslab::sim::theory::ordered_density(3, i);
        let sd = (cells * want * (1.0 - want)).sqrt();
        let got = h.count(i) as f64;
        assert!((got - cells * want).abs() <= 3.0 * sd.max(1e-9), "i={i}");
    }
}

#[test]
fn weight_one_fraction_is_a_power_of_one_quarter() {
    for mode in [Mode::Ordered, Mode::Disordered] {
        for steps in [1usize, 3, 5] {
            let config = SimConfig {
                length: 1 << 20,
                steps,
                mode,
                seed: 21,
                replicas: 2,
                ..SimConfig::default()
            };
            let h = run_experiment(&config)
                .unwrap()
                .final_step()
                .histogram
                .clone();
            let cells = h.total_cells as f64;
            let want = 4f64.powi(-(steps as i32));
            let sd = (want * (1.0 - want) / cells).sqrt();
            assert!(
                (h.density(1) - want).abs() <= 3.0 * sd,
                "{mode} N={steps}: {} vs {want}",
                h.density(1)
            );
        }
    }
}

#[test]
fn config_errors_are_reported() {
    let bad = SimConfig {
        length: 6,
        steps: 2,
        ..SimConfig::default()
    };
    assert!(run_experiment(&bad).is_err());
    assert!(init_chain(7, 1.0, 0).is_err());
}
