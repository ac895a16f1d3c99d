//! Cross-checks of the evaluators and the allocator against independent
//! oracles: Monte-Carlo vs closed form, grid search vs bisection, and
//! per-realization properties of the log-det estimators.

use noma_core::asymptotic::{asym_strong_capacity, asym_weak_capacity, mp_law, mp_mass};
use noma_core::channel::{
    db_to_linear, gram_spectrum, mc_strong_capacity, mc_weak_capacity, sample_channel,
    shannon_logdet, SpectrumBank,
};
use noma_core::optimizer::{bisect_allocate, sum_capacity_at};
use noma_core::{AllocationProblem, Method, MonteCarlo, PowerSplit, SeedStream, SystemConfig};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn monte_carlo_weak_rate_near_closed_form_at_64() {
    let cfg = SystemConfig::square(64, 100.0, 1000.0).unwrap();
    let split = PowerSplit::new(1.0, 1.0).unwrap();
    let mc = mc_weak_capacity(&cfg, split, &MonteCarlo::new(200, 17)).unwrap();
    let asym = asym_weak_capacity(split, &cfg);
    assert!(rel(mc.value, asym) < 0.03, "mc {mc:?} asym {asym}");
}

#[test]
fn monte_carlo_strong_rate_near_closed_form_at_64() {
    let cfg = SystemConfig::square(64, 1.0, db_to_linear(5.0)).unwrap();
    let mc = mc_strong_capacity(&cfg, 1.0, &MonteCarlo::new(200, 23)).unwrap();
    let asym = asym_strong_capacity(1.0, &cfg);
    assert!(rel(mc.value, asym) < 0.03, "mc {mc:?} asym {asym}");
}

#[test]
fn evaluators_agree_on_sum_at_64() {
    let cfg = SystemConfig::square(64, db_to_linear(5.0), db_to_linear(20.0)).unwrap();
    let p = AllocationProblem::new(cfg, 4.0, 2.0)
        .with_trials(200)
        .with_seed(8);
    let split = PowerSplit::new(0.03, 0.0325).unwrap();
    let a = sum_capacity_at(&p.with_method(Method::Asymptotic), split).unwrap();
    let m = sum_capacity_at(&p.with_method(Method::MonteCarlo), split).unwrap();
    assert!(rel(m.sum.value, a.sum.value) < 0.03, "{m:?} vs {a:?}");
}

/// Exhaustive search over `p_2` on `[0, budget]` with `steps + 1` points.
fn grid_optimum(p: &AllocationProblem, steps: usize) -> (f64, f64) {
    let budget = p.budget();
    (0..=steps)
        .map(|k| budget * k as f64 / steps as f64)
        .filter_map(|p_2| {
            let split = PowerSplit {
                p_1: budget - p_2,
                p_2,
            };
            let c_1 = asym_weak_capacity(split, &p.cfg);
            (c_1 >= p.r_0).then(|| (p_2, c_1 + asym_strong_capacity(p_2, &p.cfg)))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("feasible grid point")
}

#[test]
fn bisection_matches_grid_search() {
    for (n, p_max, r_0) in [
        (16, 4.0, 2.0),
        (8, 1.0, 0.5),
        (32, 16.0, 3.0),
        (4, 2.0, 1.2),
    ] {
        let cfg = SystemConfig::square(n, db_to_linear(5.0), db_to_linear(20.0)).unwrap();
        // The sum tolerance is only reachable when slope * epsilon < 1e-3.
        let mut p = AllocationProblem::new(cfg, p_max, r_0);
        p.epsilon = 2e-4 * p.budget();
        let r = bisect_allocate(&p).unwrap();
        let (p_2, sum) = grid_optimum(&p, 10_000);
        assert!(
            (r.p_2 - p_2).abs() <= p.epsilon,
            "n {n}: {} vs {p_2}",
            r.p_2
        );
        // The returned split is feasible, so it cannot beat the true optimum
        // by more than the grid's own resolution error.
        assert!(r.sum >= sum - 1e-3, "n {n}: {} vs {sum}", r.sum);
        assert!(r.c_1 >= r_0);
    }
}

#[test]
fn unequal_antenna_counts_allocate() {
    let cfg = SystemConfig::new(32, 8, 16, db_to_linear(3.0), db_to_linear(15.0)).unwrap();
    let p = AllocationProblem::new(cfg, 8.0, 1.0);
    let r = bisect_allocate(&p).unwrap();
    let (p_2, _) = grid_optimum(&p, 10_000);
    assert!((r.p_2 - p_2).abs() <= p.epsilon);
    assert!(r.sic_ok);
}

/// L1 distance between binned eigenvalue frequencies and MP bin masses,
/// pooling `matrices` independent Gram matrices.
fn pooled_histogram_l1(n: usize, matrices: usize, bins: usize, beta: f64) -> f64 {
    let law = mp_law(beta).unwrap();
    let n_tx = (n as f64 / beta).round() as usize;
    let width = law.b / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    let streams = SeedStream::new(31);
    let mut total = 0usize;
    for m in 0..matrices {
        let spectrum =
            gram_spectrum(&sample_channel(n, n_tx, 1.0, &mut streams.trial(m as u64))).unwrap();
        for x in spectrum {
            total += 1;
            match (x / width).floor() as usize {
                k if k < bins => counts[k] += 1,
                _ => outside += 1,
            }
        }
    }
    let mut l1 = outside as f64 / total as f64;
    for (k, &c) in counts.iter().enumerate() {
        let expected = mp_mass(&law, k as f64 * width, (k + 1) as f64 * width).unwrap();
        l1 += (c as f64 / total as f64 - expected).abs();
    }
    l1
}

#[test]
fn pooled_spectrum_converges_to_mp() {
    // A single 512x512 draw sits near 0.057 on average; pooling removes
    // most of the per-matrix fluctuation.
    let l1 = pooled_histogram_l1(512, 16, 50, 1.0);
    assert!(l1 < 0.03, "pooled L1 {l1}");
    // Rank-deficient case: half the mass sits in the zero atom.
    let l1 = pooled_histogram_l1(128, 16, 25, 2.0);
    assert!(l1 < 0.05, "beta 2 pooled L1 {l1}");
}

fn bank(n_rx: usize, n_tx: usize, gain: f64, seed: u64) -> SpectrumBank {
    SpectrumBank::sample(n_rx, n_tx, gain, &MonteCarlo::new(6, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weak_rate_monotone_per_realization(
        seed in any::<u64>(),
        p_1 in 0.0f64..5.0,
        p_2 in 0.0f64..5.0,
        dp in 0.0f64..2.0,
    ) {
        let b = bank(4, 3, 2.5, seed);
        let base = b.difference_samples(p_1 + p_2, p_2);
        let more_p1 = b.difference_samples(p_1 + dp + p_2, p_2);
        let more_p2 = b.difference_samples(p_1 + p_2 + dp, p_2 + dp);
        for i in 0..base.len() {
            prop_assert!(base[i] >= 0.0);
            prop_assert!(more_p1[i] >= base[i] - 1e-12);
            prop_assert!(more_p2[i] <= base[i] + 1e-12);
        }
        let s0 = b.logdet_samples(p_2);
        let s1 = b.logdet_samples(p_2 + dp);
        prop_assert!(s0.iter().zip(&s1).all(|(a, b)| b >= a));
    }

    #[test]
    fn gain_power_exchangeable(seed in any::<u64>(), g in 0.1f64..100.0, p_1 in 0.0f64..3.0, p_2 in 0.0f64..3.0) {
        let mc = MonteCarlo::new(5, seed);
        let a = mc_weak_capacity(&SystemConfig::square(4, g, 2.0 * g).unwrap(), PowerSplit { p_1, p_2 }, &mc).unwrap();
        let b = mc_weak_capacity(
            &SystemConfig::square(4, 1.0, 2.0).unwrap(),
            PowerSplit { p_1: p_1 * g, p_2: p_2 * g },
            &mc,
        ).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9 * a.value.max(1.0));
    }

    #[test]
    fn logdet_bounded_by_top_eigenvalue(seed in any::<u64>(), n_rx in 1usize..7, n_tx in 1usize..7, alpha in 0.0f64..20.0) {
        let mut rng = SeedStream::new(seed).trial(0);
        let spec = gram_spectrum(&sample_channel(n_rx, n_tx, 1.0, &mut rng)).unwrap();
        let top = (1.0 + alpha * spec[0]).log2();
        let v = shannon_logdet(&spec, alpha);
        prop_assert!(v >= top - 1e-12);
        prop_assert!(v <= n_rx as f64 * top + 1e-12);
    }

    #[test]
    fn estimates_reproducible(seed in any::<u64>()) {
        let cfg = SystemConfig::new(3, 2, 4, 1.0, 3.0).unwrap();
        let mc = MonteCarlo::new(4, seed);
        prop_assert_eq!(mc_strong_capacity(&cfg, 0.7, &mc).unwrap(), mc_strong_capacity(&cfg, 0.7, &mc).unwrap());
    }
}
