mod common;

use common::rng;
use crossflow_core::analytic::{
    fo_lane_distribution, fo_vehicle_delay, on_zebra_support, FoVariant,
};
use crossflow_core::dist::SteadyStateDistribution;
use crossflow_core::ecdf::dkw_bound;
use crossflow_core::eds::{
    divergence_probe, stationarity_check, CollectOptions, ParticleEnsemble, ProbeOptions,
};
use crossflow_core::model::{ArrivalSampler, IntersectionParams, Lane, Policy};
use rayon::ThreadPoolBuilder;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn gaps_are_exponential_and_lanes_bernoulli() {
    let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
    let sampler = ArrivalSampler::new(&p);
    let mut r = rng(21);
    let n = 100_000;
    let bins = 20;
    let mut counts = vec![0usize; bins];
    let mut lane_one = 0usize;
    for _ in 0..n {
        let e = sampler.sample(&mut r);
        let u = 1.0 - (-p.lambda_total() * e.gap()).exp();
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        if e.lane() == Lane::One {
            lane_one += 1;
        }
    }
    let expected = n as f64 / bins as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi-square {chi2}, p {p_value}");
    let share = p.lane_prob(Lane::One);
    let sd = (share * (1.0 - share) / n as f64).sqrt();
    assert!((lane_one as f64 / n as f64 - share).abs() < 4.0 * sd);
}

fn run_with_threads(threads: usize) -> (Vec<(u64, u64)>, Vec<u64>) {
    let pool = ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.5).unwrap();
        let mut e = ParticleEnsemble::new(500, 7, &p);
        e.propagate(Policy::Fifo, &p, 100).unwrap();
        let s = e
            .vehicle_delay_distribution(Policy::Fifo, &p, 50, &CollectOptions::default())
            .unwrap();
        let states = e
            .states()
            .iter()
            .map(|s| (s.t1().to_bits(), s.t2().to_bits()))
            .collect();
        let mut delays: Vec<u64> = s
            .distribution
            .samples()
            .iter()
            .map(|d| d.to_bits())
            .collect();
        delays.push(s.mean.to_bits());
        delays.push(s.std_error.to_bits());
        (states, delays)
    })
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = run_with_threads(1);
    assert_eq!(one, run_with_threads(3));
    assert_eq!(one, run_with_threads(1));
}

#[test]
fn sparse_traffic_rarely_waits() {
    let p = IntersectionParams::from_total(0.01, 0.5, 2.0, 0.0).unwrap();
    for policy in [Policy::Fifo, Policy::Fo] {
        let mut e = ParticleEnsemble::new(10_000, 3, &p);
        e.propagate(policy, &p, 50).unwrap();
        let s = e
            .vehicle_delay_distribution(policy, &p, 20, &CollectOptions::default())
            .unwrap();
        assert!(
            s.distribution.cdf(0.0) >= 0.99,
            "{policy}: {}",
            s.distribution.cdf(0.0)
        );
    }
}

fn burned_in(
    policy: Policy,
    p: &IntersectionParams,
    particles: usize,
    burn_in: usize,
    seed: u64,
) -> ParticleEnsemble {
    let mut e = ParticleEnsemble::new(particles, seed, p);
    e.propagate(policy, p, burn_in).unwrap();
    e
}

#[test]
fn lane_dominance_matches_arrival_share_for_fifo() {
    let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
    let e = burned_in(Policy::Fifo, &p, 20_000, 1000, 4);
    let share = p.lane_prob(Lane::One);
    let sd = (share * (1.0 - share) / e.len() as f64).sqrt();
    let got = e.dominance_fraction(Lane::One);
    assert!((got - share).abs() < 4.0 * sd, "{got} vs {share}");
}

/// Under flexible order the lane that holds the larger delay is not in
/// proportion to arrivals; the balance equations give its share instead.
#[test]
fn lane_dominance_for_fo_follows_balance_solution() {
    let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
    let e = burned_in(Policy::Fo, &p, 20_000, 1000, 5);
    let mass = crossflow_core::analytic::fo_constants(&p, FoVariant::Balanced).mass[0];
    let sd = (mass * (1.0 - mass) / e.len() as f64).sqrt();
    let got = e.dominance_fraction(Lane::One);
    assert!((got - mass).abs() < 4.0 * sd, "{got} vs {mass}");
    assert!((got - p.lane_prob(Lane::One)).abs() > 4.0 * sd);
}

#[test]
fn fifo_support_is_striped_with_same_lane_gap() {
    let p = IntersectionParams::new(0.1, 0.5, 2.0, 1.0).unwrap();
    let e = burned_in(Policy::Fifo, &p, 10_000, 2000, 6);
    assert!(e.zebra_mass(&p, 1e-6) >= 0.99);
}

#[test]
fn zero_same_lane_gap_support() {
    let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
    for policy in [Policy::Fifo, Policy::Fo] {
        let e = burned_in(policy, &p, 10_000, 1000, 8);
        assert!(e.zebra_mass(&p, 1e-6) >= 0.99, "{policy}");
        if policy == Policy::Fo {
            assert!(e
                .states()
                .iter()
                .filter(|s| on_zebra_support(s.t1(), s.t2(), &p, 1e-6))
                .all(|s| s.t1() + s.t2() <= p.delta_d() + 1e-9));
        }
    }
}

#[test]
fn converged_runs_are_stationary() {
    let cases = [
        (
            Policy::Fifo,
            IntersectionParams::from_total(0.5, 0.5, 2.0, 0.0).unwrap(),
        ),
        (
            Policy::Fo,
            IntersectionParams::from_total(1.0, 0.5, 2.0, 0.0).unwrap(),
        ),
        (
            Policy::Fo,
            IntersectionParams::new(0.1, 0.5, 2.0, 1.0).unwrap(),
        ),
    ];
    for (policy, p) in cases {
        let mut e = burned_in(policy, &p, 10_000, 1000, 9);
        let check = stationarity_check(&mut e, policy, &p, 200).unwrap();
        assert!(check.passed(), "{policy}: {check:?}");
    }
}

#[test]
fn divergence_probe_examples() {
    let opts = ProbeOptions::default();
    let unstable = IntersectionParams::from_total(1.2, 0.5, 2.0, 0.0).unwrap();
    assert!(
        divergence_probe(Policy::Fifo, &unstable, &opts)
            .unwrap()
            .diverging
    );
    let calm = IntersectionParams::from_total(0.5, 0.5, 2.0, 0.0).unwrap();
    assert!(
        !divergence_probe(Policy::Fifo, &calm, &opts)
            .unwrap()
            .diverging
    );
    let dense = IntersectionParams::from_total(4.0, 0.5, 2.0, 0.0).unwrap();
    assert!(
        !divergence_probe(Policy::Fo, &dense, &opts)
            .unwrap()
            .diverging
    );
}

/// Largest gap between a sub-distribution and the empirical snapshot.
fn lane_gap(
    samples: &crossflow_core::ecdf::EmpiricalDistribution,
    g: &SteadyStateDistribution,
) -> f64 {
    samples.sup_distance(g)
}

/// Flexible order has an exact steady state; the balance solution tracks the
/// simulated one within the sampling band on a grid of densities, ratios and
/// gaps. The band holds jointly at 0.99 over all 81 comparisons.
#[test]
fn fo_balanced_steady_state_within_sampling_band() {
    let n = 100_000;
    let band = dkw_bound(n, 1.0 - 0.01 / 81.0);
    let mut seed = 100;
    for lambda in [0.25, 1.0, 2.0] {
        for ratio in [0.2, 0.6, 1.0] {
            for dd in [0.5, 1.5, 3.0] {
                seed += 1;
                let p = IntersectionParams::from_total(lambda, ratio, dd, 0.0).unwrap();
                let mut e = burned_in(Policy::Fo, &p, n, 300, seed);
                let lanes = e.lane_delay_distribution();
                let analytic = fo_lane_distribution(&p, FoVariant::Balanced);
                for (k, (sample, g)) in lanes.lanes.iter().zip(&analytic).enumerate() {
                    let gap = lane_gap(sample, g);
                    assert!(gap <= band, "lane {k} gap {gap} > {band} at {p:?}");
                }
                let s = e
                    .vehicle_delay_distribution(Policy::Fo, &p, 1, &CollectOptions::default())
                    .unwrap();
                let d = fo_vehicle_delay(&p, FoVariant::Balanced);
                let gap = s.distribution.sup_distance(&d.distribution);
                assert!(gap <= band, "delay gap {gap} > {band} at {p:?}");
            }
        }
    }
}
