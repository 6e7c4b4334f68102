#![allow(dead_code)]

use crossflow_core::micro::VehicleArrival;
use crossflow_core::model::IntersectionParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Random parameters in the ranges used by the equivalence checks.
pub fn random_params(rng: &mut ChaCha8Rng, delta_s_max: f64) -> IntersectionParams {
    let l1 = rng.random_range(0.05..=1.0);
    let l2 = rng.random_range(0.05..=1.0);
    let dd = rng.random_range(0.5..=3.0);
    let ds = if delta_s_max > 0.0 {
        rng.random_range(0.0..=delta_s_max)
    } else {
        0.0
    };
    IntersectionParams::new(l1, l2, dd, ds).unwrap()
}

/// Poisson two-lane arrivals starting at time zero.
pub fn random_sequence(
    rng: &mut ChaCha8Rng,
    params: &IntersectionParams,
    len: usize,
) -> Vec<VehicleArrival> {
    let gap = Exp::new(params.lambda_total()).unwrap();
    let p1 = params.lambda1() / params.lambda_total();
    let mut t = 0.0;
    (0..len)
        .map(|i| {
            if i > 0 {
                t += gap.sample(rng);
            }
            let lane = if rng.random::<f64>() < p1 { 0 } else { 1 };
            VehicleArrival::new(t, lane)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
