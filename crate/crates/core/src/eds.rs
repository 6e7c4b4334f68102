//! Event-driven simulation: a particle ensemble pushed through the
//! transition maps one arrival at a time.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic::on_zebra_support;
use crate::ecdf::{dkw_bound, EmpiricalDistribution};
use crate::error::Result;
use crate::maps::{step, vehicle_delay_increment};
use crate::model::{ArrivalSampler, DelayState, IntersectionParams, Lane, Policy};

/// Default number of events discarded before statistics are collected.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Default number of recorded events per particle.
pub const DEFAULT_STEPS: usize = 500;
/// Default ensemble size.
pub const DEFAULT_PARTICLES: usize = 10_000;

/// Independent lane-delay states, each with its own random stream.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    states: Vec<DelayState>,
    rngs: Vec<ChaCha8Rng>,
    step_count: usize,
}

impl ParticleEnsemble {
    /// `particles` copies of the empty-intersection state. Particle `k` draws
    /// from stream `k` of the generator keyed by `seed`.
    pub fn new(particles: usize, seed: u64, params: &IntersectionParams) -> Self {
        assert!(particles >= 1, "an ensemble needs at least one particle");
        let rngs = (0..particles as u64)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                rng
            })
            .collect();
        Self {
            states: vec![DelayState::empty(params); particles],
            rngs,
            step_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DelayState] {
        &self.states
    }

    /// Events applied so far.
    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Advances every particle by `steps` events.
    pub fn propagate(
        &mut self,
        policy: Policy,
        params: &IntersectionParams,
        steps: usize,
    ) -> Result<()> {
        let sampler = ArrivalSampler::new(params);
        self.states
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .try_for_each(|(state, rng)| {
                for _ in 0..steps {
                    let event = sampler.sample(rng);
                    *state = step(policy, state, &event, params)?.0;
                }
                Ok(())
            })?;
        self.step_count += steps;
        Ok(())
    }

    /// Advances every particle by `steps` events and records the delay each
    /// arrival causes. Every `stride`-th delay per particle is kept for the
    /// empirical distribution; the mean uses all of them. Window means split
    /// the run into `windows` equal blocks.
    pub fn vehicle_delay_distribution(
        &mut self,
        policy: Policy,
        params: &IntersectionParams,
        steps: usize,
        options: &CollectOptions,
    ) -> Result<VehicleDelaySample> {
        assert!(steps >= 1, "at least one event is required");
        let stride = options.stride.max(1);
        let windows = options.windows.clamp(1, steps);
        let window_len = steps / windows;
        let sampler = ArrivalSampler::new(params);
        let per_particle: Vec<ParticleRecord> = self
            .states
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .map(|(state, rng)| -> Result<ParticleRecord> {
                let mut record = ParticleRecord {
                    kept: Vec::with_capacity(steps / stride + 1),
                    sum: 0.0,
                    window_sums: vec![0.0; windows],
                };
                for k in 0..steps {
                    let event = sampler.sample(rng);
                    let (next, _) = step(policy, state, &event, params)?;
                    let d = vehicle_delay_increment(state, &next, &event, params);
                    *state = next;
                    record.sum += d;
                    let w = k / window_len;
                    if w < windows {
                        record.window_sums[w] += d;
                    }
                    if (k + 1) % stride == 0 {
                        record.kept.push(d);
                    }
                }
                Ok(record)
            })
            .collect::<Result<_>>()?;
        self.step_count += steps;

        let n = per_particle.len();
        let per_event = |sum: f64| sum / steps as f64;
        let mean = per_particle.iter().map(|r| per_event(r.sum)).sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = per_particle
                .iter()
                .map(|r| (per_event(r.sum) - mean).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        let mut window_means = vec![0.0; windows];
        for r in &per_particle {
            for (acc, s) in window_means.iter_mut().zip(&r.window_sums) {
                *acc += s;
            }
        }
        for m in &mut window_means {
            *m /= (n * window_len) as f64;
        }
        let kept: Vec<f64> = per_particle.into_iter().flat_map(|r| r.kept).collect();
        Ok(VehicleDelaySample {
            distribution: EmpiricalDistribution::from_samples(kept),
            mean,
            std_error,
            window_means,
            window_len,
        })
    }

    /// Per-lane delay samples (a particle counts toward the lane holding the
    /// strictly larger delay) and the joint sample set.
    pub fn lane_delay_distribution(&self) -> LaneDelaySamples {
        let n = self.states.len();
        let mut lanes: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for s in &self.states {
            if let Some(lane) = s.dominant_lane() {
                lanes[lane.index()].push(s.get(lane));
            }
        }
        let [a, b] = lanes;
        LaneDelaySamples {
            lanes: [
                EmpiricalDistribution::with_population(a, n),
                EmpiricalDistribution::with_population(b, n),
            ],
            joint: self.states.iter().map(|s| (s.t1(), s.t2())).collect(),
        }
    }

    /// Fraction of particles on the striped support.
    pub fn zebra_mass(&self, params: &IntersectionParams, eps: f64) -> f64 {
        let on = self
            .states
            .iter()
            .filter(|s| on_zebra_support(s.t1(), s.t2(), params, eps))
            .count();
        on as f64 / self.states.len() as f64
    }

    /// Fraction of particles whose larger delay sits in `lane`.
    pub fn dominance_fraction(&self, lane: Lane) -> f64 {
        let k = self
            .states
            .iter()
            .filter(|s| s.dominant_lane() == Some(lane))
            .count();
        k as f64 / self.states.len() as f64
    }
}

struct ParticleRecord {
    kept: Vec<f64>,
    sum: f64,
    window_sums: Vec<f64>,
}

/// Options for delay collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectOptions {
    pub stride: usize,
    pub windows: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            windows: 5,
        }
    }
}

/// Delay statistics gathered over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDelaySample {
    /// Kept delays.
    pub distribution: EmpiricalDistribution,
    /// Mean delay per event over all particles and events.
    pub mean: f64,
    /// Standard error of `mean` from per-particle means.
    pub std_error: f64,
    /// Ensemble mean delay in consecutive blocks of `window_len` events.
    pub window_means: Vec<f64>,
    pub window_len: usize,
}

/// Lane-delay samples from an ensemble snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneDelaySamples {
    pub lanes: [EmpiricalDistribution; 2],
    pub joint: Vec<(f64, f64)>,
}

/// Outcome of the growth test on windowed mean delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceVerdict {
    pub diverging: bool,
    /// Fitted growth of mean delay, s per event.
    pub slope: f64,
    /// One-sided p-value for positive growth.
    pub p_value: f64,
}

/// Smallest growth (s per event) treated as divergence.
pub const DIVERGENCE_SLOPE: f64 = 1e-3;
/// Significance level of the growth test.
pub const DIVERGENCE_ALPHA: f64 = 0.01;

/// Least-squares growth test on window means `window_len` events apart.
pub fn trend_verdict(window_means: &[f64], window_len: usize) -> DivergenceVerdict {
    let n = window_means.len();
    assert!(n >= 3, "the growth test needs at least three windows");
    let xs: Vec<f64> = (0..n)
        .map(|k| ((k as f64) + 0.5) * window_len as f64)
        .collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = window_means.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(window_means)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs
        .iter()
        .zip(window_means)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let df = (n - 2) as f64;
    let se = (ssr / df / sxx).sqrt();
    let p_value = if !slope.is_finite() {
        1.0
    } else if se == 0.0 {
        if slope > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        1.0 - t.cdf(slope / se)
    };
    DivergenceVerdict {
        diverging: slope > DIVERGENCE_SLOPE && p_value < DIVERGENCE_ALPHA,
        slope,
        p_value,
    }
}

/// Settings for the divergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOptions {
    pub particles: usize,
    pub burn_in: usize,
    pub windows: usize,
    pub window_len: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            particles: 2000,
            burn_in: DEFAULT_BURN_IN,
            windows: 5,
            window_len: 400,
            seed: 0,
        }
    }
}

/// Runs a fresh ensemble and tests whether mean delay keeps growing.
pub fn divergence_probe(
    policy: Policy,
    params: &IntersectionParams,
    options: &ProbeOptions,
) -> Result<DivergenceVerdict> {
    let mut ensemble = ParticleEnsemble::new(options.particles, options.seed, params);
    ensemble.propagate(policy, params, options.burn_in)?;
    let steps = options.windows * options.window_len;
    let sample = ensemble.vehicle_delay_distribution(
        policy,
        params,
        steps,
        &CollectOptions {
            stride: steps,
            windows: options.windows,
        },
    )?;
    Ok(trend_verdict(&sample.window_means, sample.window_len))
}

/// Windowed comparison of lane-delay snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityCheck {
    /// Largest per-lane sup-norm distance between the two snapshots.
    pub distance: f64,
    /// Allowed distance: twice the 0.99 DKW half-width.
    pub tolerance: f64,
}

impl StationarityCheck {
    pub fn passed(&self) -> bool {
        self.distance <= self.tolerance
    }
}

/// Compares lane-delay snapshots taken `gap` events apart.
pub fn stationarity_check(
    ensemble: &mut ParticleEnsemble,
    policy: Policy,
    params: &IntersectionParams,
    gap: usize,
) -> Result<StationarityCheck> {
    let before = ensemble.lane_delay_distribution();
    ensemble.propagate(policy, params, gap)?;
    let after = ensemble.lane_delay_distribution();
    let distance = before
        .lanes
        .iter()
        .zip(&after.lanes)
        .map(|(a, b)| a.sup_distance_empirical(b))
        .fold(0.0, f64::max);
    Ok(StationarityCheck {
        distance,
        tolerance: 2.0 * dkw_bound(ensemble.len(), 0.99),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_is_identity() {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
        let mut e = ParticleEnsemble::new(10, 1, &p);
        let before = e.states().to_vec();
        e.propagate(Policy::Fo, &p, 0).unwrap();
        assert_eq!(e.states(), &before[..]);
        assert_eq!(e.step_count(), 0);
    }

    #[test]
    fn trend_verdict_detects_line() {
        let v = trend_verdict(&[1.0, 1.5, 2.0, 2.5, 3.0], 100);
        assert!(v.diverging);
        assert!((v.slope - 0.005).abs() < 1e-15);
        let flat = trend_verdict(&[1.0, 1.01, 0.99, 1.0, 1.0], 100);
        assert!(!flat.diverging);
    }
}
