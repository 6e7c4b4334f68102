//! Parameters, lane-delay state, arrival sampling and the conflict graph.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// One of the two incoming lanes of the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    One,
    Two,
}

impl Lane {
    /// Zero-based index, usable for arrays of per-lane values.
    pub fn index(self) -> usize {
        match self {
            Lane::One => 0,
            Lane::Two => 1,
        }
    }

    /// One-based lane number.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    /// The conflicting lane.
    pub fn other(self) -> Lane {
        match self {
            Lane::One => Lane::Two,
            Lane::Two => Lane::One,
        }
    }

    pub fn from_index(index: usize) -> Option<Lane> {
        match index {
            0 => Some(Lane::One),
            1 => Some(Lane::Two),
            _ => None,
        }
    }

    pub const BOTH: [Lane; 2] = [Lane::One, Lane::Two];
}

/// Vehicle ordering policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// First in, first out among conflicting vehicles.
    Fifo,
    /// Flexible order: a later vehicle passes first when it can clear earlier.
    Fo,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Fifo => "fifo",
            Policy::Fo => "fo",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(Policy::Fifo),
            "fo" => Ok(Policy::Fo),
            other => Err(format!("unknown policy `{other}` (expected fifo or fo)")),
        }
    }
}

/// Validated intersection parameters.
///
/// Rates are in 1/s, gaps in s. `delta_d` is the gap between crossings from
/// conflicting lanes, `delta_s` the gap between crossings from the same lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionParams {
    lambda1: f64,
    lambda2: f64,
    delta_d: f64,
    delta_s: f64,
    lambda_total: f64,
    lane1_prob: f64,
}

impl IntersectionParams {
    /// Validates per-lane rates and gaps.
    pub fn new(lambda1: f64, lambda2: f64, delta_d: f64, delta_s: f64) -> Result<Self> {
        check_rate("lambda1", lambda1)?;
        check_rate("lambda2", lambda2)?;
        check_gap("delta_d", delta_d)?;
        check_gap("delta_s", delta_s)?;
        let lambda_total = lambda1 + lambda2;
        Ok(Self {
            lambda1,
            lambda2,
            delta_d,
            delta_s,
            lambda_total,
            lane1_prob: lambda1 / lambda_total,
        })
    }

    /// Builds parameters from the total rate and the ratio `lambda1 / lambda2`.
    pub fn from_total(lambda: f64, ratio: f64, delta_d: f64, delta_s: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        check_rate("ratio", ratio)?;
        Self::new(
            lambda * ratio / (1.0 + ratio),
            lambda / (1.0 + ratio),
            delta_d,
            delta_s,
        )
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn delta_d(&self) -> f64 {
        self.delta_d
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda_total
    }

    /// Density ratio `lambda1 / lambda2`.
    pub fn ratio(&self) -> f64 {
        self.lambda1 / self.lambda2
    }

    pub fn rate(&self, lane: Lane) -> f64 {
        match lane {
            Lane::One => self.lambda1,
            Lane::Two => self.lambda2,
        }
    }

    /// Probability that the next arrival uses `lane`. The two values sum to exactly 1.
    pub fn lane_prob(&self, lane: Lane) -> f64 {
        match lane {
            Lane::One => self.lane1_prob,
            Lane::Two => 1.0 - self.lane1_prob,
        }
    }

    /// Lower bound of every lane-delay component.
    ///
    /// Equals `-delta_d` whenever `delta_s <= delta_d`. A larger same-lane gap
    /// needs a deeper floor so that the same-lane constraint stays visible.
    pub fn floor(&self) -> f64 {
        -self.delta_d.max(self.delta_s)
    }

    /// The same intersection with the lane labels exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.lambda2, self.lambda1, self.delta_d, self.delta_s)
            .expect("swapping validated parameters keeps them valid")
    }

    /// Copy with a different same-lane gap.
    pub fn with_delta_s(&self, delta_s: f64) -> Result<Self> {
        Self::new(self.lambda1, self.lambda2, self.delta_d, delta_s)
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRate { name, value })
    }
}

fn check_gap(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeGap { name, value })
    }
}

/// Lane-delay vector `(T1, T2)`: latest passing time in each lane minus the
/// desired time of the newest vehicle. Components never drop below the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayState {
    t: [f64; 2],
}

impl DelayState {
    /// Builds a state, clamping each component at `params.floor()`.
    pub fn new(t1: f64, t2: f64, params: &IntersectionParams) -> Self {
        Self::clamped(t1, t2, params.floor())
    }

    pub(crate) fn clamped(t1: f64, t2: f64, floor: f64) -> Self {
        Self {
            t: [t1.max(floor), t2.max(floor)],
        }
    }

    /// The empty-intersection state, both components at the floor.
    pub fn empty(params: &IntersectionParams) -> Self {
        let f = params.floor();
        Self { t: [f, f] }
    }

    pub fn t1(&self) -> f64 {
        self.t[0]
    }

    pub fn t2(&self) -> f64 {
        self.t[1]
    }

    pub fn get(&self, lane: Lane) -> f64 {
        self.t[lane.index()]
    }

    pub fn as_array(&self) -> [f64; 2] {
        self.t
    }

    /// Components exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t: [self.t[1], self.t[0]],
        }
    }

    /// The lane holding the strictly larger delay, if any.
    pub fn dominant_lane(&self) -> Option<Lane> {
        if self.t[0] > self.t[1] {
            Some(Lane::One)
        } else if self.t[1] > self.t[0] {
            Some(Lane::Two)
        } else {
            None
        }
    }
}

/// Gap to the next arrival and that arrival's lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEvent {
    gap: f64,
    lane: Lane,
}

impl ArrivalEvent {
    pub fn new(gap: f64, lane: Lane) -> Result<Self> {
        check_gap("gap", gap)?;
        Ok(Self { gap, lane })
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn lane(&self) -> Lane {
        self.lane
    }
}

/// Samples arrival events: exponential gaps at the total rate, lane chosen
/// in proportion to the per-lane rates.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalSampler {
    gap: Exp<f64>,
    lane1_prob: f64,
}

impl ArrivalSampler {
    pub fn new(params: &IntersectionParams) -> Self {
        Self {
            gap: Exp::new(params.lambda_total()).expect("validated rate is positive"),
            lane1_prob: params.lane_prob(Lane::One),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArrivalEvent {
        let gap = self.gap.sample(rng);
        let lane = if rng.random::<f64>() < self.lane1_prob {
            Lane::One
        } else {
            Lane::Two
        };
        ArrivalEvent { gap, lane }
    }
}

/// Draws one arrival event from `rng`.
pub fn sample_arrival<R: Rng + ?Sized>(rng: &mut R, params: &IntersectionParams) -> ArrivalEvent {
    ArrivalSampler::new(params).sample(rng)
}

/// Conflict relation over incoming lanes. Lanes are numbered `0..lane_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    lane_count: usize,
    conflicts: Vec<bool>,
}

impl ConflictGraph {
    /// Builds a graph from unordered conflicting lane pairs.
    pub fn new(lane_count: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if lane_count == 0 {
            return Err(Error::InvalidGraph("at least one lane is required".into()));
        }
        let mut conflicts = vec![false; lane_count * lane_count];
        for &(a, b) in pairs {
            if a >= lane_count || b >= lane_count {
                return Err(Error::InvalidGraph(format!(
                    "pair ({a}, {b}) out of range for {lane_count} lanes"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "lane {a} cannot conflict with itself"
                )));
            }
            conflicts[a * lane_count + b] = true;
            conflicts[b * lane_count + a] = true;
        }
        Ok(Self {
            lane_count,
            conflicts,
        })
    }

    /// The two-lane intersection with its single conflict.
    pub fn two_lane() -> Self {
        Self::new(2, &[(0, 1)]).expect("two-lane graph is valid")
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        a < self.lane_count && b < self.lane_count && self.conflicts[a * self.lane_count + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validate_fills_derived_fields() {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
        assert!((p.lambda_total() - 0.8).abs() < 1e-15);
        assert!((p.ratio() - 0.6).abs() < 1e-15);
        assert!((p.lane_prob(Lane::One) - 0.375).abs() < 1e-15);
        let q = IntersectionParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(q.ratio(), 1.0);
        assert_eq!(q.lane_prob(Lane::One), 0.5);
    }

    #[test]
    fn validate_rejects_bad_inputs() {
        assert!(matches!(
            IntersectionParams::new(0.0, 1.0, 2.0, 0.0),
            Err(Error::NonPositiveRate { .. })
        ));
        assert!(matches!(
            IntersectionParams::new(1.0, 1.0, -1.0, 0.0),
            Err(Error::NegativeGap { .. })
        ));
        assert!(matches!(
            IntersectionParams::new(1.0, f64::NAN, 1.0, 0.0),
            Err(Error::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn from_total_splits_by_ratio() {
        let p = IntersectionParams::from_total(1.0, 0.5, 2.0, 0.0).unwrap();
        assert!((p.lambda1() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.lambda2() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn state_constructor_clamps() {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
        let s = DelayState::new(-5.0, 1.0, &p);
        assert_eq!(s.t1(), -2.0);
        assert_eq!(s.t2(), 1.0);
        assert_eq!(DelayState::empty(&p).as_array(), [-2.0, -2.0]);
    }

    #[test]
    fn gap_sample_mean() {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
        let sampler = ArrivalSampler::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut sum, mut lane1) = (0.0, 0usize);
        for _ in 0..n {
            let e = sampler.sample(&mut rng);
            sum += e.gap();
            if e.lane() == Lane::One {
                lane1 += 1;
            }
        }
        assert!((sum / n as f64 - 1.25).abs() < 0.01);
        assert!((lane1 as f64 / n as f64 - 0.375).abs() < 0.002);
    }

    #[test]
    fn same_seed_same_events() {
        let p = IntersectionParams::new(0.3, 0.5, 2.0, 0.0).unwrap();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..100)
                .map(|_| sample_arrival(&mut rng, &p))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn graph_is_symmetric_and_irreflexive() {
        let g = ConflictGraph::new(3, &[(0, 2)]).unwrap();
        assert!(g.conflicts(0, 2) && g.conflicts(2, 0));
        assert!(!g.conflicts(0, 1) && !g.conflicts(1, 1));
        assert!(ConflictGraph::new(2, &[(1, 1)]).is_err());
        assert!(ConflictGraph::new(2, &[(0, 3)]).is_err());
    }
}
