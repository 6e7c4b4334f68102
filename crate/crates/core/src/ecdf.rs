//! Empirical distributions and sup-norm comparisons.

use crate::dist::Cdf;

/// Sorted samples with a possibly larger population count.
///
/// When `population > samples.len()`, the missing members are outside the
/// described event and the CDF tops out below one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    population: usize,
}

impl EmpiricalDistribution {
    /// Ordinary empirical distribution of `samples`.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len();
        Self::with_population(samples, n)
    }

    /// Sub-distribution: `samples` out of `population` draws.
    pub fn with_population(mut samples: Vec<f64>, population: usize) -> Self {
        assert!(samples.len() <= population, "more samples than population");
        assert!(samples.iter().all(|v| !v.is_nan()), "NaN sample");
        samples.sort_by(f64::total_cmp);
        Self {
            samples,
            population,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn population(&self) -> usize {
        self.population
    }

    fn fraction(&self, count: usize) -> f64 {
        if self.population == 0 {
            0.0
        } else {
            count as f64 / self.population as f64
        }
    }

    /// Fraction of the population at or below `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.fraction(self.samples.partition_point(|&v| v <= t))
    }

    /// Fraction of the population strictly below `t`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        self.fraction(self.samples.partition_point(|&v| v < t))
    }

    /// Fraction of the population within `tol` of `location`.
    pub fn atom_mass(&self, location: f64, tol: f64) -> f64 {
        let lo = self.samples.partition_point(|&v| v < location - tol);
        let hi = self.samples.partition_point(|&v| v <= location + tol);
        self.fraction(hi - lo)
    }

    /// Mean of the recorded samples.
    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sup-norm distance to a distribution given in closed form.
    ///
    /// Both CDFs are monotone and the empirical one is flat between samples,
    /// so the supremum is reached at a sample or a jump of `other`, from the
    /// left or the right.
    pub fn sup_distance<C: Cdf + ?Sized>(&self, other: &C) -> f64 {
        let mut points: Vec<f64> = self.samples.clone();
        points.extend(other.jump_points());
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut sup = (Cdf::total_mass(self) - other.total_mass()).abs();
        for &t in &points {
            sup = sup
                .max((self.cdf(t) - other.cdf(t)).abs())
                .max((self.cdf_left(t) - other.cdf_left(t)).abs());
        }
        sup
    }

    /// Two-sample sup-norm distance.
    pub fn sup_distance_empirical(&self, other: &EmpiricalDistribution) -> f64 {
        let mut sup = (Cdf::total_mass(self) - Cdf::total_mass(other)).abs();
        for &t in self.samples.iter().chain(&other.samples) {
            sup = sup.max((self.cdf(t) - other.cdf(t)).abs());
        }
        sup
    }
}

impl Cdf for EmpiricalDistribution {
    fn cdf(&self, t: f64) -> f64 {
        EmpiricalDistribution::cdf(self, t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        EmpiricalDistribution::cdf_left(self, t)
    }

    fn total_mass(&self) -> f64 {
        self.fraction(self.samples.len())
    }

    fn jump_points(&self) -> Vec<f64> {
        let mut pts = self.samples.clone();
        pts.dedup();
        pts
    }
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width for `n` samples at `confidence`.
pub fn dkw_bound(n: usize, confidence: f64) -> f64 {
    let alpha = 1.0 - confidence;
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Atom, ExpTerm, Segment, SteadyStateDistribution};

    #[test]
    fn cdf_is_right_continuous() {
        let e = EmpiricalDistribution::from_samples(vec![0.0, 0.0, 1.0, 2.0]);
        assert_eq!(e.cdf(0.0), 0.5);
        assert_eq!(e.cdf_left(0.0), 0.0);
        assert_eq!(e.cdf(1.5), 0.75);
        assert_eq!(e.cdf(5.0), 1.0);
        assert_eq!(e.atom_mass(0.0, 1e-12), 0.5);
    }

    #[test]
    fn population_scales_mass() {
        let e = EmpiricalDistribution::with_population(vec![1.0], 4);
        assert_eq!(e.cdf(2.0), 0.25);
        assert_eq!(Cdf::total_mass(&e), 0.25);
    }

    #[test]
    fn sup_distance_sees_atoms() {
        let analytic = SteadyStateDistribution::new(
            vec![
                Atom {
                    location: 0.0,
                    mass: 0.5,
                },
                Atom {
                    location: 1.0,
                    mass: 0.5,
                },
            ],
            vec![
                Segment::new(0.0, 1.0, 0.5, vec![ExpTerm::new(0.0, 0.0, 0.0)]),
                Segment::new(1.0, f64::INFINITY, 1.0, vec![]),
            ],
        );
        let e = EmpiricalDistribution::from_samples(vec![0.0, 0.0, 0.0, 1.0]);
        assert!((e.sup_distance(&analytic) - 0.25).abs() < 1e-15);
        let same = EmpiricalDistribution::from_samples(vec![0.0, 1.0]);
        assert!(same.sup_distance(&analytic) < 1e-15);
    }

    #[test]
    fn two_sample_distance() {
        let a = EmpiricalDistribution::from_samples(vec![0.0, 1.0]);
        let b = EmpiricalDistribution::from_samples(vec![0.5, 1.0]);
        assert_eq!(a.sup_distance_empirical(&b), 0.5);
    }

    #[test]
    fn dkw_value() {
        let eps = dkw_bound(100_000, 0.99);
        assert!((eps - (200f64.ln() / 200_000.0).sqrt()).abs() < 1e-15);
    }
}
