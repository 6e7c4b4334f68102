//! Mixed discrete/continuous distributions on `[0, inf)` held in closed form.
//!
//! A distribution is a list of point masses plus contiguous segments. On each
//! segment the CDF equals a constant plus a sum of exponentials, and already
//! includes the jumps of atoms at or before the segment start.

/// `coef * exp(rate * (t - anchor))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: f64,
    pub rate: f64,
    pub anchor: f64,
}

impl ExpTerm {
    pub fn new(coef: f64, rate: f64, anchor: f64) -> Self {
        Self { coef, rate, anchor }
    }

    fn value(&self, t: f64) -> f64 {
        self.coef * (self.rate * (t - self.anchor)).exp()
    }

    fn derivative(&self, t: f64) -> f64 {
        self.rate * self.value(t)
    }

    /// Value as `t -> inf`; `None` when it diverges.
    fn limit(&self) -> Option<f64> {
        if self.coef == 0.0 || self.rate < 0.0 {
            Some(0.0)
        } else if self.rate == 0.0 {
            Some(self.coef)
        } else {
            None
        }
    }

    /// `int_a^b t d(term)`.
    fn first_moment(&self, a: f64, b: f64) -> f64 {
        if self.rate == 0.0 || self.coef == 0.0 {
            return 0.0;
        }
        let r = self.rate;
        let upper = if b.is_infinite() {
            0.0
        } else {
            (b - 1.0 / r) * self.value(b)
        };
        upper - (a - 1.0 / r) * self.value(a)
    }

    /// `int_a^b exp(-s t) d(term)`.
    fn exp_moment(&self, s: f64, a: f64, b: f64) -> f64 {
        if self.rate == 0.0 || self.coef == 0.0 {
            return 0.0;
        }
        let r = self.rate;
        let k = r - s;
        let scale = self.coef * r * (-r * self.anchor).exp();
        if k == 0.0 {
            return scale * (b - a);
        }
        let upper = if b.is_infinite() { 0.0 } else { (k * b).exp() };
        scale * (upper - (k * a).exp()) / k
    }
}

/// CDF expression on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub constant: f64,
    pub terms: Vec<ExpTerm>,
}

impl Segment {
    pub fn new(start: f64, end: f64, constant: f64, terms: Vec<ExpTerm>) -> Self {
        Self {
            start,
            end,
            constant,
            terms,
        }
    }

    /// The CDF expression evaluated at `t`, regardless of the segment bounds.
    pub fn value(&self, t: f64) -> f64 {
        self.constant + self.terms.iter().map(|term| term.value(t)).sum::<f64>()
    }

    fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.derivative(t)).sum()
    }

    /// Value at the right end (left limit for finite ends).
    pub fn end_value(&self) -> f64 {
        if self.end.is_infinite() {
            self.terms
                .iter()
                .map(|t| t.limit().unwrap_or(f64::INFINITY))
                .sum::<f64>()
                + self.constant
        } else {
            self.value(self.end)
        }
    }
}

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Cumulative distribution with atoms and closed-form segments.
///
/// The total mass may be below one when the distribution describes one part
/// of a split population (for example the delay of one lane when that lane
/// holds the larger delay).
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateDistribution {
    atoms: Vec<Atom>,
    segments: Vec<Segment>,
}

impl SteadyStateDistribution {
    /// Segments must be contiguous, start at 0 and end at infinity.
    pub fn new(mut atoms: Vec<Atom>, segments: Vec<Segment>) -> Self {
        assert!(!segments.is_empty(), "at least one segment is required");
        assert_eq!(segments[0].start, 0.0, "segments start at zero");
        assert!(
            segments.last().unwrap().end.is_infinite(),
            "last segment must be unbounded"
        );
        for pair in segments.windows(2) {
            assert_eq!(pair[0].end, pair[1].start, "segments must be contiguous");
        }
        atoms.retain(|a| a.mass != 0.0);
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        Self { atoms, segments }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Mass of the atom located at `t` (zero if none).
    pub fn atom_mass(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location == t)
            .map(|a| a.mass)
            .sum()
    }

    fn segment_at(&self, t: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.end <= t);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return self.total_mass();
        }
        self.segment_at(t).value(t)
    }

    /// Left limit of the CDF.
    pub fn cdf_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.cdf(t) - self.atom_mass(t)
    }

    /// Density of the continuous part.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.segment_at(t).derivative(t)
    }

    /// Limit of the CDF at infinity.
    pub fn total_mass(&self) -> f64 {
        self.segments.last().unwrap().end_value()
    }

    /// `int t dF`.
    pub fn first_moment(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.location * a.mass).sum();
        let continuous: f64 = self
            .segments
            .iter()
            .flat_map(|s| s.terms.iter().map(move |t| t.first_moment(s.start, s.end)))
            .sum();
        atoms + continuous
    }

    /// Mean of the normalized distribution.
    pub fn mean(&self) -> f64 {
        self.first_moment() / self.total_mass()
    }

    /// `int exp(-s t) dF`.
    pub fn exp_moment(&self, s: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * (-s * a.location).exp())
            .sum();
        let continuous: f64 = self
            .segments
            .iter()
            .flat_map(|seg| {
                seg.terms
                    .iter()
                    .map(move |t| t.exp_moment(s, seg.start, seg.end))
            })
            .sum();
        atoms + continuous
    }

    /// Points where the CDF may jump.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms.iter().map(|a| a.location).collect();
        pts.extend(self.segments.iter().map(|s| s.start));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Pointwise sum of two distributions on the same breakpoints.
    pub fn sum(&self, other: &Self) -> Self {
        assert_eq!(
            self.segments.len(),
            other.segments.len(),
            "breakpoints differ"
        );
        let segments = self
            .segments
            .iter()
            .zip(&other.segments)
            .map(|(a, b)| {
                assert_eq!((a.start, a.end), (b.start, b.end), "breakpoints differ");
                let mut terms = a.terms.clone();
                terms.extend_from_slice(&b.terms);
                Segment::new(a.start, a.end, a.constant + b.constant, terms)
            })
            .collect();
        let mut atoms = self.atoms.clone();
        for b in &other.atoms {
            match atoms.iter_mut().find(|a| a.location == b.location) {
                Some(a) => a.mass += b.mass,
                None => atoms.push(*b),
            }
        }
        Self::new(atoms, segments)
    }
}

/// Anything with a CDF and its left limits.
pub trait Cdf {
    fn cdf(&self, t: f64) -> f64;
    fn cdf_left(&self, t: f64) -> f64;
    fn total_mass(&self) -> f64;
    /// Locations of possible jumps.
    fn jump_points(&self) -> Vec<f64>;
}

impl Cdf for SteadyStateDistribution {
    fn cdf(&self, t: f64) -> f64 {
        SteadyStateDistribution::cdf(self, t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        SteadyStateDistribution::cdf_left(self, t)
    }

    fn total_mass(&self) -> f64 {
        SteadyStateDistribution::total_mass(self)
    }

    fn jump_points(&self) -> Vec<f64> {
        SteadyStateDistribution::jump_points(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Atom 0.25 at zero, then uniform-like exponential rise to 1.
    fn sample() -> SteadyStateDistribution {
        SteadyStateDistribution::new(
            vec![Atom {
                location: 0.0,
                mass: 0.25,
            }],
            vec![Segment::new(
                0.0,
                f64::INFINITY,
                1.0,
                vec![ExpTerm::new(-0.75, -2.0, 0.0)],
            )],
        )
    }

    #[test]
    fn cdf_and_limits() {
        let d = sample();
        assert_eq!(d.cdf(-1.0), 0.0);
        assert!((d.cdf(0.0) - 0.25).abs() < 1e-15);
        assert_eq!(d.cdf_left(0.0), 0.0);
        assert!((d.total_mass() - 1.0).abs() < 1e-15);
        assert!((d.density(0.5) - 1.5 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn moments_match_exponential_mixture() {
        let d = sample();
        assert!((d.first_moment() - 0.75 * 0.5).abs() < 1e-14);
        let s = 0.7;
        let expected = 0.25 + 0.75 * 2.0 / (2.0 + s);
        assert!((d.exp_moment(s) - expected).abs() < 1e-14);
    }

    #[test]
    fn sum_adds_atoms_and_terms() {
        let d = sample().sum(&sample());
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((d.total_mass() - 2.0).abs() < 1e-15);
        assert_eq!(d.atoms().len(), 1);
    }
}
