//! Closed-form steady-state results for the two-lane intersection.
//!
//! Distribution formulas assume a zero same-lane gap; `delta_s` is ignored by
//! every function here except the convergence margins and the support test.
//! Notation: `y = exp(-lambda * delta_d)`, `y_i = exp(-lambda_i * delta_d)`.

use nalgebra::{DMatrix, DVector};

use crate::dist::{Atom, ExpTerm, Segment, SteadyStateDistribution};
use crate::error::{Error, Result};
use crate::model::{IntersectionParams, Lane};

/// `int_0^delta_d t * lambda * exp(lambda * t) dt`, valid for any sign of `lambda`.
pub fn e_lambda(lambda: f64, delta_d: f64) -> f64 {
    if lambda.abs() < 1e-8 {
        return lambda * delta_d * delta_d / 2.0;
    }
    (1.0 + (delta_d * lambda).exp() * (delta_d * lambda - 1.0)) / lambda
}

/// Necessary-condition slack for first-in-first-out convergence; `>= 0` holds.
pub fn fifo_convergence_margin(params: &IntersectionParams) -> f64 {
    let (l1, l2) = (params.lambda1(), params.lambda2());
    params.lambda_total()
        - (2.0 * l1 * l2 * params.delta_d() + (l1 * l1 + l2 * l2) * params.delta_s())
}

/// Necessary-condition slack for flexible-order convergence; `>= 0` holds.
pub fn fo_convergence_margin(params: &IntersectionParams) -> f64 {
    let (l1, l2, dd) = (params.lambda1(), params.lambda2(), params.delta_d());
    let (y1, y2) = ((-l1 * dd).exp(), (-l2 * dd).exp());
    params.lambda_total()
        - (l1 * l2 * (y1 + y2) * dd
            + (l1 * l1 + l2 * l2 + l1 * l2 * (2.0 - y1 - y2)) * params.delta_s())
}

/// Total rate at which the first-in-first-out margin vanishes for ratio `r`
/// and zero same-lane gap.
pub fn fifo_critical_density(ratio: f64, delta_d: f64) -> f64 {
    (1.0 + ratio).powi(2) / (2.0 * delta_d * ratio)
}

/// Characteristic function `(a - l1)(a - l2) - l1 l2 exp(-2 a delta_d)`,
/// written to stay accurate near its trivial root at zero.
pub fn characteristic_function(a: f64, params: &IntersectionParams) -> f64 {
    let (l1, l2, dd) = (params.lambda1(), params.lambda2(), params.delta_d());
    a * a - a * params.lambda_total() - l1 * l2 * (-2.0 * a * dd).exp_m1()
}

fn characteristic_derivative(a: f64, params: &IntersectionParams) -> f64 {
    let (l1, l2, dd) = (params.lambda1(), params.lambda2(), params.delta_d());
    2.0 * a - params.lambda_total() + 2.0 * dd * l1 * l2 * (-2.0 * a * dd).exp()
}

/// Negative root of the characteristic function: the tail decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoot {
    pub a: f64,
    pub residual: f64,
}

/// Finds the negative characteristic root by bracketing, bisection and one
/// Newton polish.
pub fn solve_characteristic_root(params: &IntersectionParams) -> Result<CharacteristicRoot> {
    let margin = zero_gap_margin(params);
    if margin <= 0.0 || params.delta_d() == 0.0 {
        return Err(Error::NoNegativeRoot { margin });
    }
    let h = |a: f64| characteristic_function(a, params);
    let mut hi = -1e-12;
    if h(hi) <= 0.0 {
        return Err(Error::NoNegativeRoot { margin });
    }
    let mut lo = -10.0 * params.lambda_total();
    let mut expansions = 0;
    while h(lo) > 0.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::NoNegativeRoot { margin });
        }
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    let slope = characteristic_derivative(a, params);
    if slope != 0.0 {
        let polished = a - h(a) / slope;
        if polished < 0.0 && h(polished).abs() <= h(a).abs() {
            a = polished;
        }
    }
    Ok(CharacteristicRoot { a, residual: h(a) })
}

fn zero_gap_margin(params: &IntersectionParams) -> f64 {
    params.lambda_total() - 2.0 * params.lambda1() * params.lambda2() * params.delta_d()
}

/// How the first-in-first-out zero-delay atoms are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FifoApprox {
    /// Keeps the exponentially weighted balance of the atoms.
    #[default]
    Approx1,
    /// Keeps the density jump at the cross gap.
    Approx2,
}

/// Per-lane values indexed by `Lane::index()`.
pub type PerLane = [f64; 2];

struct Rates {
    l: [f64; 2],
    lambda: f64,
    dd: f64,
    y: f64,
    yl: [f64; 2],
}

impl Rates {
    fn new(params: &IntersectionParams) -> Self {
        let l = [params.lambda1(), params.lambda2()];
        let dd = params.delta_d();
        let lambda = params.lambda_total();
        Self {
            l,
            lambda,
            dd,
            y: (-lambda * dd).exp(),
            yl: [(-l[0] * dd).exp(), (-l[1] * dd).exp()],
        }
    }
}

/// Zero-delay atoms of the first-in-first-out lane distributions.
pub fn fifo_ghat0(params: &IntersectionParams, variant: FifoApprox) -> Result<PerLane> {
    if params.delta_d() == 0.0 {
        return Ok([params.lane_prob(Lane::One), params.lane_prob(Lane::Two)]);
    }
    let a = solve_characteristic_root(params)?.a;
    Ok(fifo_ghat0_with_root(params, variant, a))
}

fn fifo_ghat0_with_root(params: &IntersectionParams, variant: FifoApprox, a: f64) -> PerLane {
    let r = Rates::new(params);
    match variant {
        FifoApprox::Approx1 => [0, 1].map(|i| {
            let (li, lo, yi, y, lam) = (r.l[i], r.l[1 - i], r.yl[i], r.y, r.lambda);
            let num = a * li * y * ((li - a) * li * (y * y - 1.0) + (a - lam) * yi * (lo + li * y));
            let b = lam
                * lam
                * (a * a * y * (y - yi) * (1.0 - yi)
                    + a * (a - lam) * yi
                    + (a - li) * lam * y * y * (yi - 1.0)
                    + (2.0 * a - lam) * lam * y * yi * (1.0 - yi)
                    + (a - lam) * li * y * yi * yi
                    + li * lo * yi
                    + li * li * y * y * yi
                    - a * li * y * y);
            num / b
        }),
        FifoApprox::Approx2 => {
            // Jump condition at the cross gap for both lanes:
            // g_i (l_o - a) exp(l_o dd) - l_i g_o = -a l_i / lambda.
            let m11 = (r.l[1] - a) * (r.l[1] * r.dd).exp();
            let m22 = (r.l[0] - a) * (r.l[0] * r.dd).exp();
            let (m12, m21) = (-r.l[0], -r.l[1]);
            let b1 = -a * r.l[0] / r.lambda;
            let b2 = -a * r.l[1] / r.lambda;
            let det = m11 * m22 - m12 * m21;
            [(b1 * m22 - m12 * b2) / det, (m11 * b2 - m21 * b1) / det]
        }
    }
}

/// Delay distribution with its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDelay {
    pub distribution: SteadyStateDistribution,
    pub expected: f64,
}

impl VehicleDelay {
    /// Probability of zero delay.
    pub fn p0(&self) -> f64 {
        self.distribution.cdf(0.0)
    }
}

/// First-in-first-out lane distributions, each holding the mass where that
/// lane has the larger delay.
pub fn fifo_lane_distribution(
    params: &IntersectionParams,
    variant: FifoApprox,
) -> Result<[SteadyStateDistribution; 2]> {
    if params.delta_d() == 0.0 {
        return Ok(Lane::BOTH.map(|lane| point_mass_at_zero(params.lane_prob(lane))));
    }
    let a = solve_characteristic_root(params)?.a;
    let g = fifo_ghat0_with_root(params, variant, a);
    let r = Rates::new(params);
    Ok([0, 1].map(|i| {
        let lo = r.l[1 - i];
        let mass = params.lane_prob(Lane::from_index(i).unwrap());
        let at_gap = g[i] * (lo * r.dd).exp();
        SteadyStateDistribution::new(
            vec![Atom {
                location: 0.0,
                mass: g[i],
            }],
            vec![
                Segment::new(0.0, r.dd, 0.0, vec![ExpTerm::new(g[i], lo, 0.0)]),
                Segment::new(
                    r.dd,
                    f64::INFINITY,
                    mass,
                    vec![ExpTerm::new(at_gap - mass, a, r.dd)],
                ),
            ],
        )
    }))
}

/// First-in-first-out vehicle-delay distribution and mean.
pub fn fifo_vehicle_delay(
    params: &IntersectionParams,
    variant: FifoApprox,
) -> Result<VehicleDelay> {
    if params.delta_d() == 0.0 {
        return Ok(VehicleDelay {
            distribution: point_mass_at_zero(1.0),
            expected: 0.0,
        });
    }
    let a = solve_characteristic_root(params)?.a;
    let g = fifo_ghat0_with_root(params, variant, a);
    let r = Rates::new(params);
    let (l1, l2, dd) = (r.l[0], r.l[1], r.dd);
    let at_gap = g[0] * (l2 * dd).exp() + g[1] * (l1 * dd).exp();
    let distribution = SteadyStateDistribution::new(
        vec![Atom {
            location: 0.0,
            mass: g[0] + g[1],
        }],
        vec![
            Segment::new(
                0.0,
                dd,
                0.0,
                vec![ExpTerm::new(g[0], l2, 0.0), ExpTerm::new(g[1], l1, 0.0)],
            ),
            Segment::new(
                dd,
                f64::INFINITY,
                1.0,
                vec![ExpTerm::new(at_gap - 1.0, a, dd)],
            ),
        ],
    );
    let expected =
        g[0] * e_lambda(l2, dd) + g[1] * e_lambda(l1, dd) - (a * dd - 1.0) * (at_gap - 1.0) / a;
    Ok(VehicleDelay {
        distribution,
        expected,
    })
}

/// Without a cross gap nobody waits: all mass sits at zero.
fn point_mass_at_zero(mass: f64) -> SteadyStateDistribution {
    SteadyStateDistribution::new(
        vec![Atom {
            location: 0.0,
            mass,
        }],
        vec![Segment::new(0.0, f64::INFINITY, mass, vec![])],
    )
}

/// Which flexible-order steady state to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FoVariant {
    /// Published closed forms. Each lane's total mass equals its arrival share.
    #[default]
    Published,
    /// Solution of the lane balance equations with the cross-gap atom of lane
    /// `i` fed by arrivals on the other lane.
    Balanced,
}

/// Flexible-order steady-state constants for both lanes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoConstants {
    /// Density coefficient on `(0, delta_d)`: `g_i(t) = c_i exp(l_o t)`.
    pub c: PerLane,
    /// Atom at zero delay.
    pub ghat0: PerLane,
    /// Atom at the cross gap.
    pub ghat_gap: PerLane,
    /// Total mass of the lane distribution.
    pub mass: PerLane,
    /// `int exp(-lambda t) dG_i`.
    pub exp_mass: PerLane,
}

/// Flexible-order constants under `variant`.
pub fn fo_constants(params: &IntersectionParams, variant: FoVariant) -> FoConstants {
    let r = Rates::new(params);
    let (ghat0, ghat_gap) = match variant {
        FoVariant::Published => {
            let mut g0 = [0.0; 2];
            let mut gd = [0.0; 2];
            for i in 0..2 {
                let (li, lo, yi, yo, y) = (r.l[i], r.l[1 - i], r.yl[i], r.yl[1 - i], r.y);
                let c = li * lo * (li * y * y + li * yo + lo * y - li * y * y * yo)
                    / (r.lambda * r.lambda * (1.0 + y * yi + y * yo - y - y * y));
                g0[i] = c / lo;
                gd[i] = li / r.lambda - g0[i] * (lo * r.dd).exp();
            }
            (g0, gd)
        }
        FoVariant::Balanced => balanced_atoms(&r),
    };
    let mut c = [0.0; 2];
    let mut mass = [0.0; 2];
    let mut exp_mass = [0.0; 2];
    for i in 0..2 {
        let (li, lo) = (r.l[i], r.l[1 - i]);
        c[i] = lo * ghat0[i];
        mass[i] = ghat0[i] * (lo * r.dd).exp() + ghat_gap[i];
        exp_mass[i] = ghat0[i] * (1.0 + lo * (1.0 - r.yl[i]) / li) + ghat_gap[i] * r.y;
    }
    if variant == FoVariant::Published {
        mass = [params.lane_prob(Lane::One), params.lane_prob(Lane::Two)];
    }
    FoConstants {
        c,
        ghat0,
        ghat_gap,
        mass,
        exp_mass,
    }
}

/// Solves the balance equations for `(g0_1, g0_2, gd_1, gd_2)`:
/// `g0_i = (l_i/lambda)(I_i + y I_o)`, `gd_i = (l_o/lambda)(M_i - I_i)`,
/// `M_1 + M_2 = 1`, with `M` and `I` linear in the unknowns.
fn balanced_atoms(r: &Rates) -> (PerLane, PerLane) {
    let mass_row = |i: usize| {
        let mut row = [0.0; 4];
        row[i] = (r.l[1 - i] * r.dd).exp();
        row[2 + i] = 1.0;
        row
    };
    let exp_row = |i: usize| {
        let mut row = [0.0; 4];
        row[i] = 1.0 + r.l[1 - i] * (1.0 - r.yl[i]) / r.l[i];
        row[2 + i] = r.y;
        row
    };
    let mut a = DMatrix::<f64>::zeros(5, 4);
    let mut b = DVector::<f64>::zeros(5);
    for i in 0..2 {
        let o = 1 - i;
        let (mi, ii, io) = (mass_row(i), exp_row(i), exp_row(o));
        for k in 0..4 {
            a[(2 * i, k)] = -r.l[i] / r.lambda * (ii[k] + r.y * io[k]);
            a[(2 * i + 1, k)] = -r.l[o] / r.lambda * (mi[k] - ii[k]);
        }
        a[(2 * i, i)] += 1.0;
        a[(2 * i + 1, 2 + i)] += 1.0;
    }
    let (m1, m2) = (mass_row(0), mass_row(1));
    for k in 0..4 {
        a[(4, k)] = m1[k] + m2[k];
    }
    b[4] = 1.0;
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("balance system has a least-squares solution");
    ([x[0], x[1]], [x[2], x[3]])
}

/// Flexible-order lane distributions, each holding the mass where that lane
/// has the larger delay.
pub fn fo_lane_distribution(
    params: &IntersectionParams,
    variant: FoVariant,
) -> [SteadyStateDistribution; 2] {
    let k = fo_constants(params, variant);
    let dd = params.delta_d();
    let l = [params.lambda1(), params.lambda2()];
    [0, 1].map(|i| {
        SteadyStateDistribution::new(
            vec![
                Atom {
                    location: 0.0,
                    mass: k.ghat0[i],
                },
                Atom {
                    location: dd,
                    mass: k.ghat_gap[i],
                },
            ],
            vec![
                Segment::new(0.0, dd, 0.0, vec![ExpTerm::new(k.ghat0[i], l[1 - i], 0.0)]),
                Segment::new(dd, f64::INFINITY, k.mass[i], vec![]),
            ],
        )
    })
}

/// Flexible-order vehicle-delay distribution and mean.
pub fn fo_vehicle_delay(params: &IntersectionParams, variant: FoVariant) -> VehicleDelay {
    let k = fo_constants(params, variant);
    let dd = params.delta_d();
    let terms = match variant {
        FoVariant::Published => published_delay_terms(params, &k),
        FoVariant::Balanced => kernel_delay_terms(params, &k),
    };
    let body = Segment::new(0.0, dd, terms.0, terms.1);
    let distribution = delay_with_body(body, dd);
    let expected = match variant {
        FoVariant::Published => published_expected_delay(params, &k),
        FoVariant::Balanced => distribution.first_moment(),
    };
    VehicleDelay {
        distribution,
        expected,
    }
}

/// Delay distribution on `[0, dd]` from its CDF expression on `[0, dd)`.
fn delay_with_body(body: Segment, dd: f64) -> SteadyStateDistribution {
    let p0 = body.value(0.0);
    let at_gap = body.value(dd);
    let mut atoms = vec![Atom {
        location: 0.0,
        mass: p0,
    }];
    if 1.0 - at_gap > 1e-12 {
        atoms.push(Atom {
            location: dd,
            mass: 1.0 - at_gap,
        });
    }
    SteadyStateDistribution::new(
        atoms,
        vec![body, Segment::new(dd, f64::INFINITY, 1.0, vec![])],
    )
}

/// Published CDF on `[0, dd)` as (constant, terms).
fn published_delay_terms(params: &IntersectionParams, k: &FoConstants) -> (f64, Vec<ExpTerm>) {
    let r = Rates::new(params);
    let (l1, l2, lam) = (r.l[0], r.l[1], r.lambda);
    let (c1, c2) = (k.c[0], k.c[1]);
    let cross = 2.0 * l1 * l2 / (lam * lam);
    let p = c2 / (l2 * r.yl[0]);
    let q = c1 / (l1 * r.yl[1]);
    (
        cross,
        vec![
            ExpTerm::new(c2 / l1, l1, 0.0),
            ExpTerm::new(c1 / l2, l2, 0.0),
            ExpTerm::new(-cross + p + q, -lam, 0.0),
            ExpTerm::new(-p, -l1, 0.0),
            ExpTerm::new(-q, -l2, 0.0),
        ],
    )
}

fn published_expected_delay(params: &IntersectionParams, k: &FoConstants) -> f64 {
    let r = Rates::new(params);
    let (l1, l2, lam, dd) = (r.l[0], r.l[1], r.lambda, r.dd);
    let (c1, c2) = (k.c[0], k.c[1]);
    let p = c2 / (l2 * r.yl[0]);
    let q = c1 / (l1 * r.yl[1]);
    c2 / l1 * e_lambda(l1, dd) + c1 / l2 * e_lambda(l2, dd)
        - p * e_lambda(-l1, dd)
        - q * e_lambda(-l2, dd)
        + (p + q - 2.0 * l1 * l2 / (lam * lam)) * e_lambda(-lam, dd)
}

/// Delay CDF on `[0, dd)` obtained by integrating the one-step delay kernel
/// against the lane distributions described by `k`.
///
/// An arrival on lane `i` (probability `l_i / lambda`) meets either lane `i`
/// ahead at delay `tau` (delay `max(tau - x, 0)`), or the other lane ahead at
/// `tau` with lane `i` one cross gap behind.
fn kernel_delay_terms(params: &IntersectionParams, k: &FoConstants) -> (f64, Vec<ExpTerm>) {
    let r = Rates::new(params);
    let (lam, dd, y) = (r.lambda, r.dd, r.y);
    let mut constant = 0.0;
    let mut terms = Vec::new();
    for i in 0..2 {
        let o = 1 - i;
        let (li, lo) = (r.l[i], r.l[o]);
        let w = li / lam;
        let (g0i, gdi, ci) = (k.ghat0[i], k.ghat_gap[i], k.c[i]);
        let (g0o, gdo, co) = (k.ghat0[o], k.ghat_gap[o], k.c[o]);
        // Same lane ahead.
        terms.push(ExpTerm::new(w * (g0i + ci / li), lo, 0.0));
        terms.push(ExpTerm::new(w * (gdi * y - ci * r.yl[i] / li), lam, 0.0));
        // Other lane ahead.
        let eli = (li * dd).exp();
        terms.push(ExpTerm::new(
            w * (g0o * y + y * co * (1.0 - r.yl[o]) / lo + gdo * y * y),
            lam,
            0.0,
        ));
        constant += w * (co / li * eli + gdo);
        terms.push(ExpTerm::new(-w * (co / li + co / lo), -li, dd));
        terms.push(ExpTerm::new(w * (co / lo * eli - gdo), -lam, 0.0));
    }
    (constant, terms)
}

/// Whether `(t1, t2)` lies within `eps` of the support allowed with a
/// positive same-lane gap: one lane at the floor, or the lanes separated by
/// the cross gap plus a whole number of same-lane gaps.
pub fn on_zebra_support(t1: f64, t2: f64, params: &IntersectionParams, eps: f64) -> bool {
    if t1.min(t2) <= params.floor() + eps {
        return true;
    }
    let excess = (t1 - t2).abs() - params.delta_d();
    let ds = params.delta_s();
    if ds == 0.0 {
        return excess.abs() <= eps;
    }
    if excess < -eps {
        return false;
    }
    let n = (excess / ds).round().max(0.0);
    (excess - n * ds).abs() <= eps
}
