//! The four subcommands. Each returns a [`Report`]; emission is separate.

use crossflow_core::analytic::{
    fifo_convergence_margin, fifo_critical_density, fifo_ghat0, fifo_lane_distribution,
    fifo_vehicle_delay, fo_constants, fo_convergence_margin, fo_lane_distribution,
    fo_vehicle_delay, solve_characteristic_root, VehicleDelay,
};
use crossflow_core::dist::SteadyStateDistribution;
use crossflow_core::ecdf::dkw_bound;
use crossflow_core::eds::{
    trend_verdict, CollectOptions, DivergenceVerdict, LaneDelaySamples, ParticleEnsemble,
    VehicleDelaySample,
};
use crossflow_core::model::{IntersectionParams, Lane, Policy};

use crate::config::{parse_axis, Axis, Range, Rates, RunConfig, Variant};
use crate::error::{config, CliError, Result};
use crate::output::{Cell, Report, Table};

/// Largest number of vehicle delays kept for the empirical CDF.
pub const MAX_KEPT_DELAYS: usize = 2_000_000;
/// Windows for the growth test on simulated mean delay.
pub const TREND_WINDOWS: usize = 5;
/// Distance tolerance for the striped-support test.
pub const SUPPORT_EPS: f64 = 1e-6;
/// Confidence of reported sampling bands.
pub const BAND_CONFIDENCE: f64 = 0.99;

/// Fails unless closed forms exist for `policy` at `params`.
pub fn ensure_analytic(policy: Policy, params: &IntersectionParams) -> Result<()> {
    if params.delta_s() > 0.0 {
        return Err(CliError::UnsupportedDeltaS {
            delta_s: params.delta_s(),
        });
    }
    if policy == Policy::Fifo {
        let margin = fifo_convergence_margin(params);
        if margin <= 0.0 {
            return Err(CliError::Unstable {
                margin,
                critical: fifo_critical_density(params.ratio(), params.delta_d()),
            });
        }
    }
    Ok(())
}

fn unstable_from(params: &IntersectionParams) -> impl Fn(crossflow_core::Error) -> CliError + '_ {
    move |e| match e {
        crossflow_core::Error::NoNegativeRoot { margin } => CliError::Unstable {
            margin,
            critical: fifo_critical_density(params.ratio(), params.delta_d()),
        },
        other => other.into(),
    }
}

/// Closed-form vehicle-delay distribution for `variant`.
pub fn analytic_delay(params: &IntersectionParams, variant: Variant) -> Result<VehicleDelay> {
    match variant {
        Variant::Fifo(v) => fifo_vehicle_delay(params, v).map_err(unstable_from(params)),
        Variant::Fo(v) => Ok(fo_vehicle_delay(params, v)),
    }
}

/// Closed-form lane distributions for `variant`.
pub fn analytic_lanes(
    params: &IntersectionParams,
    variant: Variant,
) -> Result<[SteadyStateDistribution; 2]> {
    match variant {
        Variant::Fifo(v) => fifo_lane_distribution(params, v).map_err(unstable_from(params)),
        Variant::Fo(v) => Ok(fo_lane_distribution(params, v)),
    }
}

fn param_entries(params: &IntersectionParams) -> Vec<(&'static str, Cell)> {
    vec![
        ("lambda1", params.lambda1().into()),
        ("lambda2", params.lambda2().into()),
        ("delta_d", params.delta_d().into()),
        ("delta_s", params.delta_s().into()),
        ("margin_fifo", fifo_convergence_margin(params).into()),
        ("margin_fo", fo_convergence_margin(params).into()),
    ]
}

/// Closed-form steady state for one policy.
pub fn cmd_analyze(run: &RunConfig) -> Result<Report> {
    let policy = run.require_policy()?;
    let variant = run.variant_for(policy)?;
    let params = run.params()?;
    ensure_analytic(policy, &params)?;
    let delay = analytic_delay(&params, variant)?;
    let lanes = analytic_lanes(&params, variant)?;

    let mut entries = vec![
        ("policy", Cell::text(policy.name())),
        ("variant", Cell::text(variant.name())),
    ];
    entries.extend(param_entries(&params));
    match variant {
        Variant::Fifo(v) => {
            entries.push((
                "critical_density",
                fifo_critical_density(params.ratio(), params.delta_d()).into(),
            ));
            let root = if params.delta_d() > 0.0 {
                Some(
                    solve_characteristic_root(&params)
                        .map_err(unstable_from(&params))?
                        .a,
                )
            } else {
                None
            };
            entries.push(("root_a", Cell::opt(root)));
            let g = fifo_ghat0(&params, v).map_err(unstable_from(&params))?;
            entries.push(("ghat0_1", g[0].into()));
            entries.push(("ghat0_2", g[1].into()));
        }
        Variant::Fo(v) => {
            let k = fo_constants(&params, v);
            entries.push(("c1", k.c[0].into()));
            entries.push(("c2", k.c[1].into()));
            entries.push(("ghat0_1", k.ghat0[0].into()));
            entries.push(("ghat0_2", k.ghat0[1].into()));
            entries.push(("ghat_gap_1", k.ghat_gap[0].into()));
            entries.push(("ghat_gap_2", k.ghat_gap[1].into()));
            entries.push(("mass_1", k.mass[0].into()));
            entries.push(("mass_2", k.mass[1].into()));
        }
    }
    entries.push(("p0", delay.p0().into()));
    entries.push(("expected_delay", delay.expected.into()));

    let grid = run.grid_points();
    let mut cdf = Table::new("cdf", &["t", "P_analytic", "P_eds"]);
    let mut lane_cdf = Table::new("lane_cdf", &["t", "lane1_analytic", "lane2_analytic"]);
    for &t in &grid {
        cdf.push(vec![
            t.into(),
            delay.distribution.cdf(t).into(),
            Cell::Empty,
        ]);
        lane_cdf.push(vec![
            t.into(),
            lanes[0].cdf(t).into(),
            lanes[1].cdf(t).into(),
        ]);
    }
    Ok(Report {
        command: "analyze",
        tables: vec![Table::summary(entries), cdf, lane_cdf],
    })
}

/// Simulated ensemble state and delays.
pub struct EdsRun {
    pub lanes: LaneDelaySamples,
    pub sample: VehicleDelaySample,
    pub stride: usize,
    pub zebra_mass: f64,
    pub lane_share: [f64; 2],
    pub verdict: Option<DivergenceVerdict>,
}

/// Burn-in, lane snapshot, then `steps` recorded events.
pub fn run_eds(policy: Policy, params: &IntersectionParams, run: &RunConfig) -> Result<EdsRun> {
    if run.steps == 0 {
        return Err(config("--steps must be at least 1"));
    }
    let mut ensemble = ParticleEnsemble::new(run.particles, run.seed, params);
    ensemble.propagate(policy, params, run.burn_in)?;
    let lanes = ensemble.lane_delay_distribution();
    let zebra_mass = ensemble.zebra_mass(params, SUPPORT_EPS);
    let lane_share = Lane::BOTH.map(|l| ensemble.dominance_fraction(l));
    let stride = (run.particles * run.steps).div_ceil(MAX_KEPT_DELAYS).max(1);
    let windows = TREND_WINDOWS.min(run.steps);
    let sample = ensemble.vehicle_delay_distribution(
        policy,
        params,
        run.steps,
        &CollectOptions { stride, windows },
    )?;
    let verdict = (sample.window_means.len() >= 3)
        .then(|| trend_verdict(&sample.window_means, sample.window_len));
    Ok(EdsRun {
        lanes,
        sample,
        stride,
        zebra_mass,
        lane_share,
        verdict,
    })
}

fn eds_entries(run: &RunConfig, eds: &EdsRun) -> Vec<(&'static str, Cell)> {
    let v = eds.verdict;
    vec![
        ("particles", run.particles.into()),
        ("burn_in", run.burn_in.into()),
        ("steps", run.steps.into()),
        ("seed", run.seed.into()),
        ("stride", eds.stride.into()),
        ("kept_delays", eds.sample.distribution.len().into()),
        ("mean_delay_eds", eds.sample.mean.into()),
        ("std_error_eds", eds.sample.std_error.into()),
        ("p0_eds", eds.sample.distribution.cdf(0.0).into()),
        ("lane1_share", eds.lane_share[0].into()),
        ("lane2_share", eds.lane_share[1].into()),
        ("striped_mass", eds.zebra_mass.into()),
        (
            "verdict",
            Cell::text(match v {
                Some(v) if v.diverging => "diverging",
                Some(_) => "converged",
                None => "not_tested",
            }),
        ),
        ("trend_slope", Cell::opt(v.map(|v| v.slope))),
        ("trend_p_value", Cell::opt(v.map(|v| v.p_value))),
    ]
}

/// Event-driven simulation with an analytic overlay when one exists.
pub fn cmd_simulate(run: &RunConfig) -> Result<Report> {
    let policy = run.require_policy()?;
    let variant = run.variant_for(policy)?;
    let params = run.params()?;
    let eds = run_eds(policy, &params, run)?;
    let analytic = ensure_analytic(policy, &params)
        .and_then(|_| analytic_delay(&params, variant))
        .ok();

    let mut entries = vec![("policy", Cell::text(policy.name()))];
    entries.extend(param_entries(&params));
    entries.extend(eds_entries(run, &eds));
    entries.push((
        "variant",
        analytic
            .as_ref()
            .map_or(Cell::Empty, |_| Cell::text(variant.name())),
    ));
    entries.push(("p0_analytic", Cell::opt(analytic.as_ref().map(|d| d.p0()))));
    entries.push((
        "expected_delay_analytic",
        Cell::opt(analytic.as_ref().map(|d| d.expected)),
    ));

    let grid = run.grid_points();
    let mut cdf = Table::new("cdf", &["t", "P_analytic", "P_eds"]);
    let mut lane_cdf = Table::new("lane_cdf", &["t", "lane1_eds", "lane2_eds"]);
    for &t in &grid {
        cdf.push(vec![
            t.into(),
            Cell::opt(analytic.as_ref().map(|d| d.distribution.cdf(t))),
            eds.sample.distribution.cdf(t).into(),
        ]);
        lane_cdf.push(vec![
            t.into(),
            eds.lanes.lanes[0].cdf(t).into(),
            eds.lanes.lanes[1].cdf(t).into(),
        ]);
    }
    let mut joint = Table::new("joint", &["particle", "t1", "t2"]);
    for (k, (t1, t2)) in eds.lanes.joint.iter().enumerate() {
        joint.push(vec![k.into(), (*t1).into(), (*t2).into()]);
    }
    Ok(Report {
        command: "simulate",
        tables: vec![Table::summary(entries), cdf, lane_cdf, joint],
    })
}

/// Sweep point before validation.
#[derive(Debug, Clone, Copy)]
struct Point {
    rates: Rates,
    delta_d: f64,
    delta_s: f64,
}

impl Point {
    fn set(&mut self, axis: Axis, v: f64) {
        let total = |r: Rates| match r {
            Rates::Total { lambda, ratio } => (lambda, ratio),
            Rates::PerLane { lambda1, lambda2 } => (lambda1 + lambda2, lambda1 / lambda2),
        };
        let per_lane = |r: Rates| match r {
            Rates::PerLane { lambda1, lambda2 } => (lambda1, lambda2),
            Rates::Total { lambda, ratio } => {
                (lambda * ratio / (1.0 + ratio), lambda / (1.0 + ratio))
            }
        };
        match axis {
            Axis::Lambda | Axis::Ratio => {
                let (mut lambda, mut ratio) = total(self.rates);
                if axis == Axis::Lambda {
                    lambda = v;
                } else {
                    ratio = v;
                }
                self.rates = Rates::Total { lambda, ratio };
            }
            Axis::Lambda1 | Axis::Lambda2 => {
                let (mut lambda1, mut lambda2) = per_lane(self.rates);
                if axis == Axis::Lambda1 {
                    lambda1 = v;
                } else {
                    lambda2 = v;
                }
                self.rates = Rates::PerLane { lambda1, lambda2 };
            }
            Axis::DeltaD => self.delta_d = v,
            Axis::DeltaS => self.delta_s = v,
        }
    }

    fn params(&self) -> crossflow_core::Result<IntersectionParams> {
        match self.rates {
            Rates::PerLane { lambda1, lambda2 } => {
                IntersectionParams::new(lambda1, lambda2, self.delta_d, self.delta_s)
            }
            Rates::Total { lambda, ratio } => {
                IntersectionParams::from_total(lambda, ratio, self.delta_d, self.delta_s)
            }
        }
    }
}

/// Closed-form quantities on a one- or two-axis grid. Points without a
/// steady state are flagged in the status column.
pub fn cmd_sweep(run: &RunConfig) -> Result<Report> {
    if run.vary.is_empty() || run.vary.len() > 2 {
        return Err(config("sweep takes one or two --vary axes"));
    }
    let axes: Vec<(Axis, Range)> = run
        .vary
        .iter()
        .map(|s| parse_axis(s))
        .collect::<Result<_>>()?;
    if axes.len() == 2 {
        let group = |a: Axis| match a {
            Axis::Lambda | Axis::Ratio => 1,
            Axis::Lambda1 | Axis::Lambda2 => 2,
            _ => 0,
        };
        let (g0, g1) = (group(axes[0].0), group(axes[1].0));
        if axes[0].0 == axes[1].0 || (g0 != 0 && g1 != 0 && g0 != g1) {
            return Err(config("sweep axes must be distinct and use one rate form"));
        }
    }
    let policies = match run.policy {
        Some(p) => vec![p],
        None if run.variant.is_some() => {
            return Err(config("--variant needs --policy in a sweep"));
        }
        None => vec![Policy::Fifo, Policy::Fo],
    };
    let variants: Vec<(Policy, Variant)> = policies
        .iter()
        .map(|&p| run.variant_for(p).map(|v| (p, v)))
        .collect::<Result<_>>()?;

    let base = Point {
        rates: run.rates,
        delta_d: run.delta_d,
        delta_s: run.delta_s,
    };
    let mut points = Vec::new();
    for &x in &axes[0].1.points() {
        let mut p = base;
        p.set(axes[0].0, x);
        match axes.get(1) {
            None => points.push(p),
            Some((axis, range)) => {
                for &y in &range.points() {
                    let mut q = p;
                    q.set(*axis, y);
                    points.push(q);
                }
            }
        }
    }

    let mut table = Table::new(
        "sweep",
        &[
            "policy",
            "lambda1",
            "lambda2",
            "delta_d",
            "delta_s",
            "margin_fifo",
            "margin_fo",
            "p0",
            "expected_delay",
            "status",
        ],
    );
    for point in &points {
        for &(policy, variant) in &variants {
            let params = match point.params() {
                Ok(p) => p,
                Err(_) => {
                    let (l1, l2) = match point.rates {
                        Rates::PerLane { lambda1, lambda2 } => (lambda1, lambda2),
                        Rates::Total { lambda, ratio } => {
                            (lambda * ratio / (1.0 + ratio), lambda / (1.0 + ratio))
                        }
                    };
                    let mut row = vec![Cell::text(policy.name()), l1.into(), l2.into()];
                    row.extend([point.delta_d.into(), point.delta_s.into()]);
                    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                    row.push(Cell::text("invalid_params"));
                    table.push(row);
                    continue;
                }
            };
            let (margin_fifo, margin_fo) = (
                fifo_convergence_margin(&params),
                fo_convergence_margin(&params),
            );
            let margin = match policy {
                Policy::Fifo => margin_fifo,
                Policy::Fo => margin_fo,
            };
            let outcome = if margin <= 0.0 {
                Err("unstable")
            } else if params.delta_s() > 0.0 {
                Err("unsupported_delta_s")
            } else {
                analytic_delay(&params, variant).map_err(|_| "unstable")
            };
            let (p0, mean, status) = match outcome {
                Ok(d) => (Cell::Num(d.p0()), Cell::Num(d.expected), "ok"),
                Err(s) => (Cell::Empty, Cell::Empty, s),
            };
            table.push(vec![
                Cell::text(policy.name()),
                params.lambda1().into(),
                params.lambda2().into(),
                params.delta_d().into(),
                params.delta_s().into(),
                margin_fifo.into(),
                margin_fo.into(),
                p0,
                mean,
                Cell::text(status),
            ]);
        }
    }
    Ok(Report {
        command: "sweep",
        tables: vec![table],
    })
}

/// Simulation against every closed-form variant of the policy.
pub fn cmd_compare(run: &RunConfig) -> Result<Report> {
    let policy = run.require_policy()?;
    let selected = run.variant_for(policy)?;
    let params = run.params()?;
    ensure_analytic(policy, &params)?;
    let eds = run_eds(policy, &params, run)?;
    let delay_band = dkw_bound(eds.sample.distribution.len(), BAND_CONFIDENCE);
    let lane_band = dkw_bound(run.particles, BAND_CONFIDENCE);
    let eds_bound = eds.sample.mean + 2.0 * eds.sample.std_error;

    let mut table = Table::new(
        "compare",
        &[
            "variant",
            "delay_distance",
            "lane1_distance",
            "lane2_distance",
            "p0_analytic",
            "p0_eds",
            "expected_analytic",
            "expected_eds",
            "std_error_eds",
            "delay_within_band",
            "expected_below_eds_bound",
        ],
    );
    let mut selected_delay = None;
    for variant in Variant::all_for(policy) {
        let delay = analytic_delay(&params, variant)?;
        let lanes = analytic_lanes(&params, variant)?;
        let distance = eds.sample.distribution.sup_distance(&delay.distribution);
        let lane_distance = [0, 1].map(|k| eds.lanes.lanes[k].sup_distance(&lanes[k]));
        table.push(vec![
            Cell::text(variant.name()),
            distance.into(),
            lane_distance[0].into(),
            lane_distance[1].into(),
            delay.p0().into(),
            eds.sample.distribution.cdf(0.0).into(),
            delay.expected.into(),
            eds.sample.mean.into(),
            eds.sample.std_error.into(),
            (distance <= delay_band).into(),
            (delay.expected <= eds_bound).into(),
        ]);
        if variant == selected {
            selected_delay = Some(delay);
        }
    }
    let selected_delay = selected_delay.expect("selected variant is among the policy's variants");

    let mut entries = vec![
        ("policy", Cell::text(policy.name())),
        ("variant", Cell::text(selected.name())),
    ];
    entries.extend(param_entries(&params));
    entries.extend(eds_entries(run, &eds));
    entries.push(("delay_band", delay_band.into()));
    entries.push(("lane_band", lane_band.into()));

    let mut cdf = Table::new("cdf", &["t", "P_analytic", "P_eds"]);
    for &t in &run.grid_points() {
        cdf.push(vec![
            t.into(),
            selected_delay.distribution.cdf(t).into(),
            eds.sample.distribution.cdf(t).into(),
        ]);
    }
    Ok(Report {
        command: "compare",
        tables: vec![table, Table::summary(entries), cdf],
    })
}
