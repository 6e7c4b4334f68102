//! Command-line flags, JSON config files and their resolution into a run.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use crossflow_core::analytic::{FifoApprox, FoVariant};
use crossflow_core::eds::{DEFAULT_BURN_IN, DEFAULT_PARTICLES, DEFAULT_STEPS};
use crossflow_core::model::{IntersectionParams, Policy};
use serde::Deserialize;

use crate::error::{config, CliError, Result};

/// Environment variable consulted for the seed when neither flag nor file sets it.
pub const SEED_ENV: &str = "CROSSFLOW_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "crossflow",
    version,
    about = "Delay distributions at a two-lane unmanaged intersection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form steady state: margins, constants, delay CDF and mean.
    Analyze(CommonArgs),
    /// Event-driven particle simulation.
    Simulate(CommonArgs),
    /// Closed-form quantities over a parameter grid.
    Sweep(SweepArgs),
    /// Simulation against every closed-form variant of a policy.
    Compare(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fifo or fo.
    #[arg(long)]
    pub policy: Option<String>,
    /// approx1 or approx2 for fifo; published or balanced for fo.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Total arrival rate, used with --ratio.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// lambda1 / lambda2, used with --lambda.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Headway between conflicting lanes, s.
    #[arg(long)]
    pub delta_d: Option<f64>,
    /// Headway within a lane, s.
    #[arg(long)]
    pub delta_s: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    /// Events recorded after burn-in.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CDF evaluation points as start:step:stop.
    #[arg(long)]
    pub grid: Option<String>,
    /// Output directory; without it the main table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// axis=start:step:stop; axis is lambda, ratio, lambda1, lambda2, delta-d or delta-s.
    #[arg(long, required = true)]
    pub vary: Vec<String>,
}

/// Config-file contents. Keys use kebab-case; snake_case is accepted too.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    policy: Option<String>,
    variant: Option<String>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda: Option<f64>,
    ratio: Option<f64>,
    delta_d: Option<f64>,
    delta_s: Option<f64>,
    particles: Option<usize>,
    steps: Option<usize>,
    burn_in: Option<usize>,
    seed: Option<u64>,
    grid: Option<String>,
    out: Option<PathBuf>,
    format: Option<Format>,
    vary: Option<Vec<String>>,
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let json_err = |source| CliError::Json {
        path: path.display().to_string(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    let serde_json::Value::Object(map) = value else {
        return Err(config(format!(
            "{} must hold a JSON object",
            path.display()
        )));
    };
    let normalized: serde_json::Map<_, _> = map
        .into_iter()
        .map(|(k, v)| (k.replace('_', "-"), v))
        .collect();
    serde_json::from_value(serde_json::Value::Object(normalized)).map_err(json_err)
}

/// Evaluation points `start, start + step, ...` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl Range {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, step, stop] = parts[..] else {
            return Err(config(format!("range `{text}` must be start:step:stop")));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| config(format!("range `{text}` has a bad number `{s}`")))
        };
        let range = Self {
            start: num(start)?,
            step: num(step)?,
            stop: num(stop)?,
        };
        if range.step <= 0.0 {
            return Err(config(format!("range `{text}` needs a positive step")));
        }
        if range.stop < range.start {
            return Err(config(format!("range `{text}` is empty")));
        }
        Ok(range)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    Lambda,
    Ratio,
    Lambda1,
    Lambda2,
    DeltaD,
    DeltaS,
}

pub(crate) fn parse_axis(spec: &str) -> Result<(Axis, Range)> {
    let (name, range) = spec
        .split_once('=')
        .ok_or_else(|| config(format!("--vary `{spec}` must be axis=start:step:stop")))?;
    let axis = match name.trim().replace('_', "-").as_str() {
        "lambda" => Axis::Lambda,
        "ratio" => Axis::Ratio,
        "lambda1" => Axis::Lambda1,
        "lambda2" => Axis::Lambda2,
        "delta-d" => Axis::DeltaD,
        "delta-s" => Axis::DeltaS,
        other => return Err(config(format!("unknown sweep axis `{other}`"))),
    };
    Ok((axis, Range::parse(range)?))
}

/// Which closed form to evaluate for the chosen policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fifo(FifoApprox),
    Fo(FoVariant),
}

impl Variant {
    pub fn default_for(policy: Policy) -> Self {
        match policy {
            Policy::Fifo => Variant::Fifo(FifoApprox::default()),
            Policy::Fo => Variant::Fo(FoVariant::default()),
        }
    }

    pub fn all_for(policy: Policy) -> Vec<Self> {
        match policy {
            Policy::Fifo => vec![
                Variant::Fifo(FifoApprox::Approx1),
                Variant::Fifo(FifoApprox::Approx2),
            ],
            Policy::Fo => vec![
                Variant::Fo(FoVariant::Published),
                Variant::Fo(FoVariant::Balanced),
            ],
        }
    }

    pub fn parse(text: &str, policy: Policy) -> Result<Self> {
        let v = match (policy, text.to_ascii_lowercase().as_str()) {
            (Policy::Fifo, "approx1") => Variant::Fifo(FifoApprox::Approx1),
            (Policy::Fifo, "approx2") => Variant::Fifo(FifoApprox::Approx2),
            (Policy::Fo, "published") => Variant::Fo(FoVariant::Published),
            (Policy::Fo, "balanced") => Variant::Fo(FoVariant::Balanced),
            _ => {
                return Err(config(format!(
                    "variant `{text}` does not apply to policy {policy}"
                )))
            }
        };
        Ok(v)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fifo(FifoApprox::Approx1) => "approx1",
            Variant::Fifo(FifoApprox::Approx2) => "approx2",
            Variant::Fo(FoVariant::Published) => "published",
            Variant::Fo(FoVariant::Balanced) => "balanced",
        }
    }
}

/// Rates as given: per lane, or total with ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rates {
    PerLane { lambda1: f64, lambda2: f64 },
    Total { lambda: f64, ratio: f64 },
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub policy: Option<Policy>,
    pub variant: Option<String>,
    pub rates: Rates,
    pub delta_d: f64,
    pub delta_s: f64,
    pub particles: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub grid: Option<Range>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub vary: Vec<String>,
}

impl RunConfig {
    /// Merges flags over the config file, then the environment seed, then defaults.
    pub fn resolve(args: &CommonArgs, vary: &[String]) -> Result<Self> {
        Self::resolve_with_env(args, vary, std::env::var(SEED_ENV).ok())
    }

    pub fn resolve_with_env(
        args: &CommonArgs,
        vary: &[String],
        env_seed: Option<String>,
    ) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let policy = args
            .policy
            .clone()
            .or(file.policy)
            .map(|s| s.parse::<Policy>().map_err(config))
            .transpose()?;
        let vary = if vary.is_empty() {
            file.vary.clone().unwrap_or_default()
        } else {
            vary.to_vec()
        };
        let axes = vary
            .iter()
            .map(|s| parse_axis(s))
            .collect::<Result<Vec<_>>>()?;
        // A swept quantity needs no base value; its range start stands in.
        let swept = |axis: Axis| axes.iter().find(|(a, _)| *a == axis).map(|(_, r)| r.start);
        let pick = |a: Option<f64>, f: Option<f64>, axis: Axis| a.or(f).or_else(|| swept(axis));
        let lambda1 = pick(args.lambda1, file.lambda1, Axis::Lambda1);
        let lambda2 = pick(args.lambda2, file.lambda2, Axis::Lambda2);
        let lambda = pick(args.lambda, file.lambda, Axis::Lambda);
        let ratio = pick(args.ratio, file.ratio, Axis::Ratio);
        let rates = match (lambda1, lambda2, lambda, ratio) {
            (Some(lambda1), Some(lambda2), None, None) => Rates::PerLane { lambda1, lambda2 },
            (None, None, Some(lambda), Some(ratio)) => Rates::Total { lambda, ratio },
            _ => {
                return Err(config(
                    "give exactly one of --lambda1/--lambda2 or --lambda/--ratio",
                ))
            }
        };
        let delta_d = pick(args.delta_d, file.delta_d, Axis::DeltaD)
            .ok_or_else(|| config("--delta-d is required"))?;
        let delta_s = pick(args.delta_s, file.delta_s, Axis::DeltaS).unwrap_or(0.0);
        let env_seed = env_seed
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| config(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))
            })
            .transpose()?;
        let grid = args
            .grid
            .clone()
            .or(file.grid)
            .map(|g| Range::parse(&g))
            .transpose()?;
        let run = Self {
            policy,
            variant: args.variant.clone().or(file.variant),
            rates,
            delta_d,
            delta_s,
            particles: args
                .particles
                .or(file.particles)
                .unwrap_or(DEFAULT_PARTICLES),
            steps: args.steps.or(file.steps).unwrap_or(DEFAULT_STEPS),
            burn_in: args.burn_in.or(file.burn_in).unwrap_or(DEFAULT_BURN_IN),
            seed: args.seed.or(file.seed).or(env_seed).unwrap_or(0),
            grid,
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            vary,
        };
        if run.particles == 0 {
            return Err(config("--particles must be at least 1"));
        }
        if run.vary.is_empty() {
            run.params()?;
        }
        Ok(run)
    }

    pub fn params(&self) -> Result<IntersectionParams> {
        let p = match self.rates {
            Rates::PerLane { lambda1, lambda2 } => {
                IntersectionParams::new(lambda1, lambda2, self.delta_d, self.delta_s)
            }
            Rates::Total { lambda, ratio } => {
                IntersectionParams::from_total(lambda, ratio, self.delta_d, self.delta_s)
            }
        }?;
        Ok(p)
    }

    /// The policy, required by every command except sweep.
    pub fn require_policy(&self) -> Result<Policy> {
        self.policy.ok_or_else(|| config("--policy is required"))
    }

    pub fn variant_for(&self, policy: Policy) -> Result<Variant> {
        match &self.variant {
            Some(v) => Variant::parse(v, policy),
            None => Ok(Variant::default_for(policy)),
        }
    }

    /// Explicit grid, or one spanning a few cross gaps.
    pub fn grid_points(&self) -> Vec<f64> {
        match self.grid {
            Some(g) => g.points(),
            None => {
                let stop = if self.delta_d > 0.0 {
                    4.0 * self.delta_d
                } else {
                    1.0
                };
                Range {
                    start: 0.0,
                    step: stop / 80.0,
                    stop,
                }
                .points()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_points_are_inclusive() {
        let r = Range::parse("0:0.25:4").unwrap();
        let pts = r.points();
        assert_eq!(pts.len(), 17);
        assert!((pts[16] - 4.0).abs() < 1e-12);
        assert_eq!(Range::parse("0:0.1:4").unwrap().points().len(), 41);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        assert!(Range::parse("1:0.1:0").is_err());
        assert!(Range::parse("0:0:1").is_err());
        assert!(Range::parse("0:-1:1").is_err());
        assert!(Range::parse("0:1").is_err());
        assert!(Range::parse("a:1:2").is_err());
    }

    fn args() -> CommonArgs {
        CommonArgs {
            policy: Some("fo".into()),
            lambda: Some(1.0),
            ratio: Some(0.5),
            delta_d: Some(2.0),
            ..Default::default()
        }
    }

    #[test]
    fn seed_precedence() {
        let mut a = args();
        let r = RunConfig::resolve_with_env(&a, &[], Some("9".into())).unwrap();
        assert_eq!(r.seed, 9);
        a.seed = Some(3);
        let r = RunConfig::resolve_with_env(&a, &[], Some("9".into())).unwrap();
        assert_eq!(r.seed, 3);
        assert!(RunConfig::resolve_with_env(&args(), &[], Some("x".into())).is_err());
    }

    #[test]
    fn rates_must_come_in_one_form() {
        let mut a = args();
        a.lambda1 = Some(0.3);
        assert!(RunConfig::resolve_with_env(&a, &[], None).is_err());
        let mut b = args();
        b.ratio = None;
        assert!(RunConfig::resolve_with_env(&b, &[], None).is_err());
    }

    #[test]
    fn swept_axes_need_no_base_value() {
        let mut a = args();
        a.delta_d = None;
        assert!(RunConfig::resolve_with_env(&a, &[], None).is_err());
        let r = RunConfig::resolve_with_env(&a, &["delta-d=0.5:0.5:2".into()], None).unwrap();
        assert_eq!(r.delta_d, 0.5);
        a.delta_d = Some(1.0);
        a.lambda = None;
        let r = RunConfig::resolve_with_env(&a, &["lambda=0:0.5:1".into()], None).unwrap();
        assert_eq!(
            r.rates,
            Rates::Total {
                lambda: 0.0,
                ratio: 0.5
            }
        );
        assert!(RunConfig::resolve_with_env(&a, &["lambda=1:0.5:0".into()], None).is_err());
    }

    #[test]
    fn variants_match_policy() {
        assert!(Variant::parse("approx2", Policy::Fifo).is_ok());
        assert!(Variant::parse("balanced", Policy::Fifo).is_err());
        assert_eq!(
            Variant::parse("Balanced", Policy::Fo).unwrap().name(),
            "balanced"
        );
    }
}
