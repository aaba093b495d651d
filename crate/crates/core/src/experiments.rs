//! Batch runners behind the command-line tool: JSON descriptors for
//! measures and bodies, row types for the CSV outputs, exponent fits and a
//! small SVG chart writer.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, Halfspace, NamedBody, Polytope};
use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::nazarov::{
    analytic_lower_bound, build_polytope, empirical_nazarov_perimeter, make_params,
};
use crate::perimeter::{estimate_perimeter, facet_shell_perimeter, ShellOptions, MIN_SAMPLES};
use crate::rng::derive_seed;
use crate::upper_bounds::{body_label, bounds_report, BoundConstants, BoundReport};

pub const DEFAULT_SAMPLES: usize = 200_000;
pub const DEFAULT_TRIALS: usize = 8;
pub const DEFAULT_MAX_MINUTES: f64 = 30.0;
const CALIBRATION_SAMPLES: usize = MIN_SAMPLES;

/// Version stamp written into every row; `MAXPERIM_VERSION` at build time
/// overrides the crate version.
pub fn version() -> &'static str {
    option_env!("MAXPERIM_VERSION").unwrap_or(concat!("v", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Perimeter,
    NazarovScan,
    BoundsReport,
    ScalingFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Gaussian,
    Pnorm,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FacetConfig {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Body descriptor. `dim` is taken from the enclosing measure when omitted.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyConfig {
    Ball {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Box {
        halfwidths: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `[-h, h]ⁿ`; `h = 1/2` (unit volume) by default.
    Cube {
        #[serde(default)]
        halfwidth: Option<f64>,
    },
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    Polytope {
        facets: Vec<FacetConfig>,
        #[serde(default)]
        bounding_box: Option<(Vec<f64>, Vec<f64>)>,
    },
}

impl BodyConfig {
    pub fn build(&self, dim: usize) -> Result<Body<f64>> {
        let center = |c: &Option<Vec<f64>>| c.clone().unwrap_or_else(|| vec![0.0; dim]);
        let body: Body<f64> = match self {
            BodyConfig::Ball { radius, center: c } => NamedBody::ball(center(c), *radius)?.into(),
            BodyConfig::Box {
                halfwidths,
                center: c,
            } => NamedBody::boxed(center(c), halfwidths.clone())?.into(),
            BodyConfig::Cube { halfwidth } => {
                NamedBody::boxed(vec![0.0; dim], vec![halfwidth.unwrap_or(0.5); dim])?.into()
            }
            BodyConfig::Halfspace { normal, offset } => {
                NamedBody::Halfspace(Halfspace::new(normal.clone(), *offset)?).into()
            }
            BodyConfig::Polytope {
                facets,
                bounding_box,
            } => {
                let fs = facets
                    .iter()
                    .map(|f| Halfspace::new(f.normal.clone(), f.offset))
                    .collect::<Result<Vec<_>>>()?;
                let p = Polytope::new(fs)?;
                match bounding_box {
                    Some((lo, hi)) => p.with_bounding_box(lo.clone(), hi.clone())?.into(),
                    None => p.into(),
                }
            }
        };
        if body.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: body.dim(),
            });
        }
        Ok(body)
    }

    /// `cube`, `cube:H`, `ball:R`, `box:H1,H2,…`, or a JSON object.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s)
                .map_err(|e| Error::InvalidInput(format!("body descriptor: {e}")));
        }
        let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
        let num = |a: &str| {
            a.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("body `{s}`: {e}")))
        };
        match (kind, arg) {
            ("cube", None) => Ok(BodyConfig::Cube { halfwidth: None }),
            ("cube", Some(a)) => Ok(BodyConfig::Cube {
                halfwidth: Some(num(a)?),
            }),
            ("ball", Some(a)) => Ok(BodyConfig::Ball {
                radius: num(a)?,
                center: None,
            }),
            ("box", Some(a)) => Ok(BodyConfig::Box {
                halfwidths: a.split(',').map(num).collect::<Result<_>>()?,
                center: None,
            }),
            _ => Err(Error::InvalidInput(format!("unknown body `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub family: FamilyName,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub body: Option<BodyConfig>,
    #[serde(default)]
    pub shift: Option<Vec<f64>>,
    #[serde(default)]
    pub scale: Option<f64>,
}

impl MeasureConfig {
    pub fn family(family: FamilyName) -> Self {
        Self {
            family,
            dim: None,
            p: None,
            body: None,
            shift: None,
            scale: None,
        }
    }

    /// Builds the measure in dimension `dim`, or the configured one.
    pub fn build(&self, dim: Option<usize>) -> Result<MeasureSpec<f64>> {
        let n = dim
            .or(self.dim)
            .ok_or_else(|| Error::InvalidInput("measure needs a dimension".into()))?;
        let mut m = match self.family {
            FamilyName::Gaussian => MeasureSpec::gaussian(n)?,
            FamilyName::Pnorm => {
                let p = self
                    .p
                    .ok_or_else(|| Error::InvalidInput("pnorm measure needs `p`".into()))?;
                MeasureSpec::pnorm(n, p)?
            }
            FamilyName::Uniform => {
                let b = self
                    .body
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("uniform measure needs `body`".into()))?;
                MeasureSpec::uniform(b.build(n)?)?
            }
        };
        if let Some(s) = self.scale {
            m = m.with_scale(s)?;
        }
        if let Some(shift) = &self.shift {
            m = m.with_shift(shift.clone())?;
        }
        Ok(m)
    }

    /// `gaussian`, `pnorm:P`, `uniform:<body flag>`, or a JSON object.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s)
                .map_err(|e| Error::InvalidInput(format!("measure descriptor: {e}")));
        }
        let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
        match (kind, arg) {
            ("gaussian", None) => Ok(Self::family(FamilyName::Gaussian)),
            ("pnorm", Some(p)) => Ok(Self {
                p: Some(
                    p.parse()
                        .map_err(|e| Error::InvalidInput(format!("measure `{s}`: {e}")))?,
                ),
                ..Self::family(FamilyName::Pnorm)
            }),
            ("uniform", Some(b)) => Ok(Self {
                body: Some(BodyConfig::parse_flag(b)?),
                ..Self::family(FamilyName::Uniform)
            }),
            _ => Err(Error::InvalidInput(format!("unknown measure `{s}`"))),
        }
    }
}

/// Everything a run needs; fields left unset take defaults. A config file
/// is merged over command-line flags with [`ExperimentConfig::overlay`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub subcommand: Option<Subcommand>,
    #[serde(default)]
    pub measures: Vec<MeasureConfig>,
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// `α` of the construction; `W/E` of the measure by default.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
    #[serde(default)]
    pub max_minutes: Option<f64>,
    /// Use closed forms instead of sampling when available.
    #[serde(default)]
    pub exact: Option<bool>,
}

impl ExperimentConfig {
    /// Fields set in `file` win over `self`.
    pub fn overlay(self, file: ExperimentConfig) -> Self {
        fn pick<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if b.is_empty() {
                a
            } else {
                b
            }
        }
        Self {
            subcommand: file.subcommand.or(self.subcommand),
            measures: pick(self.measures, file.measures),
            bodies: pick(self.bodies, file.bodies),
            dims: pick(self.dims, file.dims),
            samples: file.samples.or(self.samples),
            trials: file.trials.or(self.trials),
            seed: file.seed.or(self.seed),
            eps: file.eps.or(self.eps),
            alpha: file.alpha.or(self.alpha),
            output: file.output.or(self.output),
            svg: file.svg.or(self.svg),
            max_minutes: file.max_minutes.or(self.max_minutes),
            exact: file.exact.or(self.exact),
        }
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn max_minutes(&self) -> f64 {
        self.max_minutes.unwrap_or(DEFAULT_MAX_MINUTES)
    }

    pub fn validate(&self, cmd: Subcommand) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::InvalidInput(format!("`{field}`: {msg}")));
        if let Some(s) = self.subcommand {
            if s != cmd {
                return bad(
                    "subcommand",
                    &format!("config is for {s:?}, invoked as {cmd:?}"),
                );
            }
        }
        if self.samples() < MIN_SAMPLES {
            return bad("samples", &format!("must be ≥ {MIN_SAMPLES}"));
        }
        if self.trials() == 0 {
            return bad("trials", "must be ≥ 1");
        }
        if self.measures.is_empty() {
            return bad("measures", "at least one measure is required");
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return bad("eps", "must be positive");
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad("alpha", "must lie in (0, 1)");
            }
        }
        match cmd {
            Subcommand::Perimeter if self.bodies.is_empty() => {
                bad("bodies", "at least one body is required")
            }
            Subcommand::NazarovScan | Subcommand::ScalingFit if self.dims.is_empty() => {
                bad("dims", "must be nonempty")
            }
            Subcommand::ScalingFit if self.dims.len() < 3 => {
                bad("dims", "a fit needs at least 3 dimensions")
            }
            _ if self.dims.contains(&0) => bad("dims", "dimensions must be ≥ 1"),
            _ => Ok(()),
        }
    }

    fn shell_options(&self, seed: u64) -> ShellOptions<f64> {
        let o = ShellOptions::new(self.samples(), seed);
        match self.eps {
            Some(e) => o.eps(e),
            None => o,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerimeterRow {
    pub body: String,
    pub measure: String,
    pub dim: usize,
    pub method: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub eps: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub version: String,
    pub wall_ms: u128,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NazarovRow {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    #[serde(rename = "W")]
    pub w: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    #[serde(rename = "N")]
    pub facets: Option<u64>,
    pub analytic_bound: Option<f64>,
    pub empirical_mean: Option<f64>,
    pub empirical_stderr: Option<f64>,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    pub version: String,
    pub error: String,
}

impl NazarovRow {
    fn failed(n: usize, trials: usize, samples: usize, seed: u64, e: &Error) -> Self {
        Self {
            n,
            e: None,
            w: None,
            alpha: None,
            beta: None,
            rho: None,
            facets: None,
            analytic_bound: None,
            empirical_mean: None,
            empirical_stderr: None,
            trials,
            samples,
            seed,
            version: version().into(),
            error: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln n, ln value)`.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line through `(ln n, ln value)`.
pub fn fit_exponent(rows: &[(f64, f64)]) -> Result<FitResult> {
    if rows.len() < 3 {
        return Err(Error::InvalidInput("fit needs at least 3 points".into()));
    }
    if let Some(&(n, v)) = rows
        .iter()
        .find(|&&(n, v)| !(n > 0.0 && v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "fit needs positive finite data, got ({n}, {v})"
        )));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "fit needs at least two distinct n".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points,
    })
}

pub fn run_perimeter(cfg: &ExperimentConfig) -> Result<Vec<PerimeterRow>> {
    cfg.validate(Subcommand::Perimeter)?;
    let jobs: Vec<(usize, &BodyConfig, &MeasureConfig)> = cfg
        .bodies
        .iter()
        .flat_map(|b| cfg.measures.iter().map(move |m| (b, m)))
        .enumerate()
        .map(|(i, (b, m))| (i, b, m))
        .collect();
    let exact = cfg.exact.unwrap_or(false);
    Ok(jobs
        .into_iter()
        .map(|(i, bc, mc)| {
            let seed = derive_seed(cfg.seed(), i as u64);
            let start = Instant::now();
            let res = mc.build(None).and_then(|m| {
                let body = bc.build(m.dim())?;
                let est = estimate_perimeter(&body, &m, &cfg.shell_options(seed), exact)?;
                Ok((m, body, est))
            });
            let wall_ms = start.elapsed().as_millis();
            match res {
                Ok((m, body, est)) => PerimeterRow {
                    body: body_label(&body),
                    measure: m.name(),
                    dim: m.dim(),
                    method: est.method.to_string(),
                    value: Some(est.value),
                    stderr: Some(est.stderr),
                    eps: Some(est.eps.0),
                    samples: est.samples,
                    seed,
                    version: version().into(),
                    wall_ms,
                    error: String::new(),
                },
                Err(e) => PerimeterRow {
                    body: format!("{bc:?}"),
                    measure: format!("{:?}", mc.family).to_lowercase(),
                    dim: mc.dim.unwrap_or(0),
                    method: String::new(),
                    value: None,
                    stderr: None,
                    eps: None,
                    samples: cfg.samples(),
                    seed,
                    version: version().into(),
                    wall_ms,
                    error: e.to_string(),
                },
            }
        })
        .collect())
}

fn nazarov_row(cfg: &ExperimentConfig, mc: &MeasureConfig, n: usize) -> NazarovRow {
    let seed = derive_seed(cfg.seed(), n as u64);
    let (trials, samples) = (cfg.trials(), cfg.samples());
    let res = (|| {
        let m = mc.build(Some(n))?;
        let opts = cfg.shell_options(seed);
        let est = empirical_nazarov_perimeter(&m, cfg.alpha, trials, &opts)?;
        let alpha = est.params.alpha;
        let bound = analytic_lower_bound(&est.stats, alpha, n)?;
        Ok::<_, Error>((est, bound))
    })();
    match res {
        Ok((est, bound)) => NazarovRow {
            n,
            e: Some(est.stats.mean_norm),
            w: Some(est.stats.std_norm()),
            alpha: Some(est.params.alpha),
            beta: Some(est.params.beta),
            rho: Some(est.params.rho),
            facets: Some(est.params.facets),
            analytic_bound: Some(bound),
            empirical_mean: Some(est.estimate.value),
            empirical_stderr: Some(est.estimate.stderr),
            trials,
            samples,
            seed,
            version: version().into(),
            error: String::new(),
        },
        Err(e) => NazarovRow::failed(n, trials, samples, seed, &e),
    }
}

/// Projected wall time of a scan in minutes, from one
/// [`CALIBRATION_SAMPLES`]-sample run per dimension.
pub fn estimate_scan_minutes(cfg: &ExperimentConfig) -> Result<f64> {
    let mc = cfg
        .measures
        .first()
        .ok_or_else(|| Error::InvalidInput("`measures`: empty".into()))?;
    let mut total = 0.0;
    for &n in &cfg.dims {
        let Ok(m) = mc.build(Some(n)) else { continue };
        let Ok(stats) = m.radial_stats(cfg.samples().max(1000), 0) else {
            continue;
        };
        let alpha = cfg.alpha.unwrap_or(stats.std_norm() / stats.mean_norm);
        let Ok(params) = make_params(&stats, alpha, None) else {
            continue;
        };
        let Ok(poly) = build_polytope(&params, n, 0) else {
            continue;
        };
        let start = Instant::now();
        let opts = ShellOptions::new(CALIBRATION_SAMPLES, 0);
        let _ = facet_shell_perimeter(&poly, &m, &opts);
        let per_sample = start.elapsed().as_secs_f64() / CALIBRATION_SAMPLES as f64;
        total += per_sample * (cfg.samples() * cfg.trials()) as f64;
    }
    Ok(total / 60.0)
}

fn check_budget(cfg: &ExperimentConfig) -> Result<()> {
    let projected = estimate_scan_minutes(cfg)?;
    if projected > cfg.max_minutes() {
        return Err(Error::InvalidInput(format!(
            "`max_minutes`: projected {projected:.1} min exceeds the limit of {} min",
            cfg.max_minutes()
        )));
    }
    Ok(())
}

/// One row per dimension, in the order of `dims`; the first measure is
/// used with its dimension replaced.
pub fn run_nazarov_scan(cfg: &ExperimentConfig) -> Result<Vec<NazarovRow>> {
    cfg.validate(Subcommand::NazarovScan)?;
    check_budget(cfg)?;
    let mc = &cfg.measures[0];
    Ok(cfg
        .dims
        .par_iter()
        .map(|&n| nazarov_row(cfg, mc, n))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub rows: Vec<NazarovRow>,
    pub empirical: Option<FitResult>,
    pub analytic: Option<FitResult>,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub series: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub points: usize,
    pub seed: u64,
    pub version: String,
    pub error: String,
}

/// A Nazarov scan followed by log-log fits of the empirical and analytic
/// columns against `n`.
pub fn run_scaling_fit(cfg: &ExperimentConfig) -> Result<ScalingFit> {
    cfg.validate(Subcommand::ScalingFit)?;
    check_budget(cfg)?;
    let mc = &cfg.measures[0];
    let rows: Vec<NazarovRow> = cfg
        .dims
        .par_iter()
        .map(|&n| nazarov_row(cfg, mc, n))
        .collect();
    let series = |f: fn(&NazarovRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| f(r).map(|v| (r.n as f64, v)))
            .collect()
    };
    let empirical = fit_exponent(&series(|r| r.empirical_mean)).ok();
    let analytic = fit_exponent(&series(|r| r.analytic_bound)).ok();
    Ok(ScalingFit {
        rows,
        empirical,
        analytic,
        seed: cfg.seed(),
        version: version().into(),
    })
}

impl ScalingFit {
    pub fn fit_rows(&self) -> Vec<FitRow> {
        [("empirical", &self.empirical), ("analytic", &self.analytic)]
            .into_iter()
            .map(|(name, fit)| FitRow {
                series: name.into(),
                slope: fit.as_ref().map(|f| f.slope),
                intercept: fit.as_ref().map(|f| f.intercept),
                r_squared: fit.as_ref().map(|f| f.r_squared),
                points: fit.as_ref().map_or(0, |f| f.points.len()),
                seed: self.seed,
                version: self.version.clone(),
                error: if fit.is_some() {
                    String::new()
                } else {
                    "fewer than 3 usable rows".into()
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSummaryRow {
    pub measure: String,
    pub body: String,
    pub dim: usize,
    pub target: String,
    pub lower: Option<f64>,
    pub lower_source: String,
    pub upper: Option<f64>,
    pub upper_source: String,
    pub empirical: Option<f64>,
    pub empirical_stderr: Option<f64>,
    pub seed: u64,
    pub version: String,
}

/// One report per measure (paired with the first body, if any).
pub fn run_bounds_report(cfg: &ExperimentConfig) -> Result<Vec<BoundReport<f64>>> {
    cfg.validate(Subcommand::BoundsReport)?;
    cfg.measures
        .iter()
        .enumerate()
        .map(|(i, mc)| {
            let m = mc.build(cfg.dims.first().copied())?;
            let body = cfg.bodies.first().map(|b| b.build(m.dim())).transpose()?;
            let opts = cfg.shell_options(derive_seed(cfg.seed(), i as u64));
            bounds_report(&m, body.as_ref(), &opts, &BoundConstants::default())
        })
        .collect()
}

pub fn summary_row(r: &BoundReport<f64>, seed: u64) -> BoundsSummaryRow {
    BoundsSummaryRow {
        measure: r.measure.clone(),
        body: r.body.clone().unwrap_or_default(),
        dim: r.dim,
        target: format!("{:?}", r.target).to_lowercase(),
        lower: r.lower.as_ref().map(|b| b.value),
        lower_source: r.lower.as_ref().map(|b| b.name.clone()).unwrap_or_default(),
        upper: r.upper.as_ref().map(|b| b.value),
        upper_source: r.upper.as_ref().map(|b| b.name.clone()).unwrap_or_default(),
        empirical: r.empirical.as_ref().map(|e| e.value),
        empirical_stderr: r.empirical.as_ref().map(|e| e.stderr),
        seed,
        version: version().into(),
    }
}

pub fn write_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}

pub fn write_csv_file<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    write_csv(f, rows)
}

/// Single-series SVG line chart of `value` against `n`, both axes
/// logarithmic.
pub fn svg_chart(title: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD
    );
    if !pts.is_empty() {
        let span = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = span(|p| p.0);
        let (y0, y1) = span(|p| p.1);
        let map = |p: &(f64, f64)| {
            (
                PAD + (p.0 - x0) / (x1 - x0) * (W - 2.0 * PAD),
                H - PAD - (p.1 - y0) / (y1 - y0) * (H - 2.0 * PAD),
            )
        };
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for (p, raw) in pts
            .iter()
            .zip(points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0))
        {
            let (x, y) = map(p);
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="steelblue"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
                H - PAD + 14.0,
                raw.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-family="sans-serif" font-size="10" transform="rotate(-90 14 {})">log value: {:.3} .. {:.3}</text>"#,
            H / 2.0,
            H / 2.0,
            y0.exp(),
            y1.exp()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_synthetic() {
        let quarter: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n: &f64| (n, n.powf(0.25)))
            .collect();
        let f = fit_exponent(&quarter).unwrap();
        assert_relative_eq!(f.slope, 0.25, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
        let lin: Vec<(f64, f64)> = [2.0, 3.0, 5.0].iter().map(|&n| (n, 2.0 * n)).collect();
        let g = fit_exponent(&lin).unwrap();
        assert_relative_eq!(g.slope, 1.0, max_relative = 1e-12);
        assert_relative_eq!(g.intercept, 2f64.ln(), max_relative = 1e-12);
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn descriptors_parse() {
        let m: MeasureConfig =
            serde_json::from_str(r#"{"family":"uniform","dim":3,"body":{"kind":"cube"}}"#).unwrap();
        let built = m.build(None).unwrap();
        assert!(built.is_uniform());
        assert_relative_eq!(built.sup_density(), 1.0, max_relative = 1e-12);
        let p = MeasureConfig::parse_flag("pnorm:1.5").unwrap();
        assert_eq!(p.p, Some(1.5));
        assert!(MeasureConfig::parse_flag("pnorm").is_err());
        assert_eq!(
            BodyConfig::parse_flag("ball:2").unwrap(),
            BodyConfig::Ball {
                radius: 2.0,
                center: None
            }
        );
        let b = BodyConfig::parse_flag(r#"{"kind":"polytope","facets":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":1}]}"#).unwrap();
        assert!(matches!(b.build(2).unwrap(), Body::Polytope(_)));
        assert!(matches!(b.build(3), Err(Error::DimensionMismatch { .. })));
        assert!(
            serde_json::from_str::<MeasureConfig>(r#"{"family":"gaussian","bogus":1}"#).is_err()
        );
    }

    #[test]
    fn overlay_prefers_file() {
        let flags = ExperimentConfig {
            samples: Some(50_000),
            seed: Some(1),
            dims: vec![4],
            ..Default::default()
        };
        let file = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = flags.overlay(file);
        assert_eq!(c.samples, Some(50_000));
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.dims, vec![4]);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig {
            measures: vec![MeasureConfig::family(FamilyName::Gaussian)],
            ..Default::default()
        };
        assert!(c.validate(Subcommand::NazarovScan).is_err());
        c.dims = vec![4, 8];
        assert!(c.validate(Subcommand::NazarovScan).is_ok());
        assert!(c.validate(Subcommand::ScalingFit).is_err());
        c.samples = Some(100);
        assert!(c.validate(Subcommand::NazarovScan).is_err());
        c.samples = None;
        c.subcommand = Some(Subcommand::Perimeter);
        assert!(c.validate(Subcommand::NazarovScan).is_err());
    }

    #[test]
    fn perimeter_rows_and_csv() {
        let c = ExperimentConfig {
            measures: vec![MeasureConfig {
                dim: Some(3),
                body: Some(BodyConfig::Cube { halfwidth: None }),
                ..MeasureConfig::family(FamilyName::Uniform)
            }],
            bodies: vec![
                BodyConfig::Cube { halfwidth: None },
                BodyConfig::Ball {
                    radius: -1.0,
                    center: None,
                },
            ],
            samples: Some(50_000),
            seed: Some(3),
            ..Default::default()
        };
        let rows = run_perimeter(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].value.unwrap() - 6.0).abs() < 0.3);
        assert!(rows[1].value.is_none() && !rows[1].error.is_empty());
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "body,measure,dim,method,value,stderr,eps,samples,seed,version,wall_ms,error"
        ));
    }

    #[test]
    fn scan_row_failure_is_captured() {
        let c = ExperimentConfig {
            measures: vec![MeasureConfig::family(FamilyName::Gaussian)],
            dims: vec![2],
            samples: Some(10_000),
            trials: Some(1),
            alpha: Some(0.01),
            ..Default::default()
        };
        let rows = run_nazarov_scan(&c).unwrap();
        assert!(rows[0].error.contains("α"), "{}", rows[0].error);
    }

    #[test]
    fn svg_has_polyline() {
        let s = svg_chart("a<b", &[(4.0, 1.0), (8.0, 1.2), (16.0, 1.4)]);
        assert!(s.contains("<polyline") && s.contains("a&lt;b") && s.ends_with("</svg>\n"));
    }
}
