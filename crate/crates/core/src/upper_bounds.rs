//! Upper bounds on `μ⁺(∂Q)` from level sets `K_t = {f ≥ t}` and their
//! inradii `R_t`, plus the John-position, isotropic and ray-decreasing
//! bounds, and a report bundling them with lower bounds and a measurement.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{Body, Estimate, NamedBody};
use crate::error::{check_dim, Error, Result};
use crate::measures::{Family, MeasureSpec};
use crate::nazarov::{
    analytic_lower_bound, corollary_bound, empirical_nazarov_perimeter, DEFAULT_THEOREM_CONSTANT,
};
use crate::perimeter::{estimate_perimeter, PerimeterEstimate, ShellOptions};
use crate::rng::{chunks, derive_seed, substream};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::special::{gamma_cdf, ln_gamma_f64, ln_unit_ball_volume};

pub const T_GRID_POINTS: usize = 400;
const T_GRID_EDGE: f64 = 1e-8;
const BISECTION_LIMIT: usize = 200;

/// Placeholder for the absolute constant in `|K_s|·‖f‖_∞ ≤ e^{C₀}` for
/// isotropic log-concave densities; no numerical value is known.
pub const DEFAULT_KLARTAG_C0: f64 = 1.0;

#[derive(Debug, Clone)]
enum Levels<T: Scalar> {
    /// `f = sup·e^{−φ(|x−shift|/scale)}`; `None` is the Gaussian `φ(r) = r²/2`,
    /// `Some(p)` is `φ(r) = r^p/p`.
    Radial(Option<T>),
    Uniform {
        support: Body<T>,
        inradius: T,
    },
}

/// Closed-form level sets of a measure.
#[derive(Debug, Clone)]
pub struct LevelSetOracle<'a, T: Scalar> {
    m: &'a MeasureSpec<T>,
    sup: T,
    levels: Levels<T>,
}

impl<'a, T: Scalar> LevelSetOracle<'a, T> {
    pub fn new(m: &'a MeasureSpec<T>) -> Result<Self> {
        let levels = match m.family() {
            Family::Gaussian => Levels::Radial(None),
            Family::PNorm { p } => Levels::Radial(Some(*p)),
            Family::Uniform(_) => {
                let support = m
                    .support()
                    .ok_or_else(|| Error::Numerical("support of uniform measure".into()))?;
                let inradius = support.inradius()?;
                Levels::Uniform { support, inradius }
            }
        };
        Ok(Self {
            m,
            sup: m.sup_density(),
            levels,
        })
    }

    pub fn measure(&self) -> &MeasureSpec<T> {
        self.m
    }

    pub fn sup_density(&self) -> T {
        self.sup
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `L = ln(sup/t)`; the radial level set is `{φ(|z|) ≤ L}`.
    fn log_ratio(&self, t: T) -> T {
        (self.sup / t).ln().max(T::zero())
    }

    fn base_radius(&self, t: T) -> T {
        let l = self.log_ratio(t);
        match &self.levels {
            Levels::Radial(None) => (l + l).sqrt(),
            Levels::Radial(Some(p)) => (*p * l).powf(T::one() / *p),
            Levels::Uniform { .. } => unreachable!(),
        }
    }

    fn check_t(&self, t: T) -> Result<()> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "level t = {t} must be positive"
            )));
        }
        Ok(())
    }

    /// `K_t(f)`; `None` when the level set has empty interior (`t ≥ sup`
    /// for radial families, `t > sup` for uniform ones).
    pub fn level_body(&self, t: T) -> Result<Option<Body<T>>> {
        self.check_t(t)?;
        Ok(match &self.levels {
            Levels::Uniform { support, .. } => (t <= self.sup).then(|| support.clone()),
            Levels::Radial(_) => {
                let r = self.m.scale() * self.base_radius(t);
                if r > T::zero() {
                    Some(NamedBody::ball(self.m.shift().to_vec(), r)?.into())
                } else {
                    None
                }
            }
        })
    }

    /// `R_t(f)`.
    pub fn inradius(&self, t: T) -> Result<T> {
        self.check_t(t)?;
        Ok(match &self.levels {
            Levels::Uniform { inradius, .. } => {
                if t <= self.sup {
                    *inradius
                } else {
                    T::zero()
                }
            }
            Levels::Radial(_) => self.m.scale() * self.base_radius(t),
        })
    }

    /// `|K_t(f)|`.
    pub fn volume(&self, t: T) -> Result<T> {
        self.check_t(t)?;
        Ok(match &self.levels {
            Levels::Uniform { .. } => {
                if t <= self.sup {
                    T::one() / self.sup
                } else {
                    T::zero()
                }
            }
            Levels::Radial(_) => {
                let n = self.dim();
                let r = self.inradius(t)?;
                if r > T::zero() {
                    (lit::<T>(ln_unit_ball_volume(n)) + from_usize::<T>(n) * r.ln()).exp()
                } else {
                    T::zero()
                }
            }
        })
    }

    /// `μ(K_t(f))`.
    pub fn mass(&self, t: T) -> Result<T> {
        self.check_t(t)?;
        let n = self.dim() as f64;
        Ok(match &self.levels {
            Levels::Uniform { .. } => {
                if t <= self.sup {
                    T::one()
                } else {
                    T::zero()
                }
            }
            // φ(|Z|) is Gamma(n/2) for the Gaussian and Gamma(n/p) for PNorm
            Levels::Radial(None) => gamma_cdf(n / 2.0, self.log_ratio(t)),
            Levels::Radial(Some(p)) => gamma_cdf(n / to_f64(*p), self.log_ratio(t)),
        })
    }
}

/// 400 log-spaced levels over `[1e-8·sup, (1−1e-8)·sup]`.
pub fn default_t_grid<T: Scalar>(sup: T) -> Vec<T> {
    let lo = (to_f64(sup) * T_GRID_EDGE).ln();
    let hi = (to_f64(sup) * (1.0 - T_GRID_EDGE)).ln();
    (0..T_GRID_POINTS)
        .map(|k| lit((lo + (hi - lo) * k as f64 / (T_GRID_POINTS - 1) as f64).exp()))
        .collect()
}

/// `n·|K|/R`.
pub fn inradius_surface_bound<T: Scalar>(volume: T, r: T, n: usize) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::InvalidInput("inradius must be positive".into()));
    }
    if !(volume > T::zero()) {
        return Err(Error::InvalidInput("volume must be positive".into()));
    }
    Ok(from_usize::<T>(n) * volume / r)
}

fn check_grid<T: Scalar>(o: &LevelSetOracle<'_, T>, grid: &[T]) -> Result<()> {
    if grid.iter().any(|&t| !(t > T::zero() && t < o.sup)) {
        return Err(Error::InvalidInput("t grid must lie in (0, sup f)".into()));
    }
    Ok(())
}

/// Minimizes `n(‖f‖_∞|K_t| + 1)/R_t` over the grid; returns `(t, value)`.
pub fn levelset_upper_bound<T: Scalar>(o: &LevelSetOracle<'_, T>, grid: &[T]) -> Result<(T, T)> {
    check_grid(o, grid)?;
    let nf = from_usize::<T>(o.dim());
    let mut best: Option<(T, T)> = None;
    for &t in grid {
        let r = o.inradius(t)?;
        if !(r > T::zero()) {
            continue;
        }
        let v = nf * (o.sup * o.volume(t)? + T::one()) / r;
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((t, v));
        }
    }
    best.ok_or_else(|| {
        Error::Numerical(
            "level sets have zero inradius on the whole grid: bound is unbounded".into(),
        )
    })
}

/// `2n‖f‖_∞ / max_t t·R_t`.
pub fn remark_bound<T: Scalar>(o: &LevelSetOracle<'_, T>, grid: &[T]) -> Result<T> {
    check_grid(o, grid)?;
    let mut best = T::zero();
    for &t in grid {
        best = best.max(t * o.inradius(t)?);
    }
    if !(best > T::zero()) {
        return Err(Error::Numerical(
            "t·R_t vanishes on the whole grid: bound is unbounded".into(),
        ));
    }
    Ok(lit::<T>(2.0) * from_usize::<T>(o.dim()) * o.sup / best)
}

/// A level `t` with `|K_t|·‖f‖_∞ ∈ [1−α, 1+α]`.
///
/// Starts at `s = ‖f‖_∞/(1+α)`, where `|K_s|·‖f‖_∞ ≤ 1+α` always holds;
/// if that is too small, halves `τ` until `μ(K_τ) ≥ 1−α` and bisects
/// `log t` between `τ` and `s`.
pub fn find_balanced_t<T: Scalar>(o: &LevelSetOracle<'_, T>, alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    let sup = o.sup;
    let lo_target = T::one() - alpha;
    let hi_target = T::one() + alpha;
    let g = |t: T| -> Result<T> { Ok(o.volume(t)? * sup) };
    let s = sup / hi_target;
    let gs = g(s)?;
    if gs >= lo_target && gs <= hi_target {
        return Ok(s);
    }
    let mut tau = s;
    let mut steps = 0;
    while o.mass(tau)? < lo_target && g(tau)? < lo_target {
        tau = tau / lit(2.0);
        steps += 1;
        if steps > BISECTION_LIMIT || !(tau > T::zero()) {
            return Err(Error::Numerical(format!(
                "no level with μ(K_τ) ≥ {lo_target} found down to τ = {tau}"
            )));
        }
    }
    let (mut a, mut b) = (tau.ln(), s.ln());
    for _ in 0..BISECTION_LIMIT {
        let mid = lit::<T>(0.5) * (a + b);
        let t = mid.exp();
        let gm = g(t)?;
        if gm >= lo_target && gm <= hi_target {
            return Ok(t);
        }
        if gm > hi_target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not bracket: log t ∈ [{a}, {b}], |K_t|·sup at ends {} and {}",
        g(a.exp())?,
        g(b.exp())?
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InclusionCheck<T: Scalar> {
    pub holds: bool,
    /// `false` when the measure is not log-concave; the check still runs.
    pub hypothesis_ok: bool,
    /// `R` of `K_{t^{1/λ}‖f‖_∞}`.
    pub inner: T,
    /// `R` of `K_{t‖f‖_∞}` divided by `λ`.
    pub outer: T,
}

/// `K_{t^{1/λ}‖f‖_∞} ⊂ (1/λ)K_{t‖f‖_∞} + y`, compared through the radii of
/// the (concentric, homothetic) level sets.
pub fn scaling_inclusion_check<T: Scalar>(
    o: &LevelSetOracle<'_, T>,
    t: T,
    lambda: T,
) -> Result<InclusionCheck<T>> {
    if !(t > T::zero() && t < T::one()) {
        return Err(Error::InvalidInput("t must lie in (0, 1)".into()));
    }
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(Error::InvalidInput("lambda must lie in (0, 1]".into()));
    }
    let inner = o.inradius(t.powf(T::one() / lambda) * o.sup)?;
    let outer = o.inradius(t * o.sup)? / lambda;
    Ok(InclusionCheck {
        holds: inner <= outer * (T::one() + lit(1e-12)),
        hypothesis_ok: o.m.is_log_concave(),
        inner,
        outer,
    })
}

/// `(n^{n/2}(n+1)^{(n+1)/2}/n!)^{1/n}`: the volume ratio of the regular
/// simplex to its John ball, times `ω_n^{1/n}`.
pub fn simplex_volume_constant<T: Scalar>(n: usize) -> T {
    let nf = n as f64;
    let ln = 0.5 * nf * nf.ln() + 0.5 * (nf + 1.0) * (nf + 1.0).ln() - ln_gamma_f64(nf + 1.0);
    lit((ln / nf).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnBound<T: Scalar> {
    pub value: T,
    pub c0: T,
    /// Diagonal of the determinant-one map taking the level sets to John
    /// position.
    pub map: Vec<T>,
    pub already_in_john: bool,
}

/// `2C₀·n·‖f‖_∞^{1/n}`, with `C₀ = 2` for symmetric measures and
/// [`simplex_volume_constant`] otherwise unless given.
pub fn john_position_bound<T: Scalar>(
    m: &MeasureSpec<T>,
    symmetric: bool,
    c0: Option<T>,
) -> Result<JohnBound<T>> {
    let n = m.dim();
    if symmetric && !m.is_symmetric() {
        return Err(Error::Precondition(
            "symmetric constant requested for a non-symmetric measure".into(),
        ));
    }
    let map = match m.family() {
        Family::Gaussian | Family::PNorm { .. } => vec![T::one(); n],
        Family::Uniform(u) => match u.body() {
            Body::Named(NamedBody::Ball { .. }) => vec![T::one(); n],
            Body::Named(NamedBody::Box { halfwidths, .. }) => {
                let ln_g = halfwidths.iter().map(|h| h.ln()).sum::<T>() / from_usize::<T>(n);
                halfwidths.iter().map(|&h| ln_g.exp() / h).collect()
            }
            _ => {
                return Err(Error::Unsupported(
                    "John position needs ball or box level sets".into(),
                ))
            }
        },
    };
    let c0 = c0.unwrap_or_else(|| {
        if symmetric {
            lit(2.0)
        } else {
            simplex_volume_constant(n)
        }
    });
    if !(c0 > T::zero()) {
        return Err(Error::InvalidInput("C₀ must be positive".into()));
    }
    let sup_root = (m.ln_sup_density() / from_usize::<T>(n)).exp();
    let already_in_john = map.iter().all(|&d| (d - T::one()).abs() <= lit(1e-12));
    Ok(JohnBound {
        value: lit::<T>(2.0) * c0 * from_usize::<T>(n) * sup_root,
        c0,
        map,
        already_in_john,
    })
}

/// `n·μ(Q)/R` for `R·B ⊂ Q` and a density nonincreasing along rays from
/// the origin.
pub fn ray_decreasing_bound<T: Scalar>(
    q: &Body<T>,
    m: &MeasureSpec<T>,
    r: T,
    mu_q: T,
) -> Result<T> {
    check_dim(m.dim(), q.dim())?;
    if !(r > T::zero()) {
        return Err(Error::InvalidInput("R must be positive".into()));
    }
    if !(mu_q >= T::zero() && mu_q <= T::one()) {
        return Err(Error::InvalidInput("μ(Q) must lie in [0, 1]".into()));
    }
    let origin_r = q.origin_inradius();
    if origin_r < r * (T::one() - lit(1e-12)) {
        return Err(Error::Precondition(format!(
            "the ball of radius {r} about the origin is not inside Q (R₀ = {origin_r})"
        )));
    }
    if !m.is_ray_decreasing() {
        return Err(Error::Precondition(
            "density must be nonincreasing along rays from the origin".into(),
        ));
    }
    Ok(from_usize::<T>(m.dim()) * mu_q / r)
}

/// `10n²(e^{C₀} + 1)`.
pub fn isotropic_lc_bound<T: Scalar>(n: usize, c0: T) -> T {
    let nf = from_usize::<T>(n);
    lit::<T>(10.0) * nf * nf * (c0.exp() + T::one())
}

/// `μ(Q)`: closed form for a ball concentric with a radial measure and for
/// the support of a uniform measure, hit ratio otherwise.
pub fn measure_mass<T: Scalar>(
    q: &Body<T>,
    m: &MeasureSpec<T>,
    samples: usize,
    seed: u64,
) -> Result<Estimate<T>> {
    check_dim(m.dim(), q.dim())?;
    let n = m.dim() as f64;
    if let Body::Named(NamedBody::Ball { center, radius }) = q {
        if center.as_slice() == m.shift() {
            let r = *radius / m.scale();
            match m.family() {
                Family::Gaussian => {
                    return Ok(Estimate::exact(gamma_cdf(n / 2.0, r * r / lit(2.0))))
                }
                Family::PNorm { p } => {
                    return Ok(Estimate::exact(gamma_cdf(n / to_f64(*p), r.powf(*p) / *p)))
                }
                Family::Uniform(_) => {}
            }
        }
    }
    if m.support().as_ref() == Some(q) {
        return Ok(Estimate::exact(T::one()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput(
            "mass estimate needs samples ≥ 1".into(),
        ));
    }
    let hits: u64 = chunks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = substream(seed, k);
            let mut x = vec![T::zero(); m.dim()];
            let mut hits = 0u64;
            for _ in 0..len {
                m.sample_into(&mut rng, &mut x);
                if q.contains(&x).unwrap_or(false) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(Estimate {
        value: lit(p),
        stderr: lit((p * (1.0 - p) / samples as f64).sqrt()),
    })
}

/// Tunable constants entering the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants<T: Scalar> {
    /// Constant of the general lower bounds.
    pub theorem_c: T,
    /// `C₀` of the non-symmetric John bound; `None` selects the simplex value.
    pub john_c0: Option<T>,
    pub klartag_c0: T,
    /// `α` of the balanced level reported as level-set evidence.
    pub balance_alpha: T,
}

impl<T: Scalar> Default for BoundConstants<T> {
    fn default() -> Self {
        Self {
            theorem_c: lit(DEFAULT_THEOREM_CONSTANT),
            john_c0: None,
            klartag_c0: lit(DEFAULT_KLARTAG_C0),
            balance_alpha: lit(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `Γ(μ)`, the supremum over convex sets.
    Gamma,
    /// `μ⁺(∂Q)` of the given body.
    Body,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedBound<T: Scalar> {
    pub name: String,
    pub value: T,
    /// What the bound bounds; upper bounds on `Γ` also bound every body.
    pub bounds: Target,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// `(|K_t|·‖f‖_∞, R_t)` at a balanced level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalancedLevel<T: Scalar> {
    pub t: T,
    pub alpha: T,
    pub volume_times_sup: T,
    pub inradius: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport<T: Scalar> {
    pub measure: String,
    pub body: Option<String>,
    pub dim: usize,
    pub target: Target,
    /// Largest lower bound on the target.
    pub lower: Option<NamedBound<T>>,
    /// Smallest upper bound on the target.
    pub upper: Option<NamedBound<T>>,
    pub empirical: Option<PerimeterEstimate<T>>,
    pub bounds_applied: Vec<NamedBound<T>>,
    /// Bounds whose hypotheses failed, with the reason.
    pub skipped: Vec<(String, String)>,
    pub balanced_level: Option<BalancedLevel<T>>,
}

pub fn body_label<T: Scalar>(b: &Body<T>) -> String {
    match b {
        Body::Named(NamedBody::Ball { .. }) => "ball".into(),
        Body::Named(NamedBody::Box { .. }) => "box".into(),
        Body::Named(NamedBody::Halfspace(_)) => "halfspace".into(),
        Body::Polytope(p) => format!("polytope[{}]", p.facets().len()),
    }
}

struct Collector<T: Scalar> {
    applied: Vec<NamedBound<T>>,
    skipped: Vec<(String, String)>,
}

impl<T: Scalar> Collector<T> {
    fn push(&mut self, name: &str, kind: BoundKind, bounds: Target, r: Result<T>) {
        match r {
            Ok(value) if value.is_finite() => self.applied.push(NamedBound {
                name: name.into(),
                value,
                bounds,
                kind,
            }),
            Ok(value) => self
                .skipped
                .push((name.into(), format!("non-finite value {value}"))),
            Err(e) => self.skipped.push((name.into(), e.to_string())),
        }
    }
}

/// Evaluates every bound whose hypotheses hold for `m` (and `body`, if
/// given), and measures the perimeter of `body`, or of one Gaussian-facet
/// polytope when no body is given.
pub fn bounds_report<T: Scalar>(
    m: &MeasureSpec<T>,
    body: Option<&Body<T>>,
    opts: &ShellOptions<T>,
    consts: &BoundConstants<T>,
) -> Result<BoundReport<T>> {
    if let Some(b) = body {
        check_dim(m.dim(), b.dim())?;
    }
    let n = m.dim();
    let mut c = Collector {
        applied: Vec::new(),
        skipped: Vec::new(),
    };
    let oracle = LevelSetOracle::new(m)?;
    let grid = default_t_grid(oracle.sup_density());

    c.push(
        "levelset",
        BoundKind::Upper,
        Target::Gamma,
        levelset_upper_bound(&oracle, &grid).map(|(_, v)| v),
    );
    c.push(
        "levelset_remark",
        BoundKind::Upper,
        Target::Gamma,
        remark_bound(&oracle, &grid),
    );
    let symmetric = m.is_symmetric();
    let john_c0 = if symmetric { None } else { consts.john_c0 };
    c.push(
        "john",
        BoundKind::Upper,
        Target::Gamma,
        john_position_bound(m, symmetric, john_c0).map(|j| j.value),
    );
    let iso = if m.is_isotropic() && m.is_log_concave() {
        Ok(isotropic_lc_bound(n, consts.klartag_c0))
    } else {
        Err(Error::Precondition(
            "needs an isotropic log-concave measure".into(),
        ))
    };
    c.push("isotropic", BoundKind::Upper, Target::Gamma, iso);

    let stats = m.radial_stats(opts.samples.max(1000), derive_seed(opts.seed, 1));
    let empirical = match body {
        Some(q) => {
            if let (Body::Named(k), Some(support)) = (q, m.support()) {
                let r = if support == *q {
                    k.volume()
                        .and_then(|v| inradius_surface_bound(v, k.inradius(), n))
                        .map(|b| b / k.volume().unwrap_or(T::one()))
                } else {
                    Err(Error::Precondition(
                        "body is not the support of the uniform measure".into(),
                    ))
                };
                c.push("inradius_surface", BoundKind::Upper, Target::Body, r);
            }
            let r0 = q.origin_inradius();
            let ray = if r0 > T::zero() {
                measure_mass(q, m, opts.samples, derive_seed(opts.seed, 2))
                    .and_then(|mu| ray_decreasing_bound(q, m, r0, mu.value.min(T::one())))
            } else {
                Err(Error::Precondition(
                    "origin is not an interior point of Q".into(),
                ))
            };
            c.push("ray_decreasing", BoundKind::Upper, Target::Body, ray);
            Some(estimate_perimeter(q, m, opts, false)?)
        }
        None => {
            let s = stats.clone()?;
            let alpha = s.std_norm() / s.mean_norm;
            c.push(
                "nazarov",
                BoundKind::Lower,
                Target::Gamma,
                analytic_lower_bound(&s, alpha, n),
            );
            c.push(
                "corollary",
                BoundKind::Lower,
                Target::Gamma,
                corollary_bound(
                    m,
                    &[vec![T::zero(); n]],
                    consts.theorem_c,
                    opts.samples,
                    derive_seed(opts.seed, 3),
                )
                .map(|b| b.value),
            );
            if alpha < T::one() {
                empirical_nazarov_perimeter(m, Some(alpha), 1, opts)
                    .ok()
                    .map(|e| e.estimate)
            } else {
                None
            }
        }
    };

    let target = if body.is_some() {
        Target::Body
    } else {
        Target::Gamma
    };
    let lower = c
        .applied
        .iter()
        .filter(|b| b.kind == BoundKind::Lower && b.bounds == target)
        .max_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"))
        .cloned();
    let upper = c
        .applied
        .iter()
        .filter(|b| b.kind == BoundKind::Upper)
        .min_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"))
        .cloned();
    let balanced_level = find_balanced_t(&oracle, consts.balance_alpha)
        .ok()
        .and_then(|t| {
            Some(BalancedLevel {
                t,
                alpha: consts.balance_alpha,
                volume_times_sup: oracle.volume(t).ok()? * oracle.sup_density(),
                inradius: oracle.inradius(t).ok()?,
            })
        });
    Ok(BoundReport {
        measure: m.name(),
        body: body.map(body_label),
        dim: n,
        target,
        lower,
        upper,
        empirical,
        bounds_applied: c.applied,
        skipped: c.skipped,
        balanced_level,
    })
}
