//! Random Gaussian-facet polytopes with large expected perimeter, and the
//! analytic lower bounds on `Γ(μ)` that come with them.
//!
//! The polytope is `Q = ∩_{i≤N} {y : ⟨Yᵢ, y⟩ ≤ ρ}` with `Yᵢ` i.i.d. standard
//! Gaussian. Given `E = E|X|`, `W = √Var|X|`, `w = W/E` and `β ∈ (1, 1/α)`:
//!
//! ```text
//! ρ = ½·√((1 − (βw)²)/β)·E/√w
//! N = ⌊√(2π)ρ/(E+βW)·exp(ρ²/(2(E+βW)²)) + 1⌋ + 1
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{Halfspace, Polytope};
use crate::error::{Error, Result};
use crate::measures::{gaussian_norm_mean, MeasureSpec, RadialStats};
use crate::perimeter::{facet_shell_perimeter, PerimeterEstimate, PerimeterMethod, ShellOptions};
use crate::rng::{derive_seed, substream};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::special::unit_ball_volume;

/// Default for the unnamed constants of the general lower bounds. This is a
/// convention (the small-α limit of the Gaussian-facet constant), not a
/// derived value.
pub const DEFAULT_THEOREM_CONSTANT: f64 = 0.06;

/// Floor applied to `w = W/E` before it enters `ρ`.
pub const W_FLOOR: f64 = 1e-8;

/// Constructions needing more facets than this are reported as degenerate.
pub const MAX_FACETS: u64 = 1_000_000;

const BETA_GRID: usize = 64;
const BETA_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NazarovParams<T: Scalar> {
    pub beta: T,
    pub w: T,
    pub rho: T,
    /// `N`, saturating.
    pub facets: u64,
    pub expected_norm: T,
    /// `W = √Var|X|`.
    pub std_norm: T,
    pub alpha: T,
    /// `w` was clamped to [`W_FLOOR`] or `N` exceeds [`MAX_FACETS`].
    pub degenerate: bool,
}

/// `(1 − 1/β²)·√((1 − (βα)²)/β)`, the β-dependent factor of the bound.
pub fn construction_objective<T: Scalar>(beta: T, alpha: T) -> T {
    let ba = beta * alpha;
    let inner = (T::one() - ba * ba) / beta;
    if !(inner > T::zero()) || !(beta > T::one()) {
        return T::zero();
    }
    (T::one() - T::one() / (beta * beta)) * inner.sqrt()
}

/// Maximizer of [`construction_objective`] over `(1, 1/α)`: a 64-point geometric
/// grid, then golden-section search between the best point's neighbours.
pub fn optimize_beta<T: Scalar>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    let lo = 1.0 + BETA_MARGIN;
    let hi = 1.0 / to_f64(alpha) - BETA_MARGIN;
    if !(hi > lo) {
        return Err(Error::InvalidInput(
            "alpha too close to 1: empty β range".into(),
        ));
    }
    let f = |b: f64| to_f64(construction_objective(lit::<T>(b), alpha));
    let ratio = (hi / lo).powf(1.0 / (BETA_GRID - 1) as f64);
    let grid: Vec<f64> = (0..BETA_GRID)
        .map(|k| (lo * ratio.powi(k as i32)).min(hi))
        .collect();
    let (kbest, _) = grid.iter().enumerate().map(|(k, &b)| (k, f(b))).fold(
        (0, f64::NEG_INFINITY),
        |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
    );
    let mut a = grid[kbest.saturating_sub(1)];
    let mut b = grid[(kbest + 1).min(BETA_GRID - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * b.abs() {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    let best = if f(refined) >= f(grid[kbest]) {
        refined
    } else {
        grid[kbest]
    };
    Ok(lit(best))
}

/// `sup_β (1 − 1/β²)√((1−(βα)²)/β) / (2e√e (1+α)²)`, returned with the
/// optimizing β.
pub fn construction_constant<T: Scalar>(alpha: T) -> Result<(T, T)> {
    let beta = optimize_beta(alpha)?;
    let e = T::E();
    let denom = lit::<T>(2.0) * e * e.sqrt() * (T::one() + alpha).powi(2);
    Ok((beta, construction_objective(beta, alpha) / denom))
}

/// `(E + βW)`-scaled tail term `q = (E+βW)/(√(2π)ρ)·exp(−ρ²/(2(E+βW)²))`.
pub fn tail_term<T: Scalar>(expected_norm: T, std_norm: T, beta: T, rho: T) -> T {
    let s = expected_norm + beta * std_norm;
    s / (T::TAU().sqrt() * rho) * (-(rho * rho) / (lit::<T>(2.0) * s * s)).exp()
}

/// `N = ⌊1/q + 1⌋ + 1`, saturating at `u64::MAX`.
pub fn facet_count<T: Scalar>(expected_norm: T, std_norm: T, beta: T, rho: T) -> u64 {
    let x = 1.0 / to_f64(tail_term(expected_norm, std_norm, beta, rho));
    if !x.is_finite() || x + 2.0 >= u64::MAX as f64 {
        u64::MAX
    } else {
        (x + 1.0).floor() as u64 + 1
    }
}

/// `N·(1 − q)^{N−1}`.
pub fn expon_value<T: Scalar>(p: &NazarovParams<T>) -> T {
    let q = tail_term(p.expected_norm, p.std_norm, p.beta, p.rho);
    let n = lit::<T>(p.facets as f64);
    n * (T::one() - q).powf(n - T::one())
}

/// `−ρ²/(2(E−βW)²) + ρ²/(2(E+βW)²)`.
pub fn comp_exponent<T: Scalar>(expected_norm: T, std_norm: T, beta: T, rho: T) -> T {
    let two = lit::<T>(2.0);
    let lo = expected_norm - beta * std_norm;
    let hi = expected_norm + beta * std_norm;
    -(rho * rho) / (two * lo * lo) + rho * rho / (two * hi * hi)
}

/// `ρ = ½·√((1 − (βw)²)/β)·E/√w`.
pub fn rho_formula<T: Scalar>(expected_norm: T, w: T, beta: T) -> T {
    let bw = beta * w;
    lit::<T>(0.5) * ((T::one() - bw * bw) / beta).sqrt() * expected_norm / w.sqrt()
}

pub fn make_params<T: Scalar>(
    stats: &RadialStats<T>,
    alpha: T,
    beta: Option<T>,
) -> Result<NazarovParams<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    let e = stats.mean_norm;
    let big_w = stats.std_norm();
    if !(e > T::zero()) {
        return Err(Error::Precondition("E|X| must be positive".into()));
    }
    if big_w > alpha * e * (T::one() + lit(1e-12)) {
        return Err(Error::Precondition(format!(
            "√Var(|X|) ≤ α·E|X| fails: {big_w} > {alpha}·{e}"
        )));
    }
    let beta = match beta {
        Some(b) => {
            if !(b > T::one() && b * alpha < T::one()) {
                return Err(Error::InvalidInput("beta must lie in (1, 1/alpha)".into()));
            }
            b
        }
        None => optimize_beta(alpha)?,
    };
    let mut w = big_w / e;
    let mut degenerate = false;
    if w < lit(W_FLOOR) {
        w = lit(W_FLOOR);
        degenerate = true;
    }
    let rho = rho_formula(e, w, beta);
    let facets = facet_count(e, big_w, beta, rho);
    degenerate |= facets > MAX_FACETS;
    Ok(NazarovParams {
        beta,
        w,
        rho,
        facets,
        expected_norm: e,
        std_norm: big_w,
        alpha,
        degenerate,
    })
}

/// `N` facets with i.i.d. standard Gaussian normals and common offset `ρ`.
pub fn build_polytope<T: Scalar>(
    params: &NazarovParams<T>,
    n: usize,
    seed: u64,
) -> Result<Polytope<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be ≥ 1".into()));
    }
    if params.facets > MAX_FACETS {
        return Err(Error::Unsupported(format!(
            "construction needs {} facets",
            params.facets
        )));
    }
    let mut rng = substream(seed, 0);
    let mut facets = Vec::with_capacity(params.facets as usize);
    while facets.len() < params.facets as usize {
        let normal: Vec<T> = (0..n).map(|_| T::sample_std_normal(&mut rng)).collect();
        // a zero draw has probability zero; skip it rather than fail
        if let Ok(h) = Halfspace::new(normal, params.rho) {
            facets.push(h);
        }
    }
    Polytope::new(facets)
}

/// Lower bound on `E_Y μ⁺(∂Q)`:
/// `c(α)·E|θ|/(√E|X| · Var(|X|)^{1/4})` with `c(α)` from [`construction_constant`]
/// and `E|θ|` the exact mean norm of a standard Gaussian in ℝⁿ.
pub fn analytic_lower_bound<T: Scalar>(stats: &RadialStats<T>, alpha: T, n: usize) -> Result<T> {
    if stats.std_norm() > alpha * stats.mean_norm * (T::one() + lit(1e-12)) {
        return Err(Error::Precondition("√Var(|X|) ≤ α·E|X| fails".into()));
    }
    if !(stats.var_norm > T::zero()) {
        return Err(Error::Precondition("Var(|X|) must be positive".into()));
    }
    let (_, c) = construction_constant(alpha)?;
    let theta_mean: T = gaussian_norm_mean(n)?;
    Ok(c * theta_mean / (stats.mean_norm.sqrt() * stats.var_norm.sqrt().sqrt()))
}

/// `C(1−δ)√n / (b·√((b/a)² − 1))` for `P(|X+y| ∈ [a,b]) ≥ 1−δ`.
pub fn theorem_general_bound<T: Scalar>(a: T, b: T, delta: T, n: usize, c: T) -> Result<T> {
    if !(a > T::zero() && a < b) {
        return Err(Error::InvalidInput("need 0 < a < b".into()));
    }
    if !(delta >= T::zero() && delta <= T::one()) || !(c > T::zero()) {
        return Err(Error::InvalidInput("need δ ∈ [0,1] and C > 0".into()));
    }
    let r = b / a;
    Ok(c * (T::one() - delta) * from_usize::<T>(n).sqrt() / (b * (r * r - T::one()).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryBound<T: Scalar> {
    pub value: T,
    pub best_shift: usize,
    /// Bound obtained from each candidate shift.
    pub per_shift: Vec<T>,
    /// Inner radius `a` with `‖f‖_∞ ω_n aⁿ = 1/4`.
    pub inner_radius: T,
}

/// `sup_y C·(1−δ)√n·a/b²` over candidate shifts, with `δ = 1/2`,
/// `‖f‖_∞ ω_n aⁿ = 1/4` and `b = 4E|X+y|` (each side fails with probability
/// at most 1/4); `√((b/a)²−1) ≤ b/a` is applied as in the general bound.
pub fn corollary_bound<T: Scalar>(
    m: &MeasureSpec<T>,
    shifts: &[Vec<T>],
    c: T,
    budget: usize,
    seed: u64,
) -> Result<CorollaryBound<T>> {
    if shifts.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one candidate shift".into(),
        ));
    }
    let n = m.dim();
    let nf = from_usize::<T>(n);
    let sup = m.sup_density();
    let a = (T::one() / (lit::<T>(4.0) * sup * unit_ball_volume::<T>(n))).powf(T::one() / nf);
    let delta = lit::<T>(0.5);
    let per_shift = shifts
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let moved: Vec<T> = m.shift().iter().zip(y).map(|(&s, &yi)| s + yi).collect();
            crate::error::check_dim(n, y.len())?;
            let shifted = m.clone().with_shift(moved)?;
            let e = shifted
                .radial_stats(budget, derive_seed(seed, i as u64))?
                .mean_norm;
            let b = lit::<T>(4.0) * e;
            Ok(c * (T::one() - delta) * nf.sqrt() * a / (b * b))
        })
        .collect::<Result<Vec<T>>>()?;
    let (best_shift, value) =
        per_shift
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, T::neg_infinity()),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    Ok(CorollaryBound {
        value,
        best_shift,
        per_shift,
        inner_radius: a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NazarovEstimate<T: Scalar> {
    /// Mean over trials; stderr is the between-trial standard error (the
    /// single-run stderr when `trials = 1`).
    pub estimate: PerimeterEstimate<T>,
    pub params: NazarovParams<T>,
    pub stats: RadialStats<T>,
    pub trial_values: Vec<T>,
}

/// Averages the facet-shell perimeter of independently drawn polytopes.
///
/// `alpha` defaults to `W/E` of the measure.
pub fn empirical_nazarov_perimeter<T: Scalar>(
    m: &MeasureSpec<T>,
    alpha: Option<T>,
    trials: usize,
    opts: &ShellOptions<T>,
) -> Result<NazarovEstimate<T>> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be ≥ 1".into()));
    }
    let stats = m.radial_stats(opts.samples.max(1000), derive_seed(opts.seed, u64::MAX))?;
    let alpha = alpha.unwrap_or_else(|| stats.std_norm() / stats.mean_norm);
    let params = make_params(&stats, alpha, None)?;
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| {
            let poly = build_polytope(&params, m.dim(), derive_seed(opts.seed, 2 * t as u64))?;
            let mut o = opts.clone();
            o.seed = derive_seed(opts.seed, 2 * t as u64 + 1);
            facet_shell_perimeter(&poly, m, &o)
        })
        .collect::<Result<Vec<_>>>()?;
    let tf = from_usize::<T>(trials);
    let values: Vec<T> = runs.iter().map(|r| r.value).collect();
    let mean = values.iter().copied().sum::<T>() / tf;
    let stderr = if trials == 1 {
        runs[0].stderr
    } else {
        let ss = values
            .iter()
            .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
        (ss / (tf - T::one()) / tf).sqrt()
    };
    let first = &runs[0];
    let estimate = PerimeterEstimate {
        value: mean,
        stderr,
        eps: first.eps,
        samples: opts.samples * trials,
        method: PerimeterMethod::FacetShell,
        side: first.side,
        coarse: runs.iter().map(|r| r.coarse).sum::<T>() / tf,
        fine: runs.iter().map(|r| r.fine).sum::<T>() / tf,
        overlap_warning: runs.iter().any(|r| r.overlap_warning),
    };
    Ok(NazarovEstimate {
        estimate,
        params,
        stats,
        trial_values: values,
    })
}

/// `C·√n/(Var^{1/4}·n^{1/4})`: the lower bound with `E|X| = √n` substituted,
/// under `Var(|X|) ≤ var_bound`.
pub fn thin_shell_observation<T: Scalar>(n: usize, var_bound: T, c: T) -> Result<T> {
    if !(var_bound > T::zero()) || n == 0 {
        return Err(Error::InvalidInput("need n ≥ 1 and var_bound > 0".into()));
    }
    let nf = from_usize::<T>(n);
    Ok(c * nf.sqrt() / (var_bound.sqrt().sqrt() * nf.sqrt().sqrt()))
}

/// `(1/a)·e^{−a²/2}`, the Mills-ratio bound on `∫_a^∞ e^{−s²/2} ds`.
pub fn mills_tail_bound<T: Scalar>(a: T) -> T {
    (-(a * a) / lit(2.0)).exp() / a
}
