//! Monte Carlo estimators of the μ-perimeter `μ⁺(∂Q)` and closed forms used
//! as oracles.
//!
//! Both shell estimators count, on one common sample stream, the events of a
//! shell of width `ε` and of width `ε/2`, then Richardson-extrapolate
//! `2·est(ε/2) − est(ε)` to cancel the `O(ε)` bias. Per-sample contributions
//! are integers, so the summation is exact and independent of scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{Body, Halfspace, NamedBody, Polytope};
use crate::error::{check_dim, Error, Result};
use crate::measures::{gaussian_norm_mean, Family, MeasureSpec};
use crate::rng::{chunks, substream};
use crate::scalar::{dot, from_usize, lit, norm, Scalar};
use crate::special::{chi_pdf, std_normal_pdf};

pub const MIN_SAMPLES: usize = 10_000;

/// Default shell width as a multiple of the measure's coordinate spread.
pub const DEFAULT_EPS_FACTOR: f64 = 0.05;

/// Which side of `∂Q` the shell lies on.
///
/// `Outer` is `(Q + εB) ∖ Q`. `Inner` is `Q ∖ (Q ⊖ εB)`; both have the same
/// limit for continuous densities, but only the inner shell sees the density
/// of a uniform measure on `Q` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellSide {
    Outer,
    Inner,
}

impl ShellSide {
    /// Inner for uniform measures, outer otherwise.
    pub fn default_for<T: Scalar>(m: &MeasureSpec<T>) -> Self {
        if m.is_uniform() {
            ShellSide::Inner
        } else {
            ShellSide::Outer
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerimeterMethod {
    FacetShell,
    GenericShell,
    ClosedForm,
}

impl std::fmt::Display for PerimeterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FacetShell => "facet_shell",
            Self::GenericShell => "generic_shell",
            Self::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerimeterEstimate<T: Scalar> {
    pub value: T,
    pub stderr: T,
    /// `(ε, ε/2)`; zeros for closed forms.
    pub eps: (T, T),
    pub samples: usize,
    pub method: PerimeterMethod,
    pub side: Option<ShellSide>,
    /// Un-extrapolated estimates at `ε` and `ε/2`.
    pub coarse: T,
    pub fine: T,
    /// Samples in more than one facet shell (or in the uncounted corner
    /// region) exceeded 1% of shell events.
    pub overlap_warning: bool,
}

impl<T: Scalar> PerimeterEstimate<T> {
    pub fn closed_form(value: T) -> Self {
        Self {
            value,
            stderr: T::zero(),
            eps: (T::zero(), T::zero()),
            samples: 0,
            method: PerimeterMethod::ClosedForm,
            side: None,
            coarse: value,
            fine: value,
            overlap_warning: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellOptions<T: Scalar> {
    pub samples: usize,
    pub seed: u64,
    /// Euclidean shell width; defaults to `DEFAULT_EPS_FACTOR × spread`.
    pub eps: Option<T>,
    pub side: Option<ShellSide>,
}

impl<T: Scalar> ShellOptions<T> {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            eps: None,
            side: None,
        }
    }

    pub fn eps(mut self, eps: T) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn side(mut self, side: ShellSide) -> Self {
        self.side = Some(side);
        self
    }

    fn resolve(&self, m: &MeasureSpec<T>) -> Result<(T, ShellSide)> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "shell estimators need samples ≥ {MIN_SAMPLES}"
            )));
        }
        let eps = self
            .eps
            .unwrap_or_else(|| lit::<T>(DEFAULT_EPS_FACTOR) * m.coordinate_spread());
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        Ok((eps, self.side.unwrap_or_else(|| ShellSide::default_for(m))))
    }
}

/// Per-sample shell event counts.
#[derive(Debug, Clone, Copy, Default)]
struct Events {
    /// events in the `ε/2` shell
    fine: u32,
    /// events in the `ε` shell but not the `ε/2` one
    outer_half: u32,
    /// sample sits in an overlap/corner region
    overlap: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    sum_z: i64,
    sum_z2: u128,
    fine: u64,
    coarse: u64,
    hit_samples: u64,
    overlap: u64,
}

impl Tally {
    fn add(&mut self, e: Events) {
        let z = 3 * e.fine as i64 - e.outer_half as i64;
        self.sum_z += z;
        self.sum_z2 += (z * z) as u128;
        self.fine += e.fine as u64;
        self.coarse += (e.fine + e.outer_half) as u64;
        if e.fine + e.outer_half > 0 {
            self.hit_samples += 1;
        }
        if e.overlap {
            self.overlap += 1;
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.sum_z += o.sum_z;
        self.sum_z2 += o.sum_z2;
        self.fine += o.fine;
        self.coarse += o.coarse;
        self.hit_samples += o.hit_samples;
        self.overlap += o.overlap;
        self
    }
}

fn scan<T, F>(
    m: &MeasureSpec<T>,
    samples: usize,
    seed: u64,
    scratch_len: usize,
    classify: F,
) -> Tally
where
    T: Scalar,
    F: Fn(&[T], &mut [T]) -> Events + Sync,
{
    chunks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = substream(seed, k);
            let mut x = vec![T::zero(); m.dim()];
            let mut scratch = vec![T::zero(); scratch_len];
            let mut t = Tally::default();
            for _ in 0..len {
                m.sample_into(&mut rng, &mut x);
                t.add(classify(&x, &mut scratch));
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

fn finish<T: Scalar>(
    t: Tally,
    samples: usize,
    eps: T,
    method: PerimeterMethod,
    side: ShellSide,
) -> PerimeterEstimate<T> {
    let s = from_usize::<T>(samples);
    let count = |c: u64| lit::<T>(c as f64);
    let half = eps / lit(2.0);
    let coarse = count(t.coarse) / (s * eps);
    let fine = count(t.fine) / (s * half);
    let (value, stderr) = if t.coarse == 0 {
        // rule of three
        (T::zero(), lit::<T>(3.0) / (s * eps))
    } else {
        let sf = samples as f64;
        let mean = t.sum_z as f64 / sf;
        let var = ((t.sum_z2 as f64 / sf - mean * mean) * sf / (sf - 1.0)).max(0.0);
        let value = lit::<T>(t.sum_z as f64) / (s * eps);
        (value.max(T::zero()), lit::<T>((var / sf).sqrt()) / eps)
    };
    PerimeterEstimate {
        value,
        stderr,
        eps: (eps, half),
        samples,
        method,
        side: Some(side),
        coarse,
        fine,
        overlap_warning: t.overlap as f64 > 0.01 * t.hit_samples.max(1) as f64,
    }
}

/// Facet-shell estimator for `Q = ∩ {⟨x,θᵢ⟩ ≤ ρᵢ}`.
///
/// Outer side: facet `i` fires when `mᵢ ∈ (0, ε|θᵢ|]` and `mⱼ ≤ 0` for all
/// `j ≠ i`. Inner side: `mᵢ ∈ (−ε|θᵢ|, 0]` with `x ∈ Q`, counted once per
/// facet.
pub fn facet_shell_perimeter<T: Scalar>(
    poly: &Polytope<T>,
    m: &MeasureSpec<T>,
    opts: &ShellOptions<T>,
) -> Result<PerimeterEstimate<T>> {
    check_dim(poly.dim(), m.dim())?;
    let (eps, side) = opts.resolve(m)?;
    let half = eps / lit(2.0);
    let widths: Vec<(T, T)> = poly
        .facets()
        .iter()
        .map(|f| (eps * f.normal_norm(), half * f.normal_norm()))
        .collect();
    let nf = widths.len();
    let tally = match side {
        ShellSide::Outer => scan(m, opts.samples, opts.seed, nf, |x, margins| {
            poly.margins_into(x, margins);
            let mut positive = 0usize;
            let mut idx = 0usize;
            let mut all_near = true;
            for (i, &mi) in margins.iter().enumerate() {
                if mi > T::zero() {
                    positive += 1;
                    idx = i;
                    all_near &= mi <= widths[i].0;
                }
            }
            match positive {
                1 => {
                    let mi = margins[idx];
                    if mi <= widths[idx].1 {
                        Events {
                            fine: 1,
                            ..Events::default()
                        }
                    } else if mi <= widths[idx].0 {
                        Events {
                            outer_half: 1,
                            ..Events::default()
                        }
                    } else {
                        Events::default()
                    }
                }
                // corner region next to several facets: not attributed to any
                p if p >= 2 && all_near => Events {
                    overlap: true,
                    ..Events::default()
                },
                _ => Events::default(),
            }
        }),
        ShellSide::Inner => scan(m, opts.samples, opts.seed, nf, |x, margins| {
            poly.margins_into(x, margins);
            if margins.iter().any(|&mi| mi > T::zero()) {
                return Events::default();
            }
            let mut e = Events::default();
            for (&mi, &(w, wh)) in margins.iter().zip(&widths) {
                let depth = -mi;
                if depth < wh {
                    e.fine += 1;
                } else if depth < w {
                    e.outer_half += 1;
                }
            }
            e.overlap = e.fine + e.outer_half > 1;
            e
        }),
    };
    Ok(finish(
        tally,
        opts.samples,
        eps,
        PerimeterMethod::FacetShell,
        side,
    ))
}

/// ε-shell estimator for named bodies using their exact signed distance.
pub fn generic_shell_perimeter<T: Scalar>(
    body: &NamedBody<T>,
    m: &MeasureSpec<T>,
    opts: &ShellOptions<T>,
) -> Result<PerimeterEstimate<T>> {
    check_dim(body.dim(), m.dim())?;
    let (eps, side) = opts.resolve(m)?;
    let half = eps / lit(2.0);
    let tally = scan(m, opts.samples, opts.seed, 0, |x, _| {
        let sd = body.signed_distance(x);
        let (fine, coarse) = match side {
            ShellSide::Outer => (sd > T::zero() && sd <= half, sd > half && sd <= eps),
            ShellSide::Inner => (sd <= T::zero() && -sd < half, -sd >= half && -sd < eps),
        };
        Events {
            fine: fine as u32,
            outer_half: coarse as u32,
            overlap: false,
        }
    });
    Ok(finish(
        tally,
        opts.samples,
        eps,
        PerimeterMethod::GenericShell,
        side,
    ))
}

/// Dispatches on the body: closed form when known (and `exact` is set),
/// facet shell for polytopes, signed-distance shell for named bodies.
pub fn estimate_perimeter<T: Scalar>(
    body: &Body<T>,
    m: &MeasureSpec<T>,
    opts: &ShellOptions<T>,
    exact: bool,
) -> Result<PerimeterEstimate<T>> {
    match body {
        Body::Named(b) => match closed_form_perimeter(b, m).filter(|_| exact) {
            Some(e) => Ok(e),
            None => generic_shell_perimeter(b, m, opts),
        },
        Body::Polytope(p) => facet_shell_perimeter(p, m, opts),
    }
}

/// Gaussian perimeter of a halfspace: `φ(u)/scale` with
/// `u = (ρ/|θ| − ⟨shift, θ/|θ|⟩)/scale`.
pub fn halfspace_perimeter_exact<T: Scalar>(
    h: &Halfspace<T>,
    m: &MeasureSpec<T>,
) -> Result<PerimeterEstimate<T>> {
    check_dim(h.dim(), m.dim())?;
    if !m.is_gaussian() {
        return Err(Error::Unsupported(
            "exact halfspace perimeter needs a Gaussian measure".into(),
        ));
    }
    let theta = h.normal_norm();
    let u = (h.offset() / theta - dot(m.shift(), h.normal()) / theta) / m.scale();
    Ok(PerimeterEstimate::closed_form(
        std_normal_pdf(u) / m.scale(),
    ))
}

/// Closed-form perimeter when one is known: halfspaces and concentric balls
/// under a Gaussian, and a ball or box under the uniform measure on itself.
pub fn closed_form_perimeter<T: Scalar>(
    body: &NamedBody<T>,
    m: &MeasureSpec<T>,
) -> Option<PerimeterEstimate<T>> {
    if body.dim() != m.dim() {
        return None;
    }
    match (body, m.family()) {
        (NamedBody::Halfspace(h), Family::Gaussian) => halfspace_perimeter_exact(h, m).ok(),
        (NamedBody::Ball { center, radius }, Family::Gaussian)
            if center.as_slice() == m.shift() =>
        {
            let s = m.scale();
            Some(PerimeterEstimate::closed_form(
                chi_pdf(*radius / s, m.dim()) / s,
            ))
        }
        (_, Family::Uniform(_)) => {
            let support = m.support()?;
            if support == Body::Named(body.clone()) {
                let area = body.surface_area().ok()?;
                let vol = body.volume().ok()?;
                Some(PerimeterEstimate::closed_form(area / vol))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// `lim_{ε→0} P_Y(⟨y,Y⟩ ∈ [ρ, ρ+ε|Y|])/ε` for `Y` standard normal in ℝⁿ:
/// `E|Y|/√(2π) · e^{−ρ²/(2|y|²)}/|y|`, exact at finite `n`.
pub fn gaussian_shell_rate<T: Scalar>(n: usize, y_norm: T, rho: T) -> Result<T> {
    if !(y_norm > T::zero()) {
        return Err(Error::InvalidInput("|y| must be positive".into()));
    }
    let mean: T = gaussian_norm_mean(n)?;
    Ok(mean * std_normal_pdf(rho / y_norm) / y_norm)
}

/// Shell frequency `P_Y(⟨y,Y⟩ ∈ [ρ, ρ+ε|Y|])/ε` by direct simulation, for
/// cross-checking [`gaussian_shell_rate`].
pub fn gaussian_shell_frequency<T: Scalar>(
    y: &[T],
    rho: T,
    eps: T,
    samples: usize,
    seed: u64,
) -> Result<(T, T)> {
    if samples == 0 || !(eps > T::zero()) {
        return Err(Error::InvalidInput("need samples ≥ 1 and eps > 0".into()));
    }
    let g = MeasureSpec::<T>::gaussian(y.len())?;
    let hits: u64 = chunks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = substream(seed, k);
            let mut v = vec![T::zero(); y.len()];
            let mut hits = 0u64;
            for _ in 0..len {
                g.sample_into(&mut rng, &mut v);
                let s = dot(y, &v);
                if s >= rho && s <= rho + eps * norm(&v) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let sf = samples as f64;
    let p = hits as f64 / sf;
    let e = crate::scalar::to_f64(eps);
    Ok((lit(p / e), lit((p * (1.0 - p) / sf).sqrt() / e)))
}
