//! Convex bodies: halfspace intersections and a few named bodies with closed
//! forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::rng::{chunks, substream};
use crate::scalar::{dot, from_usize, lit, norm, Scalar};
use crate::special::unit_ball_volume;

/// `{x : ⟨normal, x⟩ ≤ offset}`. The normal is kept as given, not normalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halfspace<T: Scalar> {
    normal: Vec<T>,
    offset: T,
    normal_norm: T,
}

impl<T: Scalar> Halfspace<T> {
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::InvalidInput(
                "halfspace normal has dimension 0".into(),
            ));
        }
        let normal_norm = norm(&normal);
        if !(normal_norm > T::zero()) || !normal_norm.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidInput(
                "halfspace normal must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            normal,
            offset,
            normal_norm,
        })
    }

    pub fn normal(&self) -> &[T] {
        &self.normal
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    /// `|θ|`.
    pub fn normal_norm(&self) -> T {
        self.normal_norm
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `⟨x, θ⟩ − ρ`.
    #[inline]
    pub fn margin(&self, x: &[T]) -> T {
        dot(&self.normal, x) - self.offset
    }

    /// Signed Euclidean distance to the bounding hyperplane, positive outside.
    pub fn signed_distance(&self, x: &[T]) -> T {
        self.margin(x) / self.normal_norm
    }
}

/// Nonempty intersection of finitely many halfspaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polytope<T: Scalar> {
    facets: Vec<Halfspace<T>>,
    dim: usize,
    bounding_box: Option<(Vec<T>, Vec<T>)>,
}

/// Largest inscribed ball of a polytope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inradius<T: Scalar> {
    /// `+∞` when `unbounded`.
    pub radius: T,
    pub center: Vec<T>,
    pub unbounded: bool,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(facets: Vec<Halfspace<T>>) -> Result<Self> {
        let dim = facets
            .first()
            .ok_or_else(|| Error::InvalidInput("polytope needs at least one facet".into()))?
            .dim();
        for f in &facets {
            check_dim(dim, f.dim())?;
        }
        Ok(Self {
            facets,
            dim,
            bounding_box: None,
        })
    }

    /// `∏ [center_i − h_i, center_i + h_i]` as `2n` facets, with its own
    /// bounding box attached.
    pub fn from_box(center: &[T], halfwidths: &[T]) -> Result<Self> {
        check_dim(center.len(), halfwidths.len())?;
        let n = center.len();
        let mut facets = Vec::with_capacity(2 * n);
        for i in 0..n {
            if !(halfwidths[i] > T::zero()) {
                return Err(Error::InvalidInput(
                    "box half-widths must be positive".into(),
                ));
            }
            let mut e = vec![T::zero(); n];
            e[i] = T::one();
            facets.push(Halfspace::new(e.clone(), center[i] + halfwidths[i])?);
            e[i] = -T::one();
            facets.push(Halfspace::new(e, halfwidths[i] - center[i])?);
        }
        let lo = center
            .iter()
            .zip(halfwidths)
            .map(|(&c, &h)| c - h)
            .collect();
        let hi = center
            .iter()
            .zip(halfwidths)
            .map(|(&c, &h)| c + h)
            .collect();
        Ok(Self {
            facets,
            dim: n,
            bounding_box: Some((lo, hi)),
        })
    }

    /// `[−h, h]ⁿ`.
    pub fn cube(dim: usize, halfwidth: T) -> Result<Self> {
        Self::from_box(&vec![T::zero(); dim], &vec![halfwidth; dim])
    }

    pub fn with_bounding_box(mut self, lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        check_dim(self.dim, lo.len())?;
        check_dim(self.dim, hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput("bounding box must have lo < hi".into()));
        }
        self.bounding_box = Some((lo, hi));
        Ok(self)
    }

    pub fn facets(&self) -> &[Halfspace<T>] {
        &self.facets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> Option<&(Vec<T>, Vec<T>)> {
        self.bounding_box.as_ref()
    }

    /// `mᵢ = ⟨x, θᵢ⟩ − ρᵢ` for every facet.
    pub fn facet_margins(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        Ok(self.facets.iter().map(|f| f.margin(x)).collect())
    }

    /// Allocation-free variant of [`Self::facet_margins`]; no dimension check.
    #[inline]
    pub(crate) fn margins_into(&self, x: &[T], out: &mut [T]) {
        for (m, f) in out.iter_mut().zip(&self.facets) {
            *m = f.margin(x);
        }
    }

    pub fn contains(&self, x: &[T]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.facets.iter().all(|f| f.margin(x) <= T::zero()))
    }

    /// The image under `x ↦ x + v`.
    pub fn translated(&self, v: &[T]) -> Result<Self> {
        check_dim(self.dim, v.len())?;
        let facets = self
            .facets
            .iter()
            .map(|f| Halfspace::new(f.normal.clone(), f.offset + dot(&f.normal, v)))
            .collect::<Result<Vec<_>>>()?;
        let bounding_box = self.bounding_box.as_ref().map(|(lo, hi)| {
            (
                lo.iter().zip(v).map(|(&a, &b)| a + b).collect(),
                hi.iter().zip(v).map(|(&a, &b)| a + b).collect(),
            )
        });
        Ok(Self {
            facets,
            dim: self.dim,
            bounding_box,
        })
    }

    /// The image under `x ↦ αx`, `α > 0`.
    pub fn scaled(&self, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        let facets = self
            .facets
            .iter()
            .map(|f| Halfspace::new(f.normal.clone(), f.offset * alpha))
            .collect::<Result<Vec<_>>>()?;
        let bounding_box = self.bounding_box.as_ref().map(|(lo, hi)| {
            (
                lo.iter().map(|&a| a * alpha).collect(),
                hi.iter().map(|&a| a * alpha).collect(),
            )
        });
        Ok(Self {
            facets,
            dim: self.dim,
            bounding_box,
        })
    }

    /// Radius of the largest ball centred at the origin inside the polytope
    /// (`min ρᵢ/|θᵢ|`, negative when the origin is outside).
    pub fn origin_inradius(&self) -> T {
        self.facets
            .iter()
            .map(|f| f.offset / f.normal_norm)
            .fold(T::infinity(), T::min)
    }

    /// Chebyshev centre: `max r` s.t. `⟨θᵢ/|θᵢ|, x⟩ + r ≤ ρᵢ/|θᵢ|`.
    pub fn chebyshev_inradius(&self) -> Result<Inradius<T>> {
        let rows: Vec<Vec<T>> = self
            .facets
            .iter()
            .map(|f| f.normal.iter().map(|&a| a / f.normal_norm).collect())
            .collect();
        let rhs: Vec<T> = self
            .facets
            .iter()
            .map(|f| f.offset / f.normal_norm)
            .collect();
        chebyshev_lp(&rows, &rhs, self.dim)
    }
}

/// Dense simplex for the Chebyshev-centre LP.
///
/// With `r₀ = min bᵢ` the point `(x, r) = (0, r₀)` is feasible, so writing
/// `r = r₀ + u`, `x = p − q` gives `A p − A q + u ≤ b − r₀ ≥ 0` and the slack
/// basis is a feasible start. Bland's rule rules out cycling.
fn chebyshev_lp<T: Scalar>(rows: &[Vec<T>], rhs: &[T], n: usize) -> Result<Inradius<T>> {
    let m = rows.len();
    let r0 = rhs.iter().copied().fold(T::infinity(), T::min);
    let nvar = 2 * n + 1;
    let width = nvar + m + 1;
    let tol = T::epsilon().sqrt() * lit(1e-1);

    // tableau rows 0..m constraints, row m objective (reduced costs, maximize u).
    let mut tab = vec![T::zero(); (m + 1) * width];
    for (i, row) in rows.iter().enumerate() {
        let t = &mut tab[i * width..(i + 1) * width];
        for j in 0..n {
            t[j] = row[j];
            t[n + j] = -row[j];
        }
        t[2 * n] = T::one();
        t[nvar + i] = T::one();
        t[width - 1] = (rhs[i] - r0).max(T::zero());
    }
    tab[m * width + 2 * n] = -T::one();
    let mut basis: Vec<usize> = (nvar..nvar + m).collect();

    let max_iter = 50 * (m + nvar) + 1000;
    let mut converged = false;
    for _ in 0..max_iter {
        let obj = &tab[m * width..(m + 1) * width];
        let entering = (0..nvar + m).find(|&j| obj[j] < -tol);
        let Some(e) = entering else {
            converged = true;
            break;
        };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let a = tab[i * width + e];
            if a > tol {
                let ratio = tab[i * width + width - 1] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - tol || (ratio <= lr + tol && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((l, _)) = leave else {
            // improving ray with no blocking constraint: r is unbounded
            return Ok(Inradius {
                radius: T::infinity(),
                center: vec![T::zero(); n],
                unbounded: true,
            });
        };
        pivot(&mut tab, width, m + 1, l, e);
        basis[l] = e;
    }
    if !converged {
        return Err(Error::Numerical("simplex iteration limit reached".into()));
    }

    let mut sol = vec![T::zero(); nvar];
    for (i, &b) in basis.iter().enumerate() {
        if b < nvar {
            sol[b] = tab[i * width + width - 1];
        }
    }
    let radius = r0 + sol[2 * n];
    let scale_tol = tol * rhs.iter().fold(T::one(), |a, &b| a.max(b.abs()));
    if radius < -scale_tol {
        return Err(Error::EmptyPolytope);
    }
    let center = (0..n).map(|j| sol[j] - sol[n + j]).collect();
    Ok(Inradius {
        radius: radius.max(T::zero()),
        center,
        unbounded: false,
    })
}

fn pivot<T: Scalar>(tab: &mut [T], width: usize, nrows: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc];
    for v in &mut tab[pr * width..(pr + 1) * width] {
        *v = *v / p;
    }
    let pivot_row: Vec<T> = tab[pr * width..(pr + 1) * width].to_vec();
    for r in 0..nrows {
        if r == pr {
            continue;
        }
        let f = tab[r * width + pc];
        if f != T::zero() {
            let row = &mut tab[r * width..(r + 1) * width];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v = *v - f * pv;
            }
            row[pc] = T::zero();
        }
    }
}

/// Bodies with closed-form geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NamedBody<T: Scalar> {
    Ball { center: Vec<T>, radius: T },
    Box { center: Vec<T>, halfwidths: Vec<T> },
    Halfspace(Halfspace<T>),
}

impl<T: Scalar> NamedBody<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        if center.is_empty() || !(radius > T::zero()) {
            return Err(Error::InvalidInput(
                "ball needs dimension ≥ 1 and radius > 0".into(),
            ));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: T) -> Result<Self> {
        Self::ball(vec![T::zero(); dim], radius)
    }

    pub fn boxed(center: Vec<T>, halfwidths: Vec<T>) -> Result<Self> {
        check_dim(center.len(), halfwidths.len())?;
        if center.is_empty() || halfwidths.iter().any(|&h| !(h > T::zero())) {
            return Err(Error::InvalidInput(
                "box needs dimension ≥ 1 and half-widths > 0".into(),
            ));
        }
        Ok(Self::Box { center, halfwidths })
    }

    /// The cube of unit volume centred at the origin.
    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::boxed(vec![T::zero(); dim], vec![lit(0.5); dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } | Self::Box { center, .. } => center.len(),
            Self::Halfspace(h) => h.dim(),
        }
    }

    /// Exact signed Euclidean distance to the boundary, positive outside.
    pub fn signed_distance(&self, x: &[T]) -> T {
        match self {
            Self::Ball { center, radius } => {
                let d2 = x
                    .iter()
                    .zip(center)
                    .fold(T::zero(), |a, (&xi, &ci)| a + (xi - ci) * (xi - ci));
                d2.sqrt() - *radius
            }
            Self::Box { center, halfwidths } => {
                let mut outside = T::zero();
                let mut depth = T::infinity();
                for ((&xi, &ci), &hi) in x.iter().zip(center).zip(halfwidths) {
                    let excess = (xi - ci).abs() - hi;
                    if excess > T::zero() {
                        outside = outside + excess * excess;
                    }
                    depth = depth.min(-excess);
                }
                if outside > T::zero() {
                    outside.sqrt()
                } else {
                    -depth
                }
            }
            Self::Halfspace(h) => h.signed_distance(x),
        }
    }

    pub fn contains(&self, x: &[T]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            Self::Box { center, halfwidths } => x
                .iter()
                .zip(center)
                .zip(halfwidths)
                .all(|((&xi, &ci), &hi)| (xi - ci).abs() <= hi),
            Self::Halfspace(h) => h.margin(x) <= T::zero(),
            Self::Ball { .. } => self.signed_distance(x) <= T::zero(),
        })
    }

    pub fn inradius(&self) -> T {
        match self {
            Self::Ball { radius, .. } => *radius,
            Self::Box { halfwidths, .. } => halfwidths.iter().copied().fold(T::infinity(), T::min),
            Self::Halfspace(_) => T::infinity(),
        }
    }

    pub fn volume(&self) -> Result<T> {
        match self {
            Self::Ball { center, radius } => {
                Ok(unit_ball_volume::<T>(center.len()) * radius.powi(center.len() as i32))
            }
            Self::Box { halfwidths, .. } => {
                Ok(halfwidths.iter().fold(T::one(), |a, &h| a * (h + h)))
            }
            Self::Halfspace(_) => Err(Error::Unsupported("halfspace has infinite volume".into())),
        }
    }

    /// Lebesgue surface area `|∂K|_{n−1}`.
    pub fn surface_area(&self) -> Result<T> {
        match self {
            Self::Ball { center, radius } => {
                let n = center.len();
                Ok(from_usize::<T>(n) * unit_ball_volume::<T>(n) * radius.powi(n as i32 - 1))
            }
            Self::Box { halfwidths, .. } => {
                let sides: Vec<T> = halfwidths.iter().map(|&h| h + h).collect();
                let mut total = T::zero();
                for i in 0..sides.len() {
                    let face = sides
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .fold(T::one(), |a, (_, &s)| a * s);
                    total = total + face;
                }
                Ok(total + total)
            }
            Self::Halfspace(_) => Err(Error::Unsupported(
                "halfspace has infinite surface area".into(),
            )),
        }
    }

    /// Radius of the largest origin-centred ball inside the body.
    pub fn origin_inradius(&self) -> T {
        match self {
            Self::Ball { center, radius } => *radius - norm(center),
            Self::Box { center, halfwidths } => center
                .iter()
                .zip(halfwidths)
                .map(|(&c, &h)| h - c.abs())
                .fold(T::infinity(), T::min),
            Self::Halfspace(h) => h.offset() / h.normal_norm(),
        }
    }

    /// Axis-aligned bounding box, when the body is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Self::Ball { center, radius } => Some((
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            )),
            Self::Box { center, halfwidths } => Some((
                center
                    .iter()
                    .zip(halfwidths)
                    .map(|(&c, &h)| c - h)
                    .collect(),
                center
                    .iter()
                    .zip(halfwidths)
                    .map(|(&c, &h)| c + h)
                    .collect(),
            )),
            Self::Halfspace(_) => None,
        }
    }

    pub fn translated(&self, v: &[T]) -> Result<Self> {
        check_dim(self.dim(), v.len())?;
        let shift = |c: &[T]| c.iter().zip(v).map(|(&a, &b)| a + b).collect::<Vec<T>>();
        Ok(match self {
            Self::Ball { center, radius } => Self::Ball {
                center: shift(center),
                radius: *radius,
            },
            Self::Box { center, halfwidths } => Self::Box {
                center: shift(center),
                halfwidths: halfwidths.clone(),
            },
            Self::Halfspace(h) => Self::Halfspace(Halfspace::new(
                h.normal.clone(),
                h.offset + dot(&h.normal, v),
            )?),
        })
    }

    pub fn scaled(&self, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        let s = |c: &[T]| c.iter().map(|&a| a * alpha).collect::<Vec<T>>();
        Ok(match self {
            Self::Ball { center, radius } => Self::Ball {
                center: s(center),
                radius: *radius * alpha,
            },
            Self::Box { center, halfwidths } => Self::Box {
                center: s(center),
                halfwidths: s(halfwidths),
            },
            Self::Halfspace(h) => {
                Self::Halfspace(Halfspace::new(h.normal.clone(), h.offset * alpha)?)
            }
        })
    }
}

/// Any supported convex body.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Body<T: Scalar> {
    Named(NamedBody<T>),
    Polytope(Polytope<T>),
}

impl<T: Scalar> From<NamedBody<T>> for Body<T> {
    fn from(b: NamedBody<T>) -> Self {
        Body::Named(b)
    }
}

impl<T: Scalar> From<Polytope<T>> for Body<T> {
    fn from(p: Polytope<T>) -> Self {
        Body::Polytope(p)
    }
}

/// A value with a Monte Carlo standard error (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T: Scalar> {
    pub value: T,
    pub stderr: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            stderr: T::zero(),
        }
    }
}

/// Number of hit-ratio samples used when a polytope volume is needed
/// implicitly (uniform measures on polytopes).
pub const POLYTOPE_VOLUME_SAMPLES: usize = 1 << 20;

impl<T: Scalar> Body<T> {
    pub fn dim(&self) -> usize {
        match self {
            Body::Named(b) => b.dim(),
            Body::Polytope(p) => p.dim(),
        }
    }

    pub fn contains(&self, x: &[T]) -> Result<bool> {
        match self {
            Body::Named(b) => b.contains(x),
            Body::Polytope(p) => p.contains(x),
        }
    }

    pub fn bounding_box(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Body::Named(b) => b.bounding_box(),
            Body::Polytope(p) => p.bounding_box().cloned(),
        }
    }

    pub fn origin_inradius(&self) -> T {
        match self {
            Body::Named(b) => b.origin_inradius(),
            Body::Polytope(p) => p.origin_inradius(),
        }
    }

    /// Inradius: closed form for named bodies, LP for polytopes.
    pub fn inradius(&self) -> Result<T> {
        match self {
            Body::Named(b) => Ok(b.inradius()),
            Body::Polytope(p) => Ok(p.chebyshev_inradius()?.radius),
        }
    }

    pub fn translated(&self, v: &[T]) -> Result<Self> {
        Ok(match self {
            Body::Named(b) => Body::Named(b.translated(v)?),
            Body::Polytope(p) => Body::Polytope(p.translated(v)?),
        })
    }

    pub fn scaled(&self, alpha: T) -> Result<Self> {
        Ok(match self {
            Body::Named(b) => Body::Named(b.scaled(alpha)?),
            Body::Polytope(p) => Body::Polytope(p.scaled(alpha)?),
        })
    }

    /// Lebesgue volume; closed form for balls and boxes, hit ratio inside the
    /// bounding box for polytopes.
    pub fn volume(&self, samples: usize, seed: u64) -> Result<Estimate<T>> {
        match self {
            Body::Named(b) => b.volume().map(Estimate::exact),
            Body::Polytope(p) => {
                let (lo, hi) = p.bounding_box().ok_or_else(|| {
                    Error::InvalidInput("polytope volume needs a bounding box".into())
                })?;
                if samples == 0 {
                    return Err(Error::InvalidInput(
                        "volume estimate needs samples ≥ 1".into(),
                    ));
                }
                let hits: u64 = chunks(samples)
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|(k, len)| {
                        let mut rng = substream(seed, k);
                        let mut x = vec![T::zero(); p.dim()];
                        let mut hits = 0u64;
                        for _ in 0..len {
                            for (xi, (&l, &h)) in x.iter_mut().zip(lo.iter().zip(hi)) {
                                *xi = l + (h - l) * T::sample_unit(&mut rng);
                            }
                            if p.facets.iter().all(|f| f.margin(&x) <= T::zero()) {
                                hits += 1;
                            }
                        }
                        hits
                    })
                    .sum();
                let box_vol = lo.iter().zip(hi).fold(T::one(), |a, (&l, &h)| a * (h - l));
                let s = from_usize::<T>(samples);
                let frac = from_usize::<T>(hits as usize) / s;
                let stderr = box_vol * (frac * (T::one() - frac) / s).sqrt();
                Ok(Estimate {
                    value: box_vol * frac,
                    stderr,
                })
            }
        }
    }
}
