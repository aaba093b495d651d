//! Probability measures on ℝⁿ: standard Gaussian, the radial family with
//! density `C_{n,p} e^{−|x|^p/p}`, and the uniform measure on a convex body.
//!
//! Every measure is the law of `X = scale·Z + shift` where `Z` has one of the
//! base densities above.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{Body, NamedBody, POLYTOPE_VOLUME_SAMPLES};
use crate::error::{check_dim, Error, Result};
use crate::rng::{chunks, substream};
use crate::scalar::{from_usize, lit, norm, to_f64, Scalar};
use crate::special::{ln_gamma_f64, ln_unit_sphere_area};

const UNIFORM_VOLUME_SEED: u64 = 0x005e_ed0f_b0d1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBody<T: Scalar> {
    body: Body<T>,
    volume: T,
    bounding_box: (Vec<T>, Vec<T>),
}

impl<T: Scalar> UniformBody<T> {
    pub fn new(body: Body<T>) -> Result<Self> {
        let bounding_box = body.bounding_box().ok_or_else(|| {
            Error::Unsupported("uniform measure needs a bounded body with a bounding box".into())
        })?;
        let volume = body
            .volume(POLYTOPE_VOLUME_SAMPLES, UNIFORM_VOLUME_SEED)?
            .value;
        if !(volume > T::zero()) || !volume.is_finite() {
            return Err(Error::InvalidInput(
                "uniform measure needs a body of positive volume".into(),
            ));
        }
        Ok(Self {
            body,
            volume,
            bounding_box,
        })
    }

    pub fn body(&self) -> &Body<T> {
        &self.body
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        match &self.body {
            Body::Named(NamedBody::Ball { center, radius }) => {
                fill_unit_direction(rng, out);
                let n = out.len() as f64;
                let r = *radius * lit::<T>(to_f64(T::sample_unit(rng)).powf(1.0 / n));
                for (x, &c) in out.iter_mut().zip(center) {
                    *x = c + r * *x;
                }
            }
            Body::Named(NamedBody::Box { center, halfwidths }) => {
                for ((x, &c), &h) in out.iter_mut().zip(center).zip(halfwidths) {
                    let u: T = T::sample_unit(rng);
                    *x = c + h * (u + u - T::one());
                }
            }
            Body::Polytope(p) => {
                let (lo, hi) = &self.bounding_box;
                loop {
                    for (x, (&l, &h)) in out.iter_mut().zip(lo.iter().zip(hi)) {
                        *x = l + (h - l) * T::sample_unit(rng);
                    }
                    if p.facets().iter().all(|f| f.margin(out) <= T::zero()) {
                        break;
                    }
                }
            }
            Body::Named(NamedBody::Halfspace(_)) => unreachable!("rejected at construction"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family<T: Scalar> {
    Gaussian,
    #[serde(rename = "pnorm")]
    PNorm {
        p: T,
    },
    Uniform(UniformBody<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSpec<T: Scalar> {
    family: Family<T>,
    dim: usize,
    shift: Vec<T>,
    scale: T,
    /// `ln sup f₀` of the base density.
    #[serde(skip)]
    log_peak: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsMethod {
    ClosedForm,
    MonteCarlo,
}

/// `E|X|` and `Var|X|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialStats<T: Scalar> {
    pub mean_norm: T,
    pub var_norm: T,
    pub method: StatsMethod,
    /// Standard errors of `(mean_norm, var_norm)`; zero for closed forms.
    pub stderr: (T, T),
}

impl<T: Scalar> RadialStats<T> {
    pub fn closed_form(mean_norm: T, var_norm: T) -> Self {
        Self {
            mean_norm,
            var_norm,
            method: StatsMethod::ClosedForm,
            stderr: (T::zero(), T::zero()),
        }
    }

    /// `W = √Var|X|`.
    pub fn std_norm(&self) -> T {
        self.var_norm.sqrt()
    }
}

/// `E|Z|` for `Z` standard normal in ℝⁿ: `√2·Γ((n+1)/2)/Γ(n/2)`.
pub fn gaussian_norm_mean<T: Scalar>(n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be ≥ 1".into()));
    }
    let k = n as f64;
    let ln = 0.5 * 2f64.ln() + ln_gamma_f64(0.5 * (k + 1.0)) - ln_gamma_f64(0.5 * k);
    Ok(lit(ln.exp()))
}

fn fill_unit_direction<T: Scalar, R: Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    loop {
        for x in out.iter_mut() {
            *x = T::sample_std_normal(rng);
        }
        let r = norm(out);
        if r > T::zero() {
            for x in out.iter_mut() {
                *x = *x / r;
            }
            return;
        }
    }
}

impl<T: Scalar> MeasureSpec<T> {
    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be ≥ 1".into()));
        }
        let log_peak = lit(-0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln());
        Ok(Self {
            family: Family::Gaussian,
            dim,
            shift: vec![T::zero(); dim],
            scale: T::one(),
            log_peak,
        })
    }

    /// Density `C_{n,p} e^{−|x|^p/p}` (Euclidean norm).
    pub fn pnorm(dim: usize, p: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be ≥ 1".into()));
        }
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::InvalidInput(
                "pnorm measure needs finite p > 0".into(),
            ));
        }
        let pf = to_f64(p);
        let k = dim as f64;
        // ln C⁻¹ = ln|S^{n−1}| + (n/p − 1) ln p + ln Γ(n/p)
        let ln_inv = ln_unit_sphere_area(dim) + (k / pf - 1.0) * pf.ln() + ln_gamma_f64(k / pf);
        if !ln_inv.is_finite() {
            return Err(Error::InvalidInput("pnorm normalizer is not finite".into()));
        }
        Ok(Self {
            family: Family::PNorm { p },
            dim,
            shift: vec![T::zero(); dim],
            scale: T::one(),
            log_peak: lit(-ln_inv),
        })
    }

    pub fn uniform(body: Body<T>) -> Result<Self> {
        let dim = body.dim();
        let u = UniformBody::new(body)?;
        let log_peak = -u.volume.ln();
        Ok(Self {
            family: Family::Uniform(u),
            dim,
            shift: vec![T::zero(); dim],
            scale: T::one(),
            log_peak,
        })
    }

    pub fn with_shift(mut self, shift: Vec<T>) -> Result<Self> {
        check_dim(self.dim, shift.len())?;
        self.shift = shift;
        Ok(self)
    }

    pub fn with_scale(mut self, scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidInput("scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, Family::Gaussian)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.family, Family::Uniform(_))
    }

    fn is_centered(&self) -> bool {
        self.shift.iter().all(|&s| s == T::zero())
    }

    pub fn name(&self) -> String {
        let base = match &self.family {
            Family::Gaussian => "gaussian".to_string(),
            Family::PNorm { p } => format!("pnorm(p={p})"),
            Family::Uniform(u) => match u.body() {
                Body::Named(NamedBody::Ball { radius, .. }) => format!("uniform(ball r={radius})"),
                Body::Named(NamedBody::Box { .. }) => "uniform(box)".to_string(),
                _ => "uniform(polytope)".to_string(),
            },
        };
        if self.scale == T::one() && self.is_centered() {
            base
        } else {
            format!(
                "{base}[scale={}{}]",
                self.scale,
                if self.is_centered() { "" } else { ",shifted" }
            )
        }
    }

    fn log_base_density(&self, z: &[T]) -> T {
        match &self.family {
            Family::Gaussian => self.log_peak - lit::<T>(0.5) * crate::scalar::dot(z, z),
            Family::PNorm { p } => self.log_peak - norm(z).powf(*p) / *p,
            Family::Uniform(u) => {
                if u.body().contains(z).unwrap_or(false) {
                    self.log_peak
                } else {
                    T::neg_infinity()
                }
            }
        }
    }

    pub fn log_density_at(&self, x: &[T]) -> Result<T> {
        check_dim(self.dim, x.len())?;
        let z: Vec<T> = x
            .iter()
            .zip(&self.shift)
            .map(|(&xi, &s)| (xi - s) / self.scale)
            .collect();
        Ok(self.log_base_density(&z) - from_usize::<T>(self.dim) * self.scale.ln())
    }

    pub fn density_at(&self, x: &[T]) -> Result<T> {
        Ok(self.log_density_at(x)?.exp())
    }

    /// `‖f‖_∞`.
    pub fn sup_density(&self) -> T {
        self.ln_sup_density().exp()
    }

    /// `ln ‖f‖_∞`, finite even where `‖f‖_∞` underflows.
    pub fn ln_sup_density(&self) -> T {
        self.log_peak - from_usize::<T>(self.dim) * self.scale.ln()
    }

    /// Draws one point of the base vector `Z`.
    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        match &self.family {
            Family::Gaussian => {
                for x in out.iter_mut() {
                    *x = T::sample_std_normal(rng);
                }
            }
            Family::PNorm { p } => {
                // u = r^p/p turns r^{n−1}e^{−r^p/p} into a Gamma(n/p) density
                let g = T::sample_gamma(from_usize::<T>(self.dim) / *p, rng);
                let r = (*p * g).powf(T::one() / *p);
                fill_unit_direction(rng, out);
                for x in out.iter_mut() {
                    *x = *x * r;
                }
            }
            Family::Uniform(u) => u.sample_into(rng, out),
        }
    }

    /// One draw of `X`; `out.len()` must equal `dim`.
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        self.sample_base(rng, out);
        for (x, &s) in out.iter_mut().zip(&self.shift) {
            *x = self.scale * *x + s;
        }
    }

    /// `count` i.i.d. draws, deterministic in `seed` whatever the thread count.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Result<Vec<Vec<T>>> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be ≥ 1".into()));
        }
        let parts: Vec<Vec<Vec<T>>> = chunks(count)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(k, len)| {
                let mut rng = substream(seed, k);
                (0..len)
                    .map(|_| {
                        let mut x = vec![T::zero(); self.dim];
                        self.sample_into(&mut rng, &mut x);
                        x
                    })
                    .collect()
            })
            .collect();
        Ok(parts.into_iter().flatten().collect())
    }

    /// `E|Z|²` of the base vector, when known in closed form.
    fn base_second_moment(&self) -> Option<T> {
        let n = self.dim as f64;
        match &self.family {
            Family::Gaussian => Some(lit(n)),
            Family::PNorm { p } => {
                let p = to_f64(*p);
                let ln = 2.0 / p * p.ln() + ln_gamma_f64((n + 2.0) / p) - ln_gamma_f64(n / p);
                Some(lit(ln.exp()))
            }
            Family::Uniform(u) => match u.body() {
                Body::Named(NamedBody::Ball { center, radius }) => {
                    let c2 = crate::scalar::dot(center, center);
                    Some(c2 + *radius * *radius * lit(n / (n + 2.0)))
                }
                Body::Named(NamedBody::Box { center, halfwidths }) => Some(
                    center
                        .iter()
                        .zip(halfwidths)
                        .fold(T::zero(), |a, (&c, &h)| a + c * c + h * h / lit(3.0)),
                ),
                _ => None,
            },
        }
    }

    /// Typical per-coordinate spread, used to pick default shell widths.
    pub fn coordinate_spread(&self) -> T {
        let base = match &self.family {
            Family::Uniform(u) => u.body().inradius().unwrap_or(T::one()),
            _ => {
                let m2 = self.base_second_moment().unwrap_or(from_usize(self.dim));
                (m2 / from_usize(self.dim)).sqrt()
            }
        };
        self.scale * base
    }

    /// Barycenter at the origin and identity covariance.
    pub fn is_isotropic(&self) -> bool {
        if !self.is_centered() {
            return false;
        }
        let n = from_usize::<T>(self.dim);
        let s2 = self.scale * self.scale;
        let tol: T = lit(1e-9);
        match &self.family {
            Family::Gaussian => (s2 - T::one()).abs() < tol,
            Family::PNorm { .. } => {
                let m2 = self.base_second_moment().unwrap_or(n);
                (s2 * m2 / n - T::one()).abs() < tol
            }
            Family::Uniform(u) => match u.body() {
                Body::Named(NamedBody::Ball { center, radius }) => {
                    center.iter().all(|&c| c == T::zero())
                        && (s2 * *radius * *radius / (n + lit(2.0)) - T::one()).abs() < tol
                }
                Body::Named(NamedBody::Box { center, halfwidths }) => {
                    center.iter().all(|&c| c == T::zero())
                        && halfwidths
                            .iter()
                            .all(|&h| (s2 * h * h / lit(3.0) - T::one()).abs() < tol)
                }
                _ => false,
            },
        }
    }

    /// Density even about its centre.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::Uniform(u) => matches!(
                u.body(),
                Body::Named(NamedBody::Ball { .. } | NamedBody::Box { .. })
            ),
            _ => true,
        }
    }

    pub fn is_log_concave(&self) -> bool {
        match &self.family {
            Family::PNorm { p } => *p >= T::one(),
            _ => true,
        }
    }

    /// Density nonincreasing along every ray from the origin.
    pub fn is_ray_decreasing(&self) -> bool {
        match &self.family {
            Family::Uniform(u) => {
                let z: Vec<T> = self.shift.iter().map(|&s| -s / self.scale).collect();
                u.body().contains(&z).unwrap_or(false)
            }
            _ => self.is_centered(),
        }
    }

    /// Support body `scale·K + shift` of a uniform measure.
    pub fn support(&self) -> Option<Body<T>> {
        match &self.family {
            Family::Uniform(u) => u
                .body()
                .scaled(self.scale)
                .and_then(|b| b.translated(&self.shift))
                .ok(),
            _ => None,
        }
    }

    /// `E|X|`, `Var|X|`: closed form for the centred Gaussian, Monte Carlo
    /// with `budget` draws otherwise.
    pub fn radial_stats(&self, budget: usize, seed: u64) -> Result<RadialStats<T>> {
        if self.is_gaussian() && self.is_centered() {
            let mean: T = gaussian_norm_mean(self.dim)?;
            let var = from_usize::<T>(self.dim) - mean * mean;
            return Ok(RadialStats::closed_form(
                self.scale * mean,
                self.scale * self.scale * var,
            ));
        }
        if budget < 1000 {
            return Err(Error::InvalidInput(
                "Monte Carlo radial statistics need budget ≥ 1000".into(),
            ));
        }
        // per-chunk power sums, combined in chunk order
        let parts: Vec<[f64; 4]> = chunks(budget)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(k, len)| {
                let mut rng = substream(seed, k);
                let mut x = vec![T::zero(); self.dim];
                let mut s = [0.0f64; 4];
                for _ in 0..len {
                    self.sample_into(&mut rng, &mut x);
                    let r = to_f64(norm(&x));
                    let r2 = r * r;
                    s[0] += r;
                    s[1] += r2;
                    s[2] += r2 * r;
                    s[3] += r2 * r2;
                }
                s
            })
            .collect();
        let mut s = [0.0f64; 4];
        for part in &parts {
            for i in 0..4 {
                s[i] += part[i];
            }
        }
        let m = budget as f64;
        let mean = s[0] / m;
        let var = (s[1] / m - mean * mean).max(0.0) * m / (m - 1.0);
        let central4 =
            s[3] / m - 4.0 * mean * s[2] / m + 6.0 * mean * mean * s[1] / m - 3.0 * mean.powi(4);
        let se_mean = (var / m).sqrt();
        let se_var = ((central4 - var * var).max(0.0) / m).sqrt();
        Ok(RadialStats {
            mean_norm: lit(mean),
            var_norm: lit(var),
            method: StatsMethod::MonteCarlo,
            stderr: (lit(se_mean), lit(se_var)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::NamedBody;
    use approx::assert_relative_eq;

    #[test]
    fn density_values() {
        let g = MeasureSpec::<f64>::gaussian(1).unwrap();
        assert_relative_eq!(
            g.density_at(&[0.0]).unwrap(),
            0.398_942_280_401_432_7,
            max_relative = 1e-14
        );
        let cube = MeasureSpec::uniform(NamedBody::<f64>::unit_cube(4).unwrap().into()).unwrap();
        assert_relative_eq!(
            cube.density_at(&[0.1, -0.2, 0.3, 0.0]).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_eq!(cube.density_at(&[0.6, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        let p2 = MeasureSpec::<f64>::pnorm(2, 2.0).unwrap();
        assert_relative_eq!(
            p2.density_at(&[0.0, 0.0]).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI),
            max_relative = 1e-13
        );
    }

    #[test]
    fn dimension_and_parameter_errors() {
        let g = MeasureSpec::<f64>::gaussian(3).unwrap();
        assert!(matches!(
            g.density_at(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(MeasureSpec::<f64>::pnorm(3, 0.0).is_err());
        assert!(MeasureSpec::<f64>::pnorm(3, -1.0).is_err());
        assert!(MeasureSpec::<f64>::gaussian(0).is_err());
        let h = crate::bodies::Halfspace::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            MeasureSpec::uniform(NamedBody::Halfspace(h).into()),
            Err(Error::Unsupported(_))
        ));
        assert!(g.sample_batch(0, 1).is_err());
    }

    #[test]
    fn gaussian_norm_mean_values() {
        assert_relative_eq!(
            gaussian_norm_mean::<f64>(1).unwrap(),
            (2.0 / std::f64::consts::PI).sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            gaussian_norm_mean::<f64>(2).unwrap(),
            (std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-13
        );
        let m100: f64 = gaussian_norm_mean(100).unwrap();
        assert!(m100 >= 99f64.sqrt() && m100 <= 10.0);
        assert!(gaussian_norm_mean::<f64>(0).is_err());
    }

    #[test]
    fn gaussian_closed_form_stats() {
        let s1 = MeasureSpec::<f64>::gaussian(1)
            .unwrap()
            .radial_stats(0, 0)
            .unwrap();
        assert_relative_eq!(s1.mean_norm, 0.797_884_560_802_865_4, max_relative = 1e-13);
        assert_relative_eq!(
            s1.var_norm,
            1.0 - 2.0 / std::f64::consts::PI,
            max_relative = 1e-12
        );
        let s16 = MeasureSpec::<f64>::gaussian(16)
            .unwrap()
            .radial_stats(0, 0)
            .unwrap();
        // √2·Γ(17/2)/Γ(8) = 6435·√2π/4096
        let e16 = 6435.0 * (2.0 * std::f64::consts::PI).sqrt() / 4096.0;
        assert_relative_eq!(s16.mean_norm, e16, max_relative = 1e-12);
        assert_relative_eq!(s16.var_norm, 16.0 - e16 * e16, max_relative = 1e-10);
        for n in [1, 2, 4, 8, 50, 300] {
            let s = MeasureSpec::<f64>::gaussian(n)
                .unwrap()
                .radial_stats(0, 0)
                .unwrap();
            assert_relative_eq!(
                s.mean_norm * s.mean_norm + s.var_norm,
                n as f64,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn uniform_disk_stats() {
        let disk =
            MeasureSpec::uniform(NamedBody::<f64>::centered_ball(2, 1.0).unwrap().into()).unwrap();
        let s = disk.radial_stats(200_000, 3).unwrap();
        assert!((s.mean_norm - 2.0 / 3.0).abs() < 4.0 * s.stderr.0);
        assert!((s.var_norm - 1.0 / 18.0).abs() < 4.0 * s.stderr.1);
    }

    #[test]
    fn monte_carlo_stats_scale_exactly() {
        let p = MeasureSpec::<f64>::pnorm(3, 1.0).unwrap();
        let a = p.radial_stats(5000, 9).unwrap();
        let b = p
            .clone()
            .with_scale(3.0)
            .unwrap()
            .radial_stats(5000, 9)
            .unwrap();
        assert_relative_eq!(b.mean_norm, 3.0 * a.mean_norm, max_relative = 1e-12);
        assert_relative_eq!(b.var_norm, 9.0 * a.var_norm, max_relative = 1e-10);
    }

    #[test]
    fn isotropy_flags() {
        assert!(MeasureSpec::<f64>::gaussian(5).unwrap().is_isotropic());
        let cube = MeasureSpec::uniform(
            NamedBody::<f64>::boxed(vec![0.0; 3], vec![3f64.sqrt(); 3])
                .unwrap()
                .into(),
        )
        .unwrap();
        assert!(cube.is_isotropic());
        assert!(
            !MeasureSpec::uniform(NamedBody::<f64>::unit_cube(3).unwrap().into())
                .unwrap()
                .is_isotropic()
        );
        assert!(!MeasureSpec::<f64>::pnorm(3, 0.5).unwrap().is_log_concave());
    }
}
