//! Closed-form special functions: Γ-ratios, ball volumes, normal and chi laws.
//!
//! Everything is evaluated in `f64` through log-Γ and cast at the end.

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::scalar::{lit, Scalar};

pub fn ln_gamma_f64(x: f64) -> f64 {
    ln_gamma(x)
}

/// `ln ω_n`, the log-volume of the Euclidean unit ball in ℝⁿ.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n + 1.0)
}

pub fn unit_ball_volume<T: Scalar>(n: usize) -> T {
    lit(ln_unit_ball_volume(n).exp())
}

/// `ln |S^{n-1}|` = `ln(n ω_n)`.
pub fn ln_unit_sphere_area(n: usize) -> f64 {
    (n as f64).ln() + ln_unit_ball_volume(n)
}

pub fn std_normal_pdf<T: Scalar>(x: T) -> T {
    let half: T = lit(0.5);
    (-half * x * x).exp() / T::TAU().sqrt()
}

pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    let x = crate::scalar::to_f64(x);
    lit(0.5 * erfc(-x / std::f64::consts::SQRT_2))
}

/// `∫_a^∞ e^{-s²/2} ds`.
pub fn gaussian_tail_integral<T: Scalar>(a: T) -> T {
    let a = crate::scalar::to_f64(a);
    lit((std::f64::consts::PI / 2.0).sqrt() * erfc(a / std::f64::consts::SQRT_2))
}

/// Density of `|Z|`, `Z` standard normal in ℝⁿ.
pub fn chi_pdf<T: Scalar>(r: T, n: usize) -> T {
    let r = crate::scalar::to_f64(r);
    if r <= 0.0 {
        return T::zero();
    }
    let k = n as f64;
    let ln = (1.0 - 0.5 * k) * 2f64.ln() + (k - 1.0) * r.ln() - 0.5 * r * r - ln_gamma(0.5 * k);
    lit(ln.exp())
}

/// `P(|Z| ≤ r)` for `Z` standard normal in ℝⁿ.
pub fn chi_cdf<T: Scalar>(r: T, n: usize) -> T {
    let r = crate::scalar::to_f64(r);
    if r <= 0.0 {
        return T::zero();
    }
    lit(gamma_lr(0.5 * n as f64, 0.5 * r * r))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_cdf<T: Scalar>(shape: f64, x: T) -> T {
    let x = crate::scalar::to_f64(x);
    if x <= 0.0 {
        return T::zero();
    }
    lit(gamma_lr(shape, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(
            unit_ball_volume::<f64>(2),
            std::f64::consts::PI,
            max_relative = 1e-13
        );
        let pi = std::f64::consts::PI;
        assert_relative_eq!(
            unit_ball_volume::<f64>(5),
            8.0 * pi * pi / 15.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(ln_unit_sphere_area(3).exp(), 4.0 * pi, max_relative = 1e-13);
    }

    #[test]
    fn normal_values() {
        assert_relative_eq!(
            std_normal_pdf(0.0f64),
            0.398_942_280_401_432_7,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            std_normal_pdf(1.0f64),
            0.241_970_724_519_143_37,
            max_relative = 1e-14
        );
        assert_relative_eq!(std_normal_cdf(0.0f64), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn chi_one_dim_is_half_normal() {
        assert_relative_eq!(
            chi_pdf(1.0f64, 1),
            2.0 * std_normal_pdf(1.0f64),
            max_relative = 1e-12
        );
        // P(|Z| ≤ 1) = erf(1/√2)
        assert_relative_eq!(
            chi_cdf(1.0f64, 1),
            0.682_689_492_137_085_9,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            chi_cdf(1.0f64, 1),
            2.0 * std_normal_cdf(1.0f64) - 1.0,
            max_relative = 1e-10
        );
    }
}
