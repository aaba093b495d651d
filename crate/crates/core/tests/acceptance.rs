#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

//! Acceptance criteria, one line each. Runs as a plain binary so the
//! PASS/FAIL lines are always printed; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use maxperim::bodies::{Body, Halfspace, NamedBody, Polytope};
use maxperim::experiments::fit_exponent;
use maxperim::measures::{gaussian_norm_mean, MeasureSpec};
use maxperim::nazarov::{
    analytic_lower_bound, build_polytope, comp_exponent, construction_constant,
    empirical_nazarov_perimeter, expon_value, facet_count, make_params, mills_tail_bound,
    rho_formula, NazarovParams,
};
use maxperim::perimeter::{
    estimate_perimeter, facet_shell_perimeter, generic_shell_perimeter, halfspace_perimeter_exact,
    ShellOptions,
};
use maxperim::rng::{derive_seed, substream};
use maxperim::special::gaussian_tail_integral;
use maxperim::upper_bounds::{
    bounds_report, default_t_grid, find_balanced_t, inradius_surface_bound, BoundConstants,
    BoundKind, LevelSetOracle,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    if elapsed > budget {
        outcome(
            false,
            format!(
                "{}; runtime {:.1?} over budget {:.0?}",
                o.detail, elapsed, budget
            ),
        )
    } else {
        o
    }
}

fn halfspace_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for (i, &n) in [2usize, 8, 32].iter().enumerate() {
        let g = MeasureSpec::<f64>::gaussian(n).unwrap();
        // a generic direction of length 3
        let mut dir: Vec<f64> = (0..n).map(|k| 1.0 + 0.37 * k as f64).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|x| *x *= 3.0 / len);
        for (j, &dist) in [0.0f64, 1.0, 2.0].iter().enumerate() {
            let h = Halfspace::new(dir.clone(), dist * 3.0).unwrap();
            let exact = halfspace_perimeter_exact(&h, &g).unwrap().value;
            let poly = Polytope::new(vec![h]).unwrap();
            let opts = ShellOptions::new(200_000, derive_seed(SEED, (3 * i + j) as u64));
            let est = facet_shell_perimeter(&poly, &g, &opts).unwrap();
            let z = (est.value - exact).abs() / est.stderr;
            worst = worst.max(z);
            if z > 3.0 {
                fails.push(format!(
                    "n={n} ρ/|θ|={dist}: {:.5} vs {exact:.5} ({z:.2}σ)",
                    est.value
                ));
            }
        }
    }
    let o = outcome(
        fails.is_empty(),
        format!(
            "worst deviation {worst:.2}σ over 9 cases {}",
            fails.join("; ")
        ),
    );
    within_budget(o, start.elapsed(), Duration::from_secs(60))
}

fn cube_exactness() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [2usize, 3, 5] {
        let cube = NamedBody::unit_cube(n).unwrap();
        let m = MeasureSpec::uniform(cube.into()).unwrap();
        let poly = Polytope::cube(n, 0.5).unwrap();
        let est = facet_shell_perimeter(
            &poly,
            &m,
            &ShellOptions::new(4_000_000, derive_seed(SEED, n as u64)),
        )
        .unwrap();
        let rel = (est.value - 2.0 * n as f64).abs() / (2.0 * n as f64);
        pass &= rel <= 0.02;
        parts.push(format!("n={n}: {:.4} (rel {:.2}%)", est.value, 100.0 * rel));
    }
    outcome(pass, parts.join(", "))
}

fn nazarov_dominance() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [4usize, 16, 64] {
        let g = MeasureSpec::<f64>::gaussian(n).unwrap();
        let opts = ShellOptions::new(200_000, derive_seed(SEED, 100 + n as u64));
        let est = empirical_nazarov_perimeter(&g, None, 8, &opts).unwrap();
        let bound = analytic_lower_bound(&est.stats, est.params.alpha, n).unwrap();
        let ok = est.estimate.value >= bound - 3.0 * est.estimate.stderr;
        pass &= ok;
        parts.push(format!(
            "n={n}: {:.4}±{:.4} vs bound {bound:.4}",
            est.estimate.value, est.estimate.stderr
        ));
    }
    within_budget(
        outcome(pass, parts.join(", ")),
        start.elapsed(),
        Duration::from_secs(600),
    )
}

fn quarter_power_rate() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    for n in [4usize, 8, 16, 32, 64, 128] {
        let g = MeasureSpec::<f64>::gaussian(n).unwrap();
        let opts = ShellOptions::new(200_000, derive_seed(SEED, 200 + n as u64));
        let est = empirical_nazarov_perimeter(&g, None, 8, &opts).unwrap();
        rows.push((n as f64, est.estimate.value));
    }
    let fit = fit_exponent(&rows).unwrap();
    let pass = (0.15..=0.35).contains(&fit.slope) && fit.r_squared >= 0.9;
    let values: Vec<String> = rows.iter().map(|(n, v)| format!("{n}:{v:.3}")).collect();
    let o = outcome(
        pass,
        format!(
            "slope {:.3}, r² {:.3} [{}]",
            fit.slope,
            fit.r_squared,
            values.join(" ")
        ),
    );
    within_budget(o, start.elapsed(), Duration::from_secs(1800))
}

fn constant_limit() -> Outcome {
    let small: Vec<f64> = [1e-3, 1e-2]
        .iter()
        .map(|&a| construction_constant(a).unwrap().1)
        .collect();
    let grid: Vec<f64> = [0.2, 0.5, 0.8, 0.95]
        .iter()
        .map(|&a| construction_constant(a).unwrap().1)
        .collect();
    let in_band = small.iter().all(|c| (0.055..=0.065).contains(c));
    let decreasing = small[1] > grid[0] && grid.windows(2).all(|w| w[1] < w[0]);
    let to_zero = grid[3] < 0.01 * small[0];
    outcome(
        in_band && decreasing && to_zero,
        format!(
            "C(1e-3)={:.5} C(1e-2)={:.5}; grid {:.5} {:.5} {:.5} {:.5}",
            small[0], small[1], grid[0], grid[1], grid[2], grid[3]
        ),
    )
}

fn parameter_identities() -> Outcome {
    let mut rng = substream(SEED, 6);
    let (mut expon_bad, mut comp_bad) = (0, 0);
    let (mut worst_expon, mut worst_comp) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..100 {
        let e: f64 = 10f64.powf(rng.random_range(-1.0..2.0));
        let w: f64 = rng.random_range(0.01..0.9);
        let beta: f64 = rng.random_range(1.0..1.0 / w);
        let big_w = w * e;
        let rho = rho_formula(e, w, beta);
        let p = NazarovParams {
            beta,
            w,
            rho,
            facets: facet_count(e, big_w, beta, rho),
            expected_norm: e,
            std_norm: big_w,
            alpha: w,
            degenerate: false,
        };
        let ex = expon_value(&p);
        let cp = comp_exponent(e, big_w, beta, rho);
        worst_expon = worst_expon.min(ex);
        worst_comp = worst_comp.min(cp);
        expon_bad += usize::from(!(ex >= (-1.0f64).exp()));
        comp_bad += usize::from(!(cp >= -0.5));
    }
    outcome(
        expon_bad == 0 && comp_bad == 0,
        format!(
            "expon violated {expon_bad}/100 (min {worst_expon:.4}, need ≥ 1/e), comp violated {comp_bad}/100 (min {worst_comp:.4}, need ≥ -0.5)"
        ),
    )
}

fn sandwich() -> Outcome {
    let consts = BoundConstants::default();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |label: &str, m: &MeasureSpec<f64>, body: Body<f64>, seed: u64| {
        let opts = ShellOptions::new(400_000, seed);
        let r = bounds_report(m, Some(&body), &opts, &consts).unwrap();
        let e = r.empirical.clone().unwrap();
        let floor = e.value - 3.0 * e.stderr;
        let uppers: Vec<_> = r
            .bounds_applied
            .iter()
            .filter(|b| b.kind == BoundKind::Upper)
            .collect();
        let low: Vec<String> = uppers
            .iter()
            .filter(|b| b.value < floor)
            .map(|b| format!("{}={:.4}", b.name, b.value))
            .collect();
        pass &= low.is_empty() && !uppers.is_empty();
        let min = uppers.iter().map(|b| b.value).fold(f64::INFINITY, f64::min);
        parts.push(format!(
            "{label}: {:.4}±{:.4} ≤ min of {} bounds {min:.4}{}",
            e.value,
            e.stderr,
            uppers.len(),
            if low.is_empty() {
                String::new()
            } else {
                format!(" VIOLATED {}", low.join(" "))
            }
        ));
    };

    let n = 16;
    let g = MeasureSpec::<f64>::gaussian(n).unwrap();
    let stats = g.radial_stats(0, 0).unwrap();
    let params = make_params(&stats, stats.std_norm() / stats.mean_norm, None).unwrap();
    let poly = build_polytope(&params, n, SEED).unwrap();
    check("gaussian/nazarov", &g, poly.into(), 71);
    let e = gaussian_norm_mean::<f64>(n).unwrap();
    check(
        "gaussian/ball(E|X|)",
        &g,
        NamedBody::centered_ball(n, e).unwrap().into(),
        72,
    );
    let p1 = MeasureSpec::<f64>::pnorm(n, 1.0).unwrap();
    let e1 = p1.radial_stats(400_000, 3).unwrap().mean_norm;
    check(
        "pnorm1/ball(E|X|)",
        &p1,
        NamedBody::centered_ball(n, e1).unwrap().into(),
        73,
    );
    let cube: Body<f64> = NamedBody::unit_cube(3).unwrap().into();
    check(
        "uniform cube/cube",
        &MeasureSpec::uniform(cube.clone()).unwrap(),
        cube,
        74,
    );

    // the lower bound on Γ never exceeds what the construction attains
    let lower = bounds_report(&g, None, &ShellOptions::new(200_000, 75), &consts).unwrap();
    let attained = lower.empirical.unwrap();
    let lb = lower.lower.unwrap().value;
    pass &= lb <= attained.value + 3.0 * attained.stderr;
    parts.push(format!("Γ lower {lb:.4} ≤ attained {:.4}", attained.value));
    outcome(pass, parts.join("; "))
}

fn ball_equality() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=10 {
        for r in [0.3, 1.0, 2.5] {
            let b = NamedBody::<f64>::centered_ball(n, r).unwrap();
            let bound = inradius_surface_bound(b.volume().unwrap(), b.inradius(), n).unwrap();
            worst =
                worst.max((bound - b.surface_area().unwrap()).abs() / b.surface_area().unwrap());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max relative gap {worst:.2e} for n=2..10"),
    )
}

fn balanced_levels() -> Outcome {
    let mut bad = Vec::new();
    let mut count = 0;
    for n in [2usize, 8] {
        let ms = [
            ("gaussian", MeasureSpec::<f64>::gaussian(n).unwrap()),
            ("pnorm1", MeasureSpec::pnorm(n, 1.0).unwrap()),
            ("pnorm2", MeasureSpec::pnorm(n, 2.0).unwrap()),
            ("pnorm4", MeasureSpec::pnorm(n, 4.0).unwrap()),
        ];
        for (name, m) in &ms {
            let o = LevelSetOracle::new(m).unwrap();
            for alpha in [0.05, 0.2] {
                count += 1;
                match find_balanced_t(&o, alpha) {
                    Ok(t) => {
                        let v = o.volume(t).unwrap() * o.sup_density();
                        if !((1.0 - alpha)..=(1.0 + alpha)).contains(&v)
                            || !(t > 0.0 && t < o.sup_density())
                        {
                            bad.push(format!("{name} n={n} α={alpha}: {v:.4}"));
                        }
                    }
                    Err(e) => bad.push(format!("{name} n={n} α={alpha}: {e}")),
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{}/{count} cases in range {}",
            count - bad.len(),
            bad.join("; ")
        ),
    )
}

fn equivariance() -> Outcome {
    let n = 6;
    let g = MeasureSpec::<f64>::gaussian(n).unwrap();
    let stats = g.radial_stats(0, 0).unwrap();
    let params = make_params(&stats, stats.std_norm() / stats.mean_norm, None).unwrap();
    let poly = build_polytope(&params, n, 9).unwrap();
    let ball = NamedBody::centered_ball(n, 2.0).unwrap();
    let opts = ShellOptions::new(100_000, 10);
    let base_p = facet_shell_perimeter(&poly, &g, &opts).unwrap();
    let base_b = generic_shell_perimeter(&ball, &g, &opts).unwrap();
    let mut worst = 0.0f64;
    for a in [0.5, 2.0, 3.0] {
        let ga = g.clone().with_scale(a).unwrap();
        let p = facet_shell_perimeter(&poly.scaled(a).unwrap(), &ga, &opts).unwrap();
        let b = generic_shell_perimeter(&ball.scaled(a).unwrap(), &ga, &opts).unwrap();
        worst = worst.max((p.value * a - base_p.value).abs() / base_p.value);
        worst = worst.max((b.value * a - base_b.value).abs() / base_b.value);
    }
    let v: Vec<f64> = (0..n).map(|k| 0.25 * k as f64 - 0.5).collect();
    let gs = g.clone().with_shift(v.clone()).unwrap();
    let ps = facet_shell_perimeter(&poly.translated(&v).unwrap(), &gs, &opts).unwrap();
    let bs = generic_shell_perimeter(&ball.translated(&v).unwrap(), &gs, &opts).unwrap();
    worst = worst.max((ps.value - base_p.value).abs() / base_p.value);
    worst = worst.max((bs.value - base_b.value).abs() / base_b.value);
    // same check through the dispatcher on a uniform measure
    let cube: Body<f64> = NamedBody::unit_cube(3).unwrap().into();
    let u = MeasureSpec::uniform(cube.clone()).unwrap();
    let c0 = estimate_perimeter(&cube, &u, &opts, false).unwrap();
    let u2 = MeasureSpec::uniform(cube.scaled(2.0).unwrap()).unwrap();
    let c2 = estimate_perimeter(&cube.scaled(2.0).unwrap(), &u2, &opts, false).unwrap();
    worst = worst.max((2.0 * c2.value - c0.value).abs() / c0.value);
    outcome(
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e} over scales 0.5, 2, 3 and a shift"),
    )
}

fn mills_and_level_volume() -> Outcome {
    // Simpson quadrature of ∫_a^{a+40} e^{−s²/2} ds
    let simpson = |a: f64| {
        let k = 200_000;
        let h = 40.0 / k as f64;
        let f = |s: f64| (-0.5 * s * s).exp();
        let mut acc = f(a) + f(a + 40.0);
        for i in 1..k {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let mut mills_bad = 0;
    let mut quad_gap = 0.0f64;
    for i in 1..=100 {
        let a = 0.1 * i as f64;
        let q = simpson(a);
        quad_gap = quad_gap.max((q - gaussian_tail_integral(a)).abs() / q);
        mills_bad += usize::from(!(q <= mills_tail_bound(a)));
    }

    let mut ub4_bad = Vec::new();
    let measures = [
        ("gaussian3", MeasureSpec::<f64>::gaussian(3).unwrap()),
        ("pnorm1", MeasureSpec::pnorm(4, 1.0).unwrap()),
        (
            "pnorm3",
            MeasureSpec::pnorm(2, 3.0).unwrap().with_scale(0.7).unwrap(),
        ),
        (
            "uniform cube",
            MeasureSpec::uniform(NamedBody::unit_cube(3).unwrap().into()).unwrap(),
        ),
    ];
    for (k, (name, m)) in measures.iter().enumerate() {
        let o = LevelSetOracle::new(m).unwrap();
        let samples = m
            .sample_batch(100_000, derive_seed(SEED, 1100 + k as u64))
            .unwrap();
        let dens: Vec<f64> = samples.iter().map(|x| m.density_at(x).unwrap()).collect();
        let grid = default_t_grid(o.sup_density());
        for &t in grid.iter().step_by(20) {
            let tv = t * o.volume(t).unwrap();
            // μ(K_t) ≥ t|K_t|, estimated by sampling
            let frac = dens.iter().filter(|&&d| d >= t).count() as f64 / dens.len() as f64;
            let se = (frac * (1.0 - frac) / dens.len() as f64).sqrt();
            if !(tv <= 1.0 && tv <= frac + 3.0 * se + 1e-12) {
                ub4_bad.push(format!(
                    "{name} t={t:.3e}: t|K_t|={tv:.4}, μ(K_t)≈{frac:.4}"
                ));
            }
        }
    }
    outcome(
        mills_bad == 0 && quad_gap < 1e-9 && ub4_bad.is_empty(),
        format!(
            "Mills violated {mills_bad}/100 (tail vs quadrature max rel gap {quad_gap:.1e}); t|K_t| ≤ μ(K_t) ≤ 1 violated {} times {}",
            ub4_bad.len(),
            ub4_bad.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("halfspace oracle", halfspace_oracle),
        ("cube exactness", cube_exactness),
        ("nazarov dominance", nazarov_dominance),
        ("quarter-power rate", quarter_power_rate),
        ("constant limit", constant_limit),
        ("parameter identities", parameter_identities),
        ("upper-bound sandwich", sandwich),
        ("ball inradius equality", ball_equality),
        ("balanced level", balanced_levels),
        ("scale/shift equivariance", equivariance),
        ("mills and level volume", mills_and_level_volume),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "[{}] {:>2} {name}: {} ({:.1?})",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail.trim_end(),
            start.elapsed()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
