//! Closed-form oracles for quadrature, inversion and the power-weighted
//! exponential integral.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use sbmkit::laplace::{appendix_integral, check_lemma_a1_bounds, integrate_0_inf, invert_laplace, talbot, Transform};
use sbmkit::special::gamma;
use sbmkit::Verdict;

/// Relative accuracy required on the quadrature validation set.
const QUAD_REL: f64 = 1e-8;
/// Reported error estimates are compared against the true error with this
/// round-off allowance (a few ulps of the value).
const ROUNDOFF_ULPS: f64 = 8.0;
const INVERSION_REL: f64 = 1e-6;

type Integrand = Box<dyn Fn(f64) -> f64>;

fn validation_set() -> Vec<(&'static str, Integrand, f64)> {
    vec![
        ("exp", Box::new(|t: f64| (-t).exp()), 1.0),
        ("t exp", Box::new(|t: f64| t * (-t).exp()), 1.0),
        ("t^2 exp", Box::new(|t: f64| t * t * (-t).exp()), 2.0),
        ("t^-1/2 exp", Box::new(|t: f64| (-t).exp() / t.sqrt()), PI.sqrt()),
        ("t^-0.9 exp", Box::new(|t: f64| t.powf(-0.9) * (-t).exp()), gamma(0.1)),
        ("t^3.5 exp", Box::new(|t: f64| t.powf(3.5) * (-t).exp()), gamma(4.5)),
        ("t^-1/2 exp(-100t)", Box::new(|t: f64| (-100.0 * t).exp() / t.sqrt()), PI.sqrt() / 10.0),
        ("t^-5/2 exp(-1/t)", Box::new(|t: f64| t.powf(-2.5) * (-1.0 / t).exp()), gamma(1.5)),
        ("t^-3/2 exp(-1/4t)", Box::new(|t: f64| t.powf(-1.5) * (-0.25 / t).exp()), 2.0 * PI.sqrt()),
        ("exp(-t-1/t)", Box::new(|t: f64| (-t - 1.0 / t).exp()), 0.279_731_763_633_044_86),
        ("gaussian", Box::new(|t: f64| (-t * t).exp()), PI.sqrt() / 2.0),
        ("cauchy", Box::new(|t: f64| 1.0 / (1.0 + t * t)), PI / 2.0),
        ("1/(1+t^4)", Box::new(|t: f64| 1.0 / (1.0 + t.powi(4))), PI / (2.0 * 2f64.sqrt())),
        ("1/(1+t)^2", Box::new(|t: f64| (1.0 + t).powi(-2)), 1.0),
        ("1/(1+t)^3", Box::new(|t: f64| (1.0 + t).powi(-3)), 0.5),
        ("t/(1+t)^3", Box::new(|t: f64| t * (1.0 + t).powi(-3)), 0.5),
        ("t^-1/2/(1+t)", Box::new(|t: f64| 1.0 / (t.sqrt() * (1.0 + t))), PI),
        ("frullani", Box::new(|t: f64| ((-t).exp() - (-2.0 * t).exp()) / t), 2f64.ln()),
        ("exp/(1+t)", Box::new(|t: f64| (-t).exp() / (1.0 + t)), 0.596_347_362_323_194_1),
        ("exp cos", Box::new(|t: f64| (-t).exp() * t.cos()), 0.5),
    ]
}

#[test]
fn quadrature_validation_set() {
    let set = validation_set();
    assert_eq!(set.len(), 20);
    for (name, f, exact) in set {
        let r = integrate_0_inf(&f, 1e-10);
        let err = (r.value - exact).abs();
        assert!(r.converged, "{name}: not converged");
        assert!(err <= QUAD_REL * exact.abs(), "{name}: {} vs {exact}", r.value);
        let allowance = ROUNDOFF_ULPS * f64::EPSILON * exact.abs();
        assert!(
            err <= r.abs_error_estimate + allowance,
            "{name}: true error {err:e} above estimate {:e}",
            r.abs_error_estimate
        );
    }
}

#[test]
fn inversion_validation_set() {
    type Pair = (&'static str, Box<dyn Fn(Complex64) -> Complex64 + Sync>, Box<dyn Fn(f64) -> f64>);
    let pairs: Vec<Pair> = vec![
        ("1/s", Box::new(|s| 1.0 / s), Box::new(|_| 1.0)),
        ("1/s^2", Box::new(|s| 1.0 / (s * s)), Box::new(|t| t)),
        ("1/(s+1)", Box::new(|s| 1.0 / (s + 1.0)), Box::new(|t| (-t).exp())),
        ("1/(s+1)^2", Box::new(|s| 1.0 / ((s + 1.0) * (s + 1.0))), Box::new(|t| t * (-t).exp())),
        ("1/(s(s+1))", Box::new(|s| 1.0 / (s * (s + 1.0))), Box::new(|t| 1.0 - (-t).exp())),
        ("s^-1/2", Box::new(|s: Complex64| 1.0 / s.sqrt()), Box::new(|t: f64| 1.0 / (PI * t).sqrt())),
        (
            "(s+1)^-1/2",
            Box::new(|s: Complex64| 1.0 / (s + 1.0).sqrt()),
            Box::new(|t: f64| (-t).exp() / (PI * t).sqrt()),
        ),
    ];
    for (name, f, exact) in &pairs {
        for t in [1e-3, 0.1, 1.0, 5.0] {
            let want = exact(t);
            let got = invert_laplace(&Transform::Analytic(f.as_ref()), t).unwrap();
            assert!((got / want - 1.0).abs() <= INVERSION_REL, "{name} t={t}: {got} vs {want}");
            // Two contour orders agree to the same accuracy.
            let a = talbot(f, t, 20);
            let b = talbot(f, t, 28);
            assert!((a / b - 1.0).abs() <= INVERSION_REL, "{name} t={t}: orders {a} vs {b}");
        }
    }
}

#[test]
fn appendix_integral_gamma_mesh() {
    let (a, r) = (0.3, 2e-3);
    for p in [1.1, 1.5, 2.0, 3.0, 5.0] {
        for b in [0.0, 0.25, 0.5, 0.75, 0.9] {
            let w = |t: f64| t.powf(-b);
            let i = appendix_integral(w, p, a, r, 1e-12).unwrap();
            let ratio = i / (a.powf(1.0 - p - b) * r.powf(1.0 - p) * w(r));
            let want = gamma(p + b - 1.0);
            assert!((ratio / want - 1.0).abs() <= 1e-8, "p={p} b={b}: {ratio} vs {want}");
        }
    }
}

#[test]
fn appendix_examples() {
    let i = appendix_integral(|t: f64| t.powf(-0.5), 2.0, 1.0, 1.0, 1e-12).unwrap();
    assert!((i - gamma(1.5)).abs() < 1e-10);
    let i = appendix_integral(|_| 1.0, 2.0, 1.0, 0.5, 1e-12).unwrap();
    assert!((i - 2.0).abs() < 1e-10);
}

#[test]
fn lemma_sweeps() {
    let grid = sbmkit::grid::log_grid(1e-6, 1e-1, 11);

    let pure = check_lemma_a1_bounds(|t: f64| t.powf(-0.5), 2.0, 1.0, 0.5, &grid);
    assert_eq!(pure.verdict, Verdict::Bounded);
    assert!(pure.ratios.iter().all(|q| (q / gamma(1.5) - 1.0).abs() < 1e-8));

    // The correction factor (1 + t) only matters at large r.
    let perturbed = check_lemma_a1_bounds(|t: f64| t.powf(-0.5) * (1.0 + t), 2.0, 1.0, 0.5, &grid);
    let first = perturbed.ratios[0];
    assert!((first / gamma(1.5) - 1.0).abs() < 1e-5, "{first}");
    assert!(perturbed.ratios.windows(2).all(|w| w[1] >= w[0]));

    let log_w = check_lemma_a1_bounds(|t: f64| (E + 1.0 / t).ln(), 2.0, 1.0, 0.0, &grid);
    assert_eq!(log_w.verdict, Verdict::Bounded);
    assert!(log_w.max_over_min < 10.0, "{}", log_w.max_over_min);
}
