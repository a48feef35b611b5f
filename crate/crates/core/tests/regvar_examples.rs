use sbmkit::lookup;
use sbmkit::regvar::{check_de_haan_with, estimate_rv_index, fit_potter_bound, DeHaanOptions, DEFAULT_X_POINTS};

#[test]
fn phi_prime_index_of_a_regularly_varying_exponent_with_slow_factor() {
    // φ(λ) ~ λ/log λ for example3, so φ′ has index 0 approached like 1/log λ.
    let exp = lookup("example3").unwrap().exponent;
    let index = |lmax: f64| estimate_rv_index(|l| exp.derivative(l), lmax, &DEFAULT_X_POINTS).unwrap().index;
    let at = [1e6, 1e10, 1e14, 1e22].map(index);
    assert!(at.windows(2).all(|w| w[1].abs() < w[0].abs()), "{at:?}");
    assert!((at[1] + 0.043).abs() < 0.005, "1e10: {}", at[1]);
    assert!(at[3].abs() <= 0.02, "1e22: {}", at[3]);
}

#[test]
fn de_haan_of_inverse_log_matches_its_closed_form() {
    // ℓ = 1/log λ: L(λ) = log log λ − const, so the de Haan increment is
    // log λ · log(1 + log x / log λ), which tends to log x from below.
    let opts = DeHaanOptions { lower: 2.0, x_points: vec![2.0, 4.0, 8.0, 10.0], decades: 4 };
    let report = check_de_haan_with(|l: f64| 1.0 / l.ln(), 1e8, &opts).unwrap();
    for (l, dev) in report.lambdas.iter().zip(&report.deviations) {
        let ll = l.ln();
        let want = opts
            .x_points
            .iter()
            .map(|x: &f64| (ll * (1.0 + x.ln() / ll).ln() - x.ln()).abs())
            .fold(0.0, f64::max);
        assert!((dev - want).abs() < 1e-6 * want.max(1e-3), "λ={l}: {dev} vs {want}");
    }
    assert!(report.deviation_shrinking);
    assert!((report.final_deviation() - 0.1329).abs() < 1e-4, "{}", report.final_deviation());
}

#[test]
fn potter_constants_are_finite() {
    let vg = lookup("vg").unwrap().exponent;
    let fit = fit_potter_bound(|l| vg.derivative(l), 0.1, 1.0).unwrap();
    assert!(fit.constant.is_finite() && fit.constant >= 1.0);
    let pure = fit_potter_bound(|l: f64| l.powf(-0.5), 0.1, 1.0).unwrap();
    assert!(pure.constant <= 1.0 + 1e-9);
}
