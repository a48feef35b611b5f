//! Statistical checks of the exit simulation. Seeds are fixed, so each test
//! is deterministic; the tolerances are the usual few-SE bands.

use sbmkit::kernels::{green_kernel, sphere_area};
use sbmkit::laplace::{integrate, Tolerance};
use sbmkit::lookup;
use sbmkit::montecarlo::{
    estimate_green_ball, estimate_poisson_kernel, mean_exit_time_sweep, mean_and_se, simulate_exit, Bins,
    ExitStatus, McOptions, SimConfig,
};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fraction of exits landing in `B_{2r}` with its binomial SE.
fn near_exit_share(cfg: &SimConfig) -> (f64, f64) {
    let recs = simulate_exit(cfg).unwrap();
    assert!(recs.iter().all(|r| r.status == ExitStatus::Exited));
    mean_and_se(recs.iter().map(|r| f64::from(u8::from(r.exited_to_shell.within_2r))))
}

#[test]
fn halving_the_step_moves_exit_probabilities_by_less_than_two_se() {
    for (key, seed) in [("vg", 101), ("stable(1)", 202)] {
        let base = SimConfig::new(key, 3, 0.1, 20_000, seed).unwrap();
        let fine = base.clone().with_time_step(base.time_step / 2.0);
        let fine = SimConfig { master_seed: seed + 1, ..fine };
        let (p, se_p) = near_exit_share(&base);
        let (q, se_q) = near_exit_share(&fine);
        let combined = (se_p * se_p + se_q * se_q).sqrt();
        assert!((p - q).abs() < 2.0 * combined, "{key}: {p} vs {q}, combined SE {combined}");
    }
}

#[test]
fn exit_directions_are_isotropic() {
    let cfg = SimConfig::new("vg", 3, 0.1, 20_000, 7).unwrap();
    let recs = simulate_exit(&cfg).unwrap();
    for axis in 0..3 {
        let (m, se) = mean_and_se(recs.iter().map(|r| {
            let z = r.exit_position.as_ref().unwrap();
            z[axis] / norm(z)
        }));
        // Each coordinate of a uniform direction on S² has mean 0 and variance 1/3.
        assert!(m.abs() < 4.0 * se, "axis {axis}: mean {m}, SE {se}");
        assert!((se * se * recs.len() as f64 - 1.0 / 3.0).abs() < 0.02, "axis {axis}: variance");
    }
}

#[test]
fn compound_poisson_exits_put_no_mass_inside_the_ball() {
    // example3 has no structural sampler, so this runs the tabulated jumps.
    let cfg = SimConfig::new("example3", 3, 0.05, 5_000, 3).unwrap();
    assert!(cfg.subordinator().unwrap().sampler.describe().starts_with("compound-poisson"));
    let recs = simulate_exit(&cfg).unwrap();
    for r in &recs {
        assert_eq!(r.status, ExitStatus::Exited);
        assert!(norm(r.exit_position.as_ref().unwrap()) >= 0.05);
    }
}

#[test]
fn vg_mean_exit_time_scales_like_one_over_phi() {
    let opts = McOptions::new(20_000, 11);
    let (pts, sweep) = mean_exit_time_sweep("vg", 3, &[0.02, 0.05, 0.1], &opts).unwrap();
    assert!(pts.iter().all(|p| p.censored == 0 && p.se < 0.05 * p.mean));
    // Eτ itself moves by a factor near 2 over this range while Eτ·φ(r⁻²)
    // stays within 20%.
    assert!(pts[2].mean / pts[0].mean > 1.5, "{pts:?}");
    assert!(sweep.max_over_min < 1.2, "{:?}", sweep.ratios);
}

/// Volume average of `f(|y|)` over the shell `a < |y| < b` in R³.
fn shell_average(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let num = integrate(|rho| sphere_area(3) * rho * rho * f(rho), a, b, Tolerance::relative(1e-8), 200).value;
    num / (sphere_area(3) / 3.0 * (b.powi(3) - a.powi(3)))
}

#[test]
fn ball_green_function_lies_between_its_potential_bounds() {
    // From G_B(0, y) = g(|y|) − E g(|X_τ − y|) and |X_τ − y| ≥ r − |y|:
    // g(|y|) − g(r − |y|) ≤ G_B(0, y) ≤ g(|y|).
    let r = 0.1;
    let entry = lookup("stable(1.5)").unwrap();
    let g = |rho: f64| green_kernel(&entry, 3, rho).unwrap();
    let cfg = SimConfig::new("stable(1.5)", 3, r, 40_000, 5).unwrap();
    let bins = Bins::radial(vec![0.1 * r, 0.2 * r, 0.3 * r, 0.4 * r]).unwrap();
    let est = estimate_green_ball(&cfg, &bins).unwrap();
    assert_eq!(est.censored, 0);
    for k in 0..bins.len() {
        let (a, b) = bins.shell(k);
        let upper = shell_average(g, a, b);
        let lower = shell_average(|rho| g(rho) - g(r - rho), a, b);
        let (v, se) = (est.values[k], est.std_errors[k]);
        assert!(v <= upper + 3.0 * se, "bin {k}: {v} ± {se} above {upper}");
        assert!(v >= lower - 3.0 * se, "bin {k}: {v} ± {se} below {lower}");
        assert!(se < 0.1 * v, "bin {k} unresolved");
    }
}

#[test]
fn poisson_kernel_is_reflection_symmetric() {
    let r = 0.1;
    let x = vec![0.3 * r, 0.0, 0.0];
    let bins = Bins::new(vec![r, 1.25 * r, 1.5 * r, 2.0 * r, 4.0 * r], Some(0)).unwrap();
    let plus = SimConfig::new("vg", 3, r, 20_000, 21).unwrap().with_start_points(vec![x.clone()]);
    let minus = SimConfig::new("vg", 3, r, 20_000, 22)
        .unwrap()
        .with_start_points(vec![x.iter().map(|v| -v).collect()]);
    let kp = estimate_poisson_kernel(&plus, &bins).unwrap();
    let km = estimate_poisson_kernel(&minus, &bins).unwrap();
    // Bin 2k is the half with x₀ ≥ 0, 2k + 1 the other; reflection swaps them.
    for k in 0..bins.len() {
        let mirror = k ^ 1;
        let (a, b) = (kp.values[k], km.values[mirror]);
        let se = (kp.std_errors[k].powi(2) + km.std_errors[mirror].powi(2)).sqrt();
        assert!((a - b).abs() < 3.0 * se, "bin {k}: {a} vs {b}, SE {se}");
    }
    // Starting on the positive side favours the positive half near the ball.
    assert!(kp.values[0] > kp.values[1]);
}
