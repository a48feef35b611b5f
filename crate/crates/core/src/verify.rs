//! The acceptance checks, grouped into suites. Each check returns a
//! [`CheckResult`]; errors inside a check are recorded as failures and do
//! not stop the suite.
//!
//! Every tolerance, grid, path count and seed is fixed here, so a suite run
//! is reproducible bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bernstein::{default_catalog, lookup, CatalogKey};
use crate::densities::{u_asymptotic, u_numeric};
use crate::error::{Error, Result};
use crate::grid::log_grid;
use crate::kernels::{green_kernel, radial_kernel, sweep_thm41, sweep_thm42, KernelKind};
use crate::laplace::{appendix_integral, invert_laplace, SemiInfinite, Tolerance, Transform};
use crate::montecarlo::{
    harmonic_modulus_sweep, ikeda_watanabe_check, krylov_safonov_sweep, laplace_identity_check, simulate_exit, Bins,
    McOptions, SimConfig, Subordinator, TargetSet, DEFAULT_JUMP_TRUNCATION,
};
use crate::special::gamma;
use crate::sweep::{log_log_slope, Verdict};

/// Seed of every Monte Carlo check. Chosen once, before any run.
pub const VERIFY_SEED: u64 = 20_240_601;

pub const NEWTONIAN_TOL: f64 = 1e-7;
pub const INVERSION_TOL: f64 = 1e-6;
pub const FRULLANI_TOL: f64 = 1e-8;
pub const GAMMA_MESH_TOL: f64 = 1e-8;
pub const BERNSTEIN_SLACK: f64 = 1e-12;
/// Required shrink factor of the potential-density deviation from
/// `t = 1e-3` to `t = 1e-5`.
pub const CONVERGENCE_FACTOR: f64 = 0.5;
/// Deviations below this are at the inversion's accuracy floor and count
/// as converged.
pub const CONVERGENCE_FLOOR: f64 = 1e-6;
pub const STABLE_SPREAD_TOL: f64 = 1e-2;
pub const VG_SLOPE_TOL: f64 = 0.05;
pub const STABLE_SLOPE_TOL: f64 = 0.02;
pub const LAPLACE_PATHS: u64 = 1_000_000;
pub const SHELL_PATHS: u64 = 100_000;
pub const HARMONIC_PATHS: u64 = 1_000_000;
pub const IKEDA_WATANABE_PATHS: u64 = 200_000;
pub const DETERMINISM_PATHS: u64 = 20_000;
/// Largest censored fraction for a Monte Carlo verdict.
pub const MAX_CENSORED: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Analytic,
    Asymptotic,
    Montecarlo,
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Suite::Analytic),
            "asymptotic" => Ok(Suite::Asymptotic),
            "montecarlo" => Ok(Suite::Montecarlo),
            "full" => Ok(Suite::Full),
            _ => Err(Error::Domain(format!("unknown suite `{s}` (analytic|asymptotic|montecarlo|full)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Analytic => "analytic",
            Suite::Asymptotic => "asymptotic",
            Suite::Montecarlo => "montecarlo",
            Suite::Full => "full",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: String,
    pub outcome: Outcome,
    pub summary: String,
    pub metrics: Vec<Metric>,
    pub elapsed_secs: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// `[PASS] 4 kernel_ratio_sweeps: …`.
    pub fn line(&self) -> String {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        };
        format!("[{tag}] {} {}: {} ({:.1}s)", self.id, self.name, self.summary, self.elapsed_secs)
    }
}

/// What a check reports before timing is attached.
struct Finding {
    outcome: Outcome,
    summary: String,
    metrics: Vec<Metric>,
}

impl Finding {
    fn new(pass: bool, summary: String) -> Self {
        Self { outcome: if pass { Outcome::Pass } else { Outcome::Fail }, summary, metrics: Vec::new() }
    }

    fn metric(mut self, name: impl Into<String>, value: f64) -> Self {
        self.metrics.push(Metric { name: name.into(), value });
        self
    }
}

/// A named check with its position in the full suite.
#[derive(Clone, Copy)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub suite: Suite,
    run: fn() -> Result<Finding>,
}

impl Check {
    pub fn run(&self) -> CheckResult {
        let start = Instant::now();
        let f = (self.run)().unwrap_or_else(|e| Finding::new(false, format!("error: {e}")));
        CheckResult {
            id: self.id,
            name: self.name.to_string(),
            outcome: f.outcome,
            summary: f.summary,
            metrics: f.metrics,
            elapsed_secs: start.elapsed().as_secs_f64(),
        }
    }
}

/// All checks in dependency order: analytic, asymptotic, Monte Carlo.
pub fn all_checks() -> Vec<Check> {
    vec![
        Check { id: 1, name: "closed_form_oracles", suite: Suite::Analytic, run: closed_form_oracles },
        Check { id: 2, name: "bernstein_inequality", suite: Suite::Analytic, run: bernstein_inequality },
        Check {
            id: 3,
            name: "potential_density_convergence",
            suite: Suite::Asymptotic,
            run: potential_density_convergence,
        },
        Check { id: 4, name: "kernel_ratio_sweeps", suite: Suite::Asymptotic, run: kernel_ratio_sweeps },
        Check { id: 5, name: "jump_kernel_slopes", suite: Suite::Asymptotic, run: jump_kernel_slopes },
        Check { id: 6, name: "laplace_identity", suite: Suite::Montecarlo, run: laplace_identity },
        Check { id: 7, name: "shell_exit_failure", suite: Suite::Montecarlo, run: shell_exit_failure },
        Check { id: 8, name: "harmonic_modulus", suite: Suite::Montecarlo, run: harmonic_modulus },
        Check { id: 9, name: "ikeda_watanabe", suite: Suite::Montecarlo, run: ikeda_watanabe },
        Check { id: 10, name: "determinism", suite: Suite::Montecarlo, run: determinism },
    ]
}

pub fn checks_in(suite: Suite) -> Vec<Check> {
    all_checks().into_iter().filter(|c| suite == Suite::Full || c.suite == suite).collect()
}

/// Run a suite, calling `on_result` after each check.
pub fn run_suite(suite: Suite, mut on_result: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    checks_in(suite)
        .iter()
        .map(|c| {
            let r = c.run();
            on_result(&r);
            r
        })
        .collect()
}

/// Suite exit status: success iff no check failed (inconclusive checks do
/// not count against it).
pub fn suite_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.outcome != Outcome::Fail)
}

fn max_rel_err(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs.map(|(got, want)| (got / want - 1.0).abs()).fold(0.0, f64::max)
}

fn closed_form_oracles() -> Result<Finding> {
    // Newtonian potential of pure drift in d = 3.
    let drift = lookup("drift")?;
    let rs = log_grid(1e-3, 10.0, 9);
    let newton = max_rel_err(
        rs.iter().map(|&r| Ok((green_kernel(&drift, 3, r)?, 1.0 / (4.0 * PI * r)))).collect::<Result<Vec<_>>>()?.into_iter(),
    );

    // λ^(−1/2) ↦ t^(−1/2)/√π.
    let f = |z: Complex64| z.powf(-0.5);
    let ts = log_grid(1e-3, 1.0, 13);
    let inversion = max_rel_err(
        ts.iter()
            .map(|&t| Ok((invert_laplace(&Transform::Analytic(&f), t)?, 1.0 / (PI * t).sqrt())))
            .collect::<Result<Vec<_>>>()?
            .into_iter(),
    );

    // Frullani: ∫ (1 − e^(−λt)) e^(−t)/t dt = log(1 + λ).
    let vg = lookup("vg")?;
    let mu = vg.closed_form_mu.clone().ok_or_else(|| Error::Unsupported("vg Lévy density".into()))?;
    let frullani = [0.5, 1.0, 10.0, 100.0]
        .iter()
        .map(|&l: &f64| {
            let v = SemiInfinite::new(Tolerance::new(0.0, 1e-12))
                .with_splits(&[1.0 / l, 1.0])
                .integrate(|t| -(-l * t).exp_m1() * mu(t))
                .value;
            (v - l.ln_1p()).abs()
        })
        .fold(0.0, f64::max);

    // ∫ t^(−p) e^(−1/t) t^(−b) dt = Γ(p + b − 1).
    let mut gamma_mesh: f64 = 0.0;
    for p in [1.25, 1.5, 2.0, 3.0, 4.0] {
        for b in [0.0, 0.25, 0.5, 1.0, 1.5] {
            let v = appendix_integral(|t| t.powf(-b), p, 1.0, 1.0, 1e-12)?;
            gamma_mesh = gamma_mesh.max((v / gamma(p + b - 1.0) - 1.0).abs());
        }
    }
    let pass = newton <= NEWTONIAN_TOL
        && inversion <= INVERSION_TOL
        && frullani <= FRULLANI_TOL
        && gamma_mesh <= GAMMA_MESH_TOL;
    Ok(Finding::new(
        pass,
        format!(
            "newtonian rel {newton:.2e}, inversion rel {inversion:.2e}, frullani abs {frullani:.2e}, gamma mesh rel {gamma_mesh:.2e}"
        ),
    )
    .metric("newtonian_rel_err", newton)
    .metric("inversion_rel_err", inversion)
    .metric("frullani_abs_err", frullani)
    .metric("gamma_mesh_rel_err", gamma_mesh))
}

fn bernstein_inequality() -> Result<Finding> {
    let lambdas = log_grid(1e-6, 1e6, 241);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut worst_key = String::new();
    for key in default_catalog() {
        let exp = key.entry()?.exponent;
        for &l in &lambdas {
            let phi = exp.value(l);
            let excess = (l * exp.derivative(l) - phi) / phi.max(1.0);
            if excess > worst {
                worst = excess;
                worst_key = key.to_string();
            }
        }
    }
    Ok(Finding::new(
        worst <= BERNSTEIN_SLACK,
        format!("max (λφ' − φ)/max(φ,1) = {worst:.2e} ({worst_key})"),
    )
    .metric("max_excess", worst))
}

fn potential_density_convergence() -> Result<Finding> {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut finding_metrics = Vec::new();
    for key in ["stable(0.5)", "stable(1)", "stable(1.5)", "vg"] {
        let exp = lookup(key)?.exponent;
        let dev = |t: f64| -> Result<f64> { Ok((u_numeric(&exp, t)? / u_asymptotic(&exp, t)? - 1.0).abs()) };
        let (coarse, fine) = (dev(1e-3)?, dev(1e-5)?);
        let ok = fine <= CONVERGENCE_FACTOR * coarse || fine <= CONVERGENCE_FLOOR;
        pass &= ok;
        parts.push(format!("{key}: {coarse:.3e} → {fine:.3e}{}", if ok { "" } else { " ✗" }));
        finding_metrics.push((format!("{key}_dev_1e-3"), coarse));
        finding_metrics.push((format!("{key}_dev_1e-5"), fine));
    }
    let mut f = Finding::new(pass, parts.join("; "));
    for (n, v) in finding_metrics {
        f = f.metric(n, v);
    }
    Ok(f)
}

fn kernel_ratio_sweeps() -> Result<Finding> {
    let rs = log_grid(1e-4, 1e-1, 13);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst_mm: f64 = 0.0;
    for key in ["stable(0.5)", "stable(1)", "stable(1.5)", "vg", "geo(1)", "geo-iter(2,2)", "example3"] {
        let entry = lookup(key)?;
        let mut sweeps = vec![sweep_thm41(&entry, 3, &rs)?];
        sweeps.extend(sweep_thm42(&entry, 3, &rs)?);
        let stable = matches!(entry.key, CatalogKey::Stable(_));
        for s in &sweeps {
            worst_mm = worst_mm.max(s.max_over_min);
            let ok = s.verdict == Verdict::Bounded && (!stable || s.relative_spread() <= STABLE_SPREAD_TOL);
            if !ok {
                parts.push(format!("{key}: {:?} max/min {:.3} slope {:.3}", s.verdict, s.max_over_min, s.log_slope_tail));
            }
            pass &= ok;
        }
    }
    let summary = if parts.is_empty() {
        format!("all sweeps bounded, worst max/min {worst_mm:.3}")
    } else {
        parts.join("; ")
    };
    Ok(Finding::new(pass, summary).metric("worst_max_over_min", worst_mm))
}

fn jump_kernel_slopes() -> Result<Finding> {
    let rs = log_grid(1e-3, 1e-2, 6);
    let slope = |key: &str| -> Result<f64> {
        let k = radial_kernel(&lookup(key)?, KernelKind::JumpJ, 3, &rs)?;
        Ok(log_log_slope(&k.r_grid, &k.values))
    };
    let vg = slope("vg")?;
    let mut pass = (vg + 3.0).abs() <= VG_SLOPE_TOL;
    let mut f_metrics = vec![("vg_slope".to_string(), vg)];
    let mut parts = vec![format!("vg {vg:.4}")];
    for a in [0.5, 1.0, 1.5] {
        let s = slope(&format!("stable({a})"))?;
        pass &= (s + 3.0 + a).abs() <= STABLE_SLOPE_TOL;
        parts.push(format!("stable({a}) {s:.4}"));
        f_metrics.push((format!("stable_{a}_slope"), s));
    }
    let mut f = Finding::new(pass, parts.join(", "));
    for (n, v) in f_metrics {
        f = f.metric(n, v);
    }
    Ok(f)
}

fn laplace_identity() -> Result<Finding> {
    let mut total = 0;
    let mut failed = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (i, key) in default_catalog().into_iter().enumerate() {
        let entry = key.entry()?;
        let sub = Subordinator::new(&entry.exponent, DEFAULT_JUMP_TRUNCATION, None)?;
        for (j, t) in [0.1, 1.0].into_iter().enumerate() {
            let seed = VERIFY_SEED.wrapping_add((10 * i + j) as u64);
            for p in laplace_identity_check(&entry, &sub, t, &[0.5, 1.0, 2.0], LAPLACE_PATHS, seed, None)? {
                total += 1;
                if p.se > 0.0 {
                    worst_z = worst_z.max((p.empirical - p.exact).abs() / p.se);
                }
                if !p.passed {
                    failed.push(format!("{key} t={t} λ={}", p.lambda));
                }
            }
        }
    }
    let summary = if failed.is_empty() {
        format!("{total} (sampler, t, λ) cases within 3 SE, worst |z| {worst_z:.2}")
    } else {
        format!("{} of {total} outside 3 SE: {}", failed.len(), failed.join(", "))
    };
    Ok(Finding::new(failed.is_empty(), summary).metric("worst_abs_z", worst_z).metric("cases", total as f64))
}

fn shell_exit_failure() -> Result<Finding> {
    let opts = McOptions::new(SHELL_PATHS, VERIFY_SEED);
    let vg = krylov_safonov_sweep("vg", 3, &[1e-3, 1e-2, 1e-1], &opts)?;
    let point = |r: f64| vg.points.iter().find(|p| p.r == r).unwrap();
    let (p1, p2) = (point(1e-2), point(1e-1));
    let sep_half = (p2.p_half - p1.p_half) / p1.se_half.hypot(p2.se_half);
    let sep_quarter = (p2.p_quarter - p1.p_quarter) / p1.se_quarter.hypot(p2.se_quarter);
    let vg_ok = vg.increasing_in_r
        && sep_half >= 3.0
        && sep_quarter >= 3.0
        && vg.sweep_half.verdict == Verdict::Bounded
        && vg.sweep_quarter.verdict == Verdict::Bounded
        && !vg.inconclusive
        && vg.points.iter().all(|p| p.censored == 0);
    let st = krylov_safonov_sweep("stable(1)", 3, &[1e-3, 1e-2, 1e-1], &opts)?;
    let st_min = st.sweep_half.ratios.iter().chain(&st.sweep_quarter.ratios).cloned().fold(f64::INFINITY, f64::min);
    let st_ok = st.sweep_half.verdict == Verdict::Bounded
        && st.sweep_quarter.verdict == Verdict::Bounded
        && !st.inconclusive
        && st_min > 0.0;
    Ok(Finding::new(
        vg_ok && st_ok,
        format!(
            "vg p_half(0.01)={:.4} p_half(0.1)={:.4} sep {sep_half:.1}σ (quarter {sep_quarter:.1}σ), ratio max/min {:.3}/{:.3}; stable(1) ratio min {st_min:.3}, max/min {:.3}",
            p1.p_half, p2.p_half, vg.sweep_half.max_over_min, vg.sweep_quarter.max_over_min, st.sweep_half.max_over_min
        ),
    )
    .metric("vg_separation_sigma_half", sep_half)
    .metric("vg_separation_sigma_quarter", sep_quarter)
    .metric("vg_ratio_max_over_min", vg.sweep_half.max_over_min)
    .metric("stable1_ratio_min", st_min))
}

fn harmonic_modulus() -> Result<Finding> {
    let opts = McOptions::new(HARMONIC_PATHS, VERIFY_SEED);
    let rs = [0.05, 0.1, 0.2];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut f_metrics = Vec::new();
    for key in ["vg", "stable(0.5)"] {
        let s = harmonic_modulus_sweep(key, 3, &rs, TargetSet::HalfExterior { axis: 0 }, &opts)?;
        let censored = s.reports.iter().map(|r| r.censored).sum::<u64>() as f64 / (HARMONIC_PATHS as f64 * 27.0);
        let inconclusive = s.reports.iter().any(|r| r.inconclusive);
        let ok = s.stable && s.mean_value_holds && !inconclusive && censored < MAX_CENSORED;
        pass &= ok;
        parts.push(format!(
            "{key}: M = [{}], spread {:.3}, mean value {}",
            s.moduli.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", "),
            s.spread,
            if s.mean_value_holds { "ok" } else { "violated" }
        ));
        f_metrics.push((format!("{key}_spread"), s.spread));
    }
    let mut f = Finding::new(pass, parts.join("; "));
    for (n, v) in f_metrics {
        f = f.metric(n, v);
    }
    Ok(f)
}

fn ikeda_watanabe() -> Result<Finding> {
    let r = 0.1;
    let cfg = SimConfig::new("vg", 3, r, IKEDA_WATANABE_PATHS, VERIFY_SEED)?;
    let edges: Vec<f64> = [1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0].iter().map(|e| e * r).collect();
    let rep = ikeda_watanabe_check(&cfg, &Bins::uniform(0.0, r, 40)?, &edges)?;
    Ok(Finding::new(
        rep.passed,
        format!("vg r={r}: {}/{} resolved bins agree within 3 combined SE", rep.agreeing, rep.resolved),
    )
    .metric("resolved_bins", rep.resolved as f64)
    .metric("agreeing_bins", rep.agreeing as f64))
}

fn determinism() -> Result<Finding> {
    let cfg = SimConfig::new("vg", 3, 0.1, DETERMINISM_PATHS, VERIFY_SEED)?;
    let one = simulate_exit(&cfg.clone().with_workers(1))?;
    let four = simulate_exit(&cfg.with_workers(4))?;
    let same = one.len() == four.len()
        && one.iter().zip(&four).all(|(a, b)| {
            a.exit_time.to_bits() == b.exit_time.to_bits()
                && a.status == b.status
                && match (&a.exit_position, &b.exit_position) {
                    (Some(x), Some(y)) => x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()),
                    (None, None) => true,
                    _ => false,
                }
        });
    Ok(Finding::new(same, format!("{} records, 1 vs 4 workers bit-identical: {same}", one.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_parsing_and_membership() {
        assert_eq!("analytic".parse::<Suite>().unwrap(), Suite::Analytic);
        assert!("fast".parse::<Suite>().is_err());
        assert_eq!(checks_in(Suite::Full).len(), 10);
        assert_eq!(checks_in(Suite::Analytic).iter().map(|c| c.id).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(checks_in(Suite::Asymptotic).len(), 3);
    }

    #[test]
    fn analytic_suite_passes() {
        let res = run_suite(Suite::Analytic, |_| {});
        for r in &res {
            assert!(r.passed(), "{}", r.line());
        }
        assert!(suite_passed(&res));
    }
}
