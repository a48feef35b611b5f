//! Histogram estimators of the Poisson kernel and the killed Green function
//! of a ball, and the Ikeda–Watanabe plug-in comparison between them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::paths::{norm, path_rng, purpose, run_paths, walk_until_exit, ExitStatus, Moments, SimConfig, Walker};
use super::sampler::Subordinator;
use crate::bernstein::{lookup, CatalogEntry};
use crate::error::{Error, Result};
use crate::kernels::{jump_table, sphere_area, RadialTable};
use crate::laplace::{integrate, Tolerance};

/// Radial shells `[edges[k], edges[k+1])`, optionally halved by the sign of
/// one coordinate (index `2k` for `x_axis ≥ 0`, `2k + 1` otherwise).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub edges: Vec<f64>,
    pub split_axis: Option<usize>,
}

impl Bins {
    pub fn radial(edges: Vec<f64>) -> Result<Self> {
        Self::new(edges, None)
    }

    pub fn new(edges: Vec<f64>, split_axis: Option<usize>) -> Result<Self> {
        if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!("bin edges must be non-negative and increasing: {edges:?}")));
        }
        Ok(Self { edges, split_axis })
    }

    /// `n` equal-width shells over `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::radial((0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect())
    }

    fn halves(&self) -> usize {
        if self.split_axis.is_some() {
            2
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        (self.edges.len() - 1) * self.halves()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shell(&self, bin: usize) -> (f64, f64) {
        let k = bin / self.halves();
        (self.edges[k], self.edges[k + 1])
    }

    pub fn index(&self, x: &[f64]) -> Option<usize> {
        let rho = norm(x);
        let last = *self.edges.last().unwrap();
        if rho < self.edges[0] || rho >= last {
            return None;
        }
        let k = self.edges.partition_point(|e| *e <= rho) - 1;
        Some(match self.split_axis {
            Some(a) => 2 * k + usize::from(x[a] < 0.0),
            None => k,
        })
    }

    pub fn volume(&self, bin: usize, d: usize) -> f64 {
        let (a, b) = self.shell(bin);
        sphere_area(d) / d as f64 * (b.powi(d as i32) - a.powi(d as i32)) / self.halves() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTarget {
    PoissonK,
    GreenBallGd,
}

/// Histogram estimate of a density over bins, per unit volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub target: KernelTarget,
    pub start: Vec<f64>,
    pub radius: f64,
    pub bins: Bins,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub bin_volumes: Vec<f64>,
    pub n_paths: u64,
    /// `Σ value·volume`: exit probability into the bins (Poisson) or the
    /// mean time spent in them (Green).
    pub total: f64,
    pub total_se: f64,
    pub mean_exit_time: f64,
    pub exit_time_se: f64,
    pub killed: u64,
    pub censored: u64,
    /// Exits flagged as possibly late because the last step was short.
    pub overshoot_flagged: u64,
}

impl KernelEstimate {
    /// Bin masses `value · volume` with their standard errors.
    pub fn masses(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.std_errors)
            .zip(&self.bin_volumes)
            .map(|((v, s), vol)| (v * vol, s * vol))
            .collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }
}

fn single_start(cfg: &SimConfig) -> Result<&[f64]> {
    cfg.validate()?;
    if cfg.d < 3 {
        return Err(Error::Precondition(format!("kernel estimates need d ≥ 3, got {}", cfg.d)));
    }
    match cfg.start_points.as_slice() {
        [x] => Ok(x),
        _ => Err(Error::Precondition("kernel estimates take exactly one start point".into())),
    }
}

#[derive(Clone)]
struct PoissonAcc {
    counts: Vec<u64>,
    in_bins: u64,
    time: Moments,
    killed: u64,
    censored: u64,
    flagged: u64,
}

/// Exit-position histogram from `B_r`, divided by bin volume.
pub fn estimate_poisson_kernel(cfg: &SimConfig, exterior_bins: &Bins) -> Result<KernelEstimate> {
    let x = single_start(cfg)?;
    if exterior_bins.edges[0] < cfg.ball_radius {
        return Err(Error::Precondition("Poisson-kernel bins must lie outside the ball".into()));
    }
    let sub = cfg.subordinator()?;
    let walker = Walker { sub: &sub, d: cfg.d, h: cfg.time_step };
    let nb = exterior_bins.len();
    let acc = run_paths(
        cfg.n_paths,
        cfg.workers,
        || PoissonAcc {
            counts: vec![0; nb],
            in_bins: 0,
            time: Moments::default(),
            killed: 0,
            censored: 0,
            flagged: 0,
        },
        |p, acc| {
            let mut rng = path_rng(cfg.master_seed, purpose::EXIT, p);
            let e = walk_until_exit(&walker, x, cfg.ball_radius, cfg.max_steps, &mut rng, |_| {});
            acc.time.push(e.steps as f64 * cfg.time_step);
            match e.status {
                ExitStatus::Exited => {
                    if e.last_step < super::paths::CREEP_FRACTION * cfg.ball_radius {
                        acc.flagged += 1;
                    }
                    if let Some(b) = exterior_bins.index(&e.position) {
                        acc.counts[b] += 1;
                        acc.in_bins += 1;
                    }
                }
                ExitStatus::Killed => acc.killed += 1,
                ExitStatus::Censored => acc.censored += 1,
            }
        },
        |a, b| {
            for (x, y) in a.counts.iter_mut().zip(&b.counts) {
                *x += y;
            }
            a.in_bins += b.in_bins;
            a.time.merge(&b.time);
            a.killed += b.killed;
            a.censored += b.censored;
            a.flagged += b.flagged;
        },
    )?;
    let n = cfg.n_paths as f64;
    let binom = |c: u64| {
        let p = c as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    };
    let vols: Vec<f64> = (0..nb).map(|b| exterior_bins.volume(b, cfg.d)).collect();
    let (values, std_errors) = acc
        .counts
        .iter()
        .zip(&vols)
        .map(|(c, v)| {
            let (p, se) = binom(*c);
            (p / v, se / v)
        })
        .unzip();
    let (total, total_se) = binom(acc.in_bins);
    Ok(KernelEstimate {
        target: KernelTarget::PoissonK,
        start: x.to_vec(),
        radius: cfg.ball_radius,
        bins: exterior_bins.clone(),
        values,
        std_errors,
        bin_volumes: vols,
        n_paths: cfg.n_paths,
        total,
        total_se,
        mean_exit_time: acc.time.mean(),
        exit_time_se: acc.time.se(),
        killed: acc.killed,
        censored: acc.censored,
        overshoot_flagged: acc.flagged,
    })
}

#[derive(Clone)]
struct GreenAcc {
    bins: Vec<Moments>,
    total: Moments,
    time: Moments,
    functionals: Vec<Moments>,
    killed: u64,
    censored: u64,
}

/// Occupation histogram plus path-level moments of `Σ_b occ_b·w_b` for each
/// weight vector `w` in `functionals`.
fn green_run(
    cfg: &SimConfig,
    y_bins: &Bins,
    functionals: &[Vec<f64>],
    stream: u64,
) -> Result<(KernelEstimate, Vec<Moments>)> {
    let x = single_start(cfg)?;
    let sub: Subordinator = cfg.subordinator()?;
    let walker = Walker { sub: &sub, d: cfg.d, h: cfg.time_step };
    let nb = y_bins.len();
    let h = cfg.time_step;
    let acc = run_paths(
        cfg.n_paths,
        cfg.workers,
        || GreenAcc {
            bins: vec![Moments::default(); nb],
            total: Moments::default(),
            time: Moments::default(),
            functionals: vec![Moments::default(); functionals.len()],
            killed: 0,
            censored: 0,
        },
        |p, acc| {
            let mut rng = path_rng(cfg.master_seed, stream, p);
            let mut occ = vec![0.0; nb];
            let e = walk_until_exit(&walker, x, cfg.ball_radius, cfg.max_steps, &mut rng, |y| {
                if let Some(b) = y_bins.index(y) {
                    occ[b] += h;
                }
            });
            acc.time.push(e.steps as f64 * h);
            match e.status {
                ExitStatus::Killed => acc.killed += 1,
                ExitStatus::Censored => acc.censored += 1,
                ExitStatus::Exited => {}
            }
            for (m, o) in acc.bins.iter_mut().zip(&occ) {
                m.push(*o);
            }
            acc.total.push(occ.iter().sum());
            for (m, w) in acc.functionals.iter_mut().zip(functionals) {
                m.push(occ.iter().zip(w).map(|(o, w)| o * w).sum());
            }
        },
        |a, b| {
            for (x, y) in a.bins.iter_mut().zip(&b.bins) {
                x.merge(y);
            }
            a.total.merge(&b.total);
            a.time.merge(&b.time);
            for (x, y) in a.functionals.iter_mut().zip(&b.functionals) {
                x.merge(y);
            }
            a.killed += b.killed;
            a.censored += b.censored;
        },
    )?;
    let vols: Vec<f64> = (0..nb).map(|b| y_bins.volume(b, cfg.d)).collect();
    let est = KernelEstimate {
        target: KernelTarget::GreenBallGd,
        start: x.to_vec(),
        radius: cfg.ball_radius,
        bins: y_bins.clone(),
        values: acc.bins.iter().zip(&vols).map(|(m, v)| m.mean() / v).collect(),
        std_errors: acc.bins.iter().zip(&vols).map(|(m, v)| m.se() / v).collect(),
        bin_volumes: vols,
        n_paths: cfg.n_paths,
        total: acc.total.mean(),
        total_se: acc.total.se(),
        mean_exit_time: acc.time.mean(),
        exit_time_se: acc.time.se(),
        killed: acc.killed,
        censored: acc.censored,
        overshoot_flagged: 0,
    };
    Ok((est, acc.functionals))
}

/// Occupation-time estimate of `G_{B_r}(x, ·)`: time spent in each bin
/// before exit, per unit volume.
pub fn estimate_green_ball(cfg: &SimConfig, y_bins: &Bins) -> Result<KernelEstimate> {
    green_run(cfg, y_bins, &[], purpose::EXIT).map(|r| r.0)
}

/// Fraction of bins whose SE may be at most this share of the value to
/// count in the Ikeda–Watanabe comparison.
pub const RESOLVED_SE_FRACTION: f64 = 0.2;

/// Share of resolved bins that must agree.
pub const AGREEMENT_SHARE: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkedaWatanabeBin {
    pub inner: f64,
    pub outer: f64,
    /// Exit probability into the bin, from the histogram.
    pub histogram: f64,
    pub histogram_se: f64,
    /// `∫_bin ∫_{B_r} Ĝ(x, y) j(|z − y|) dy dz`.
    pub quadrature: f64,
    pub quadrature_se: f64,
    pub resolved: bool,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkedaWatanabeReport {
    pub key: String,
    pub radius: f64,
    pub bins: Vec<IkedaWatanabeBin>,
    pub resolved: usize,
    pub agreeing: usize,
    pub passed: bool,
    pub green: KernelEstimate,
    pub poisson: KernelEstimate,
}

/// `∫_{a ≤ |z| < b} j(|z − y|) dz` for `|y| = ρ`, in `d = 3`, where the
/// sphere average of `j(|z − y|)` over `|z| = s` is
/// `(2sρ)⁻¹ ∫_{|s−ρ|}^{s+ρ} j(u) u du`.
fn shell_jump_rate(j: &RadialTable, a: f64, b: f64, rho: f64) -> f64 {
    let avg = |s: f64| {
        if rho < 1e-9 * s {
            j.eval(s)
        } else {
            integrate(|u| j.eval(u) * u, (s - rho).abs(), s + rho, Tolerance::new(0.0, 1e-9), 100).value
                / (2.0 * s * rho)
        }
    };
    integrate(|s| 4.0 * PI * s * s * avg(s), a, b, Tolerance::new(0.0, 1e-8), 200).value
}

/// Compare the exit histogram over `exterior_edges` with the plug-in
/// `∫ Ĝ_{B_r}(x, y) j(|z − y|) dy` built from an independent occupation run
/// on `green_bins`. Start point must be the centre; `d = 3`.
pub fn ikeda_watanabe_check(cfg: &SimConfig, green_bins: &Bins, exterior_edges: &[f64]) -> Result<IkedaWatanabeReport> {
    let x = single_start(cfg)?;
    if cfg.d != 3 || norm(x) != 0.0 {
        return Err(Error::Unsupported("the plug-in quadrature is implemented for d = 3 from the centre".into()));
    }
    if green_bins.split_axis.is_some() || *green_bins.edges.last().unwrap() < cfg.ball_radius {
        return Err(Error::Precondition("Green bins must be radial shells covering the ball".into()));
    }
    let entry: CatalogEntry = lookup(&cfg.exponent_key)?;
    let ext = Bins::radial(exterior_edges.to_vec())?;
    let r = cfg.ball_radius;
    let lo = (ext.edges[0] - r).max(1e-3 * r);
    if lo <= 0.0 || ext.edges[0] <= r {
        return Err(Error::Precondition("exterior bins must start strictly outside the ball".into()));
    }
    let hi = ext.edges.last().unwrap() + r;
    let j = jump_table(&entry, 3, 0.9 * lo, 1.1 * hi, 121)?;

    // Weight of Green bin b for exterior bin m: the shell average of the
    // jump rate into m, ∫_b 4πρ² J_m(ρ) dρ / vol_b.
    let gb = green_bins.len();
    let functionals: Vec<Vec<f64>> = (0..ext.len())
        .map(|m| {
            let (a, b) = ext.shell(m);
            (0..gb)
                .map(|k| {
                    let (p, q) = green_bins.shell(k);
                    let q = q.min(r);
                    if p >= q {
                        return 0.0;
                    }
                    let mass = integrate(
                        |rho| 4.0 * PI * rho * rho * shell_jump_rate(&j, a, b, rho),
                        p,
                        q,
                        Tolerance::new(0.0, 1e-7),
                        100,
                    )
                    .value;
                    mass / green_bins.volume(k, 3)
                })
                .collect()
        })
        .collect();

    let poisson = estimate_poisson_kernel(cfg, &ext)?;
    let (green, quad) = green_run(cfg, green_bins, &functionals, purpose::GREEN)?;
    let bins: Vec<IkedaWatanabeBin> = poisson
        .masses()
        .into_iter()
        .zip(&quad)
        .enumerate()
        .map(|(m, ((hist, hist_se), q))| {
            let (inner, outer) = ext.shell(m);
            let (quadrature, quadrature_se) = (q.mean(), q.se());
            let combined = hist_se.hypot(quadrature_se);
            IkedaWatanabeBin {
                inner,
                outer,
                histogram: hist,
                histogram_se: hist_se,
                quadrature,
                quadrature_se,
                resolved: hist > 0.0 && hist_se < RESOLVED_SE_FRACTION * hist,
                agrees: (hist - quadrature).abs() <= 3.0 * combined,
            }
        })
        .collect();
    let resolved = bins.iter().filter(|b| b.resolved).count();
    let agreeing = bins.iter().filter(|b| b.resolved && b.agrees).count();
    Ok(IkedaWatanabeReport {
        key: cfg.exponent_key.clone(),
        radius: r,
        passed: resolved > 0 && agreeing as f64 >= AGREEMENT_SHARE * resolved as f64,
        resolved,
        agreeing,
        bins,
        green,
        poisson,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceIdentityPoint {
    pub lambda: f64,
    pub t: f64,
    pub empirical: f64,
    pub se: f64,
    pub exact: f64,
    pub passed: bool,
}

/// Empirical `E e^(−λS_t)` against `e^(−tφ(λ))` from `n` draws.
pub fn laplace_identity_check(
    entry: &CatalogEntry,
    sub: &Subordinator,
    t: f64,
    lambdas: &[f64],
    n: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<LaplaceIdentityPoint>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let acc = run_paths(
        n,
        workers,
        || vec![Moments::default(); lambdas.len()],
        |p, acc: &mut Vec<Moments>| {
            let mut rng = path_rng(master_seed, purpose::SUBORDINATOR, p);
            let s = sub.increment(t, &mut rng);
            for (m, l) in acc.iter_mut().zip(lambdas) {
                m.push((-l * s).exp());
            }
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
        },
    )?;
    Ok(lambdas
        .iter()
        .zip(acc)
        .map(|(&lambda, m)| {
            let exact = (-t * entry.exponent.value(lambda)).exp();
            let (empirical, se) = (m.mean(), m.se());
            LaplaceIdentityPoint {
                lambda,
                t,
                empirical,
                se,
                exact,
                // A deterministic sampler has zero SE; allow rounding.
                passed: (empirical - exact).abs() <= 3.0 * se + 1e-12,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_index_and_volume() {
        let b = Bins::new(vec![1.0, 2.0, 3.0], Some(0)).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.index(&[1.5, 0.0, 0.0]), Some(0));
        assert_eq!(b.index(&[-1.5, 0.0, 0.0]), Some(1));
        assert_eq!(b.index(&[0.0, 2.5, 0.0]), Some(2));
        assert_eq!(b.index(&[3.0, 0.0, 0.0]), None);
        let total: f64 = (0..4).map(|k| b.volume(k, 3)).sum();
        assert!((total - 4.0 / 3.0 * PI * 26.0).abs() < 1e-12);
        assert!(Bins::radial(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn green_bins_outside_ball_are_zero_and_total_is_exit_time() {
        let cfg = SimConfig::new("stable(1)", 3, 1.0, 4000, 3).unwrap();
        let bins = Bins::radial(vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]).unwrap();
        let g = estimate_green_ball(&cfg, &bins).unwrap();
        assert_eq!(&g.values[4..], &[0.0, 0.0]);
        assert!((g.total - g.mean_exit_time).abs() <= 3.0 * g.total_se.max(g.exit_time_se));
    }

    #[test]
    fn poisson_mass_is_one_without_killing() {
        let cfg = SimConfig::new("stable(1)", 3, 0.5, 4000, 5).unwrap();
        let bins = Bins::radial(vec![0.5, 1.0, 2.0, 1e9]).unwrap();
        let k = estimate_poisson_kernel(&cfg, &bins).unwrap();
        assert!((k.total - 1.0).abs() <= 3.0 * k.total_se + 1e-12);
    }

    #[test]
    fn shell_rate_small_rho_limit() {
        let j = RadialTable::new(&[0.1, 10.0], &[1e3, 1e-3]).unwrap();
        let a = shell_jump_rate(&j, 1.0, 2.0, 0.0);
        let b = shell_jump_rate(&j, 1.0, 2.0, 1e-4);
        assert!((a - b).abs() < 1e-6 * a);
        // j = r⁻³ here: ∫₁² 4π s² s⁻³ ds = 4π log 2.
        assert!((a - 4.0 * PI * 2f64.ln()).abs() < 1e-6);
    }
}
