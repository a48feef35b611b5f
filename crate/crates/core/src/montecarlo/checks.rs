//! Probabilistic checks on ball exits: shell-exit probabilities, the
//! modulus of continuity of harmonic functions, differences of Poisson
//! kernels and mean exit times.

use serde::{Deserialize, Serialize};

use super::estimators::Bins;
use super::paths::{
    norm, path_rng, purpose, run_paths, simulate_exit, walk_shared, walk_until_exit, ExitStatus, Moments, SimConfig,
    Walker, DEFAULT_MAX_STEPS, STEPS_PER_EXIT_SCALE,
};
use super::sampler::DEFAULT_JUMP_TRUNCATION;
use crate::bernstein::lookup;
use crate::error::{Error, Result};
use crate::kernels::jump_kernel;
use crate::sweep::RatioSweep;

/// Relative SE above which a probability estimate is inconclusive.
pub const MAX_RELATIVE_SE: f64 = 0.2;

/// Largest allowed ratio between normalized moduli across radii.
pub const MODULUS_SPREAD: f64 = 2.0;

/// Paths for each mean-value comparison point (capped by `n_paths`).
pub const MEAN_VALUE_PATHS: u64 = 200_000;

/// Settings shared by checks that run several ball radii; each radius gets
/// the step `1/(steps_per_scale · φ(R⁻²))` for its own ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n_paths: u64,
    pub master_seed: u64,
    pub steps_per_scale: f64,
    pub jump_truncation: f64,
    pub max_steps: u64,
    pub workers: Option<usize>,
}

impl McOptions {
    pub fn new(n_paths: u64, master_seed: u64) -> Self {
        Self {
            n_paths,
            master_seed,
            steps_per_scale: STEPS_PER_EXIT_SCALE,
            jump_truncation: DEFAULT_JUMP_TRUNCATION,
            max_steps: DEFAULT_MAX_STEPS,
            workers: None,
        }
    }

    /// Config for balls of radius `radius`, with an independent seed per
    /// `tag`.
    pub fn config(&self, key: &str, d: usize, radius: f64, tag: u64) -> Result<SimConfig> {
        let entry = lookup(key)?;
        let mut cfg = SimConfig::new(key, d, radius, self.n_paths, derive_seed(self.master_seed, tag))?;
        cfg.time_step = 1.0 / (self.steps_per_scale * entry.exponent.value(radius.powi(-2)));
        cfg.jump_truncation = self.jump_truncation;
        cfg.max_steps = self.max_steps;
        cfg.workers = self.workers;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn derive_seed(master: u64, tag: u64) -> u64 {
    master.wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// `r⁻²φ'(r⁻²)/φ(r⁻²)`.
pub fn shell_ratio_bound(key: &str, r: f64) -> Result<f64> {
    let exp = lookup(key)?.exponent;
    let l = r.powi(-2);
    Ok(l * exp.derivative(l) / exp.value(l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellExitPoint {
    pub r: f64,
    pub rho: f64,
    /// `P_0(X` leaving `B_{r/2}` lands in `B_r ∖ B_{r/2})`.
    pub p_half: f64,
    pub se_half: f64,
    /// `P_0(X` leaving `B_{r/4}` lands in `B_r ∖ B_{r/4})`.
    pub p_quarter: f64,
    pub se_quarter: f64,
    pub censored: usize,
    pub killed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovSafonovReport {
    pub key: String,
    pub d: usize,
    pub n_paths: u64,
    pub points: Vec<ShellExitPoint>,
    /// `p_half(r)/ρ(r)`.
    pub sweep_half: RatioSweep,
    pub sweep_quarter: RatioSweep,
    /// Both conventions strictly increase with `r`.
    pub increasing_in_r: bool,
    /// `(p(r_max) − p(r_min))/combined SE`, smaller of the two conventions.
    pub separation_sigma: f64,
    pub inconclusive: bool,
    /// Paths needed to bring every relative SE under `MAX_RELATIVE_SE`.
    pub required_paths: Option<u64>,
}

/// Shell-exit probabilities from the origin over `r_list`, in both annulus
/// conventions, against `ρ(r) = r⁻²φ'(r⁻²)/φ(r⁻²)`.
pub fn krylov_safonov_sweep(key: &str, d: usize, r_list: &[f64], opts: &McOptions) -> Result<KrylovSafonovReport> {
    let mut rs = r_list.to_vec();
    rs.sort_by(f64::total_cmp);
    if rs.len() < 2 || rs[0] <= 0.0 {
        return Err(Error::Domain("need at least two positive radii".into()));
    }
    let mut points = Vec::new();
    for (i, &r) in rs.iter().enumerate() {
        let shell_prob = |ball: f64, tag: u64, quarter: bool| -> Result<(f64, f64, usize, usize)> {
            let recs = simulate_exit(&opts.config(key, d, ball, tag)?)?;
            let hits = recs
                .iter()
                .filter(|r| {
                    r.status == ExitStatus::Exited
                        && if quarter { r.exited_to_shell.within_4r } else { r.exited_to_shell.within_2r }
                })
                .count();
            let n = recs.len() as f64;
            let p = hits as f64 / n;
            let censored = recs.iter().filter(|r| r.status == ExitStatus::Censored).count();
            let killed = recs.iter().filter(|r| r.status == ExitStatus::Killed).count();
            Ok((p, (p * (1.0 - p) / n).sqrt(), censored, killed))
        };
        let (p_half, se_half, c1, k1) = shell_prob(r / 2.0, 2 * i as u64, false)?;
        let (p_quarter, se_quarter, c2, k2) = shell_prob(r / 4.0, 2 * i as u64 + 1, true)?;
        points.push(ShellExitPoint {
            r,
            rho: shell_ratio_bound(key, r)?,
            p_half,
            se_half,
            p_quarter,
            se_quarter,
            censored: c1 + c2,
            killed: k1 + k2,
        });
    }
    let label = "p(r) / (r^-2 phi'(r^-2) / phi(r^-2))";
    let sweep_half = RatioSweep::new(rs.clone(), points.iter().map(|p| p.p_half / p.rho).collect(), label);
    let sweep_quarter = RatioSweep::new(rs.clone(), points.iter().map(|p| p.p_quarter / p.rho).collect(), label);
    let increasing_in_r = points.windows(2).all(|w| w[1].p_half > w[0].p_half && w[1].p_quarter > w[0].p_quarter);
    let (first, last) = (&points[0], &points[points.len() - 1]);
    let separation_sigma = ((last.p_half - first.p_half) / last.se_half.hypot(first.se_half))
        .min((last.p_quarter - first.p_quarter) / last.se_quarter.hypot(first.se_quarter));
    let worst = points
        .iter()
        .flat_map(|p| [p.se_half / p.p_half, p.se_quarter / p.p_quarter])
        .fold(0.0, f64::max);
    let inconclusive = !(worst <= MAX_RELATIVE_SE);
    let required_paths = inconclusive.then(|| {
        if worst.is_finite() {
            (opts.n_paths as f64 * (worst / MAX_RELATIVE_SE).powi(2)).ceil() as u64
        } else {
            u64::MAX
        }
    });
    Ok(KrylovSafonovReport {
        key: key.to_string(),
        d,
        n_paths: opts.n_paths,
        points,
        sweep_half,
        sweep_quarter,
        increasing_in_r,
        separation_sigma,
        inconclusive,
        required_paths,
    })
}

/// Exterior target set `F` defining `f(x) = P_x(X_{τ_{B_{4r}}} ∈ F)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSet {
    /// The whole exterior: `f ≡ 1` without killing.
    Exterior,
    /// Exterior points with positive coordinate `axis`.
    HalfExterior { axis: usize },
}

impl TargetSet {
    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            TargetSet::Exterior => true,
            TargetSet::HalfExterior { axis } => z[*axis] > 0.0,
        }
    }
}

/// Nine points `(k/5)(r/4)e₁`, `k = −4..=4`, inside `B_{r/4}`.
pub fn default_modulus_grid(d: usize, r: f64) -> Vec<Vec<f64>> {
    (-4..=4)
        .map(|k| {
            let mut x = vec![0.0; d];
            x[0] = k as f64 / 5.0 * r / 4.0;
            x
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValuePoint {
    pub x: Vec<f64>,
    pub direct: f64,
    pub direct_se: f64,
    /// `E_x f(X_{τ_{B_ρ}})` with `f` evaluated by continuing the path.
    pub two_stage: f64,
    pub two_stage_se: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    pub key: String,
    pub r: f64,
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `max |f̂(x) − f̂(y)| φ(|x−y|⁻²)/φ(r⁻²)`.
    pub modulus: f64,
    pub modulus_pair: (usize, usize),
    pub modulus_difference_se: f64,
    /// The maximising difference is nonzero but within 3 SE of zero.
    pub inconclusive: bool,
    pub sub_ball_radius: f64,
    pub mean_value: Vec<MeanValuePoint>,
    pub censored: u64,
}

impl HarmonicReport {
    pub fn mean_value_holds(&self) -> bool {
        self.mean_value.iter().all(|m| m.holds)
    }
}

#[derive(Clone)]
struct GridAcc {
    hits: Vec<u64>,
    /// Per pair `(i < j)`: count of paths where exactly one of `i`, `j` hits.
    disagree: Vec<u64>,
    /// Per pair: `Σ (1_i − 1_j)`.
    diff: Vec<i64>,
    censored: u64,
}

/// `f(x) = P_x(X_{τ_{B_{4r}}} ∈ F)` on `grid` with common random numbers,
/// the normalized modulus over all pairs, and the mean-value property on
/// `B_{2r}(0)` at the ends and centre of the grid.
pub fn harmonic_modulus_check(
    key: &str,
    d: usize,
    r: f64,
    target: TargetSet,
    grid: &[Vec<f64>],
    opts: &McOptions,
) -> Result<HarmonicReport> {
    if grid.len() < 2 {
        return Err(Error::Domain("need at least two grid points".into()));
    }
    if grid.iter().any(|x| norm(x) >= r / 4.0) {
        return Err(Error::Precondition("grid points must lie in B_{r/4}".into()));
    }
    let exp = lookup(key)?.exponent;
    let big = 4.0 * r;
    let cfg = opts.config(key, d, big, 0)?.with_start_points(grid.to_vec());
    cfg.validate()?;
    let sub = cfg.subordinator()?;
    let walker = Walker { sub: &sub, d, h: cfg.time_step };
    let m = grid.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let acc = run_paths(
        cfg.n_paths,
        cfg.workers,
        || GridAcc { hits: vec![0; m], disagree: vec![0; pairs.len()], diff: vec![0; pairs.len()], censored: 0 },
        |p, acc| {
            let mut rng = path_rng(cfg.master_seed, purpose::EXIT, p);
            let exits = walk_shared(&walker, grid, big, cfg.max_steps, &mut rng);
            let hit: Vec<bool> = exits
                .iter()
                .map(|e| e.status == ExitStatus::Exited && target.contains(&e.position))
                .collect();
            acc.censored += exits.iter().filter(|e| e.status == ExitStatus::Censored).count() as u64;
            for (h, &b) in acc.hits.iter_mut().zip(&hit) {
                *h += u64::from(b);
            }
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if hit[i] != hit[j] {
                    acc.disagree[k] += 1;
                    acc.diff[k] += if hit[i] { 1 } else { -1 };
                }
            }
        },
        |a, b| {
            for (x, y) in a.hits.iter_mut().zip(&b.hits) {
                *x += y;
            }
            for (x, y) in a.disagree.iter_mut().zip(&b.disagree) {
                *x += y;
            }
            for (x, y) in a.diff.iter_mut().zip(&b.diff) {
                *x += y;
            }
            a.censored += b.censored;
        },
    )?;
    let n = cfg.n_paths as f64;
    let values: Vec<f64> = acc.hits.iter().map(|h| *h as f64 / n).collect();
    let std_errors: Vec<f64> = values.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    let norm_r = exp.value(r.powi(-2));
    let mut best = (0.0, (0, 1), 0.0);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let diff = acc.diff[k] as f64 / n;
        // Per-path differences take values in {−1, 0, 1}.
        let var = acc.disagree[k] as f64 / n - diff * diff;
        let se = (var.max(0.0) / n).sqrt();
        let sep: f64 = grid[i].iter().zip(&grid[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let m_ij = diff.abs() * exp.value(sep.powi(-2)) / norm_r;
        if m_ij > best.0 || k == 0 {
            best = (m_ij, (i, j), se);
        }
    }
    let (i, j) = best.1;
    let best_diff = (values[i] - values[j]).abs();
    let inconclusive = best_diff > 0.0 && best_diff < 3.0 * best.2;

    let sub_ball = 2.0 * r;
    let n_mv = cfg.n_paths.min(MEAN_VALUE_PATHS);
    let mut mean_value = Vec::new();
    for &g in &[0, m / 2, m - 1] {
        let x = &grid[g];
        let two = run_paths(
            n_mv,
            cfg.workers,
            Moments::default,
            |p, acc| {
                let mut rng = path_rng(cfg.master_seed, purpose::CONTINUATION, p * m as u64 + g as u64);
                let first = walk_until_exit(&walker, x, sub_ball, cfg.max_steps, &mut rng, |_| {});
                let v = match first.status {
                    ExitStatus::Exited if norm(&first.position) >= big => target.contains(&first.position),
                    ExitStatus::Exited => {
                        let second = walk_until_exit(&walker, &first.position, big, cfg.max_steps, &mut rng, |_| {});
                        second.status == ExitStatus::Exited && target.contains(&second.position)
                    }
                    _ => false,
                };
                acc.push(f64::from(u8::from(v)));
            },
            |a, b| a.merge(&b),
        )?;
        let combined = std_errors[g].hypot(two.se());
        mean_value.push(MeanValuePoint {
            x: x.clone(),
            direct: values[g],
            direct_se: std_errors[g],
            two_stage: two.mean(),
            two_stage_se: two.se(),
            holds: (values[g] - two.mean()).abs() <= 3.0 * combined + 1e-12,
        });
    }
    Ok(HarmonicReport {
        key: key.to_string(),
        r,
        grid: grid.to_vec(),
        values,
        std_errors,
        modulus: best.0,
        modulus_pair: best.1,
        modulus_difference_se: best.2,
        inconclusive,
        sub_ball_radius: sub_ball,
        mean_value,
        censored: acc.censored,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSweep {
    pub reports: Vec<HarmonicReport>,
    pub moduli: Vec<f64>,
    /// `max M / min M` over the radii.
    pub spread: f64,
    pub stable: bool,
    pub mean_value_holds: bool,
}

/// `harmonic_modulus_check` on the default grid at each radius.
pub fn harmonic_modulus_sweep(
    key: &str,
    d: usize,
    r_list: &[f64],
    target: TargetSet,
    opts: &McOptions,
) -> Result<HarmonicSweep> {
    // Independent seeds per radius: with one seed, exact scaling would make
    // stable estimates identical across radii.
    let reports = r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let o = McOptions { master_seed: derive_seed(opts.master_seed, i as u64 + 1), ..opts.clone() };
            harmonic_modulus_check(key, d, r, target, &default_modulus_grid(d, r), &o)
        })
        .collect::<Result<Vec<_>>>()?;
    let moduli: Vec<f64> = reports.iter().map(|r| r.modulus).collect();
    let hi = moduli.iter().cloned().fold(0.0, f64::max);
    let lo = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(HarmonicSweep {
        stable: spread.is_finite() && spread <= MODULUS_SPREAD,
        mean_value_holds: reports.iter().all(|r| r.mean_value_holds()),
        reports,
        moduli,
        spread,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `r < |z| < 2r`.
    Near,
    /// `|z| ≥ 2r`.
    Far,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonDiffEntry {
    pub pair: usize,
    pub bin: usize,
    pub inner: f64,
    pub outer: f64,
    pub regime: Regime,
    /// `K̂(x, z) − K̂(y, z)` as a bin density.
    pub difference: f64,
    pub se: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonDiffReport {
    pub key: String,
    pub r: f64,
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub entries: Vec<PoissonDiffEntry>,
    /// `max (|Δ| − 3SE)⁺ / bound` per regime.
    pub c_near: f64,
    pub c_far: f64,
    /// `max |Δ| / bound` per regime, noise included.
    pub c_near_raw: f64,
    pub c_far_raw: f64,
    /// No difference exceeds 3 SE.
    pub inconclusive: bool,
}

/// `|K̂(x, z) − K̂(y, z)|` on half-shell bins (split by the sign of the first
/// coordinate) against the near- and far-field bounds
/// `|z|^(−d) φ((|z|−r)⁻²)/φ(|x−y|⁻²)` and `j(|z|/2)/φ(|x−y|⁻²)`, evaluated
/// at bin mid-radii.
pub fn poisson_diff_check(
    key: &str,
    d: usize,
    r: f64,
    x_pairs: &[(Vec<f64>, Vec<f64>)],
    z_edges: &[f64],
    opts: &McOptions,
) -> Result<PoissonDiffReport> {
    if x_pairs.iter().any(|(x, y)| norm(x) >= r / 8.0 || norm(y) >= r / 8.0) {
        return Err(Error::Precondition("pair points must lie in B_{r/8}".into()));
    }
    let bins = Bins::new(z_edges.to_vec(), Some(0))?;
    if bins.edges[0] < r {
        return Err(Error::Precondition("z bins must lie outside B_r".into()));
    }
    let entry = lookup(key)?;
    let starts: Vec<Vec<f64>> = x_pairs.iter().flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
    let cfg = opts.config(key, d, r, 0)?.with_start_points(starts.clone());
    cfg.validate()?;
    let sub = cfg.subordinator()?;
    let walker = Walker { sub: &sub, d, h: cfg.time_step };
    let nb = bins.len();
    let np = x_pairs.len();
    // Per (pair, bin): Σ Δ and Σ Δ², with Δ ∈ {−1, 0, 1}.
    let acc = run_paths(
        cfg.n_paths,
        cfg.workers,
        || (vec![0i64; np * nb], vec![0u64; np * nb]),
        |p, acc| {
            let mut rng = path_rng(cfg.master_seed, purpose::EXIT, p);
            let exits = walk_shared(&walker, &starts, r, cfg.max_steps, &mut rng);
            let bin_of: Vec<Option<usize>> = exits
                .iter()
                .map(|e| if e.status == ExitStatus::Exited { bins.index(&e.position) } else { None })
                .collect();
            for k in 0..np {
                let (bx, by) = (bin_of[2 * k], bin_of[2 * k + 1]);
                if bx == by {
                    continue;
                }
                if let Some(b) = bx {
                    acc.0[k * nb + b] += 1;
                    acc.1[k * nb + b] += 1;
                }
                if let Some(b) = by {
                    acc.0[k * nb + b] -= 1;
                    acc.1[k * nb + b] += 1;
                }
            }
        },
        |a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            for (x, y) in a.1.iter_mut().zip(&b.1) {
                *x += y;
            }
        },
    )?;
    let n = cfg.n_paths as f64;
    let exp = &entry.exponent;
    let mut entries = Vec::new();
    let (mut c_near, mut c_far, mut c_near_raw, mut c_far_raw) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut any_significant = false;
    for (k, (x, y)) in x_pairs.iter().enumerate() {
        let sep: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        for b in 0..nb {
            let (inner, outer) = bins.shell(b);
            let vol = bins.volume(b, d);
            let mean = acc.0[k * nb + b] as f64 / n;
            let var = acc.1[k * nb + b] as f64 / n - mean * mean;
            let difference = mean / vol;
            let se = (var.max(0.0) / n).sqrt() / vol;
            let z = 0.5 * (inner + outer);
            let (regime, bound) = if sep == 0.0 {
                (if z < 2.0 * r { Regime::Near } else { Regime::Far }, f64::INFINITY)
            } else if z < 2.0 * r {
                (Regime::Near, z.powi(-(d as i32)) * exp.value((z - r).powi(-2)) / exp.value(sep.powi(-2)))
            } else {
                (Regime::Far, jump_kernel(&entry, d, z / 2.0)? / exp.value(sep.powi(-2)))
            };
            let excess = (difference.abs() - 3.0 * se).max(0.0);
            any_significant |= excess > 0.0;
            let (c, raw) = match regime {
                Regime::Near => (&mut c_near, &mut c_near_raw),
                Regime::Far => (&mut c_far, &mut c_far_raw),
            };
            if bound.is_finite() {
                *c = c.max(excess / bound);
                *raw = raw.max(difference.abs() / bound);
            }
            entries.push(PoissonDiffEntry { pair: k, bin: b, inner, outer, regime, difference, se, bound });
        }
    }
    Ok(PoissonDiffReport {
        key: key.to_string(),
        r,
        pairs: x_pairs.to_vec(),
        entries,
        c_near,
        c_far,
        c_near_raw,
        c_far_raw,
        inconclusive: !any_significant && x_pairs.iter().any(|(x, y)| x != y),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitTimePoint {
    pub r: f64,
    pub mean: f64,
    pub se: f64,
    pub censored: usize,
}

/// `E_0 τ_{B_r}` over `r_list`, with the sweep of `E τ · φ(r⁻²)`.
pub fn mean_exit_time_sweep(
    key: &str,
    d: usize,
    r_list: &[f64],
    opts: &McOptions,
) -> Result<(Vec<ExitTimePoint>, RatioSweep)> {
    let exp = lookup(key)?.exponent;
    let mut pts = Vec::new();
    for (i, &r) in r_list.iter().enumerate() {
        let recs = simulate_exit(&opts.config(key, d, r, i as u64)?)?;
        let mut m = Moments::default();
        for rec in &recs {
            m.push(rec.exit_time);
        }
        pts.push(ExitTimePoint {
            r,
            mean: m.mean(),
            se: m.se(),
            censored: recs.iter().filter(|r| r.status == ExitStatus::Censored).count(),
        });
    }
    let sweep = RatioSweep::new(
        r_list.to_vec(),
        pts.iter().map(|p| p.mean * exp.value(p.r.powi(-2))).collect(),
        "E tau(r) * phi(r^-2)",
    );
    Ok((pts, sweep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vg_shell_ratio_oracle() {
        // (λ/(1+λ))/log(1+λ) with λ = r⁻².
        let l = 1e6f64;
        let want = (l / (1.0 + l)) / l.ln_1p();
        assert!((shell_ratio_bound("vg", 1e-3).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.0724).abs() < 1e-4);
    }

    #[test]
    fn constant_harmonic_function_has_zero_modulus() {
        let opts = McOptions::new(2000, 1);
        let rep = harmonic_modulus_check("vg", 3, 0.1, TargetSet::Exterior, &default_modulus_grid(3, 0.1), &opts)
            .unwrap();
        assert!(rep.values.iter().all(|v| *v == 1.0));
        assert_eq!(rep.modulus, 0.0);
        assert!(!rep.inconclusive);
        assert!(rep.mean_value_holds());
    }

    #[test]
    fn identical_pair_has_zero_difference() {
        let opts = McOptions::new(2000, 2);
        let x = vec![0.001, 0.0, 0.0];
        let rep = poisson_diff_check("vg", 3, 0.2, &[(x.clone(), x)], &[0.2, 0.3, 0.4, 0.8], &opts).unwrap();
        assert!(rep.entries.iter().all(|e| e.difference == 0.0));
        assert!(!rep.inconclusive);
    }

    #[test]
    fn grid_lies_in_quarter_ball() {
        let g = default_modulus_grid(3, 0.2);
        assert_eq!(g.len(), 9);
        assert!(g.iter().all(|x| norm(x) < 0.05));
    }
}
