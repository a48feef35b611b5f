//! Jump kernel `j` and Green function `g` of a subordinate Brownian motion,
//! both Gaussian mixtures
//!
//! ```text
//! j(r) = ∫₀^∞ (4πt)^(−d/2) e^(−r²/4t) μ(t) dt
//! g(r) = ∫₀^∞ (4πt)^(−d/2) e^(−r²/4t) u(t) dt      (d ≥ 3)
//! ```
//!
//! together with their ratio sweeps against the small-`r` comparison
//! functions, the Green-difference constant and jump-mass checks.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bernstein::{CatalogEntry, LaplaceExponent};
use crate::densities::{mu_closed_form, mu_numeric, u_closed_form, u_numeric};
use crate::error::{Error, Result};
use crate::laplace::{integrate, SemiInfinite, Tolerance};
use crate::special::gamma;
use crate::sweep::RatioSweep;

/// Mixing times above this are integrated separately and reported as the
/// tail contribution.
pub const TAIL_START: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    JumpJ,
    GreenG,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::JumpJ => "jump_j",
            Self::GreenG => "green_g",
        }
    }
}

/// One kernel value with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    /// Part of `value` coming from mixing times `t > TAIL_START`.
    pub tail: f64,
    pub abs_error_estimate: f64,
    /// Quadrature nodes where the two inversion orders disagreed; the
    /// midpoint of the two estimates is used there. This only happens where
    /// the density is exponentially small.
    pub fallback_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    pub kind: KernelKind,
    pub d: usize,
    pub r_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub tails: Vec<f64>,
    pub exponent_key: String,
}

impl RadialKernel {
    pub fn is_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Clone, Copy)]
enum Density {
    Mu,
    U,
}

fn density_at(entry: &CatalogEntry, which: Density, t: f64) -> Result<f64> {
    match which {
        Density::Mu if entry.closed_form_mu.is_some() => mu_closed_form(entry, t),
        Density::Mu => mu_numeric(&entry.exponent, t),
        Density::U if entry.closed_form_u.is_some() => u_closed_form(entry, t),
        Density::U => u_numeric(&entry.exponent, t),
    }
}

fn has_closed_form(entry: &CatalogEntry, which: Density) -> bool {
    match which {
        Density::Mu => entry.closed_form_mu.is_some(),
        Density::U => entry.closed_form_u.is_some(),
    }
}

/// `(4πt)^(−d/2) e^(−r²/4t)`.
pub fn heat_kernel(d: usize, r: f64, t: f64) -> f64 {
    let e = (-r * r / (4.0 * t)).exp();
    if e == 0.0 {
        0.0
    } else {
        (4.0 * PI * t).powf(-(d as f64) / 2.0) * e
    }
}

fn mixture(entry: &CatalogEntry, which: Density, d: usize, r: f64) -> Result<KernelValue> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let fallbacks = Cell::new(0usize);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let dens = |t: f64| match density_at(entry, which, t) {
        Ok(v) => v,
        Err(Error::InversionDisagreement { coarse, fine, .. }) => {
            fallbacks.set(fallbacks.get() + 1);
            (0.5 * (coarse + fine)).max(0.0)
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let tol = if has_closed_form(entry, which) {
        Tolerance::new(0.0, 1e-10)
    } else {
        Tolerance::new(0.0, 1e-8)
    };
    let splits = [r * r / 4.0, TAIL_START];
    let head = SemiInfinite::new(tol)
        .with_splits(&splits)
        .integrate(|t| if t <= TAIL_START { heat_kernel(d, r, t) * dens(t) } else { 0.0 });
    // The tail only needs accuracy relative to the whole integral.
    let tail = SemiInfinite::new(Tolerance::new(tol.rel * head.value.abs(), tol.rel))
        .with_splits(&splits)
        .integrate(|t| if t > TAIL_START { heat_kernel(d, r, t) * dens(t) } else { 0.0 });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let value = head.value + tail.value;
    let abs_error_estimate = head.abs_error_estimate + tail.abs_error_estimate;
    if !(head.converged && tail.converged) && abs_error_estimate > 1e-6 * value.abs() {
        return Err(Error::Numerical(format!(
            "mixture quadrature at r={r} did not converge: {value} ± {abs_error_estimate}"
        )));
    }
    Ok(KernelValue { value, tail: tail.value, abs_error_estimate, fallback_nodes: fallbacks.get() })
}

pub fn jump_kernel_detailed(entry: &CatalogEntry, d: usize, r: f64) -> Result<KernelValue> {
    mixture(entry, Density::Mu, d, r)
}

/// `j(r)` in dimension `d`.
pub fn jump_kernel(entry: &CatalogEntry, d: usize, r: f64) -> Result<f64> {
    jump_kernel_detailed(entry, d, r).map(|k| k.value)
}

pub fn green_kernel_detailed(entry: &CatalogEntry, d: usize, r: f64) -> Result<KernelValue> {
    if d < 3 {
        return Err(Error::Precondition(format!("the Green function needs d ≥ 3 (transience), got d={d}")));
    }
    mixture(entry, Density::U, d, r)
}

/// `g(r)` in dimension `d ≥ 3`.
pub fn green_kernel(entry: &CatalogEntry, d: usize, r: f64) -> Result<f64> {
    green_kernel_detailed(entry, d, r).map(|k| k.value)
}

/// Evaluate `j` or `g` on a radial grid, grid points in parallel.
pub fn radial_kernel(entry: &CatalogEntry, kind: KernelKind, d: usize, r_grid: &[f64]) -> Result<RadialKernel> {
    let vals = r_grid
        .par_iter()
        .map(|&r| match kind {
            KernelKind::JumpJ => jump_kernel_detailed(entry, d, r),
            KernelKind::GreenG => green_kernel_detailed(entry, d, r),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialKernel {
        kind,
        d,
        r_grid: r_grid.to_vec(),
        values: vals.iter().map(|k| k.value).collect(),
        tails: vals.iter().map(|k| k.tail).collect(),
        exponent_key: entry.key.to_string(),
    })
}

fn require_alpha(exp: &LaplaceExponent) -> Result<f64> {
    exp.alpha().ok_or_else(|| Error::Precondition(format!("{}: regular-variation index α unknown", exp.label())))
}

/// Comparison function for `j`: `r^(−d−2) φ'(r⁻²)` when `α < 2`, and
/// `r^(−d−2) (r²φ(r⁻²) − φ'(r⁻²))` when `α = 2`.
pub fn thm41_comparison(exp: &LaplaceExponent, d: usize, r: f64) -> Result<f64> {
    let alpha = require_alpha(exp)?;
    let l = r.powi(-2);
    let p = r.powi(-(d as i32) - 2);
    Ok(if alpha < 2.0 {
        p * exp.derivative(l)
    } else {
        p * (r * r * exp.value(l) - exp.derivative(l))
    })
}

/// Comparison function for `g`: `r^(−d−2) φ'(r⁻²)/φ(r⁻²)²` when `α < 2`,
/// and `r^(−d+2)/φ'(r⁻²)` when `α = 2`.
pub fn thm42_comparison(exp: &LaplaceExponent, d: usize, r: f64) -> Result<f64> {
    let alpha = require_alpha(exp)?;
    let l = r.powi(-2);
    Ok(if alpha < 2.0 {
        let v = exp.value(l);
        r.powi(-(d as i32) - 2) * exp.derivative(l) / (v * v)
    } else {
        r.powi(2 - d as i32) / exp.derivative(l)
    })
}

/// The second `α = 2` comparison for `g`: `r^(−d)/φ(r⁻²)`.
pub fn thm42_comparison_alt(exp: &LaplaceExponent, d: usize, r: f64) -> Result<f64> {
    Ok(r.powi(-(d as i32)) / exp.value(r.powi(-2)))
}

/// `j(r)/comparison(r)` over `r_grid`.
pub fn sweep_thm41(entry: &CatalogEntry, d: usize, r_grid: &[f64]) -> Result<RatioSweep> {
    let exp = &entry.exponent;
    let label = if require_alpha(exp)? < 2.0 {
        "r^(-d-2) phi'(r^-2)"
    } else {
        "r^(-d-2) (r^2 phi(r^-2) - phi'(r^-2))"
    };
    let j = radial_kernel(entry, KernelKind::JumpJ, d, r_grid)?;
    let ratios = r_grid
        .iter()
        .zip(&j.values)
        .map(|(&r, &v)| Ok(v / thm41_comparison(exp, d, r)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioSweep::new(r_grid.to_vec(), ratios, label))
}

/// `g(r)/comparison(r)` over `r_grid`; for `α = 2` both comparison forms
/// are swept and returned in that order.
pub fn sweep_thm42(entry: &CatalogEntry, d: usize, r_grid: &[f64]) -> Result<Vec<RatioSweep>> {
    let exp = &entry.exponent;
    let alpha = require_alpha(exp)?;
    let g = radial_kernel(entry, KernelKind::GreenG, d, r_grid)?;
    let ratios_for = |cmp: &dyn Fn(f64) -> Result<f64>| {
        r_grid.iter().zip(&g.values).map(|(&r, &v)| Ok(v / cmp(r)?)).collect::<Result<Vec<_>>>()
    };
    if alpha < 2.0 {
        let ratios = ratios_for(&|r| thm42_comparison(exp, d, r))?;
        Ok(vec![RatioSweep::new(r_grid.to_vec(), ratios, "r^(-d-2) phi'(r^-2) / phi(r^-2)^2")])
    } else {
        let a = ratios_for(&|r| thm42_comparison(exp, d, r))?;
        let b = ratios_for(&|r| thm42_comparison_alt(exp, d, r))?;
        Ok(vec![
            RatioSweep::new(r_grid.to_vec(), a, "r^(-d+2) / phi'(r^-2)"),
            RatioSweep::new(r_grid.to_vec(), b, "r^(-d) / phi(r^-2)"),
        ])
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenDiffReport {
    pub r: f64,
    pub g_r: f64,
    /// `max |g(|x|) − g(|y|)| / (g(r) (1 ∧ |x−y|/r))` over the pairs.
    pub constant: f64,
    pub n_pairs: usize,
}

/// Empirical constant in `|G(x) − G(y)| ≤ c g(r) (1 ∧ |x−y|/r)` for
/// `|x|, |y| ≥ r`.
pub fn check_green_diff(entry: &CatalogEntry, d: usize, r: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<GreenDiffReport> {
    for (x, y) in pairs {
        if x.len() != d || y.len() != d {
            return Err(Error::Domain(format!("points must have dimension {d}")));
        }
        if norm(x) < r * (1.0 - 1e-12) || norm(y) < r * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!("pair points must satisfy |x|, |y| ≥ r = {r}")));
        }
    }
    let g_r = green_kernel(entry, d, r)?;
    let ratios = pairs
        .par_iter()
        .map(|(x, y)| {
            let sep = distance(x, y);
            if sep == 0.0 {
                return Ok(0.0);
            }
            let diff = (green_kernel(entry, d, norm(x))? - green_kernel(entry, d, norm(y))?).abs();
            Ok(diff / (g_r * (sep / r).min(1.0)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GreenDiffReport { r, g_r, constant: ratios.iter().cloned().fold(0.0, f64::max), n_pairs: pairs.len() })
}

/// Pairs with independent uniform directions and radii uniform in `[r, 4r]`.
pub fn random_admissible_pairs(d: usize, r: f64, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&dir);
        let radius = r * (1.0 + 3.0 * rng.random::<f64>());
        dir.into_iter().map(|v| v / n * radius).collect::<Vec<f64>>()
    };
    (0..n).map(|_| (point(&mut rng), point(&mut rng))).collect()
}

/// Surface measure of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Fraction of the sphere `|y| = s` lying inside `B_ρ(z)`, `|z| = c`.
pub fn cap_fraction(d: usize, s: f64, c: f64, rho: f64) -> f64 {
    if s <= rho - c {
        return 1.0;
    }
    if s <= c - rho || s >= c + rho {
        return 0.0;
    }
    let cos = ((s * s + c * c - rho * rho) / (2.0 * s * c)).clamp(-1.0, 1.0);
    let sin2 = 1.0 - cos * cos;
    let half = 0.5 * beta_reg((d as f64 - 1.0) / 2.0, 0.5, sin2);
    if cos >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// A radial function tabulated on a log grid, interpolated linearly in
/// `(log r, log f)` and extrapolated with the end slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    pub log_r: Vec<f64>,
    pub log_f: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: &[f64], f: &[f64]) -> Result<Self> {
        if r.len() < 2 || r.len() != f.len() || f.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("a radial table needs ≥ 2 positive samples".into()));
        }
        Ok(Self { log_r: r.iter().map(|v| v.ln()).collect(), log_f: f.iter().map(|v| v.ln()).collect() })
    }

    pub fn from_kernel(k: &RadialKernel) -> Result<Self> {
        Self::new(&k.r_grid, &k.values)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = r.ln();
        let n = self.log_r.len();
        let i = match self.log_r.partition_point(|v| *v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let w = (x - self.log_r[i]) / (self.log_r[i + 1] - self.log_r[i]);
        (self.log_f[i] + w * (self.log_f[i + 1] - self.log_f[i])).exp()
    }
}

/// `∫_{B_ρ(z)} j(|y|) dy` with `|z| = c > ρ`, from a tabulated `j`.
pub fn ball_jump_mass(j: &RadialTable, d: usize, c: f64, rho: f64) -> Result<f64> {
    if !(c > rho && rho > 0.0) {
        return Err(Error::Precondition(format!("need |z| > ρ > 0; got |z|={c}, ρ={rho}")));
    }
    let area = sphere_area(d);
    let res = integrate(
        |s| area * s.powi(d as i32 - 1) * cap_fraction(d, s, c, rho) * j.eval(s),
        c - rho,
        c + rho,
        Tolerance::new(0.0, 1e-9),
        500,
    );
    Ok(res.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellMassReport {
    pub z_norms: Vec<f64>,
    pub rhos: Vec<f64>,
    pub masses: Vec<f64>,
    /// `mass / φ((|z| − ρ)⁻²)`.
    pub ratios: Vec<f64>,
    pub constant: f64,
}

/// Tabulate `j` on a grid wide enough for balls inside `[r_lo, r_hi]`.
pub fn jump_table(entry: &CatalogEntry, d: usize, r_lo: f64, r_hi: f64, n: usize) -> Result<RadialTable> {
    let grid = crate::grid::log_grid(r_lo, r_hi, n);
    let k = radial_kernel(entry, KernelKind::JumpJ, d, &grid)?;
    RadialTable::from_kernel(&k)
}

/// `∫_{B_ρ(z)} j(|y|) dy` against `φ((|z| − ρ)⁻²)` on a mesh of `(|z|, ρ)`.
pub fn shell_mass_bound(entry: &CatalogEntry, d: usize, mesh: &[(f64, f64)]) -> Result<ShellMassReport> {
    let exp = &entry.exponent;
    // Pure drift has no jumps.
    if entry.closed_form_mu.is_some() && mu_closed_form(entry, 1.0)? == 0.0 {
        let n = mesh.len();
        return Ok(ShellMassReport {
            z_norms: mesh.iter().map(|m| m.0).collect(),
            rhos: mesh.iter().map(|m| m.1).collect(),
            masses: vec![0.0; n],
            ratios: vec![0.0; n],
            constant: 0.0,
        });
    }
    let lo = mesh.iter().map(|(c, rho)| c - rho).fold(f64::MAX, f64::min);
    let hi = mesh.iter().map(|(c, rho)| c + rho).fold(0.0, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Precondition("balls must stay away from the origin".into()));
    }
    let table = jump_table(entry, d, lo * 0.99, hi * 1.01, 61)?;
    let mut masses = Vec::new();
    let mut ratios = Vec::new();
    for &(c, rho) in mesh {
        let m = ball_jump_mass(&table, d, c, rho)?;
        masses.push(m);
        ratios.push(m / exp.value((c - rho).powi(-2)));
    }
    Ok(ShellMassReport {
        z_norms: mesh.iter().map(|m| m.0).collect(),
        rhos: mesh.iter().map(|m| m.1).collect(),
        masses,
        constant: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
    })
}

/// `∫_{|x| ≥ R} j(|x|) dx`, which equals `∫ μ(t) P(|B_{2t}| ≥ R) dt`.
///
/// Computed as a mixture over `t` of the Gaussian exterior mass
/// `P(χ²_d ≥ R²/2t)`, so no nested quadrature is needed.
pub fn jump_mass_outside(entry: &CatalogEntry, d: usize, radius: f64) -> Result<f64> {
    use statrs::function::gamma::gamma_ur;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let res = SemiInfinite::new(Tolerance::new(0.0, 1e-8)).with_splits(&[radius * radius / 4.0]).integrate(|t| {
        let x = radius * radius / (4.0 * t);
        let tail = if x > 700.0 { 0.0 } else { gamma_ur(d as f64 / 2.0, x) };
        if tail == 0.0 {
            return 0.0;
        }
        match density_at(entry, Density::Mu, t) {
            Ok(m) => m * tail,
            Err(Error::InversionDisagreement { coarse, fine, .. }) => (0.5 * (coarse + fine)).max(0.0) * tail,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(res.value)
}
