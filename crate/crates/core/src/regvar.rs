//! Regular variation at infinity: index fits, de Haan limits and Potter
//! bounds, all on finite probe meshes.
//!
//! Limits at infinity cannot be observed, so every check reports the
//! deviation at the largest probed scale together with its trend over the
//! preceding decades.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::log_grid;
use crate::laplace::{integrate, Tolerance};
use crate::sweep::least_squares_slope;

pub const DEFAULT_X_POINTS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// Fitted index `ρ` of `f(λx)/f(λ) ≈ x^ρ` at one base point `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RVFit {
    pub index: f64,
    /// The probe points `x`, strictly increasing.
    pub grid: Vec<f64>,
    /// Base point `λ` of the fit.
    pub lambda: f64,
    /// `(x, log f(λx) − log f(λ))`.
    pub log_ratio_samples: Vec<(f64, f64)>,
    /// `max |log f(λx) − log f(λ) − ρ log x|` over the window.
    pub residual: f64,
    /// Fit window `[min x, max x]`.
    pub window: (f64, f64),
}

/// Least-squares index of `f` at `λ_max` from the probes `x_points`.
///
/// The fit is a line through the origin in `(log x, log f(λx) − log f(λ))`,
/// so pure powers are reproduced exactly.
pub fn estimate_rv_index(f: impl Fn(f64) -> f64, lambda_max: f64, x_points: &[f64]) -> Result<RVFit> {
    if !(lambda_max > 0.0) {
        return Err(Error::Domain(format!("λ_max must be positive, got {lambda_max}")));
    }
    let mut grid = x_points.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() || grid.iter().any(|x| *x <= 0.0 || *x == 1.0) {
        return Err(Error::Domain("probe points must be positive and different from 1".into()));
    }
    let log_f = |l: f64| {
        let v = f(l);
        if v > 0.0 && v.is_finite() {
            Ok(v.ln())
        } else {
            Err(Error::Domain(format!("f({l}) = {v} is not positive")))
        }
    };
    let base = log_f(lambda_max)?;
    let samples = grid
        .iter()
        .map(|&x| Ok((x, log_f(lambda_max * x)? - base)))
        .collect::<Result<Vec<_>>>()?;
    let sxy: f64 = samples.iter().map(|(x, y)| x.ln() * y).sum();
    let sxx: f64 = samples.iter().map(|(x, _)| x.ln().powi(2)).sum();
    let index = sxy / sxx;
    let residual = samples.iter().map(|(x, y)| (y - index * x.ln()).abs()).fold(0.0, f64::max);
    Ok(RVFit {
        index,
        window: (grid[0], grid[grid.len() - 1]),
        grid,
        lambda: lambda_max,
        log_ratio_samples: samples,
        residual,
    })
}

/// Index fits at one base point per decade, over `decades` decades ending
/// at `λ_max`, to expose pre-asymptotic drift.
pub fn index_sweep(f: impl Fn(f64) -> f64, lambda_max: f64, x_points: &[f64], decades: usize) -> Result<Vec<RVFit>> {
    (0..=decades)
        .rev()
        .map(|k| estimate_rv_index(&f, lambda_max / 10f64.powi(k as i32), x_points))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeHaanOptions {
    /// Lower limit `λ₀` of `L(λ) = ∫_{λ₀}^λ ℓ(t)/t dt`.
    pub lower: f64,
    pub x_points: Vec<f64>,
    pub decades: usize,
}

impl Default for DeHaanOptions {
    fn default() -> Self {
        Self { lower: 1.0, x_points: DEFAULT_X_POINTS.to_vec(), decades: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeHaanReport {
    pub lambdas: Vec<f64>,
    /// `L(λ)/ℓ(λ)` at each probed `λ`.
    pub l_over_ell: Vec<f64>,
    /// `max_x |(L(λx) − L(λ))/ℓ(λ) − log x|` at each probed `λ`.
    pub deviations: Vec<f64>,
    pub x_points: Vec<f64>,
    pub l_over_ell_increasing: bool,
    pub deviation_shrinking: bool,
}

impl DeHaanReport {
    pub fn final_deviation(&self) -> f64 {
        *self.deviations.last().unwrap()
    }
}

/// de Haan check with the default options.
pub fn check_de_haan(ell: impl Fn(f64) -> f64, lambda_max: f64) -> Result<DeHaanReport> {
    check_de_haan_with(ell, lambda_max, &DeHaanOptions::default())
}

pub fn check_de_haan_with(ell: impl Fn(f64) -> f64, lambda_max: f64, opts: &DeHaanOptions) -> Result<DeHaanReport> {
    let lo = opts.lower.ln();
    // L(λ) = ∫ ℓ(e^s) ds over [log λ₀, log λ].
    let big_l = |lambda: f64| -> Result<f64> {
        let res = integrate(|s| ell(s.exp()), lo, lambda.ln(), Tolerance::new(1e-13, 1e-12), 500);
        if res.converged {
            Ok(res.value)
        } else {
            Err(Error::Numerical(format!(
                "L({lambda}) did not converge: {} ± {}",
                res.value, res.abs_error_estimate
            )))
        }
    };
    let lambdas = log_grid(lambda_max / 10f64.powi(opts.decades as i32), lambda_max, opts.decades + 1);
    if lambdas[0] <= opts.lower {
        return Err(Error::Domain(format!("λ_max={lambda_max} leaves no decades above the lower limit {}", opts.lower)));
    }
    let mut l_over_ell = Vec::new();
    let mut deviations = Vec::new();
    for &lambda in &lambdas {
        let l0 = big_l(lambda)?;
        let e = ell(lambda);
        if !(e > 0.0) {
            return Err(Error::Domain(format!("ℓ({lambda}) = {e} is not positive")));
        }
        l_over_ell.push(l0 / e);
        let mut dev: f64 = 0.0;
        for &x in &opts.x_points {
            let incr = big_l(lambda * x)? - l0;
            dev = dev.max((incr / e - x.ln()).abs());
        }
        deviations.push(dev);
    }
    let l_over_ell_increasing = l_over_ell.windows(2).all(|w| w[1] > w[0]);
    let deviation_shrinking = deviations.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(DeHaanReport {
        lambdas,
        l_over_ell,
        deviations,
        x_points: opts.x_points.clone(),
        l_over_ell_increasing,
        deviation_shrinking,
    })
}

/// Potter constant: the smallest `A` on the probe mesh with
/// `f(λ/t)/f(λ) ≤ A·t^δ′`, `δ′ = −ρ − δ`, for `λ ≥ λ_min`, `t ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotterFit {
    pub constant: f64,
    /// `ρ` fitted over the mesh's `λ` range.
    pub index: f64,
    pub delta: f64,
    pub exponent: f64,
    pub lambda_range: (f64, f64),
    pub t_min: f64,
    /// Constant on the half mesh (`t ≥ √t_min`), for the growth check.
    pub constant_half_mesh: f64,
}

/// Ratio by which the constant may grow between the half and full mesh.
const POTTER_GROWTH: f64 = 10.0;

pub fn fit_potter_bound(f: impl Fn(f64) -> f64, delta: f64, lambda_min: f64) -> Result<PotterFit> {
    if !(delta > 0.0) || !(lambda_min > 0.0) {
        return Err(Error::Domain(format!("need δ>0, λ_min>0; got δ={delta}, λ_min={lambda_min}")));
    }
    let lambdas = log_grid(lambda_min, lambda_min * 1e8, 81);
    let logs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let log_f: Vec<f64> = lambdas.iter().map(|&l| f(l).ln()).collect();
    if log_f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("f must be positive on the probe mesh".into()));
    }
    let index = least_squares_slope(&logs, &log_f);
    let exponent = -index - delta;

    let t_min = 1e-8;
    let ts = log_grid(t_min, 1.0, 81);
    let constant_over = |t_floor: f64| {
        let mut a: f64 = 0.0;
        for (&lambda, &lf) in lambdas.iter().zip(&log_f) {
            for &t in ts.iter().filter(|t| **t >= t_floor) {
                let ratio = (f(lambda / t).ln() - lf).exp();
                a = a.max(ratio / t.powf(exponent));
            }
        }
        a
    };
    let constant = constant_over(t_min);
    let constant_half_mesh = constant_over(t_min.sqrt());
    if !constant.is_finite() || constant > POTTER_GROWTH * constant_half_mesh {
        return Err(Error::Numerical(format!(
            "Potter ratio grows without bound on the mesh ({constant_half_mesh} → {constant}); f does not look regularly varying"
        )));
    }
    Ok(PotterFit {
        constant,
        index,
        delta,
        exponent,
        lambda_range: (lambdas[0], lambdas[lambdas.len() - 1]),
        t_min,
        constant_half_mesh,
    })
}
