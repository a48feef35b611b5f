//! The integral `I(r) = ∫₀^∞ t^(-p) e^(-ar/t) w(t) dt` and its small-`r`
//! comparison `a^(1-p-b) r^(1-p) w(r)` for `w(t) ≍ t^(-b) ℓ(t)` near `0`.

use super::quadrature::{SemiInfinite, Tolerance};
use crate::error::{Error, Result};
use crate::sweep::RatioSweep;

/// `∫₀^∞ t^(-p) e^(-ar/t) w(t) dt`, split at the kernel scale `t = ar`.
pub fn appendix_integral(w: impl Fn(f64) -> f64, p: f64, a: f64, r: f64, tol: f64) -> Result<f64> {
    if !(p > 1.0) || !(a > 0.0) || !(r > 0.0) {
        return Err(Error::Domain(format!("need p>1, a>0, r>0; got p={p}, a={a}, r={r}")));
    }
    let scale = a * r;
    let res = SemiInfinite::new(Tolerance::new(0.0, tol))
        .with_splits(&[scale])
        .integrate(|t| {
            let e = (-scale / t).exp();
            if e == 0.0 {
                0.0
            } else {
                t.powf(-p) * e * w(t)
            }
        });
    if !res.converged {
        return Err(Error::Numerical(format!(
            "quadrature did not converge at r={r}: value {} ± {} after {} subdivisions",
            res.value, res.abs_error_estimate, res.subdivisions
        )));
    }
    Ok(res.value)
}

/// Ratio sweep of `I(r) / (a^(1-p-b) r^(1-p) w(r))` over `r_grid`.
///
/// A grid point whose quadrature fails gets a NaN ratio, which marks the
/// whole sweep as failed.
pub fn check_lemma_a1_bounds(w: impl Fn(f64) -> f64, p: f64, a: f64, b: f64, r_grid: &[f64]) -> RatioSweep {
    let ratios = r_grid
        .iter()
        .map(|&r| match appendix_integral(&w, p, a, r, 1e-10) {
            Ok(i) => i / (a.powf(1.0 - p - b) * r.powf(1.0 - p) * w(r)),
            Err(_) => f64::NAN,
        })
        .collect();
    RatioSweep::new(r_grid.to_vec(), ratios, format!("a^(1-p-b) r^(1-p) w(r), p={p}, a={a}, b={b}"))
}
