//! Lévy density `μ` and potential density `u` of a subordinator.
//!
//! Each density is available three ways: closed form (catalog entries that
//! have one), numerical Laplace inversion, and the small-`t` asymptotic
//! formula. The inversions use the transform pairs
//!
//! | transform                  | original              |
//! |----------------------------|-----------------------|
//! | `1/φ(z)`                   | `u(t)`                |
//! | `φ'(z) − γ`                | `t·μ(t)`              |
//! | `(φ(z) − γz − κ)/z`        | `μ(t, ∞)`             |
//! | `(φ'(z) − γ)/z`            | `∫₀^t sμ(s) ds`       |
//! | `(φ'(z) − γ)/z²`           | `∫₀^t (t−s)sμ(s) ds`  |
//!
//! where `γ` is the drift and `κ` the killing rate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{CatalogEntry, LaplaceExponent};
use crate::error::{Error, Result};
use crate::laplace::{Inverter, Transform};
use crate::special::gamma;
use crate::sweep::RatioSweep;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    LevyMu,
    PotentialU,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    ClosedForm,
    Inversion,
    Asymptotic,
}

impl std::str::FromStr for DensityMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" => Ok(Self::ClosedForm),
            "inversion" => Ok(Self::Inversion),
            "asymptotic" => Ok(Self::Asymptotic),
            other => Err(Error::Domain(format!("unknown density method `{other}`"))),
        }
    }
}

impl DensityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::Inversion => "inversion",
            Self::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub kind: DensityKind,
    pub method: DensityMethod,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent_key: String,
}

impl DensityCurve {
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }

    pub fn is_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("t must be positive and finite, got {t}")))
    }
}

fn require_alpha(exp: &LaplaceExponent) -> Result<f64> {
    exp.alpha().ok_or_else(|| Error::Precondition(format!("{}: regular-variation index α unknown", exp.label())))
}

/// Invert a transform built from `exp`, on the contour when `exp` has an
/// analytic continuation and with Gaver–Stehfest otherwise.
fn invert_with(
    exp: &LaplaceExponent,
    t: f64,
    real: impl Fn(f64) -> f64 + Sync,
    complex: impl Fn(Complex64) -> Option<Complex64> + Sync,
) -> Result<f64> {
    check_t(t)?;
    let inverter = Inverter::default();
    if exp.is_analytic() {
        let f = |z: Complex64| complex(z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        inverter.invert(&Transform::Analytic(&f), t)
    } else {
        inverter.invert(&Transform::Real(&real), t)
    }
}

/// Exact `μ(t)` of a catalog entry.
pub fn mu_closed_form(entry: &CatalogEntry, t: f64) -> Result<f64> {
    check_t(t)?;
    let mu = entry
        .closed_form_mu
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("no closed-form Lévy density for {}", entry.key)))?;
    Ok(mu(t))
}

/// Exact `u(t)` of a catalog entry.
pub fn u_closed_form(entry: &CatalogEntry, t: f64) -> Result<f64> {
    check_t(t)?;
    let u = entry
        .closed_form_u
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("no closed-form potential density for {}", entry.key)))?;
    Ok(u(t))
}

/// Small-`t` comparison for `μ`: `t⁻²φ'(1/t)` for `α < 2` and
/// `t⁻²(tφ(1/t) − φ'(1/t))` for `α = 2`.
pub fn mu_asymptotic(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    check_t(t)?;
    let alpha = require_alpha(exp)?;
    let l = 1.0 / t;
    Ok(if alpha < 2.0 {
        t.powi(-2) * exp.derivative(l)
    } else {
        t.powi(-2) * (t * exp.value(l) - exp.derivative(l))
    })
}

/// `μ(t)` by inverting `φ' − γ`, the transform of `t·μ(t)`.
pub fn mu_numeric(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    let g = exp.drift_coefficient();
    let tmu = invert_with(exp, t, |z| exp.derivative(z) - g, |z| exp.derivative_complex(z).map(|d| d - g))?;
    Ok(tmu / t)
}

/// Tail mass `μ(t, ∞)`.
pub fn levy_tail_numeric(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    let g = exp.drift_coefficient();
    let k = exp.kill_rate();
    invert_with(
        exp,
        t,
        |z| (exp.value(z) - g * z - k) / z,
        |z| exp.value_complex(z).map(|v| (v - z * g - k) / z),
    )
}

/// Truncated moments `(∫₀^ε sμ(s) ds, ∫₀^ε s²μ(s) ds)`.
pub fn small_jump_moments(exp: &LaplaceExponent, eps: f64) -> Result<(f64, f64)> {
    let g = exp.drift_coefficient();
    let h1 = invert_with(
        exp,
        eps,
        |z| (exp.derivative(z) - g) / z,
        |z| exp.derivative_complex(z).map(|d| (d - g) / z),
    )?;
    let h2 = invert_with(
        exp,
        eps,
        |z| (exp.derivative(z) - g) / (z * z),
        |z| exp.derivative_complex(z).map(|d| (d - g) / (z * z)),
    )?;
    Ok((h1, (eps * h1 - h2).max(0.0)))
}

/// `u(t)` by inverting `1/φ`.
pub fn u_numeric(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    invert_with(exp, t, |z| 1.0 / exp.value(z), |z| exp.value_complex(z).map(|v| 1.0 / v))
}

/// Small-`t` equivalent of `u`.
///
/// For `α < 2` this is `t⁻²φ'(1/t) / (Γ(1 + α/2) φ(1/t)²)`; Karamata's
/// Tauberian theorem for `1/φ` of index `−α/2` gives the constant
/// `1/Γ(1 + α/2)`, which makes the formula exact for stable subordinators.
/// For `α = 2` it is `1/φ'(1/t)`.
pub fn u_asymptotic(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    check_t(t)?;
    let alpha = require_alpha(exp)?;
    let l = 1.0 / t;
    Ok(if alpha < 2.0 {
        let p = exp.value(l);
        t.powi(-2) * exp.derivative(l) / (gamma(1.0 + alpha / 2.0) * p * p)
    } else {
        1.0 / exp.derivative(l)
    })
}

/// The second `α = 2` form, `1/(tφ(1/t))`.
pub fn u_asymptotic_alt(exp: &LaplaceExponent, t: f64) -> Result<f64> {
    check_t(t)?;
    if require_alpha(exp)? < 2.0 {
        return Err(Error::Precondition("the alternative form applies to α = 2 only".into()));
    }
    Ok(1.0 / (t * exp.value(1.0 / t)))
}

/// `μ` from the closed form when there is one, otherwise by inversion.
pub fn mu_best(entry: &CatalogEntry, t: f64) -> Result<f64> {
    match entry.closed_form_mu {
        Some(_) => mu_closed_form(entry, t),
        None => mu_numeric(&entry.exponent, t),
    }
}

pub fn u_best(entry: &CatalogEntry, t: f64) -> Result<f64> {
    match entry.closed_form_u {
        Some(_) => u_closed_form(entry, t),
        None => u_numeric(&entry.exponent, t),
    }
}

/// Evaluate one density on a grid.
pub fn density_curve(entry: &CatalogEntry, kind: DensityKind, method: DensityMethod, t_grid: &[f64]) -> Result<DensityCurve> {
    let exp = &entry.exponent;
    let eval = |t: f64| -> Result<f64> {
        match (kind, method) {
            (DensityKind::LevyMu, DensityMethod::ClosedForm) => mu_closed_form(entry, t),
            (DensityKind::LevyMu, DensityMethod::Inversion) => mu_numeric(exp, t),
            (DensityKind::LevyMu, DensityMethod::Asymptotic) => mu_asymptotic(exp, t),
            (DensityKind::PotentialU, DensityMethod::ClosedForm) => u_closed_form(entry, t),
            (DensityKind::PotentialU, DensityMethod::Inversion) => u_numeric(exp, t),
            (DensityKind::PotentialU, DensityMethod::Asymptotic) => u_asymptotic(exp, t),
        }
    };
    let values = t_grid.par_iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
    Ok(DensityCurve {
        kind,
        method,
        t_grid: t_grid.to_vec(),
        values,
        exponent_key: entry.key.to_string(),
    })
}

/// `1 − 2/e`: the constant in `μ(t) ≤ t⁻²φ'(1/t)/(1 − 2/e)`.
pub const PROP32_CONSTANT: f64 = 1.0 - 2.0 / std::f64::consts::E;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop32Report {
    pub sweep: RatioSweep,
    /// Largest `μ(t)(1 − 2/e) / (t⁻²φ'(1/t))`; at most 1 when the bound holds.
    pub worst_bound_ratio: f64,
    pub explicit_bound_holds: bool,
}

/// Sweep `μ(t) / (t⁻²φ'(1/t))` and check the explicit upper bound, which
/// holds for any decreasing `μ` because
/// `φ'(λ) ≥ ∫₀^{1/λ} s e^{−λs} μ(s) ds ≥ μ(1/λ) λ⁻²(1 − 2/e)`.
pub fn verify_prop32(entry: &CatalogEntry, t_grid: &[f64]) -> Result<Prop32Report> {
    let exp = &entry.exponent;
    let mut ratios = Vec::with_capacity(t_grid.len());
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let mu = mu_best(entry, t)?;
        let cmp = t.powi(-2) * (exp.derivative(1.0 / t) - exp.drift_coefficient());
        ratios.push(mu / cmp);
        worst = worst.max(mu * PROP32_CONSTANT / cmp);
    }
    Ok(Prop32Report {
        sweep: RatioSweep::new(t_grid.to_vec(), ratios, "t^-2 phi'(1/t)"),
        worst_bound_ratio: worst,
        explicit_bound_holds: worst <= 1.0 + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::lookup;
    use crate::grid::log_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        let vg = lookup("vg").unwrap();
        assert_relative_eq!(mu_closed_form(&vg, 1.0).unwrap(), (-1.0f64).exp());
        let st = lookup("stable(1)").unwrap();
        assert_relative_eq!(mu_closed_form(&st, 1.0).unwrap(), 0.5 / PI.sqrt(), max_relative = 1e-14);
        assert_eq!(mu_closed_form(&lookup("drift").unwrap(), 0.3).unwrap(), 0.0);
        assert!(matches!(mu_closed_form(&lookup("example3").unwrap(), 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn asymptotic_plug_ins() {
        let vg = lookup("vg").unwrap().exponent;
        assert_relative_eq!(mu_asymptotic(&vg, 0.01).unwrap(), 10000.0 / 101.0, max_relative = 1e-12);
        let st = lookup("stable(1)").unwrap();
        for t in [1e-4, 1e-2, 1.0] {
            let r = mu_closed_form(&st, t).unwrap() / mu_asymptotic(&st.exponent, t).unwrap();
            assert_relative_eq!(r, 1.0 / PI.sqrt(), max_relative = 1e-12);
        }
        let custom = LaplaceExponent::custom("c", std::sync::Arc::new(|l: f64| l.sqrt()), None, 0.0, None, true);
        assert!(matches!(mu_asymptotic(&custom, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn inversion_matches_closed_forms() {
        for key in ["vg", "stable(0.5)", "stable(1)", "stable(1.5)"] {
            let e = lookup(key).unwrap();
            for t in [1e-6, 1e-3, 0.1, 1.0] {
                let exact = mu_closed_form(&e, t).unwrap();
                assert_relative_eq!(mu_numeric(&e.exponent, t).unwrap(), exact, max_relative = 1e-9);
            }
            // e^{-10} is small against the contour's roundoff scale.
            let exact = mu_closed_form(&e, 10.0).unwrap();
            assert_relative_eq!(mu_numeric(&e.exponent, 10.0).unwrap(), exact, max_relative = 1e-7);
        }
        let st = lookup("stable(1)").unwrap().exponent;
        assert_relative_eq!(u_numeric(&st, 1.0).unwrap(), 1.0 / PI.sqrt(), max_relative = 1e-9);
        let drift = lookup("drift").unwrap().exponent;
        assert_relative_eq!(u_numeric(&drift, 0.37).unwrap(), 1.0, max_relative = 1e-10);
        assert_eq!(mu_numeric(&drift, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn stable_u_asymptotic_is_exact() {
        let st = lookup("stable(1)").unwrap();
        let v = u_asymptotic(&st.exponent, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / PI.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn vg_tail_is_exponential_integral() {
        // μ(t, ∞) = E₁(t) for μ(s) = e^{−s}/s; oracle by quadrature.
        let vg = lookup("vg").unwrap().exponent;
        for t in [1e-3, 0.5, 2.0] {
            let e1 = crate::laplace::integrate_0_inf(|s| (-(t + s)).exp() / (t + s), 1e-13).value;
            assert_relative_eq!(levy_tail_numeric(&vg, t).unwrap(), e1, max_relative = 1e-8);
        }
    }

    #[test]
    fn small_jump_moments_of_stable() {
        // ∫₀^ε s^k c s^{−1−a} ds = c ε^{k−a}/(k−a)
        let e = lookup("stable(1)").unwrap();
        let c = 0.5 / PI.sqrt();
        let eps = 1e-3f64;
        let (m1, m2) = small_jump_moments(&e.exponent, eps).unwrap();
        assert_relative_eq!(m1, c * eps.powf(0.5) / 0.5, max_relative = 1e-8);
        assert_relative_eq!(m2, c * eps.powf(1.5) / 1.5, max_relative = 1e-7);
    }

    #[test]
    fn prop32_vg_ratio() {
        let vg = lookup("vg").unwrap();
        let grid = log_grid(1e-6, 0.2, 15);
        let rep = verify_prop32(&vg, &grid).unwrap();
        for (t, r) in grid.iter().zip(&rep.sweep.ratios) {
            assert_relative_eq!(*r, (-t).exp() * (1.0 + t), max_relative = 1e-12);
        }
        assert!(rep.explicit_bound_holds);
    }

    #[test]
    fn density_curve_is_ordered_and_labelled() {
        let st = lookup("stable(0.5)").unwrap();
        let c = density_curve(&st, DensityKind::PotentialU, DensityMethod::Inversion, &log_grid(1e-4, 1.0, 9)).unwrap();
        assert!(c.is_positive() && c.is_decreasing());
        assert_eq!(c.exponent_key, "stable(0.5)");
    }
}
