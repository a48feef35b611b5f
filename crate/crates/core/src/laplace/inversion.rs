//! Numerical inverse Laplace transform.
//!
//! Two methods are provided. The fixed Talbot contour needs the transform on
//! the complex plane and is accurate to near machine precision for smooth
//! completely monotone targets at any `t`. Gaver–Stehfest only needs real
//! samples but loses digits quickly with order in double precision, so it
//! is used as the fallback for real-only transforms and as a cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMethod {
    /// Gaver–Stehfest.
    SeriesAcceleration,
    /// Fixed Talbot contour.
    Contour,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionProfile {
    pub method: InversionMethod,
    pub order: usize,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// A transform to invert, either real-only or analytic in the right
/// half-plane.
pub enum Transform<'a> {
    Real(&'a (dyn Fn(f64) -> f64 + Sync)),
    Analytic(&'a (dyn Fn(Complex64) -> Complex64 + Sync)),
}

impl Transform<'_> {
    fn eval_real(&self, s: f64) -> f64 {
        match self {
            Transform::Real(f) => f(s),
            Transform::Analytic(f) => f(Complex64::new(s, 0.0)).re,
        }
    }
}

/// Stehfest weights `V_k`, `k = 1..=n`; `n` must be even.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "Stehfest order must be even");
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

/// Gaver–Stehfest approximation of order `n` at `t`.
pub fn stehfest(f: impl Fn(f64) -> f64, t: f64, n: usize) -> f64 {
    let a = LN_2 / t;
    stehfest_weights(n)
        .iter()
        .enumerate()
        .map(|(i, v)| v * f((i + 1) as f64 * a))
        .sum::<f64>()
        * a
}

/// Fixed Talbot approximation with `m` contour nodes at `t`.
pub fn talbot(f: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (r * t).exp() * f(Complex64::new(r, 0.0)).re;
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        acc += ((s * t).exp() * f(s) * Complex64::new(1.0, sigma)).re;
    }
    acc * r / m as f64
}

/// Inversion with an order-to-order agreement check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inverter {
    pub talbot_orders: (usize, usize),
    pub stehfest_orders: (usize, usize),
    /// Relative disagreement above which the result is rejected.
    pub talbot_tol: f64,
    pub stehfest_tol: f64,
}

impl Default for Inverter {
    fn default() -> Self {
        Self { talbot_orders: (20, 28), stehfest_orders: (12, 14), talbot_tol: 1e-7, stehfest_tol: 1e-4 }
    }
}

impl Inverter {
    pub fn method_for(transform: &Transform<'_>) -> InversionMethod {
        match transform {
            Transform::Real(_) => InversionMethod::SeriesAcceleration,
            Transform::Analytic(_) => InversionMethod::Contour,
        }
    }

    pub fn invert(&self, transform: &Transform<'_>, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("inversion point t={t} must be positive")));
        }
        let (coarse, fine, tol) = match transform {
            Transform::Analytic(f) => {
                let (m1, m2) = self.talbot_orders;
                (talbot(f, t, m1), talbot(f, t, m2), self.talbot_tol)
            }
            Transform::Real(_) => {
                let (n1, n2) = self.stehfest_orders;
                let g = |s: f64| transform.eval_real(s);
                (stehfest(g, t, n1), stehfest(g, t, n2), self.stehfest_tol)
            }
        };
        if !fine.is_finite() || (fine - coarse).abs() > tol * fine.abs().max(coarse.abs()).max(f64::MIN_POSITIVE) {
            return Err(Error::InversionDisagreement { t, coarse, fine });
        }
        Ok(fine)
    }

    pub fn profile(&self, transform: &Transform<'_>, t_grid: &[f64]) -> Result<InversionProfile> {
        if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|t| *t <= 0.0) {
            return Err(Error::Domain("t grid must be positive and strictly increasing".into()));
        }
        let values = t_grid.iter().map(|t| self.invert(transform, *t)).collect::<Result<Vec<_>>>()?;
        let method = Self::method_for(transform);
        let order = match method {
            InversionMethod::Contour => self.talbot_orders.1,
            InversionMethod::SeriesAcceleration => self.stehfest_orders.1,
        };
        Ok(InversionProfile { method, order, t_grid: t_grid.to_vec(), values })
    }
}

/// Invert `transform` at `t` with the default [`Inverter`].
pub fn invert_laplace(transform: &Transform<'_>, t: f64) -> Result<f64> {
    Inverter::default().invert(transform, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_is_unit_density() {
        let f = |s: Complex64| 1.0 / s;
        for t in [1e-6, 1e-3, 1.0, 10.0, 1e3] {
            let v = invert_laplace(&Transform::Analytic(&f), t).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "t={t}: {v}");
        }
    }

    #[test]
    fn exponential_pair() {
        let f = |s: Complex64| 1.0 / (s + 1.0);
        let v = invert_laplace(&Transform::Analytic(&f), 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-7);
        assert!((v - 0.367_879_4).abs() < 1e-7);
    }

    #[test]
    fn inverse_square_root() {
        let f = |s: Complex64| s.powf(-0.5);
        let v = invert_laplace(&Transform::Analytic(&f), 0.25).unwrap();
        assert!((v - 2.0 / PI.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn stehfest_fallback() {
        let f = |s: f64| 1.0 / (s + 1.0);
        let v = invert_laplace(&Transform::Real(&f), 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-5, "{v}");
    }

    #[test]
    fn stehfest_weights_sum_to_zero() {
        // A constant original forces the weights to cancel.
        let w = stehfest_weights(12);
        assert!(w.iter().sum::<f64>().abs() < 1e-6);
        let v = stehfest(|s| 1.0 / s, 2.0, 12);
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn oscillating_original_is_rejected() {
        // sin(5t) has transform 5/(s²+25); Stehfest collapses on it.
        let f = |s: f64| 5.0 / (s * s + 25.0);
        let err = invert_laplace(&Transform::Real(&f), 3.0).unwrap_err();
        assert!(matches!(err, Error::InversionDisagreement { .. }));
    }

    #[test]
    fn profile_rejects_bad_grid() {
        let f = |s: Complex64| 1.0 / s;
        assert!(Inverter::default().profile(&Transform::Analytic(&f), &[1.0, 0.5]).is_err());
        let p = Inverter::default().profile(&Transform::Analytic(&f), &[0.1, 1.0]).unwrap();
        assert_eq!(p.method, InversionMethod::Contour);
        assert_eq!(p.values.len(), 2);
    }
}
