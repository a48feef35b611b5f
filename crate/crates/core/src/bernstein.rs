//! Laplace exponents of subordinators.
//!
//! A [`LaplaceExponent`] is a Bernstein function `φ` together with the
//! metadata the rest of the crate needs: drift, killing rate, the
//! regular-variation index `α` of `φ'` at infinity, and whether `φ` is a
//! complete Bernstein function. The built-in forms all carry closed-form
//! derivatives and an analytic continuation to the cut plane
//! `C \ (-∞, 0]`, which is what the contour inversion in
//! [`crate::laplace`] consumes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::gamma;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Point used to read off `φ(0+)` for exponents without an analytic limit.
const ZERO_PROBE: f64 = 1e-12;

/// `log(1 + w)` without cancellation for small `|w|` (Kahan's trick).
fn ln_1p(w: Complex64) -> Complex64 {
    let u = w + 1.0;
    if u == Complex64::new(1.0, 0.0) {
        w
    } else {
        u.ln() * w / (u - 1.0)
    }
}

#[derive(Clone)]
enum Form {
    /// `λ^a`, `0 < a ≤ 1`.
    Power(f64),
    /// `log(1 + λ^a)`, `0 < a ≤ 1`.
    LogPower(f64),
    /// `λ^a log(1 + λ)^(1 - a)`, `0 < a < 1`.
    PowerLog(f64),
    Compose(Arc<LaplaceExponent>, Arc<LaplaceExponent>),
    Conjugate(Arc<LaplaceExponent>),
    Custom { phi: RealFn, prime: Option<RealFn> },
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Power(a) => write!(f, "Power({a})"),
            Form::LogPower(a) => write!(f, "LogPower({a})"),
            Form::PowerLog(a) => write!(f, "PowerLog({a})"),
            Form::Compose(o, i) => write!(f, "Compose({:?}, {:?})", o.form, i.form),
            Form::Conjugate(p) => write!(f, "Conjugate({:?})", p.form),
            Form::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Form {
    fn value(&self, lambda: f64) -> f64 {
        match self {
            Form::Power(a) => lambda.powf(*a),
            Form::LogPower(a) => lambda.powf(*a).ln_1p(),
            Form::PowerLog(a) => lambda.powf(*a) * lambda.ln_1p().powf(1.0 - a),
            Form::Compose(outer, inner) => outer.value(inner.value(lambda)),
            Form::Conjugate(p) => lambda / p.value(lambda),
            Form::Custom { phi, .. } => phi(lambda),
        }
    }

    fn derivative(&self, lambda: f64) -> Option<f64> {
        Some(match self {
            Form::Power(a) => a * lambda.powf(a - 1.0),
            Form::LogPower(a) => {
                let p = lambda.powf(*a);
                a * p / (lambda * (1.0 + p))
            }
            Form::PowerLog(a) => {
                let l = lambda.ln_1p();
                let p = lambda.powf(*a);
                a * p / lambda * l.powf(1.0 - a) + (1.0 - a) * p * l.powf(-a) / (1.0 + lambda)
            }
            Form::Compose(outer, inner) => {
                outer.derivative(inner.value(lambda)) * inner.derivative(lambda)
            }
            Form::Conjugate(p) => {
                let v = p.value(lambda);
                (v - lambda * p.derivative(lambda)) / (v * v)
            }
            Form::Custom { prime, .. } => return prime.as_ref().map(|d| d(lambda)),
        })
    }

    fn value_complex(&self, z: Complex64) -> Option<Complex64> {
        Some(match self {
            Form::Power(a) => z.powf(*a),
            Form::LogPower(a) => ln_1p(z.powf(*a)),
            Form::PowerLog(a) => z.powf(*a) * ln_1p(z).powf(1.0 - a),
            Form::Compose(outer, inner) => outer.form.value_complex(inner.form.value_complex(z)?)?,
            Form::Conjugate(p) => z / p.form.value_complex(z)?,
            Form::Custom { .. } => return None,
        })
    }

    fn derivative_complex(&self, z: Complex64) -> Option<Complex64> {
        Some(match self {
            Form::Power(a) => z.powf(a - 1.0) * *a,
            Form::LogPower(a) => {
                let p = z.powf(*a);
                p * *a / (z * (p + 1.0))
            }
            Form::PowerLog(a) => {
                let l = ln_1p(z);
                let p = z.powf(*a);
                p * *a / z * l.powf(1.0 - a) + p * (1.0 - a) * l.powf(-a) / (z + 1.0)
            }
            Form::Compose(outer, inner) => {
                outer.form.derivative_complex(inner.form.value_complex(z)?)?
                    * inner.form.derivative_complex(z)?
            }
            Form::Conjugate(p) => {
                let v = p.form.value_complex(z)?;
                (v - z * p.form.derivative_complex(z)?) / (v * v)
            }
            Form::Custom { .. } => return None,
        })
    }

    /// `φ(0+)`.
    fn value_at_zero(&self) -> f64 {
        match self {
            Form::Power(_) | Form::LogPower(_) | Form::PowerLog(_) => 0.0,
            Form::Compose(outer, inner) => {
                let i0 = inner.form.value_at_zero();
                if i0 > 0.0 {
                    outer.value(i0)
                } else {
                    outer.form.value_at_zero()
                }
            }
            Form::Conjugate(p) => {
                if p.form.value_at_zero() > 0.0 {
                    0.0
                } else {
                    match p.form.slope_at_zero() {
                        Some(s) if s > 0.0 => 1.0 / s,
                        _ => 0.0,
                    }
                }
            }
            Form::Custom { phi, .. } => phi(ZERO_PROBE),
        }
    }

    /// `φ'(0+)`, `None` when infinite.
    fn slope_at_zero(&self) -> Option<f64> {
        match self {
            Form::Power(a) | Form::LogPower(a) => (*a >= 1.0).then_some(1.0),
            Form::PowerLog(_) => Some(1.0),
            Form::Compose(outer, inner) => {
                let i0 = inner.form.value_at_zero();
                let outer_slope = if i0 > 0.0 {
                    Some(outer.derivative(i0))
                } else {
                    outer.form.slope_at_zero()
                };
                match (outer_slope, inner.form.slope_at_zero()) {
                    (Some(a), Some(b)) => Some(a * b),
                    _ => None,
                }
            }
            Form::Conjugate(_) | Form::Custom { .. } => {
                let h = 1e-7;
                Some((self.value(2.0 * h) - self.value(h)) / h)
            }
        }
    }
}

/// Laplace exponent `φ` of a (possibly killed) subordinator.
#[derive(Clone, Debug)]
pub struct LaplaceExponent {
    form: Form,
    drift: f64,
    kill_rate: f64,
    alpha: Option<f64>,
    complete: bool,
    label: String,
}

impl LaplaceExponent {
    fn from_form(form: Form, drift: f64, alpha: Option<f64>, complete: bool, label: String) -> Self {
        let kill_rate = form.value_at_zero();
        Self {
            form,
            drift,
            kill_rate,
            alpha,
            complete,
            label,
        }
    }

    /// `φ(λ) = λ^(α/2)`, the α-stable subordinator (`α = 2` is pure drift).
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("stable index must lie in (0, 2], got {alpha}")));
        }
        let drift = if alpha == 2.0 { 1.0 } else { 0.0 };
        Ok(Self::from_form(
            Form::Power(alpha / 2.0),
            drift,
            Some(alpha),
            true,
            format!("stable({alpha})"),
        ))
    }

    /// `φ(λ) = λ`.
    pub fn drift() -> Self {
        Self::from_form(Form::Power(1.0), 1.0, Some(2.0), true, "drift".into())
    }

    /// `φ(λ) = log(1 + λ^(β/2))`, the geometric β/2-stable subordinator.
    pub fn geometric_stable(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::Domain(format!("geometric stable β must lie in (0, 2], got {beta}")));
        }
        Ok(Self::from_form(
            Form::LogPower(beta / 2.0),
            0.0,
            Some(0.0),
            true,
            format!("geo({beta})"),
        ))
    }

    /// `φ(λ) = λ^(α/2) log(1 + λ)^(1 - α/2)`: regularly varying with index α/2
    /// but without exact scaling.
    pub fn stable_log(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("stable-log index must lie in (0, 2), got {alpha}")));
        }
        Ok(Self::from_form(
            Form::PowerLog(alpha / 2.0),
            0.0,
            Some(alpha),
            true,
            format!("stable-log({alpha})"),
        ))
    }

    /// A user-supplied exponent. Without `prime` the derivative is taken
    /// numerically; no complex continuation is available.
    pub fn custom(
        label: impl Into<String>,
        phi: RealFn,
        prime: Option<RealFn>,
        drift: f64,
        alpha: Option<f64>,
        complete: bool,
    ) -> Self {
        Self::from_form(Form::Custom { phi, prime }, drift, alpha, complete, label.into())
    }

    /// `λ ↦ outer(inner(λ))`.
    pub fn compose(outer: &LaplaceExponent, inner: &LaplaceExponent) -> Self {
        let alpha = match (outer.alpha, inner.alpha) {
            (Some(a), Some(b)) => Some(a * b / 2.0),
            _ => None,
        };
        Self::from_form(
            Form::Compose(Arc::new(outer.clone()), Arc::new(inner.clone())),
            outer.drift * inner.drift,
            alpha,
            outer.complete && inner.complete,
            format!("{}∘{}", outer.label, inner.label),
        )
    }

    /// `φ*(λ) = λ / φ(λ)`. Only guaranteed Bernstein when `φ` is complete
    /// Bernstein; otherwise the result is flagged as not complete.
    pub fn conjugate(&self) -> Self {
        if !self.complete {
            log::warn!("conjugating `{}`, which is not flagged complete Bernstein", self.label);
        }
        Self::from_form(
            Form::Conjugate(Arc::new(self.clone())),
            0.0,
            self.alpha.map(|a| 2.0 - a),
            self.complete,
            format!("conj({})", self.label),
        )
    }

    /// `φ(λ)` with domain checking.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        check_positive(lambda)?;
        let v = self.value(lambda);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("{}: φ({lambda}) is not finite", self.label)))
        }
    }

    /// `φ'(λ)` with domain checking.
    pub fn phi_prime(&self, lambda: f64) -> Result<f64> {
        check_positive(lambda)?;
        let v = self.derivative(lambda);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("{}: φ'({lambda}) is not finite", self.label)))
        }
    }

    #[inline]
    pub fn value(&self, lambda: f64) -> f64 {
        self.form.value(lambda)
    }

    /// Closed-form derivative when available, otherwise
    /// [`numerical_derivative`].
    pub fn derivative(&self, lambda: f64) -> f64 {
        self.form
            .derivative(lambda)
            .unwrap_or_else(|| numerical_derivative(|x| self.value(x), lambda))
    }

    pub fn value_complex(&self, z: Complex64) -> Option<Complex64> {
        self.form.value_complex(z)
    }

    pub fn derivative_complex(&self, z: Complex64) -> Option<Complex64> {
        self.form.derivative_complex(z)
    }

    /// Whether the exponent continues analytically to the cut plane.
    pub fn is_analytic(&self) -> bool {
        self.value_complex(Complex64::new(1.0, 1.0)).is_some()
    }

    pub fn drift_coefficient(&self) -> f64 {
        self.drift
    }

    pub fn kill_rate(&self) -> f64 {
        self.kill_rate
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn is_complete_bernstein(&self) -> bool {
        self.complete
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Characteristic exponent `Φ(ξ) = φ(|ξ|²)` of the subordinate Brownian motion.
    pub fn characteristic_exponent(&self, xi: &[f64]) -> f64 {
        self.value(xi.iter().map(|x| x * x).sum())
    }

    /// `(outer, inner)` when this exponent is a composition.
    pub(crate) fn as_composition(&self) -> Option<(&LaplaceExponent, &LaplaceExponent)> {
        match &self.form {
            Form::Compose(o, i) => Some((o, i)),
            _ => None,
        }
    }

    /// `Some(a)` when `φ(λ) = λ^a`.
    pub(crate) fn as_power(&self) -> Option<f64> {
        match self.form {
            Form::Power(a) => Some(a),
            _ => None,
        }
    }

    /// `Some(a)` when `φ(λ) = log(1 + λ^a)`.
    pub(crate) fn as_log_power(&self) -> Option<f64> {
        match self.form {
            Form::LogPower(a) => Some(a),
            _ => None,
        }
    }
}

fn check_positive(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("λ must be positive and finite, got {lambda}")))
    }
}

/// Central difference with step `λ·ε^(1/5)`, Richardson-extrapolated once.
///
/// The extrapolated scheme is fourth order, so `ε^(1/5)` balances truncation
/// against rounding; `ε^(1/3)` loses about two digits when `φ(λ) ≫ λφ'(λ)`,
/// as for killed exponents near the origin.
pub fn numerical_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = x * f64::EPSILON.powf(0.2);
    let central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let coarse = central(h);
    let fine = central(h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Keys of the built-in exponents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CatalogKey {
    Stable(f64),
    StableLog(f64),
    VarianceGamma,
    Geo(f64),
    GeoIter(f64, u32),
    ConjGeoIter(f64, u32),
    Example3,
    Drift,
}

impl fmt::Display for CatalogKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogKey::Stable(a) => write!(f, "stable({a})"),
            CatalogKey::StableLog(a) => write!(f, "stable-log({a})"),
            CatalogKey::VarianceGamma => write!(f, "vg"),
            CatalogKey::Geo(b) => write!(f, "geo({b})"),
            CatalogKey::GeoIter(b, n) => write!(f, "geo-iter({b},{n})"),
            CatalogKey::ConjGeoIter(b, n) => write!(f, "conj-geo-iter({b},{n})"),
            CatalogKey::Example3 => write!(f, "example3"),
            CatalogKey::Drift => write!(f, "drift"),
        }
    }
}

impl FromStr for CatalogKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::UnknownKey(s.to_string());
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..open], args)
            }
            None => (s, Vec::new()),
        };
        let count = |a: f64| -> Result<u32> {
            if a >= 1.0 && a.fract() == 0.0 && a <= 16.0 {
                Ok(a as u32)
            } else {
                Err(bad())
            }
        };
        match (name, args.as_slice()) {
            ("stable", [a]) => Ok(CatalogKey::Stable(*a)),
            ("stable-log", [a]) => Ok(CatalogKey::StableLog(*a)),
            ("vg", []) => Ok(CatalogKey::VarianceGamma),
            ("geo", [b]) => Ok(CatalogKey::Geo(*b)),
            ("geo-iter", [b, n]) => Ok(CatalogKey::GeoIter(*b, count(*n)?)),
            ("conj-geo-iter", [b, n]) => Ok(CatalogKey::ConjGeoIter(*b, count(*n)?)),
            ("example3", []) => Ok(CatalogKey::Example3),
            ("drift", []) => Ok(CatalogKey::Drift),
            _ => Err(bad()),
        }
    }
}

/// A built-in exponent with whatever closed forms are known for it.
#[derive(Clone)]
pub struct CatalogEntry {
    pub key: CatalogKey,
    pub exponent: LaplaceExponent,
    /// Lévy density `μ(t)`.
    pub closed_form_mu: Option<RealFn>,
    /// Potential density `u(t)`.
    pub closed_form_u: Option<RealFn>,
    pub expected_alpha: f64,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("key", &self.key.to_string())
            .field("exponent", &self.exponent.label)
            .field("closed_form_mu", &self.closed_form_mu.is_some())
            .field("closed_form_u", &self.closed_form_u.is_some())
            .field("expected_alpha", &self.expected_alpha)
            .finish()
    }
}

/// `φ_n` of the iterated geometric stable family: `φ_1 = log(1 + λ^(β/2))`,
/// `φ_(n+1) = φ_1 ∘ φ_n`.
pub fn iterated_geometric_stable(beta: f64, n: u32) -> Result<LaplaceExponent> {
    if n == 0 {
        return Err(Error::Domain("iteration count must be at least 1".into()));
    }
    let base = LaplaceExponent::geometric_stable(beta)?;
    let mut phi = base.clone();
    for _ in 1..n {
        phi = LaplaceExponent::compose(&base, &phi);
    }
    phi.label = format!("geo-iter({beta},{n})");
    Ok(phi)
}

impl CatalogKey {
    pub fn entry(self) -> Result<CatalogEntry> {
        let key_label = self.to_string();
        let (mut exponent, mu, u, expected_alpha): (LaplaceExponent, Option<RealFn>, Option<RealFn>, f64) =
            match self {
                CatalogKey::Stable(alpha) => {
                    let exp = LaplaceExponent::stable(alpha)?;
                    if alpha == 2.0 {
                        (exp, Some(Arc::new(|_| 0.0)), Some(Arc::new(|_| 1.0)), 2.0)
                    } else {
                        let a = alpha / 2.0;
                        let cmu = a / gamma(1.0 - a);
                        let cu = 1.0 / gamma(a);
                        (
                            exp,
                            Some(Arc::new(move |t: f64| cmu * t.powf(-1.0 - a))),
                            Some(Arc::new(move |t: f64| cu * t.powf(a - 1.0))),
                            alpha,
                        )
                    }
                }
                CatalogKey::StableLog(alpha) => (LaplaceExponent::stable_log(alpha)?, None, None, alpha),
                CatalogKey::VarianceGamma => (
                    LaplaceExponent::geometric_stable(2.0)?,
                    Some(Arc::new(|t: f64| (-t).exp() / t)),
                    None,
                    0.0,
                ),
                CatalogKey::Geo(beta) => {
                    let mu: Option<RealFn> = if beta == 2.0 {
                        Some(Arc::new(|t: f64| (-t).exp() / t))
                    } else {
                        None
                    };
                    (LaplaceExponent::geometric_stable(beta)?, mu, None, 0.0)
                }
                CatalogKey::GeoIter(beta, n) => (iterated_geometric_stable(beta, n)?, None, None, 0.0),
                CatalogKey::ConjGeoIter(beta, n) => {
                    (iterated_geometric_stable(beta, n)?.conjugate(), None, None, 2.0)
                }
                CatalogKey::Example3 => {
                    (LaplaceExponent::geometric_stable(1.0)?.conjugate(), None, None, 2.0)
                }
                CatalogKey::Drift => (
                    LaplaceExponent::drift(),
                    Some(Arc::new(|_| 0.0)),
                    Some(Arc::new(|_| 1.0)),
                    2.0,
                ),
            };
        exponent.label = key_label;
        Ok(CatalogEntry {
            key: self,
            exponent,
            closed_form_mu: mu,
            closed_form_u: u,
            expected_alpha,
        })
    }
}

/// Resolve a catalog key string such as `"geo-iter(2,2)"`.
pub fn lookup(key: &str) -> Result<CatalogEntry> {
    key.parse::<CatalogKey>()?.entry()
}

/// Representative instances of every catalog family.
pub fn default_catalog() -> Vec<CatalogKey> {
    vec![
        CatalogKey::Stable(0.5),
        CatalogKey::Stable(1.0),
        CatalogKey::Stable(1.5),
        CatalogKey::StableLog(0.5),
        CatalogKey::StableLog(1.0),
        CatalogKey::VarianceGamma,
        CatalogKey::Geo(1.0),
        CatalogKey::Geo(1.5),
        CatalogKey::GeoIter(2.0, 2),
        CatalogKey::GeoIter(1.0, 3),
        CatalogKey::ConjGeoIter(2.0, 1),
        CatalogKey::ConjGeoIter(2.0, 2),
        CatalogKey::ConjGeoIter(1.0, 2),
        CatalogKey::Example3,
        CatalogKey::Drift,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    #[test]
    fn eval_phi_examples() {
        let vg = lookup("vg").unwrap().exponent;
        assert_relative_eq!(vg.phi(E - 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let st = lookup("stable(1)").unwrap().exponent;
        assert_relative_eq!(st.phi(4.0).unwrap(), 2.0, epsilon = 1e-15);
        let g2 = lookup("geo-iter(2,2)").unwrap().exponent;
        let lam = (E - 1.0).exp() - 1.0;
        assert_relative_eq!(g2.phi(lam).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_positive_lambda_is_a_domain_error() {
        let vg = lookup("vg").unwrap().exponent;
        assert!(matches!(vg.phi(0.0), Err(Error::Domain(_))));
        assert!(matches!(vg.phi(-1.0), Err(Error::Domain(_))));
        assert!(matches!(vg.phi_prime(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_prime_examples() {
        let vg = lookup("vg").unwrap().exponent;
        assert_relative_eq!(vg.phi_prime(1.0).unwrap(), 0.5, epsilon = 1e-15);
        let st = lookup("stable(1)").unwrap().exponent;
        assert_relative_eq!(st.phi_prime(4.0).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn numerical_derivative_matches_closed_form() {
        let custom = LaplaceExponent::custom("log1p", Arc::new(|l: f64| l.ln_1p()), None, 0.0, Some(0.0), true);
        let d = custom.phi_prime(1.0).unwrap();
        assert!((d - 0.5).abs() <= 1e-8 * 0.5, "{d}");
        for key in default_catalog() {
            let e = key.entry().unwrap().exponent;
            for &l in &[1e-3, 0.5, 3.0, 1e3] {
                let num = numerical_derivative(|x| e.value(x), l);
                let exact = e.derivative(l);
                assert!(((num - exact) / exact).abs() < 1e-8, "{key} at {l}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn compose_examples() {
        let g1 = LaplaceExponent::geometric_stable(2.0).unwrap();
        let g2 = LaplaceExponent::compose(&g1, &g1);
        let lam = (E - 1.0).exp() - 1.0;
        assert_relative_eq!(g2.value(lam), 1.0, epsilon = 1e-14);
        // (1/(1+log 1.5))·(1/1.5)
        let expected = 1.0 / (1.0 + 1.5f64.ln()) / 1.5;
        assert_relative_eq!(g2.derivative(0.5), expected, epsilon = 1e-15);
        assert!((g2.derivative(0.5) - 0.474339).abs() < 1e-6);

        let id = LaplaceExponent::drift();
        let st = LaplaceExponent::stable(0.7).unwrap();
        let c = LaplaceExponent::compose(&id, &st);
        for l in log_grid(1e-4, 1e4, 30) {
            assert_eq!(c.value(l), st.value(l));
        }
        assert!(c.is_complete_bernstein());
        assert_eq!(c.alpha(), Some(0.7));
    }

    #[test]
    fn compose_flag_is_conjunction() {
        let custom = LaplaceExponent::custom("c", Arc::new(|l: f64| l.sqrt()), None, 0.0, Some(1.0), false);
        let vg = LaplaceExponent::geometric_stable(2.0).unwrap();
        assert!(!LaplaceExponent::compose(&vg, &custom).is_complete_bernstein());
        assert!(!LaplaceExponent::compose(&custom, &vg).is_complete_bernstein());
        assert!(!custom.conjugate().is_complete_bernstein());
    }

    #[test]
    fn conjugate_examples() {
        let vg = LaplaceExponent::geometric_stable(2.0).unwrap();
        assert_relative_eq!(vg.conjugate().value(E - 1.0), E - 1.0, epsilon = 1e-14);

        let ex3 = lookup("example3").unwrap().exponent;
        for l in log_grid(1e-4, 1e8, 40) {
            let direct = l / (1.0 + l.sqrt()).ln();
            assert_relative_eq!(ex3.value(l), direct, max_relative = 1e-14);
        }

        let st = LaplaceExponent::stable(1.0).unwrap();
        let sc = st.conjugate();
        for l in log_grid(1e-4, 1e4, 20) {
            assert_relative_eq!(sc.value(l), st.value(l), max_relative = 1e-15);
        }
    }

    #[test]
    fn catalog_alpha_matches_expected() {
        for key in default_catalog() {
            let entry = key.entry().unwrap();
            assert_eq!(entry.exponent.alpha(), Some(entry.expected_alpha), "{key}");
        }
    }

    #[test]
    fn kill_rates() {
        assert_eq!(lookup("vg").unwrap().exponent.kill_rate(), 0.0);
        assert_eq!(lookup("stable(0.5)").unwrap().exponent.kill_rate(), 0.0);
        assert_eq!(lookup("example3").unwrap().exponent.kill_rate(), 0.0);
        // λ / log(1 + λ) → 1 as λ → 0
        assert_relative_eq!(lookup("conj-geo-iter(2,1)").unwrap().exponent.kill_rate(), 1.0);
        assert_relative_eq!(lookup("conj-geo-iter(2,2)").unwrap().exponent.kill_rate(), 1.0);
        assert_eq!(lookup("conj-geo-iter(1,2)").unwrap().exponent.kill_rate(), 0.0);
    }

    #[test]
    fn drift_metadata() {
        assert_eq!(lookup("drift").unwrap().exponent.drift_coefficient(), 1.0);
        assert_eq!(lookup("stable(2)").unwrap().exponent.drift_coefficient(), 1.0);
        assert_eq!(lookup("vg").unwrap().exponent.drift_coefficient(), 0.0);
        assert_eq!(lookup("example3").unwrap().exponent.drift_coefficient(), 0.0);
    }

    #[test]
    fn complex_continuation_agrees_on_real_axis() {
        for key in default_catalog() {
            let e = key.entry().unwrap().exponent;
            for &l in &[1e-3, 0.7, 10.0, 1e5] {
                let z = Complex64::new(l, 0.0);
                let v = e.value_complex(z).unwrap();
                let d = e.derivative_complex(z).unwrap();
                assert_relative_eq!(v.re, e.value(l), max_relative = 1e-12);
                assert!(v.im.abs() < 1e-12 * v.re.abs());
                assert_relative_eq!(d.re, e.derivative(l), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn key_round_trip_and_errors() {
        for key in default_catalog() {
            assert_eq!(key.to_string().parse::<CatalogKey>().unwrap(), key);
        }
        assert!(matches!("nope".parse::<CatalogKey>(), Err(Error::UnknownKey(_))));
        assert!("geo-iter(2,0)".parse::<CatalogKey>().is_err());
        assert!("stable(1".parse::<CatalogKey>().is_err());
        assert!(lookup("stable(2.5)").is_err());
    }

    #[test]
    fn characteristic_exponent_is_phi_of_squared_norm() {
        let vg = lookup("vg").unwrap().exponent;
        assert_relative_eq!(vg.characteristic_exponent(&[1.0, 2.0, 2.0]), 10f64.ln());
    }
}
