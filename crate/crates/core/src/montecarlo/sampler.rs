//! Subordinator increments.
//!
//! Exponents with known structure get exact samplers: gamma increments for
//! `log(1 + λ)`, Kanter's representation for `λ^b`, and subordination for
//! compositions (`log(1 + λ^b)` is a gamma-time-changed stable subordinator).
//! Everything else falls back to a compound-Poisson approximation built from
//! the numerically inverted Lévy tail.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bernstein::LaplaceExponent;
use crate::densities::{levy_tail_numeric, small_jump_moments};
use crate::error::{Error, Result};

/// Default truncation level of the compound-Poisson sampler.
pub const DEFAULT_JUMP_TRUNCATION: f64 = 1e-4;

/// Small-jump variance, as a fraction of the total variance proxy, above
/// which the Gaussian correction switches on by default.
pub const GAUSSIAN_SWITCH: f64 = 1e-3;

/// Table points per decade of the jump-size distribution.
const TABLE_DENSITY: f64 = 40.0;

/// Tail mass (relative to the total jump rate) at which the table stops.
const TABLE_TAIL: f64 = 1e-10;

const TABLE_MAX_T: f64 = 1e8;

/// Jumps larger than the truncation level, as an inverse-CDF table of
/// `N(t) = μ(t, ∞)` on a log grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpTable {
    pub truncation: f64,
    /// `N(ε)`, the rate of retained jumps.
    pub rate: f64,
    /// `∫₀^ε tμ(t) dt`, paid out as drift.
    pub small_mean: f64,
    /// `∫₀^ε t²μ(t) dt`.
    pub small_variance: f64,
    pub gaussian: bool,
    /// `N(t_last)/N(ε)`: mass beyond the table, placed by extrapolation.
    pub extrapolated_mass: f64,
    log_t: Vec<f64>,
    /// `log N(t)`, strictly decreasing.
    log_n: Vec<f64>,
}

impl JumpTable {
    /// Build the table for `exp`. `gaussian = None` applies the default
    /// switching rule.
    pub fn build(exp: &LaplaceExponent, truncation: f64, gaussian: Option<bool>) -> Result<Self> {
        if !(truncation > 0.0) {
            return Err(Error::Domain(format!("jump truncation must be positive, got {truncation}")));
        }
        let unsupported = |e: Error| {
            Error::Unsupported(format!("{}: no usable Lévy measure for the generic sampler ({e})", exp.label()))
        };
        let rate = levy_tail_numeric(exp, truncation).map_err(unsupported)?;
        let (small_mean, small_variance) = small_jump_moments(exp, truncation).map_err(unsupported)?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Unsupported(format!("{}: Lévy tail at ε is {rate}", exp.label())));
        }
        let mut log_t = vec![truncation.ln()];
        let mut log_n = vec![rate.ln()];
        let step = std::f64::consts::LN_10 / TABLE_DENSITY;
        loop {
            let lt = log_t.last().unwrap() + step;
            if lt.exp() > TABLE_MAX_T {
                break;
            }
            // Past the last point the contour inversion can resolve, the
            // remaining mass is extrapolated.
            let n = match levy_tail_numeric(exp, lt.exp()) {
                Ok(n) => n,
                Err(_) => break,
            };
            if !(n > 0.0) || n.ln() >= *log_n.last().unwrap() {
                break;
            }
            log_t.push(lt);
            log_n.push(n.ln());
            if n < TABLE_TAIL * rate {
                break;
            }
        }
        if log_t.len() < 2 {
            return Err(Error::Numerical(format!("{}: Lévy tail table has a single point", exp.label())));
        }
        // Variance proxy: small jumps plus the tabulated second moment.
        let big_variance: f64 = (0..log_t.len() - 1)
            .map(|k| (log_n[k].exp() - log_n[k + 1].exp()) * (log_t[k] + log_t[k + 1]).exp())
            .sum();
        let gaussian =
            gaussian.unwrap_or(small_variance > GAUSSIAN_SWITCH * (small_variance + big_variance));
        Ok(Self {
            truncation,
            rate,
            small_mean,
            small_variance,
            gaussian,
            extrapolated_mass: (log_n.last().unwrap() - log_n[0]).exp(),
            log_t,
            log_n,
        })
    }

    /// Jump size with `N(size) = rate·v`, `v ∈ (0, 1]`.
    pub fn quantile(&self, v: f64) -> f64 {
        let target = self.log_n[0] + v.ln();
        let n = self.log_n.len();
        // First index with log N below the target.
        let k = self.log_n.partition_point(|x| *x >= target).clamp(1, n - 1);
        let i = k - 1;
        let w = (target - self.log_n[i]) / (self.log_n[i + 1] - self.log_n[i]);
        (self.log_t[i] + w * (self.log_t[i + 1] - self.log_t[i])).exp()
    }

    pub fn len(&self) -> usize {
        self.log_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_t.is_empty()
    }

    pub fn largest_tabulated(&self) -> f64 {
        self.log_t.last().unwrap().exp()
    }
}

/// How increments of one subordinator are drawn.
#[derive(Clone, Debug)]
pub enum Sampler {
    /// `S_t = γt`.
    Drift(f64),
    /// `φ(λ) = log(1 + λ)`: `S_t ~ Gamma(t, 1)`.
    Gamma,
    /// `φ(λ) = λ^b`, `0 < b < 1`.
    Stable(f64),
    /// `φ = outer ∘ inner`: the inner subordinator run at the outer one's time.
    Compose(Box<Sampler>, Box<Sampler>),
    /// Drift `γ` plus truncated compound-Poisson jumps.
    CompoundPoisson { drift: f64, table: Arc<JumpTable> },
}

impl Sampler {
    /// Exact sampler when the exponent's structure allows one.
    pub fn structural(exp: &LaplaceExponent) -> Option<Sampler> {
        if exp.kill_rate() != 0.0 {
            return None;
        }
        if let Some(a) = exp.as_power() {
            return if a == 1.0 {
                Some(Sampler::Drift(exp.drift_coefficient()))
            } else if a > 0.0 && a < 1.0 {
                Some(Sampler::Stable(a))
            } else {
                None
            };
        }
        if let Some(a) = exp.as_log_power() {
            return if a == 1.0 {
                Some(Sampler::Gamma)
            } else if a > 0.0 && a < 1.0 {
                Some(Sampler::Compose(Box::new(Sampler::Gamma), Box::new(Sampler::Stable(a))))
            } else {
                None
            };
        }
        let (outer, inner) = exp.as_composition()?;
        Some(Sampler::Compose(Box::new(Self::structural(outer)?), Box::new(Self::structural(inner)?)))
    }

    pub fn describe(&self) -> String {
        match self {
            Sampler::Drift(g) => format!("drift({g})"),
            Sampler::Gamma => "gamma".into(),
            Sampler::Stable(b) => format!("stable({b})"),
            Sampler::Compose(o, i) => format!("{}∘{}", o.describe(), i.describe()),
            Sampler::CompoundPoisson { table, .. } => {
                format!("compound-poisson(ε={}, rate={:.6e})", table.truncation, table.rate)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        match self {
            Sampler::Drift(g) => g * dt,
            Sampler::Gamma => Gamma::new(dt, 1.0).map(|g| g.sample(rng)).unwrap_or(0.0),
            Sampler::Stable(b) => dt.powf(1.0 / b) * kanter(*b, rng),
            Sampler::Compose(outer, inner) => {
                let t = outer.sample(dt, rng);
                inner.sample(t, rng)
            }
            Sampler::CompoundPoisson { drift, table } => {
                let mut s = (drift + table.small_mean) * dt;
                if table.gaussian {
                    let z: f64 = rng.sample(StandardNormal);
                    s += (table.small_variance * dt).sqrt() * z;
                }
                let mean = table.rate * dt;
                let count = Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0);
                for _ in 0..count {
                    // 1 − U lies in (0, 1], as the quantile needs.
                    s += table.quantile(1.0 - rng.random::<f64>());
                }
                s.max(0.0)
            }
        }
    }
}

/// `S₁` with `E e^(−λS₁) = e^(−λ^b)`, by Kanter's representation
/// `(A(U)/E)^((1−b)/b)` with `U` uniform on `(0, π)` and `E` standard
/// exponential.
fn kanter<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let u = PI * (1.0 - rng.random::<f64>());
    let e: f64 = rng.sample(Exp1);
    let log_a = (b * (b * u).sin().ln() + (1.0 - b) * ((1.0 - b) * u).sin().ln() - u.sin().ln()) / (1.0 - b);
    ((log_a - e.ln()) * (1.0 - b) / b).exp()
}

/// A subordinator ready for sampling, with its killing rate.
#[derive(Clone, Debug)]
pub struct Subordinator {
    pub sampler: Sampler,
    pub kill_rate: f64,
    pub label: String,
}

impl Subordinator {
    /// Exact sampler when available, compound Poisson at truncation
    /// `truncation` otherwise.
    pub fn new(exp: &LaplaceExponent, truncation: f64, gaussian: Option<bool>) -> Result<Self> {
        let sampler = match Sampler::structural(exp) {
            Some(s) => s,
            None => Sampler::CompoundPoisson {
                drift: exp.drift_coefficient(),
                table: Arc::new(JumpTable::build(exp, truncation, gaussian)?),
            },
        };
        Ok(Self { sampler, kill_rate: exp.kill_rate(), label: exp.label().to_string() })
    }

    /// Always the compound-Poisson approximation, even when an exact
    /// sampler exists.
    pub fn compound_poisson(exp: &LaplaceExponent, truncation: f64, gaussian: Option<bool>) -> Result<Self> {
        Ok(Self {
            sampler: Sampler::CompoundPoisson {
                drift: exp.drift_coefficient(),
                table: Arc::new(JumpTable::build(exp, truncation, gaussian)?),
            },
            kill_rate: exp.kill_rate(),
            label: exp.label().to_string(),
        })
    }

    /// `S_{dt}`; `+∞` when the killing clock rings first.
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if self.kill_rate > 0.0 {
            let clock: f64 = rng.sample(Exp1);
            if clock < self.kill_rate * dt {
                return f64::INFINITY;
            }
        }
        self.sampler.sample(dt, rng)
    }
}

/// One draw of `S_{Δt}` for `exp` (killed draws are `+∞`).
pub fn sample_subordinator_increment<R: Rng + ?Sized>(sub: &Subordinator, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("Δt must be positive, got {dt}")));
    }
    Ok(sub.increment(dt, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::lookup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn laplace_mean(sub: &Subordinator, t: f64, lambda: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = (-lambda * sub.increment(t, &mut rng)).exp();
            s1 += v;
            s2 += v * v;
        }
        let m = s1 / n as f64;
        (m, ((s2 / n as f64 - m * m) / n as f64).sqrt())
    }

    #[test]
    fn structural_samplers_are_recognised() {
        let d = |k: &str| Sampler::structural(&lookup(k).unwrap().exponent).map(|s| s.describe());
        assert_eq!(d("vg").as_deref(), Some("gamma"));
        assert_eq!(d("stable(1)").as_deref(), Some("stable(0.5)"));
        assert_eq!(d("drift").as_deref(), Some("drift(1)"));
        assert_eq!(d("geo(1)").as_deref(), Some("gamma∘stable(0.5)"));
        assert_eq!(d("geo-iter(2,2)").as_deref(), Some("gamma∘gamma"));
        assert!(d("example3").is_none());
        assert!(d("stable-log(1)").is_none());
    }

    #[test]
    fn kanter_matches_half_stable_laplace_transform() {
        let sub = Subordinator::new(&lookup("stable(1)").unwrap().exponent, DEFAULT_JUMP_TRUNCATION, None).unwrap();
        let (m, se) = laplace_mean(&sub, 1.0, 1.0, 200_000, 7);
        assert!((m - (-1.0f64).exp()).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn gamma_increment_mean() {
        let sub = Subordinator::new(&lookup("vg").unwrap().exponent, DEFAULT_JUMP_TRUNCATION, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sub.increment(1.0, &mut rng)).sum::<f64>() / n as f64;
        // Gamma(1, 1) has unit variance.
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn table_quantiles_are_monotone() {
        let exp = lookup("example3").unwrap().exponent;
        let table = JumpTable::build(&exp, 1e-3, None).unwrap();
        assert!(table.len() > 10);
        let q: Vec<f64> = [1.0, 0.5, 0.1, 1e-3, 1e-6].iter().map(|v| table.quantile(*v)).collect();
        assert!((q[0] - 1e-3).abs() < 1e-12);
        assert!(q.windows(2).all(|w| w[1] > w[0]), "{q:?}");
    }

    #[test]
    fn killed_subordinator_returns_infinity() {
        let exp = lookup("conj-geo-iter(2,1)").unwrap().exponent;
        let sub = Subordinator::new(&exp, 1e-3, None).unwrap();
        assert_eq!(sub.kill_rate, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let killed = (0..10_000).filter(|_| sub.increment(1.0, &mut rng).is_infinite()).count();
        // P(killed by t = 1) = 1 − e⁻¹ ≈ 0.632.
        assert!((killed as f64 / 1e4 - 0.632).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_step() {
        let sub = Subordinator::new(&lookup("vg").unwrap().exponent, 1e-4, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_subordinator_increment(&sub, 0.0, &mut rng).is_err());
    }
}
