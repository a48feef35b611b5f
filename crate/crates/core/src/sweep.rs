//! Ratio sweeps: a computed quantity divided by its asymptotic comparison
//! function over a grid of radii, with a boundedness verdict.

use serde::{Deserialize, Serialize};

/// Largest admissible `max/min` of the ratios for a "bounded" verdict.
pub const MAX_OVER_MIN: f64 = 100.0;
/// Largest admissible `|d log ratio / d log r|` over the small-`r` decade.
pub const TAIL_SLOPE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    ConvergesTo1,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub r_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub comparison_label: String,
    pub verdict: Verdict,
    /// Least-squares slope of `log ratio` against `log r` over the decade
    /// nearest to the smallest radius.
    pub log_slope_tail: f64,
    pub max_over_min: f64,
}

impl RatioSweep {
    /// Build a sweep and assign the bounded/failed verdict.
    pub fn new(r_grid: Vec<f64>, ratios: Vec<f64>, comparison_label: impl Into<String>) -> Self {
        assert_eq!(r_grid.len(), ratios.len());
        let all_positive = !ratios.is_empty() && ratios.iter().all(|r| r.is_finite() && *r > 0.0);
        let (max_over_min, log_slope_tail) = if all_positive {
            let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
            (max / min, tail_log_slope(&r_grid, &ratios))
        } else {
            (f64::INFINITY, f64::NAN)
        };
        let verdict = if all_positive && max_over_min <= MAX_OVER_MIN && log_slope_tail.abs() <= TAIL_SLOPE {
            Verdict::Bounded
        } else {
            Verdict::Failed
        };
        Self {
            r_grid,
            ratios,
            comparison_label: comparison_label.into(),
            verdict,
            log_slope_tail,
            max_over_min,
        }
    }

    /// Upgrade a bounded verdict to `ConvergesTo1` when the ratio at the
    /// smallest radius is within `tol` of one and the deviation shrinks
    /// towards small radii.
    pub fn with_convergence_check(mut self, tol: f64) -> Self {
        if self.verdict == Verdict::Bounded {
            let idx = argmin(&self.r_grid);
            let jdx = argmax(&self.r_grid);
            let dev_small = (self.ratios[idx] - 1.0).abs();
            let dev_large = (self.ratios[jdx] - 1.0).abs();
            if dev_small <= tol && dev_small <= dev_large {
                self.verdict = Verdict::ConvergesTo1;
            }
        }
        self
    }

    /// Largest relative deviation of the ratios from their mean.
    pub fn relative_spread(&self) -> f64 {
        let mean = self.ratios.iter().sum::<f64>() / self.ratios.len() as f64;
        self.ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.verdict, Verdict::Bounded | Verdict::ConvergesTo1)
    }
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    least_squares_slope(&lx, &ly)
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope over the points with `r ≤ 10·r_min` (at least the two smallest).
fn tail_log_slope(r: &[f64], ratio: &[f64]) -> f64 {
    let r_min = r.iter().cloned().fold(f64::MAX, f64::min);
    let mut pts: Vec<(f64, f64)> = r
        .iter()
        .zip(ratio)
        .filter(|(x, _)| **x <= 10.0 * r_min * (1.0 + 1e-12))
        .map(|(x, y)| (*x, *y))
        .collect();
    if pts.len() < 2 {
        let mut all: Vec<(f64, f64)> = r.iter().cloned().zip(ratio.iter().cloned()).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts = all.into_iter().take(2).collect();
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    log_log_slope(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_grid;

    #[test]
    fn constant_ratio_is_bounded_with_zero_slope() {
        let r = log_grid(1e-4, 1e-1, 13);
        let s = RatioSweep::new(r.clone(), vec![3.0; 13], "c");
        assert_eq!(s.verdict, Verdict::Bounded);
        assert!(s.log_slope_tail.abs() < 1e-12);
        assert_eq!(s.max_over_min, 1.0);
    }

    #[test]
    fn power_drift_fails() {
        let r = log_grid(1e-4, 1e-1, 13);
        let ratios: Vec<f64> = r.iter().map(|x| x.powf(0.2)).collect();
        let s = RatioSweep::new(r, ratios, "drifting");
        assert_eq!(s.verdict, Verdict::Failed);
        assert!((s.log_slope_tail - 0.2).abs() < 1e-12);
    }

    #[test]
    fn non_positive_ratio_fails() {
        let s = RatioSweep::new(vec![0.1, 0.2], vec![1.0, 0.0], "zero");
        assert_eq!(s.verdict, Verdict::Failed);
    }

    #[test]
    fn convergence_upgrade() {
        let r = log_grid(1e-4, 1e-1, 7);
        let ratios: Vec<f64> = r.iter().map(|x| 1.0 + x).collect();
        let s = RatioSweep::new(r, ratios, "to one").with_convergence_check(1e-3);
        assert_eq!(s.verdict, Verdict::ConvergesTo1);
    }
}
