//! Skeleton paths `X_{kh} = x + B(S_{kh})` and exit records.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{Subordinator, DEFAULT_JUMP_TRUNCATION};
use crate::bernstein::{lookup, CatalogEntry};
use crate::error::{Error, Result};

/// Default number of skeleton steps per expected exit time scale
/// `1/φ(R⁻²)`.
pub const STEPS_PER_EXIT_SCALE: f64 = 200.0;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Paths per work unit. Fixed, so results do not depend on the thread count.
pub const CHUNK_PATHS: u64 = 1024;

/// An exit whose last step moved less than this fraction of the radius is
/// flagged: the continuous path may have left between grid times.
pub const CREEP_FRACTION: f64 = 0.05;

/// Stream families, so that independent estimators never share draws.
pub(crate) mod purpose {
    pub const EXIT: u64 = 0;
    pub const CONTINUATION: u64 = 1;
    pub const GREEN: u64 = 2;
    pub const SUBORDINATOR: u64 = 3;
}

/// The generator for path `index` of stream family `purpose`.
///
/// Each `(master_seed, purpose)` pair keys a ChaCha8 generator and each
/// path gets its own stream of it, so any path can be replayed on its own.
pub fn path_rng(master_seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub exponent_key: String,
    pub d: usize,
    pub time_step: f64,
    pub jump_truncation: f64,
    /// Gaussian small-jump correction; `None` uses the default rule.
    pub small_jump_gaussian: Option<bool>,
    pub master_seed: u64,
    pub n_paths: u64,
    pub ball_radius: f64,
    pub start_points: Vec<Vec<f64>>,
    pub max_steps: u64,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    /// Paths from the origin of `B_r`, with the default step
    /// `1/(200 φ(r⁻²))`.
    pub fn new(exponent_key: &str, d: usize, ball_radius: f64, n_paths: u64, master_seed: u64) -> Result<Self> {
        let entry = lookup(exponent_key)?;
        let cfg = Self {
            exponent_key: exponent_key.to_string(),
            d,
            time_step: default_time_step(&entry, ball_radius),
            jump_truncation: DEFAULT_JUMP_TRUNCATION,
            small_jump_gaussian: None,
            master_seed,
            n_paths,
            ball_radius,
            start_points: vec![vec![0.0; d]],
            max_steps: DEFAULT_MAX_STEPS,
            workers: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_start_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.start_points = points;
        self
    }

    pub fn with_time_step(mut self, h: f64) -> Self {
        self.time_step = h;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {}", self.time_step)));
        }
        if !(self.jump_truncation > 0.0) {
            return Err(Error::Domain(format!("jump truncation must be positive, got {}", self.jump_truncation)));
        }
        if self.n_paths == 0 {
            return Err(Error::Domain("need at least one path".into()));
        }
        if !(self.ball_radius > 0.0 && self.ball_radius.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {}", self.ball_radius)));
        }
        if self.start_points.is_empty() {
            return Err(Error::Domain("need at least one start point".into()));
        }
        for x in &self.start_points {
            if x.len() != self.d {
                return Err(Error::Domain(format!("start point {x:?} is not in dimension {}", self.d)));
            }
            if norm(x) >= self.ball_radius {
                return Err(Error::Precondition(format!(
                    "start point {x:?} is not inside the ball of radius {}",
                    self.ball_radius
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn subordinator(&self) -> Result<Subordinator> {
        let entry = lookup(&self.exponent_key)?;
        Subordinator::new(&entry.exponent, self.jump_truncation, self.small_jump_gaussian)
    }
}

/// `1/(STEPS_PER_EXIT_SCALE · φ(R⁻²))`.
pub fn default_time_step(entry: &CatalogEntry, radius: f64) -> f64 {
    1.0 / (STEPS_PER_EXIT_SCALE * entry.exponent.value(radius.powi(-2)))
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Exited,
    /// The subordinator was killed inside the ball.
    Killed,
    /// Still inside after `max_steps` steps.
    Censored,
}

/// Which of the annuli `B_{2R} ∖ B_R` and `B_{4R} ∖ B_R` the exit landed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellFlags {
    pub within_2r: bool,
    pub within_4r: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub path: u64,
    pub start: Vec<f64>,
    pub radius: f64,
    pub status: ExitStatus,
    /// First grid time outside the ball (or the killing/censoring time).
    pub exit_time: f64,
    pub exit_position: Option<Vec<f64>>,
    pub exited_to_shell: ShellFlags,
    /// The exiting step was shorter than `CREEP_FRACTION · radius`.
    pub overshoot_flag: bool,
}

/// Run `per_path` for every path index in fixed-size chunks and merge the
/// chunk results in index order.
pub(crate) fn run_paths<A, M, F, G>(n_paths: u64, workers: Option<usize>, make: M, per_path: F, merge: G) -> Result<A>
where
    A: Send,
    M: Fn() -> A + Sync,
    F: Fn(u64, &mut A) + Sync,
    G: Fn(&mut A, A),
{
    let chunks = n_paths.div_ceil(CHUNK_PATHS);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = make();
                for p in c * CHUNK_PATHS..((c + 1) * CHUNK_PATHS).min(n_paths) {
                    per_path(p, &mut acc);
                }
                acc
            })
            .collect::<Vec<A>>()
    };
    let parts = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&make);
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

/// A Brownian motion run with a subordinator's clock.
pub(crate) struct Walker<'a> {
    pub sub: &'a Subordinator,
    pub d: usize,
    pub h: f64,
}

impl Walker<'_> {
    /// Advance `w` by one skeleton step. Returns the displacement length,
    /// or `None` when the process was killed.
    pub fn step<R: Rng>(&self, w: &mut [f64], rng: &mut R) -> Option<f64> {
        let ds = self.sub.increment(self.h, rng);
        if ds.is_infinite() {
            return None;
        }
        let sd = (2.0 * ds).sqrt();
        let mut len2 = 0.0;
        for wi in w.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *wi += sd * z;
            len2 += (sd * z) * (sd * z);
        }
        Some(len2.sqrt())
    }
}

/// Outcome of walking from one start until leaving a ball.
#[derive(Clone, Debug)]
pub(crate) struct Exit {
    pub status: ExitStatus,
    pub steps: u64,
    pub position: Vec<f64>,
    pub last_step: f64,
}

/// Walk from `x` until `|X| ≥ radius`, calling `visit(X_k)` for every grid
/// point inside the ball, `X_0 = x` included.
pub(crate) fn walk_until_exit<R: Rng>(
    walker: &Walker,
    x: &[f64],
    radius: f64,
    max_steps: u64,
    rng: &mut R,
    mut visit: impl FnMut(&[f64]),
) -> Exit {
    let mut pos = x.to_vec();
    visit(&pos);
    for k in 1..=max_steps {
        match walker.step(&mut pos, rng) {
            None => return Exit { status: ExitStatus::Killed, steps: k, position: pos, last_step: 0.0 },
            Some(len) => {
                if norm(&pos) >= radius {
                    return Exit { status: ExitStatus::Exited, steps: k, position: pos, last_step: len };
                }
                visit(&pos);
            }
        }
    }
    Exit { status: ExitStatus::Censored, steps: max_steps, position: pos, last_step: 0.0 }
}

/// Per-start exits of one path shared by all start points (common random
/// numbers: the path from `x` is `x + W`).
pub(crate) fn walk_shared<R: Rng>(
    walker: &Walker,
    starts: &[Vec<f64>],
    radius: f64,
    max_steps: u64,
    rng: &mut R,
) -> Vec<Exit> {
    let d = walker.d;
    let mut w = vec![0.0; d];
    let mut out: Vec<Option<Exit>> = vec![None; starts.len()];
    let mut active = starts.len();
    let mut y = vec![0.0; d];
    for k in 1..=max_steps {
        match walker.step(&mut w, rng) {
            None => {
                for o in out.iter_mut().filter(|o| o.is_none()) {
                    *o = Some(Exit { status: ExitStatus::Killed, steps: k, position: vec![], last_step: 0.0 });
                }
                active = 0;
            }
            Some(len) => {
                for (i, x) in starts.iter().enumerate() {
                    if out[i].is_some() {
                        continue;
                    }
                    for j in 0..d {
                        y[j] = x[j] + w[j];
                    }
                    if norm(&y) >= radius {
                        out[i] = Some(Exit { status: ExitStatus::Exited, steps: k, position: y.clone(), last_step: len });
                        active -= 1;
                    }
                }
            }
        }
        if active == 0 {
            break;
        }
    }
    out.into_iter()
        .map(|o| {
            o.unwrap_or(Exit { status: ExitStatus::Censored, steps: max_steps, position: vec![], last_step: 0.0 })
        })
        .collect()
}

/// Exit records for every `(path, start point)`, path-major. Start points
/// share each path's randomness.
pub fn simulate_exit(cfg: &SimConfig) -> Result<Vec<ExitRecord>> {
    cfg.validate()?;
    let sub = cfg.subordinator()?;
    let walker = Walker { sub: &sub, d: cfg.d, h: cfg.time_step };
    let r = cfg.ball_radius;
    run_paths(
        cfg.n_paths,
        cfg.workers,
        Vec::new,
        |p, out: &mut Vec<ExitRecord>| {
            let mut rng = path_rng(cfg.master_seed, purpose::EXIT, p);
            let exits = walk_shared(&walker, &cfg.start_points, r, cfg.max_steps, &mut rng);
            for (x, e) in cfg.start_points.iter().zip(exits) {
                out.push(to_record(p, x, r, cfg.time_step, e));
            }
        },
        |a, b| a.extend(b),
    )
}

fn to_record(path: u64, start: &[f64], radius: f64, h: f64, e: Exit) -> ExitRecord {
    let exited = e.status == ExitStatus::Exited;
    let dist = if exited { norm(&e.position) } else { f64::INFINITY };
    ExitRecord {
        path,
        start: start.to_vec(),
        radius,
        status: e.status,
        exit_time: e.steps as f64 * h,
        exited_to_shell: ShellFlags { within_2r: dist < 2.0 * radius, within_4r: dist < 4.0 * radius },
        overshoot_flag: exited && e.last_step < CREEP_FRACTION * radius,
        exit_position: exited.then_some(e.position),
    }
}

/// Counts and rates summarising a batch of records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSummary {
    pub n: usize,
    pub exited: usize,
    pub killed: usize,
    pub censored: usize,
    pub overshoot_flagged: usize,
    pub mean_exit_time: f64,
    pub exit_time_se: f64,
}

/// Summary over all records (killed and censored paths included in the
/// time average at their stopping times).
pub fn summarize(records: &[ExitRecord]) -> ExitSummary {
    let n = records.len();
    let count = |s: ExitStatus| records.iter().filter(|r| r.status == s).count();
    let (m, se) = mean_and_se(records.iter().map(|r| r.exit_time));
    ExitSummary {
        n,
        exited: count(ExitStatus::Exited),
        killed: count(ExitStatus::Killed),
        censored: count(ExitStatus::Censored),
        overshoot_flagged: records.iter().filter(|r| r.overshoot_flag).count(),
        mean_exit_time: m,
        exit_time_se: se,
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut m = Moments::default();
    for x in xs {
        m.push(x);
    }
    (m.mean(), m.se())
}

/// Running first and second moments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        let n = self.n as f64;
        let var = (self.sum_sq / n - self.mean().powi(2)).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = path_rng(5, purpose::EXIT, 3).random();
        let b: u64 = path_rng(5, purpose::EXIT, 3).random();
        let c: u64 = path_rng(5, purpose::EXIT, 4).random();
        let d: u64 = path_rng(5, purpose::GREEN, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn start_outside_ball_is_rejected() {
        let cfg = SimConfig::new("vg", 3, 1.0, 10, 1).unwrap().with_start_points(vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(simulate_exit(&cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn exits_lie_outside_the_ball() {
        let cfg = SimConfig::new("stable(1)", 3, 0.5, 2000, 9).unwrap();
        let recs = simulate_exit(&cfg).unwrap();
        assert_eq!(recs.len(), 2000);
        for r in &recs {
            assert_eq!(r.status, ExitStatus::Exited);
            assert!(norm(r.exit_position.as_ref().unwrap()) >= 0.5);
        }
    }

    #[test]
    fn chunking_is_thread_count_independent() {
        let cfg = SimConfig::new("vg", 3, 0.1, 3000, 42).unwrap();
        let one = simulate_exit(&cfg.clone().with_workers(1)).unwrap();
        let four = simulate_exit(&cfg.with_workers(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn killed_paths_are_reported() {
        let cfg = SimConfig::new("conj-geo-iter(2,1)", 3, 10.0, 500, 1).unwrap();
        let s = summarize(&simulate_exit(&cfg).unwrap());
        assert!(s.killed > 0);
        assert_eq!(s.exited + s.killed + s.censored, 500);
    }

    #[test]
    fn moments_standard_error() {
        let (m, se) = mean_and_se([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        // Sample variance 5/3 over n = 4.
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
