//! Monte Carlo simulation of subordinators and subordinate Brownian motion.
//!
//! Paths are discrete skeletons `X_{kh} = x + B(S_{kh})` whose Brownian
//! increments have covariance `2ΔS·I` (generator `Δ`, heat kernel
//! `(4πt)^(−d/2) e^(−|x|²/4t)`). Exits are detected at grid times only; the
//! refinement tests bound the resulting bias.
//!
//! Every path draws from its own ChaCha8 stream, keyed by the master seed
//! and the path index, and work is split into fixed-size chunks merged in
//! index order, so results are bit-identical for any thread count.

mod checks;
mod estimators;
mod paths;
mod sampler;

pub use checks::{
    default_modulus_grid, harmonic_modulus_check, harmonic_modulus_sweep, krylov_safonov_sweep, mean_exit_time_sweep,
    poisson_diff_check, shell_ratio_bound, ExitTimePoint, HarmonicReport, HarmonicSweep, KrylovSafonovReport, McOptions,
    MeanValuePoint, PoissonDiffEntry, PoissonDiffReport, Regime, ShellExitPoint, TargetSet, MAX_RELATIVE_SE,
    MEAN_VALUE_PATHS, MODULUS_SPREAD,
};
pub use estimators::{
    estimate_green_ball, estimate_poisson_kernel, ikeda_watanabe_check, laplace_identity_check, Bins,
    IkedaWatanabeBin, IkedaWatanabeReport, KernelEstimate, KernelTarget, LaplaceIdentityPoint, AGREEMENT_SHARE,
    RESOLVED_SE_FRACTION,
};
pub use paths::{
    default_time_step, mean_and_se, path_rng, simulate_exit, summarize, ExitRecord, ExitStatus, ExitSummary, Moments,
    ShellFlags, SimConfig, CHUNK_PATHS, CREEP_FRACTION, DEFAULT_MAX_STEPS, STEPS_PER_EXIT_SCALE,
};
pub use sampler::{
    sample_subordinator_increment, JumpTable, Sampler, Subordinator, DEFAULT_JUMP_TRUNCATION, GAUSSIAN_SWITCH,
};
