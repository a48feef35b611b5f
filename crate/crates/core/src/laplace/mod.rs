//! Shared numerical engine: quadrature on `(0, ∞)`, Laplace inversion, and
//! the power-weighted exponential integral `∫ t^(-p) e^(-ar/t) w(t) dt`.

mod appendix;
mod inversion;
mod quadrature;

pub use appendix::{appendix_integral, check_lemma_a1_bounds};
pub use inversion::{
    invert_laplace, stehfest, stehfest_weights, talbot, InversionMethod, InversionProfile, Inverter, Transform,
};
pub use quadrature::{
    gauss_kronrod_15, integrate, integrate_0_inf, QuadratureResult, SemiInfinite, Tolerance,
};
