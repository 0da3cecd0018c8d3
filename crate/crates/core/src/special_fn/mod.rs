//! Periodic Bernoulli functions, `Φ₂`, `A`, `F`, `H` and the evaluation
//! routes for `g`.

mod bernoulli;
mod big_a;
mod g;
mod phi2;

pub use bernoulli::{bernoulli1, bernoulli2};
pub use big_a::{a_one, big_a, big_a_bounded, f_bounded, f_func, oracle, sup_f, A_ONE_ERROR};
pub use g::{
    decomposition_on, g_direct_series, g_first_step, g_func, g_wilton_plus_h, h_eval, h_func, h_on,
    phi1_partial, GEval, GMethod, DIRECT_SERIES_CHECKPOINTS, DIRECT_SERIES_TERMS,
};
pub use phi2::{
    bernoulli2_tail_integral, phi2_bounded, phi2_rational, phi2_tail_integral, phi2_truncated,
    trigamma, Bounded, EULER_GAMMA,
};

use crate::tolerance::ToleranceConfig;

/// `Φ₂(λ) = Σ_{n>=1} B₂(nλ)/n²` to within `cfg.abs_tol`.
pub fn phi2(lambda: f64, cfg: &ToleranceConfig) -> f64 {
    phi2_bounded(lambda, cfg.abs_tol).value
}
