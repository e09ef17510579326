//! Hermite functions and exact ladder calculus on the finite spans `E_N`.

mod eval;
mod expansion;
mod index;

pub use eval::{ground_state_peak, hermite_eval_1d, hermite_eval_all, hermite_eval_into, phi_alpha_eval, MAX_ORDER};
pub use expansion::{
    apply_ladder, apply_position_derivative, apply_position_derivative_capped, differentiate, harmonic_apply, multiply_coordinate,
    HermiteExpansion, Ladder, DEFAULT_DEGREE_CAP,
};
pub(crate) use index::ln_factorial;
pub use index::{indices_of_degree, span_dimension, HermiteBasis, MultiIndex};
