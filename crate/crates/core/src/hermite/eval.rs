use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hermite::MultiIndex;

/// Largest order accepted by the evaluators.
pub const MAX_ORDER: usize = 1_000_000;

const RESCALE: f64 = 1e150;
const LN_RESCALE: f64 = 345.387_763_949_107; // ln(1e150)

/// `φ_0(0) = π^{-1/4}`.
pub fn ground_state_peak() -> f64 {
    PI.powf(-0.25)
}

/// Values `φ_0(x), …, φ_kmax(x)` of the normalized 1-D Hermite functions.
///
/// Runs the three-term recurrence on the functions themselves, carrying the
/// Gaussian factor as a separate log-scale so that large `k·x²` neither
/// overflows the polynomial part nor underflows the envelope prematurely.
pub fn hermite_eval_all(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    hermite_eval_into(x, &mut out);
    out
}

/// Fills `out[k] = φ_k(x)` for `k < out.len()`.
pub fn hermite_eval_into(x: f64, out: &mut [f64]) {
    assert!(out.len() <= MAX_ORDER + 1, "Hermite order above guard {MAX_ORDER}");
    if out.is_empty() {
        return;
    }
    if !x.is_finite() || x.abs() > 1e6 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut log_scale = -0.5 * x * x;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = ground_state_peak();
    out[0] = cur * factor;
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += LN_RESCALE;
            factor = log_scale.exp();
        }
        out[k + 1] = cur * factor;
    }
}

/// `φ_k(x)`.
pub fn hermite_eval_1d(k: usize, x: f64) -> f64 {
    assert!(k <= MAX_ORDER, "Hermite order {k} above guard {MAX_ORDER}");
    let mut buf = vec![0.0; k + 1];
    hermite_eval_into(x, &mut buf);
    buf[k]
}

/// `Φ_α(x) = ∏ φ_{α_j}(x_j)`.
pub fn phi_alpha_eval(alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
    if alpha.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), got: x.len() });
    }
    Ok(alpha.entries().iter().zip(x).map(|(&k, &xj)| hermite_eval_1d(k, xj)).product())
}
