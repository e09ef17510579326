use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ControlSet;
use crate::quadrature::adaptive_simpson;

/// Accuracy target for set-measure quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Relative tolerance with respect to the ball volume.
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-6, max_depth: 40 }
    }
}

/// Lebesgue measure of the Euclidean ball of radius `r` in `ℝⁿ`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0 * r,
        2 => PI * r * r,
        3 => 4.0 / 3.0 * PI * r * r * r,
        n => {
            let h = n as f64 / 2.0;
            PI.powf(h) / statrs::function::gamma::gamma(h + 1.0) * r.powi(n as i32)
        }
    }
}

/// `|ω ∩ B(center, radius)|`.
///
/// One dimension is handled by exact interval arithmetic. Higher dimensions
/// integrate the measure of sections along the first axis after the
/// substitution `x₀ = c₀ + r sin θ`, which removes the square-root endpoint
/// behaviour of the ball, with breakpoints at every first-axis boundary of ω.
pub fn intersection_measure(omega: &ControlSet, center: &[f64], radius: f64, quad: &QuadSpec) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
    }
    if center.len() != omega.dim {
        return Err(Error::DimensionMismatch { expected: omega.dim, got: center.len() });
    }
    measure_rec(omega, center, radius, quad.rel_tol * ball_volume(omega.dim, radius), quad.max_depth)
}

fn measure_rec(omega: &ControlSet, center: &[f64], radius: f64, abs_tol: f64, depth: usize) -> Result<f64> {
    let n = omega.dim;
    if omega.parts.is_empty() || radius <= 0.0 {
        return Ok(0.0);
    }
    if omega.is_full() {
        return Ok(ball_volume(n, radius));
    }
    if n == 1 {
        let iv = omega.intervals_within(center[0] - radius, center[0] + radius)?;
        return Ok(iv.iter().map(|(a, b)| b - a).sum());
    }
    let c0 = center[0];
    let mut cuts = vec![-FRAC_PI_2];
    cuts.extend(omega.axis0_breaks(c0 - radius, c0 + radius).into_iter().map(|b| ((b - c0) / radius).clamp(-1.0, 1.0).asin()));
    cuts.push(FRAC_PI_2);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let pieces = (cuts.len() - 1) as f64;
    let piece_tol = abs_tol / pieces;
    let mut total = 0.0;
    let mut failure: Option<Error> = None;
    for w in cuts.windows(2) {
        let section_tol = piece_tol / (PI * radius);
        let value = adaptive_simpson(w[0], w[1], piece_tol, depth, |theta| {
            let x0 = c0 + radius * theta.sin();
            let rr = radius * theta.cos();
            if rr <= 0.0 {
                return 0.0;
            }
            match omega.slice(x0).and_then(|s| measure_rec(&s, &center[1..], rr, section_tol, depth)) {
                Ok(v) => v * rr,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += value?;
    }
    Ok(total)
}
