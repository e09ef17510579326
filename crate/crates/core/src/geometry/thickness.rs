use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, halton_point, intersection_measure, Bounds, ControlSet, DensityFn, QuadSpec};

/// Finite-sample thickness certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessEstimate {
    /// `min_x |ω ∩ B(x,ρ(x))| / |B(x,ρ(x))|` over the sample.
    pub gamma_hat: f64,
    /// Center attaining the minimum.
    pub argmin: Vec<f64>,
    /// Ratio at every sampled center, in sample order.
    pub ratios: Vec<f64>,
    /// Always true: the estimate is a finite-sample infimum, not a proof.
    pub sample_based: bool,
}

/// Sample centers: `count` Halton points in `bounds`, plus the midpoint of
/// every gap of ω along the first axis (other coordinates at the box center).
pub fn sample_centers(omega: &ControlSet, bounds: &Bounds, count: usize) -> Result<Vec<Vec<f64>>> {
    if omega.dim != bounds.dim() {
        return Err(Error::DimensionMismatch { expected: omega.dim, got: bounds.dim() });
    }
    let mut centers: Vec<Vec<f64>> = (0..count).map(|i| halton_point(i + 1, bounds)).collect();
    let mid: Vec<f64> = bounds.lo.iter().zip(&bounds.hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let gap_mids: Vec<f64> = if omega.dim == 1 {
        omega.gaps_within(bounds.lo[0], bounds.hi[0])?.into_iter().map(|(a, b)| 0.5 * (a + b)).collect()
    } else {
        let mut cuts = vec![bounds.lo[0]];
        cuts.extend(omega.axis0_breaks(bounds.lo[0], bounds.hi[0]));
        cuts.push(bounds.hi[0]);
        cuts.windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .filter(|&x0| {
                let mut p = mid.clone();
                p[0] = x0;
                !omega.contains(&p)
            })
            .collect()
    };
    for g in gap_mids {
        let mut p = mid.clone();
        p[0] = g;
        centers.push(p);
    }
    Ok(centers)
}

/// Thickness ratio at a single center.
pub fn thickness_ratio(omega: &ControlSet, rho: &DensityFn, center: &[f64], quad: &QuadSpec) -> Result<f64> {
    let r = rho.value(center);
    let m = intersection_measure(omega, center, r, quad)?;
    Ok((m / ball_volume(omega.dim, r)).clamp(0.0, 1.0))
}

pub fn thickness_estimate(omega: &ControlSet, rho: &DensityFn, centers: &[Vec<f64>], quad: &QuadSpec) -> Result<ThicknessEstimate> {
    if centers.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    rho.check()?;
    let ratios = centers.iter().map(|c| thickness_ratio(omega, rho, c, quad)).collect::<Result<Vec<f64>>>()?;
    let (imin, &gamma_hat) = ratios.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty sample");
    Ok(ThicknessEstimate { gamma_hat, argmin: centers[imin].clone(), ratios, sample_based: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub gamma: f64,
    /// `1 − (1−γ)6ⁿ`.
    pub predicted: f64,
    /// `γ > 1 − 6^{−n}`.
    pub hypothesis_ok: bool,
    /// `ρ₁ ≤ ρ₂` at every sampled center.
    pub ordering_ok: bool,
    /// Measured thickness with respect to `ρ₁`.
    pub measured_rho1: f64,
    /// Measured thickness with respect to `ρ₂`.
    pub measured_rho2: f64,
    /// `measured_rho2 ≥ predicted − tol`.
    pub holds: bool,
    pub tol: f64,
}

/// Predicted thickness after enlarging the density.
pub fn transferred_gamma(gamma: f64, dim: usize) -> f64 {
    1.0 - (1.0 - gamma) * 6f64.powi(dim as i32)
}

/// Empirical check that thickness `γ` for `ρ₁` yields thickness
/// `1 − (1−γ)6ⁿ` for a larger density `ρ₂`. Hypothesis violations are
/// reported in the flags rather than raised.
pub fn thickness_transfer_check(
    omega: &ControlSet,
    rho1: &DensityFn,
    rho2: &DensityFn,
    gamma: f64,
    centers: &[Vec<f64>],
    quad: &QuadSpec,
) -> Result<TransferReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("γ must lie in [0,1], got {gamma}")));
    }
    let n = omega.dim;
    let e1 = thickness_estimate(omega, rho1, centers, quad)?;
    let e2 = thickness_estimate(omega, rho2, centers, quad)?;
    let ordering_ok = centers.iter().all(|c| rho1.value(c) <= rho2.value(c));
    let predicted = transferred_gamma(gamma, n);
    let tol = 10.0 * quad.rel_tol;
    Ok(TransferReport {
        gamma,
        predicted,
        hypothesis_ok: gamma > 1.0 - 6f64.powi(-(n as i32)),
        ordering_ok,
        measured_rho1: e1.gamma_hat,
        measured_rho2: e2.gamma_hat,
        holds: e2.gamma_hat >= predicted - tol,
        tol,
    })
}
