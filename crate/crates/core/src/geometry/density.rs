use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{halton_point, Bounds};

/// `⟨x⟩ = (1 + |x|²)^{1/2}`.
pub fn japanese_bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Radius function `ρ` controlling the scale of the thickness condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DensityFn {
    /// `ρ ≡ m`.
    Constant { m: f64 },
    /// `ρ(x) = R⟨x⟩^{1−ε}`.
    Power { r: f64, eps: f64 },
    /// Radial profile `ρ(x) = interp(|x|)`, linear between knots and
    /// constant beyond the last one. `m`, `r`, `eps` are the declared bounds.
    Tabulated { radii: Vec<f64>, values: Vec<f64>, m: f64, r: f64, eps: f64 },
}

/// Declared bounds `m ≤ ρ(x) ≤ R⟨x⟩^{1−ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBounds {
    pub m: f64,
    pub r: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub lipschitz_ok: bool,
    pub bounds_ok: bool,
    /// Largest `|ρ(x) − ρ(y)| / ‖x − y‖` over sampled pairs.
    pub worst_ratio: f64,
    /// Smallest slack of `ρ(x) − m` and `R⟨x⟩^{1−ε} − ρ(x)` over samples.
    pub worst_bound_slack: f64,
    pub samples: usize,
}

impl DensityFn {
    pub fn constant(m: f64) -> Self {
        Self::Constant { m }
    }

    pub fn power(r: f64, eps: f64) -> Self {
        Self::Power { r, eps }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant { m } => *m,
            Self::Power { r, eps } => r * japanese_bracket(x).powf(1.0 - eps),
            Self::Tabulated { radii, values, .. } => {
                let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                interpolate(radii, values, t)
            }
        }
    }

    pub fn bounds(&self) -> DensityBounds {
        match self {
            Self::Constant { m } => DensityBounds { m: *m, r: *m, eps: 1.0 },
            Self::Power { r, eps } => DensityBounds { m: *r, r: *r, eps: *eps },
            Self::Tabulated { m, r, eps, .. } => DensityBounds { m: *m, r: *r, eps: *eps },
        }
    }

    /// Structural checks that do not need sampling.
    pub fn check(&self) -> Result<()> {
        match self {
            Self::Constant { m } if !(*m > 0.0 && m.is_finite()) => {
                Err(Error::InvalidDensity(format!("constant density must be positive, got {m}")))
            }
            Self::Power { r, eps } if !(*r > 0.0 && *eps > 0.0 && *eps <= 1.0) => {
                Err(Error::InvalidDensity(format!("power density needs R > 0 and ε in (0,1], got R={r}, ε={eps}")))
            }
            Self::Tabulated { radii, values, .. } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::InvalidDensity("tabulated density needs matching non-empty grids".into()));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidDensity("tabulated radii must be increasing".into()));
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
                    return Err(Error::InvalidDensity(format!("tabulated value {v} is not positive")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Smallest value of `ρ` on a box, from the sample used by the
    /// covering and validation routines (exact for the built-in kinds).
    pub fn min_on(&self, bounds: &Bounds) -> f64 {
        match self {
            Self::Constant { m } => *m,
            Self::Power { .. } => {
                let closest: Vec<f64> = bounds.lo.iter().zip(&bounds.hi).map(|(a, b)| 0.0f64.clamp(*a, *b)).collect();
                self.value(&closest)
            }
            Self::Tabulated { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = xs.partition_point(|&x| x <= t);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (t - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

/// Checks `m ≤ ρ ≤ R⟨x⟩^{1−ε}` and the 1/2-Lipschitz property on a
/// deterministic Halton sample of `bounds`.
pub fn density_validate(rho: &DensityFn, bounds: &Bounds, samples: usize) -> Result<DensityReport> {
    if samples < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: samples });
    }
    rho.check()?;
    let pts: Vec<Vec<f64>> = (0..samples).map(|i| halton_point(i + 1, bounds)).collect();
    let vals: Vec<f64> = pts.iter().map(|p| rho.value(p)).collect();
    if let Some(v) = vals.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidDensity(format!("sampled value {v} is not positive")));
    }
    let b = rho.bounds();
    let mut slack = f64::INFINITY;
    for (p, &v) in pts.iter().zip(&vals) {
        let upper = b.r * japanese_bracket(p).powf(1.0 - b.eps);
        slack = slack.min(v - b.m).min(upper - v);
    }
    let mut worst = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = euclid(&pts[i], &pts[j]);
            if d > 0.0 {
                worst = worst.max((vals[i] - vals[j]).abs() / d);
            }
        }
    }
    let tol = 1e-12;
    Ok(DensityReport {
        lipschitz_ok: worst <= 0.5 + tol,
        bounds_ok: slack >= -tol * (1.0 + b.r),
        worst_ratio: worst,
        worst_bound_slack: slack,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_density_within_lipschitz_threshold() {
        let rep = density_validate(&DensityFn::power(0.5, 0.5), &Bounds::interval(-10.0, 10.0), 400).unwrap();
        assert!(rep.lipschitz_ok && rep.bounds_ok);
    }

    #[test]
    fn constant_density_is_trivially_valid() {
        let rho = DensityFn::constant(1.0);
        assert_eq!(rho.bounds(), DensityBounds { m: 1.0, r: 1.0, eps: 1.0 });
        let rep = density_validate(&rho, &Bounds::interval(-10.0, 10.0), 50).unwrap();
        assert!(rep.lipschitz_ok && rep.bounds_ok);
        assert_eq!(rep.worst_ratio, 0.0);
    }

    #[test]
    fn steep_power_density_fails_lipschitz() {
        let rho = DensityFn::power(5.0, 0.1);
        let rep = density_validate(&rho, &Bounds::interval(-10.0, 10.0), 400).unwrap();
        assert!(!rep.lipschitz_ok);
        // Oracle: max |ρ'| on a fine grid, ρ'(x) = R(1−ε) x ⟨x⟩^{−1−ε}.
        let grad_max = (0..=20000)
            .map(|i| -10.0 + 1e-3 * i as f64)
            .map(|x: f64| 5.0 * 0.9 * x.abs() * (1.0 + x * x).powf(-0.55))
            .fold(0.0f64, f64::max);
        assert!(rep.worst_ratio <= grad_max + 1e-9);
        assert!(rep.worst_ratio > 0.9 * grad_max);
    }

    #[test]
    fn tabulated_rejects_non_positive_values() {
        let rho = DensityFn::Tabulated { radii: vec![0.0, 1.0], values: vec![1.0, 0.0], m: 1.0, r: 1.0, eps: 1.0 };
        let err = density_validate(&rho, &Bounds::interval(-1.0, 1.0), 10).unwrap_err();
        assert!(matches!(err, Error::InvalidDensity(_)));
    }

    #[test]
    fn tabulated_interpolates_radially() {
        let rho = DensityFn::Tabulated { radii: vec![0.0, 2.0], values: vec![1.0, 2.0], m: 1.0, r: 2.0, eps: 1.0 };
        assert!((rho.value(&[1.0]) - 1.5).abs() < 1e-15);
        assert!((rho.value(&[-1.0]) - 1.5).abs() < 1e-15);
        assert_eq!(rho.value(&[5.0]), 2.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(density_validate(&DensityFn::constant(1.0), &Bounds::interval(0.0, 1.0), 1).is_err());
    }
}
