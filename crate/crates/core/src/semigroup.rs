//! Diagonal semigroups `e^{−tH^s}` on Hermite coefficients, the projections
//! `π_k`, dissipation of high levels and Gelfand-Shilov type weighted norms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::HermiteExpansion;

/// Fractional power `s ∈ (1/2, 1]` and dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct EvolutionSpec {
    s: f64,
    dim: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    s: f64,
    dim: usize,
}

impl TryFrom<RawSpec> for EvolutionSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        EvolutionSpec::new(r.s, r.dim)
    }
}

impl EvolutionSpec {
    pub fn new(s: f64, dim: usize) -> Result<Self> {
        if !(s > 0.5) {
            return Err(Error::InvalidParameter("s must exceed 1/2".into()));
        }
        if s > 1.0 {
            return Err(Error::InvalidParameter(format!("s must not exceed 1, got {s}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { s, dim })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(2j + n)^s` for a level `j = |α|`.
    pub fn eigenvalue(&self, level: usize) -> f64 {
        (2.0 * level as f64 + self.dim as f64).powf(self.s)
    }
}

fn check_dim(f: &HermiteExpansion, spec: &EvolutionSpec) -> Result<()> {
    if f.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: f.dim() });
    }
    Ok(())
}

/// `e^{−tH^s} f`.
pub fn evolve(f: &HermiteExpansion, t: f64, spec: &EvolutionSpec) -> Result<HermiteExpansion> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    check_dim(f, spec)?;
    let factors: Vec<f64> = (0..=f.degree()).map(|j| (-t * spec.eigenvalue(j)).exp()).collect();
    let mut g = f.clone();
    let basis = f.basis().clone();
    for (c, a) in g.coeffs_mut().iter_mut().zip(basis.indices()) {
        *c *= factors[a.order()];
    }
    Ok(g)
}

/// `π_k f`: coefficients with `|α| > k` set to zero.
pub fn project(f: &HermiteExpansion, k: usize) -> HermiteExpansion {
    let mut g = f.clone();
    let cut = f.basis().prefix_len(k.min(f.degree()));
    g.coeffs_mut()[cut..].iter_mut().for_each(|c| *c = 0.0);
    g
}

/// `‖(1 − π_k) f‖`.
pub fn tail_norm(f: &HermiteExpansion, k: usize) -> f64 {
    if k >= f.degree() {
        return 0.0;
    }
    let cut = f.basis().prefix_len(k);
    f.coeffs()[cut..].iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Level norms `‖P_j f‖` for `j = 0, …, N`.
pub fn level_norms(f: &HermiteExpansion) -> Vec<f64> {
    (0..=f.degree()).map(|j| f.coeffs()[f.basis().level_range(j)].iter().map(|c| c * c).sum::<f64>().sqrt()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub k: usize,
    pub t: f64,
    /// `‖(1−π_k) e^{−tH^s} f‖`.
    pub tail_norm: f64,
    /// `e^{−t(2k+2+n)^s} ‖f‖`.
    pub bound: f64,
    /// `e^{−t(2k+2+n)^s} ‖(1−π_k) f‖`, attained on level-`k+1` data.
    pub sharp_bound: f64,
    /// Weaker first-level rate `e^{−t(2k+n)^s} ‖(1−π_k) f‖`.
    pub weak_bound: f64,
    pub holds: bool,
}

pub fn dissipation_tail(f: &HermiteExpansion, k: usize, t: f64, spec: &EvolutionSpec) -> Result<DissipationReport> {
    let g = evolve(f, t, spec)?;
    let tail = tail_norm(&g, k);
    let rate = (-t * spec.eigenvalue(k + 1)).exp();
    let bound = rate * f.norm();
    let f_tail = tail_norm(f, k);
    Ok(DissipationReport {
        k,
        t,
        tail_norm: tail,
        bound,
        sharp_bound: rate * f_tail,
        weak_bound: (-t * spec.eigenvalue(k)).exp() * f_tail,
        holds: tail <= bound + 1e-12,
    })
}

/// Weighted energy `Σ_α e^{w(|α|)} |c_α|²`, or `None` when it overflows.
pub fn weighted_energy(f: &HermiteExpansion, weight_ln: impl Fn(usize) -> f64) -> Option<f64> {
    // log-sum-exp over non-zero coefficients
    let terms: Vec<f64> = f.iter().filter(|(_, c)| *c != 0.0).map(|(a, c)| weight_ln(a.order()) + 2.0 * c.abs().ln()).collect();
    if terms.is_empty() {
        return Some(0.0);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum = top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    let v = sum.exp();
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsNorm {
    pub value: f64,
    pub infinite: bool,
}

impl GsNorm {
    fn from_option(v: Option<f64>) -> Self {
        match v {
            Some(value) => Self { value, infinite: false },
            None => Self { value: f64::INFINITY, infinite: true },
        }
    }
}

/// `Σ_α exp(t₀ |α|^{exponent}) |c_α|²`.
pub fn gs_decay_norm(f: &HermiteExpansion, t0: f64, exponent: f64) -> Result<GsNorm> {
    if !(t0 > 0.0) || !(exponent > 0.0) {
        return Err(Error::InvalidParameter("t₀ and the exponent must be positive".into()));
    }
    Ok(GsNorm::from_option(weighted_energy(f, |j| t0 * (j as f64).powf(exponent))))
}

/// `Σ_α exp(rate (2|α|+n)^s) |c_α|²`.
pub fn hermite_decay_sum(f: &HermiteExpansion, rate: f64, spec: &EvolutionSpec) -> Result<GsNorm> {
    check_dim(f, spec)?;
    Ok(GsNorm::from_option(weighted_energy(f, |j| rate * spec.eigenvalue(j))))
}

/// One row of a decay trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub level: usize,
    pub coefficient: f64,
}

/// Level norms of `e^{−tH^s} f` for every `t` in `times`.
pub fn decay_trace(f: &HermiteExpansion, times: &[f64], spec: &EvolutionSpec) -> Result<Vec<DecayRow>> {
    let mut rows = Vec::new();
    for &t in times {
        let g = evolve(f, t, spec)?;
        for (level, coefficient) in level_norms(&g).into_iter().enumerate() {
            rows.push(DecayRow { t, level, coefficient });
        }
    }
    Ok(rows)
}

pub fn write_decay_csv<W: Write>(rows: &[DecayRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Inconsistent(format!("csv: {e}")))?;
    }
    out.flush().map_err(|e| Error::Inconsistent(e.to_string()))
}
