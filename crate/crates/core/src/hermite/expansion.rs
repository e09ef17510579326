use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hermite::{HermiteBasis, MultiIndex};

/// Default cap on the degree produced by composite ladder operations.
pub const DEFAULT_DEGREE_CAP: usize = 2048;

/// An element of `E_N`: dense coefficients over the shared enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    basis: Arc<HermiteBasis>,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

impl HermiteExpansion {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        let basis = HermiteBasis::shared(dim, degree);
        let coeffs = vec![0.0; basis.len()];
        Self { basis, coeffs }
    }

    pub fn from_basis(basis: Arc<HermiteBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: coeffs.len() });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_basis(HermiteBasis::shared(dim, degree), coeffs)
    }

    /// `Φ_α` as an element of `E_{|α|}`.
    pub fn basis_function(alpha: &MultiIndex) -> Self {
        let mut f = Self::zeros(alpha.dim(), alpha.order());
        let i = f.basis.index_of(alpha).expect("index within its own degree");
        f.coeffs[i] = 1.0;
        f
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &Arc<HermiteBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.basis.index_of(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.basis.indices().iter().zip(self.coeffs.iter().copied())
    }

    /// `‖f‖²_{L²}` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.iter().map(|(a, c)| c * other.coeff(a)).sum())
    }

    /// Same function viewed in `E_degree` (truncating when shrinking).
    pub fn with_degree(&self, degree: usize) -> Self {
        if degree == self.degree() {
            return self.clone();
        }
        let basis = HermiteBasis::shared(self.dim(), degree);
        let mut coeffs = vec![0.0; basis.len()];
        let shared = basis.len().min(self.coeffs.len());
        coeffs[..shared].copy_from_slice(&self.coeffs[..shared]);
        Self { basis, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self + s·other`, lifted to the larger degree.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let degree = self.degree().max(other.degree());
        let mut out = self.with_degree(degree);
        let n = other.coeffs.len();
        for (o, c) in out.coeffs[..n].iter_mut().zip(&other.coeffs) {
            *o += s * c;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range for dimension {}", self.dim())));
        }
        Ok(())
    }
}

/// Creation (`Raise`) or annihilation (`Lower`) operator along `axis`:
/// `a₊φ_k = √(k+1) φ_{k+1}`, `a₋φ_k = √k φ_{k−1}`.
pub fn apply_ladder(f: &HermiteExpansion, axis: usize, which: Ladder) -> Result<HermiteExpansion> {
    f.check_axis(axis)?;
    let degree = match which {
        Ladder::Raise => f.degree() + 1,
        Ladder::Lower => f.degree().saturating_sub(1),
    };
    let mut out = HermiteExpansion::zeros(f.dim(), degree);
    for (alpha, c) in f.iter() {
        if c == 0.0 {
            continue;
        }
        let k = alpha.get(axis);
        let (target, weight) = match which {
            Ladder::Raise => (alpha.with(axis, k + 1), ((k + 1) as f64).sqrt()),
            Ladder::Lower if k == 0 => continue,
            Ladder::Lower => (alpha.with(axis, k - 1), (k as f64).sqrt()),
        };
        let i = out.basis.index_of(&target).expect("ladder target inside degree");
        out.coeffs[i] += weight * c;
    }
    Ok(out)
}

/// `x_j f = (a₊ + a₋) f / √2`.
pub fn multiply_coordinate(f: &HermiteExpansion, axis: usize) -> Result<HermiteExpansion> {
    let up = apply_ladder(f, axis, Ladder::Raise)?;
    let down = apply_ladder(f, axis, Ladder::Lower)?;
    Ok(up.axpy(1.0, &down)?.scale(std::f64::consts::FRAC_1_SQRT_2))
}

/// `∂_j f = (a₋ − a₊) f / √2`.
pub fn differentiate(f: &HermiteExpansion, axis: usize) -> Result<HermiteExpansion> {
    let up = apply_ladder(f, axis, Ladder::Raise)?;
    let down = apply_ladder(f, axis, Ladder::Lower)?;
    Ok(down.with_degree(up.degree()).axpy(-1.0, &up)?.scale(std::f64::consts::FRAC_1_SQRT_2))
}

/// `x^α ∂^β f`, exactly, as an element of `E_{N+|α|+|β|}`.
pub fn apply_position_derivative(f: &HermiteExpansion, alpha: &MultiIndex, beta: &MultiIndex) -> Result<HermiteExpansion> {
    apply_position_derivative_capped(f, alpha, beta, DEFAULT_DEGREE_CAP)
}

pub fn apply_position_derivative_capped(
    f: &HermiteExpansion,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    cap: usize,
) -> Result<HermiteExpansion> {
    for m in [alpha, beta] {
        if m.dim() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: m.dim() });
        }
    }
    let degree = f.degree() + alpha.order() + beta.order();
    if degree > cap {
        return Err(Error::DegreeOverflow { degree, cap });
    }
    let mut g = f.clone();
    for (axis, &b) in beta.entries().iter().enumerate() {
        for _ in 0..b {
            g = differentiate(&g, axis)?;
        }
    }
    for (axis, &a) in alpha.entries().iter().enumerate() {
        for _ in 0..a {
            g = multiply_coordinate(&g, axis)?;
        }
    }
    Ok(g.with_degree(degree))
}

/// `H f = (−Δ + |x|²) f`, diagonal with eigenvalue `2|α| + n`.
pub fn harmonic_apply(f: &HermiteExpansion) -> HermiteExpansion {
    let n = f.dim() as f64;
    let coeffs = f.iter().map(|(a, c)| (2.0 * a.order() as f64 + n) * c).collect();
    HermiteExpansion { basis: f.basis.clone(), coeffs }
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    dim: usize,
    degree: usize,
    coeffs: Vec<(MultiIndex, f64)>,
}

impl Serialize for HermiteExpansion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExpansionRepr { dim: self.dim(), degree: self.degree(), coeffs: self.iter().map(|(a, c)| (a.clone(), c)).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermiteExpansion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ExpansionRepr::deserialize(d)?;
        if repr.dim == 0 {
            return Err(D::Error::custom("dim must be positive"));
        }
        let mut f = HermiteExpansion::zeros(repr.dim, repr.degree);
        for (alpha, c) in repr.coeffs {
            if alpha.dim() != repr.dim {
                return Err(D::Error::custom(format!("index {alpha} has wrong dimension")));
            }
            let i = f.basis.index_of(&alpha).ok_or_else(|| D::Error::custom(format!("index {alpha} exceeds degree {}", repr.degree)))?;
            f.coeffs[i] = c;
        }
        Ok(f)
    }
}
