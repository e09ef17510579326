//! Complex quadratic symbols `q(X) = XᵀQX` on phase space `X = (x, ξ) ∈ ℝ²ⁿ`,
//! their Hamilton maps, singular spaces and partial ellipticity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type CMatrix = DMatrix<Complex64>;

/// Tolerance for the `Q + JF = 0` self-consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Complex quadratic form with symmetric `2n×2n` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticFormSpec", into = "QuadraticFormSpec")]
pub struct QuadraticForm {
    dim: usize,
    q: CMatrix,
}

/// Row-major serialized form: `entries[i·2n + j] = [re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticFormSpec {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl TryFrom<QuadraticFormSpec> for QuadraticForm {
    type Error = Error;

    fn try_from(spec: QuadraticFormSpec) -> Result<Self> {
        let m = 2 * spec.dim;
        if spec.entries.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, got: spec.entries.len() });
        }
        let q = CMatrix::from_row_iterator(m, m, spec.entries.iter().map(|e| Complex64::new(e[0], e[1])));
        QuadraticForm::new(spec.dim, q)
    }
}

impl From<QuadraticForm> for QuadraticFormSpec {
    fn from(f: QuadraticForm) -> Self {
        let m = 2 * f.dim;
        let entries = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| [f.q[(i, j)].re, f.q[(i, j)].im]).collect();
        QuadraticFormSpec { dim: f.dim, entries }
    }
}

impl QuadraticForm {
    pub fn new(dim: usize, q: CMatrix) -> Result<Self> {
        let m = 2 * dim;
        if dim == 0 || q.nrows() != m || q.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: q.nrows() });
        }
        let scale = q.iter().fold(1.0f64, |s, z| s.max(z.norm()));
        let asym = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).fold(0.0f64, |w, (i, j)| w.max((q[(i, j)] - q[(j, i)]).norm()));
        if asym > CONSISTENCY_TOL * scale {
            return Err(Error::Inconsistent(format!("quadratic form matrix is not symmetric (defect {asym:.3e})")));
        }
        Ok(Self { dim, q })
    }

    /// Builds `Q` from real and imaginary parts.
    pub fn from_parts(dim: usize, re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch { expected: re.nrows(), got: im.nrows() });
        }
        let q = CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
        Self::new(dim, q)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.im)
    }

    /// `q(X) = XᵀQX` for real `X`.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let m = 2 * self.dim;
        if x.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: x.len() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += self.q[(i, j)] * (x[i] * x[j]);
            }
        }
        Ok(acc)
    }

    /// `Re q ≥ 0`, decided by the smallest eigenvalue of `Re Q`.
    pub fn real_part_nonnegative(&self, tol: f64) -> bool {
        let re = self.real_part();
        let lmin = nalgebra::SymmetricEigen::new(re).eigenvalues.min();
        lmin >= -tol
    }
}

/// Standard symplectic matrix `J = [[0, I], [−I, 0]]`.
pub fn symplectic_j(dim: usize) -> DMatrix<f64> {
    let m = 2 * dim;
    DMatrix::from_fn(m, m, |i, j| {
        if j == i + dim {
            1.0
        } else if i == j + dim {
            -1.0
        } else {
            0.0
        }
    })
}

/// `σ((x,ξ),(y,η)) = ⟨ξ,y⟩ − ⟨x,η⟩`.
pub fn sigma(x: &[f64], z: &[Complex64]) -> Complex64 {
    let n = x.len() / 2;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        acc += z[j] * x[n + j] - z[n + j] * x[j];
    }
    acc
}

/// Hamilton map `F` of a quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonMap {
    dim: usize,
    f: CMatrix,
}

impl HamiltonMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.f
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.f.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.f.map(|z| z.im)
    }
}

/// `F = [[Q_ξx, Q_ξξ], [−Q_xx, −Q_xξ]]`, i.e. half the Hessian blocks of `q`.
///
/// The result is cross-checked against `F = JQ` (so that `Q + JF = 0`) and
/// the polarization identity `q(X,Y) = σ(X, FY)` on the unit vectors.
pub fn hamilton_map(q: &QuadraticForm) -> Result<HamiltonMap> {
    let n = q.dim;
    let m = 2 * n;
    let qm = &q.q;
    let zero = Complex64::new(0.0, 0.0);
    let mut f = CMatrix::from_element(m, m, zero);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = qm[(n + i, j)];
            f[(i, n + j)] = qm[(n + i, n + j)];
            f[(n + i, j)] = -qm[(i, j)];
            f[(n + i, n + j)] = -qm[(i, n + j)];
        }
    }
    let jm = symplectic_j(n).map(|v| Complex64::new(v, 0.0));
    let defect = (qm + &jm * &f).iter().fold(0.0f64, |w, z| w.max(z.norm()));
    let scale = qm.iter().fold(1.0f64, |s, z| s.max(z.norm()));
    if defect > CONSISTENCY_TOL * scale {
        return Err(Error::Inconsistent(format!("Q + JF defect {defect:.3e}")));
    }
    for a in 0..m {
        let mut ea = vec![0.0; m];
        ea[a] = 1.0;
        for b in 0..m {
            let fy: Vec<Complex64> = (0..m).map(|i| f[(i, b)]).collect();
            let d = (sigma(&ea, &fy) - qm[(a, b)]).norm();
            if d > CONSISTENCY_TOL * scale {
                return Err(Error::Inconsistent(format!("polarization identity defect {d:.3e} at ({a},{b})")));
            }
        }
    }
    Ok(HamiltonMap { dim: n, f })
}

/// Singular space `S = ∩_{j<2n} Ker[Re F (Im F)^j] ∩ ℝ²ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpaceResult {
    #[serde(rename = "dimS")]
    pub dim_s: usize,
    /// First truncation index whose intersection is `{0}`.
    pub k0: Option<usize>,
    /// Orthonormal real basis of `S`.
    pub basis: Vec<Vec<f64>>,
    /// Dimension of `∩_{j≤k}` for `k = 0, …, 2n−1`.
    pub truncated_dims: Vec<usize>,
    /// Some singular value fell within a factor 10 of the rank threshold.
    pub ambiguous: bool,
}

impl SingularSpaceResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Iterated kernel intersection.
///
/// Keeps an orthonormal basis `V` of the current intersection and replaces
/// it by `V·N`, where `N` spans the numerical kernel of the stacked real and
/// imaginary parts of `M_j V`, `M_j = Re F (Im F)^j`. Rank is decided by
/// singular values below `tol·‖M_j‖₂`.
pub fn singular_space(f: &HamiltonMap, tol: f64) -> Result<SingularSpaceResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let m = 2 * f.dim;
    let re = f.f.map(|z| Complex64::new(z.re, 0.0));
    let im = f.f.map(|z| Complex64::new(z.im, 0.0));
    let mut power = CMatrix::identity(m, m);
    let mut basis = DMatrix::<f64>::identity(m, m);
    let mut dims = Vec::with_capacity(m);
    let mut k0 = None;
    let mut ambiguous = false;
    for j in 0..m {
        let mj = &re * &power;
        power = &power * &im;
        if basis.ncols() > 0 {
            let stacked = stack_parts(&mj);
            let norm = stacked.norm().max(f64::MIN_POSITIVE);
            let op_norm = nalgebra::SVD::new(stacked.clone(), false, false).singular_values.max();
            let threshold = tol * op_norm;
            let restricted = &stacked * &basis;
            let (kernel, amb) = null_space(&restricted, threshold, norm);
            ambiguous |= amb;
            basis = &basis * kernel;
            if basis.ncols() > 0 {
                basis = orthonormalize(&basis);
            }
        }
        dims.push(basis.ncols());
        if k0.is_none() && basis.ncols() == 0 {
            k0 = Some(j);
        }
    }
    let vecs = (0..basis.ncols()).map(|c| basis.column(c).iter().copied().collect()).collect();
    Ok(SingularSpaceResult { dim_s: basis.ncols(), k0, basis: vecs, truncated_dims: dims, ambiguous })
}

fn stack_parts(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, c, |i, j| if i < r { m[(i, j)].re } else { m[(i - r, j)].im })
}

/// Columns spanning `{v : ‖Av‖ ≤ threshold‖v‖}` and an ambiguity flag.
fn null_space(a: &DMatrix<f64>, threshold: f64, scale: f64) -> (DMatrix<f64>, bool) {
    let c = a.ncols();
    // Pad to at least as many rows as columns so V is square.
    let rows = a.nrows().max(c);
    let mut padded = DMatrix::<f64>::zeros(rows, c);
    padded.rows_mut(0, a.nrows()).copy_from(a);
    let svd = nalgebra::SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let floor = f64::EPSILON * scale;
    let cut = threshold.max(floor);
    let ambiguous = sv.iter().any(|&s| s > cut / 10.0 && s < cut * 10.0 && s > floor);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let mut out = DMatrix::<f64>::zeros(c, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        for r in 0..c {
            out[(r, k)] = vt[(i, r)];
        }
    }
    (out, ambiguous)
}

fn orthonormalize(v: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = nalgebra::SVD::new(v.clone(), true, false);
    let u = svd.u.expect("requested U");
    u.columns(0, v.ncols()).into_owned()
}

/// Checks `|q(v)| > tol` for unit vectors `v` in the span of `basis`.
///
/// Samples are the basis vectors themselves followed by normalized
/// low-discrepancy combinations. Vacuously true for `S = {0}`.
pub fn partial_ellipticity_check(q: &QuadraticForm, basis: &[Vec<f64>], samples: usize, tol: f64) -> Result<bool> {
    if basis.is_empty() {
        return Ok(true);
    }
    let m = 2 * q.dim;
    if basis.iter().any(|b| b.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: basis[0].len() });
    }
    let d = basis.len();
    let bounds = crate::geometry::Bounds::cube(d, -1.0, 1.0);
    let mut coeff_sets: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    coeff_sets.extend((0..samples).map(|i| crate::geometry::halton_point(i + 1, &bounds)));
    for c in coeff_sets {
        let mut v = vec![0.0; m];
        for (ci, b) in c.iter().zip(basis) {
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk += ci * bk;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if q.eval(&v)?.norm() <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Named quadratic forms used as fixtures.
pub mod catalog {
    use super::*;

    fn real_diag(dim: usize, re: &[f64], im: &[f64]) -> QuadraticForm {
        let m = 2 * dim;
        let q = CMatrix::from_fn(m, m, |i, j| if i == j { Complex64::new(re[i], im[i]) } else { Complex64::new(0.0, 0.0) });
        QuadraticForm::new(dim, q).expect("diagonal forms are symmetric")
    }

    /// `|x|² + |ξ|²`.
    pub fn harmonic(dim: usize) -> QuadraticForm {
        real_diag(dim, &vec![1.0; 2 * dim], &vec![0.0; 2 * dim])
    }

    /// `e^{iθ}(x² + ξ²)` for `|θ| < π/2`.
    pub fn rotated_harmonic(theta: f64) -> Result<QuadraticForm> {
        if theta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidParameter(format!("rotation angle must satisfy |θ| < π/2, got {theta}")));
        }
        let (s, c) = theta.sin_cos();
        Ok(real_diag(1, &[c, c], &[s, s]))
    }

    /// `ξ²` in one dimension.
    pub fn free_laplacian() -> QuadraticForm {
        real_diag(1, &[0.0, 1.0], &[0.0, 0.0])
    }

    /// `x² + iξ²`.
    pub fn mixed() -> QuadraticForm {
        real_diag(1, &[1.0, 0.0], &[0.0, 1.0])
    }

    /// `η² + v² + i(vξ − xη)` with `X = (x, v, ξ, η)`.
    pub fn kramers_fokker_planck() -> QuadraticForm {
        let z = Complex64::new(0.0, 0.0);
        let mut q = CMatrix::from_element(4, 4, z);
        q[(1, 1)] = Complex64::new(1.0, 0.0);
        q[(3, 3)] = Complex64::new(1.0, 0.0);
        q[(1, 2)] = Complex64::new(0.0, 0.5);
        q[(2, 1)] = Complex64::new(0.0, 0.5);
        q[(0, 3)] = Complex64::new(0.0, -0.5);
        q[(3, 0)] = Complex64::new(0.0, -0.5);
        QuadraticForm::new(2, q).expect("symmetric by construction")
    }

    pub fn by_name(name: &str) -> Result<QuadraticForm> {
        match name {
            "harmonic" => Ok(harmonic(1)),
            "free-laplacian" => Ok(free_laplacian()),
            "mixed" => Ok(mixed()),
            "kfp" | "kramers-fokker-planck" => Ok(kramers_fokker_planck()),
            other => Err(Error::InvalidParameter(format!("unknown quadratic form '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn harmonic_hamilton_map() {
        let f = hamilton_map(&harmonic(1)).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        assert_eq!(f.matrix(), &want);
    }

    #[test]
    fn free_laplacian_hamilton_map() {
        let f = hamilton_map(&free_laplacian()).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert_eq!(f.matrix(), &want);
    }

    #[test]
    fn zero_form_has_zero_map() {
        let q = QuadraticForm::new(2, CMatrix::from_element(4, 4, c(0.0))).unwrap();
        let f = hamilton_map(&q).unwrap();
        assert!(f.matrix().iter().all(|z| z.norm() == 0.0));
        let s = singular_space(&f, 1e-10).unwrap();
        assert_eq!(s.dim_s, 4);
        assert_eq!(s.k0, None);
    }

    #[test]
    fn non_symmetric_input_is_rejected() {
        let mut q = CMatrix::from_element(2, 2, c(0.0));
        q[(0, 1)] = c(1.0);
        assert!(matches!(QuadraticForm::new(1, q), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn harmonic_singular_space_is_trivial() {
        let s = singular_space(&hamilton_map(&harmonic(1)).unwrap(), 1e-10).unwrap();
        assert_eq!((s.dim_s, s.k0), (0, Some(0)));
    }

    #[test]
    fn free_laplacian_singular_space() {
        let s = singular_space(&hamilton_map(&free_laplacian()).unwrap(), 1e-10).unwrap();
        assert_eq!(s.dim_s, 1);
        assert_eq!(s.k0, None);
        assert!((s.basis[0][0].abs() - 1.0).abs() < 1e-12 && s.basis[0][1].abs() < 1e-12);
        assert!(!partial_ellipticity_check(&free_laplacian(), &s.basis, 16, 1e-10).unwrap());
    }

    #[test]
    fn kfp_and_mixed_have_k0_one() {
        for q in [kramers_fokker_planck(), mixed()] {
            let s = singular_space(&hamilton_map(&q).unwrap(), 1e-10).unwrap();
            assert_eq!((s.dim_s, s.k0), (0, Some(1)));
            assert!(!s.ambiguous);
            assert!(partial_ellipticity_check(&q, &s.basis, 16, 1e-10).unwrap());
        }
    }

    #[test]
    fn rotated_harmonic_is_elliptic() {
        let q = rotated_harmonic(1.0).unwrap();
        assert!(q.real_part_nonnegative(1e-12));
        let s = singular_space(&hamilton_map(&q).unwrap(), 1e-10).unwrap();
        assert_eq!(s.k0, Some(0));
        assert!(rotated_harmonic(2.0).is_err());
    }

    #[test]
    fn json_export_and_config_round_trip() {
        let s = singular_space(&hamilton_map(&free_laplacian()).unwrap(), 1e-10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["dimS"], 1);
        assert!(v["k0"].is_null());
        let q = kramers_fokker_planck();
        let text = serde_json::to_string(&q).unwrap();
        let back: QuadraticForm = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);
        let bad = r#"{"dim":1,"entries":[[0,0],[1,0],[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<QuadraticForm>(bad).is_err());
    }
}
