//! Gram matrices of Hermite functions restricted to a control set, the
//! resulting spectral constants `C_N(ω) = λ_min^{-1/2}`, and growth-law fits.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ControlSet;
use crate::hermite::{hermite_eval_into, HermiteBasis, HermiteExpansion, MultiIndex};
use crate::linalg::{min_eigenvalue, symmetrize};
use crate::quadrature::{panel_edges, GaussLegendre};

/// Composite Gauss-Legendre rule used for Gram assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramQuad {
    pub panel_width: f64,
    pub nodes: usize,
    /// Truncation radius; defaults to `√(4N+40)`.
    pub radius: Option<f64>,
    /// Recompute with a finer rule and fail if entries move by more than this.
    pub verify_tol: Option<f64>,
}

impl Default for GramQuad {
    fn default() -> Self {
        Self { panel_width: 0.25, nodes: 24, radius: None, verify_tol: None }
    }
}

impl GramQuad {
    pub fn truncation_radius(&self, degree: usize) -> f64 {
        self.radius.unwrap_or_else(|| (4.0 * degree as f64 + 40.0).sqrt())
    }

    fn refined(&self) -> Self {
        Self { panel_width: self.panel_width * 0.5, nodes: self.nodes + 8, radius: self.radius.map(|r| r + 2.0), verify_tol: None }
    }
}

/// `G_{αβ} = ∫_ω Φ_α Φ_β` over the degree-then-lex enumeration of `E_N`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub degree: usize,
    pub dim: usize,
    pub entries: DMatrix<f64>,
    pub omega: ControlSet,
    pub basis: Arc<HermiteBasis>,
    /// Largest asymmetry removed by symmetrization.
    pub asymmetry: f64,
    /// Largest entry change against the refined rule, when requested.
    pub quad_error: Option<f64>,
}

pub fn gram_matrix(omega: &ControlSet, degree: usize, quad: &GramQuad) -> Result<GramMatrix> {
    omega.check()?;
    if !(quad.panel_width > 0.0) || quad.nodes == 0 {
        return Err(Error::InvalidParameter("Gram quadrature needs positive panel width and nodes".into()));
    }
    if omega.dim > 3 {
        return Err(Error::UnsupportedShape(format!("Gram assembly supports n ≤ 3, got n = {}", omega.dim)));
    }
    let rt = quad.truncation_radius(degree);
    let gl = GaussLegendre::new(quad.nodes);
    let mut entries = gram_rec(omega, degree, rt, quad.panel_width, &gl)?;
    let asymmetry = symmetrize(&mut entries);
    let quad_error = match quad.verify_tol {
        None => None,
        Some(tol) => {
            let fine = quad.refined();
            let gl2 = GaussLegendre::new(fine.nodes);
            let other = gram_rec(omega, degree, fine.truncation_radius(degree), fine.panel_width, &gl2)?;
            let err = (&entries - &other).amax();
            if err > tol {
                return Err(Error::Quadrature { tol, estimate: err });
            }
            Some(err)
        }
    };
    Ok(GramMatrix {
        degree,
        dim: omega.dim,
        entries,
        omega: omega.clone(),
        basis: HermiteBasis::shared(omega.dim, degree),
        asymmetry,
        quad_error,
    })
}

/// Nodes and weights covering `ω ∩ [−rt, rt]` (1-D).
fn line_nodes(omega: &ControlSet, rt: f64, width: f64, gl: &GaussLegendre) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (a, b) in omega.intervals_within(-rt, rt)? {
        let edges = panel_edges(a, b, &[], width);
        for w in edges.windows(2) {
            out.extend(gl.mapped(w[0], w[1]));
        }
    }
    Ok(out)
}

fn gram_rec(omega: &ControlSet, degree: usize, rt: f64, width: f64, gl: &GaussLegendre) -> Result<DMatrix<f64>> {
    let n = omega.dim;
    let basis = HermiteBasis::new(n, degree);
    let size = basis.len();
    if omega.parts.is_empty() {
        return Ok(DMatrix::zeros(size, size));
    }
    if omega.is_full() {
        return Ok(DMatrix::identity(size, size));
    }
    let mut vals = vec![0.0; degree + 1];
    if n == 1 {
        let nodes = line_nodes(omega, rt, width, gl)?;
        let mut phi = DMatrix::<f64>::zeros(nodes.len(), size);
        for (r, (x, w)) in nodes.iter().enumerate() {
            hermite_eval_into(*x, &mut vals);
            let sw = w.sqrt();
            for k in 0..size {
                phi[(r, k)] = vals[k] * sw;
            }
        }
        return Ok(phi.transpose() * phi);
    }

    // Outer first-axis panels, broken at every boundary and graded towards
    // ball edges where sections vary like a square root.
    let mut breaks = omega.axis0_breaks(-rt, rt);
    for e in omega.axis0_ball_edges() {
        for k in 1..=10 {
            let d = width * 0.5f64.powi(k);
            breaks.extend([e - d, e + d]);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let edges = panel_edges(-rt, rt, &breaks, width);

    let tail = HermiteBasis::new(n - 1, degree);
    let heads: Vec<usize> = basis.indices().iter().map(|a| a.get(0)).collect();
    let tails: Vec<usize> =
        basis.indices().iter().map(|a| tail.index_of(&MultiIndex::new(a.entries()[1..].to_vec())).expect("tail lies in E_N")).collect();

    // Group outer nodes by identical sections: S_id[a0,b0] = Σ w φ_a0 φ_b0.
    let mut sections: Vec<(ControlSet, DMatrix<f64>)> = Vec::new();
    for e in edges.windows(2) {
        for (x0, w) in gl.mapped(e[0], e[1]) {
            let s = omega.slice(x0)?;
            if s.parts.is_empty() {
                continue;
            }
            hermite_eval_into(x0, &mut vals);
            let id = match sections.iter().position(|(c, _)| *c == s) {
                Some(i) => i,
                None => {
                    sections.push((s, DMatrix::zeros(degree + 1, degree + 1)));
                    sections.len() - 1
                }
            };
            let acc = &mut sections[id].1;
            for a in 0..=degree {
                let wa = w * vals[a];
                for b in 0..=degree {
                    acc[(a, b)] += wa * vals[b];
                }
            }
        }
    }
    let mut g = DMatrix::<f64>::zeros(size, size);
    for (s, outer) in &sections {
        let inner = gram_rec(s, degree, rt, width, gl)?;
        for i in 0..size {
            for j in 0..size {
                g[(i, j)] += outer[(heads[i], heads[j])] * inner[(tails[i], tails[j])];
            }
        }
    }
    Ok(g)
}

/// Best constant in `‖f‖ ≤ C_N ‖f‖_{L²(ω)}` on `E_N` and its extremizer.
#[derive(Debug, Clone)]
pub struct SpectralConstant {
    pub degree: usize,
    pub lambda_min: f64,
    pub c_n: f64,
    /// Unit-norm bottom eigenvector as a Hermite expansion.
    pub extremizer: HermiteExpansion,
    pub residual: f64,
    pub condition: f64,
}

pub fn spectral_constant(g: &GramMatrix) -> Result<SpectralConstant> {
    let me = min_eigenvalue(&g.entries, 1e-10)?;
    if !(me.value > 0.0) {
        return Err(Error::DegenerateRestriction { lambda_min: me.value });
    }
    let extremizer = HermiteExpansion::from_basis(g.basis.clone(), me.vector.iter().copied().collect())?;
    Ok(SpectralConstant {
        degree: g.degree,
        lambda_min: me.value,
        c_n: me.value.powf(-0.5),
        extremizer,
        residual: me.residual,
        condition: me.condition,
    })
}

/// `‖f‖²_{L²(ω)}` by direct evaluation of `f` on a composite rule
/// (1-D, independent of the Gram assembly).
pub fn restricted_norm_sq(f: &HermiteExpansion, omega: &ControlSet, panel_width: f64, nodes: usize) -> Result<f64> {
    if f.dim() != 1 || omega.dim != 1 {
        return Err(Error::UnsupportedShape("restricted norm is implemented for n = 1".into()));
    }
    let degree = f.degree();
    let rt = (4.0 * degree as f64 + 30.0).sqrt();
    let gl = GaussLegendre::new(nodes);
    let mut vals = vec![0.0; degree + 1];
    let mut total = 0.0;
    for (x, w) in line_nodes(omega, rt, panel_width, &gl)? {
        hermite_eval_into(x, &mut vals);
        let v: f64 = f.coeffs().iter().zip(&vals).map(|(c, p)| c * p).sum();
        total += w * v * v;
    }
    Ok(total)
}

/// Least-squares fit `log C_N ≈ A + B·N^{1−ε/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFitReport {
    pub pairs: Vec<(usize, f64)>,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

pub fn growth_fit(pairs: &[(usize, f64)], epsilon: f64) -> Result<GrowthFitReport> {
    if pairs.len() < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: pairs.len() });
    }
    if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter("growth fit needs strictly increasing N".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter("ε must lie in (0,1]".into()));
    }
    if let Some((n, c)) = pairs.iter().find(|(_, c)| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(format!("C_N must be positive and finite, got {c} at N = {n}")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| (*n as f64).powf(1.0 - epsilon / 2.0)).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, c)| c.ln()).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    Ok(GrowthFitReport { pairs: pairs.to_vec(), epsilon, a, b, r2 })
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, r²)` with `r² = 1`
/// for constant data.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (a, b, r2)
}

/// One row of a spectral scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    #[serde(rename = "N")]
    pub degree: usize,
    pub lambda_min: f64,
    #[serde(rename = "C_N")]
    pub c_n: f64,
    pub quad_tol: f64,
}

pub fn write_spectral_csv<W: Write>(rows: &[SpectralRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Inconsistent(format!("csv: {e}")))?;
    }
    out.flush().map_err(|e| Error::Inconsistent(e.to_string()))
}

/// One-dimensional set made of cells of length `2R⟨c⟩^{1−ε}` laid out from
/// the origin in both directions, keeping the first half of each cell,
/// up to `|x| ≤ extent`.
pub fn thick_family(epsilon: f64, r: f64, extent: f64) -> Result<ControlSet> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter("ε must lie in (0,1]".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("cell scale must be positive, got {r}")));
    }
    let mut iv = Vec::new();
    let mut c = 0.0f64;
    while c < extent {
        let l = 2.0 * r * (1.0 + c * c).powf((1.0 - epsilon) / 2.0);
        iv.push((c, c + l / 2.0));
        iv.push((-c - l, -c - l / 2.0));
        c += l;
    }
    Ok(ControlSet::intervals(&iv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_line_gives_identity() {
        let g = gram_matrix(&ControlSet::full(1), 5, &GramQuad::default()).unwrap();
        assert!((&g.entries - DMatrix::identity(6, 6)).amax() < 1e-8);
        let sc = spectral_constant(&g).unwrap();
        assert!((sc.c_n - 1.0).abs() < 1e-8);
    }

    #[test]
    fn truncated_full_line_is_identity() {
        let w = ControlSet::intervals(&[(-1e3, 1e3)]);
        let g = gram_matrix(&w, 5, &GramQuad::default()).unwrap();
        assert!((&g.entries - DMatrix::identity(6, 6)).amax() < 1e-8);
    }

    #[test]
    fn half_line_closed_form() {
        let w = ControlSet::intervals(&[(0.0, f64::INFINITY)]);
        let g = gram_matrix(&w, 1, &GramQuad::default()).unwrap();
        let off = 1.0 / (2.0 * PI).sqrt();
        assert!((g.entries[(0, 0)] - 0.5).abs() < 1e-13);
        assert!((g.entries[(1, 1)] - 0.5).abs() < 1e-13);
        assert!((g.entries[(0, 1)] - off).abs() < 1e-13);
        let sc = spectral_constant(&g).unwrap();
        assert!((sc.c_n - (0.5 - off).powf(-0.5)).abs() < 1e-9);
        assert!((sc.c_n - 3.145_685).abs() < 1e-6);
    }

    #[test]
    fn unit_interval_gives_erf() {
        let g = gram_matrix(&ControlSet::intervals(&[(-1.0, 1.0)]), 0, &GramQuad::default()).unwrap();
        // Maclaurin series of erf(1).
        let mut e1 = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            e1 += sign / (fact * (2 * k + 1) as f64);
        }
        e1 *= 2.0 / PI.sqrt();
        assert!((g.entries[(0, 0)] - e1).abs() < 1e-13, "{} vs {e1}", g.entries[(0, 0)]);
        assert!((g.entries[(0, 0)] - 0.842_700_792_9).abs() < 1e-10);
    }

    #[test]
    fn empty_set_is_degenerate() {
        let g = gram_matrix(&ControlSet::empty(1), 3, &GramQuad::default()).unwrap();
        assert!(matches!(spectral_constant(&g), Err(Error::DegenerateRestriction { .. })));
    }

    #[test]
    fn extremizer_certificate() {
        let w = ControlSet::periodic(1, 2.0, 0.5, 0.0).unwrap();
        let g = gram_matrix(&w, 20, &GramQuad::default()).unwrap();
        let sc = spectral_constant(&g).unwrap();
        let r = restricted_norm_sq(&sc.extremizer, &w, 0.1, 17).unwrap();
        assert!((r / sc.lambda_min - 1.0).abs() < 1e-6, "{r} vs {}", sc.lambda_min);
    }

    #[test]
    fn planar_product_set_factorizes() {
        // ω = [0,∞) × ℝ: G = G₁ ⊗ I on the tensor basis.
        let w = ControlSet::boxes(2, vec![(vec![0.0, f64::NEG_INFINITY], vec![f64::INFINITY, f64::INFINITY])]).unwrap();
        let g = gram_matrix(&w, 3, &GramQuad::default()).unwrap();
        let g1 = gram_matrix(&ControlSet::intervals(&[(0.0, f64::INFINITY)]), 3, &GramQuad::default()).unwrap();
        let idx = g.basis.indices();
        for (i, a) in idx.iter().enumerate() {
            for (j, b) in idx.iter().enumerate() {
                let want = if a.get(1) == b.get(1) { g1.entries[(a.get(0), b.get(0))] } else { 0.0 };
                assert!((g.entries[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn disc_gram_ground_state() {
        // ∫_{|x|<1} π^{-1} e^{-|x|²} = 1 − e^{-1}.
        let w = ControlSet::balls(2, vec![(vec![0.0, 0.0], 1.0)]).unwrap();
        let g = gram_matrix(&w, 2, &GramQuad::default()).unwrap();
        assert!((g.entries[(0, 0)] - (1.0 - (-1.0f64).exp())).abs() < 1e-7, "{}", g.entries[(0, 0)]);
    }

    #[test]
    fn verified_quadrature_reports_error() {
        let w = ControlSet::periodic(1, 2.0, 0.5, 0.0).unwrap();
        let q = GramQuad { verify_tol: Some(1e-10), ..GramQuad::default() };
        let g = gram_matrix(&w, 30, &q).unwrap();
        assert!(g.quad_error.unwrap() < 1e-10);
    }

    #[test]
    fn growth_fit_examples() {
        let flat: Vec<(usize, f64)> = (1..=6).map(|k| (10 * k, 1.0)).collect();
        let rep = growth_fit(&flat, 1.0).unwrap();
        assert_eq!(rep.b, 0.0);
        let synth: Vec<(usize, f64)> = (1..=12).map(|k| (10 * k, (2.0 * (10.0 * k as f64).powf(0.75)).exp())).collect();
        let rep = growth_fit(&synth, 0.5).unwrap();
        assert!((rep.b - 2.0).abs() < 1e-6);
        assert!(rep.r2 >= 1.0 - 1e-9);
        assert!(growth_fit(&synth[..4], 0.5).is_err());
    }

    #[test]
    fn csv_rows() {
        let rows = vec![SpectralRow { degree: 10, lambda_min: 0.25, c_n: 2.0, quad_tol: 1e-10 }];
        let mut buf = Vec::new();
        write_spectral_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "N,lambda_min,C_N,quad_tol");
    }

    #[test]
    fn thick_family_is_symmetric() {
        let w = thick_family(1.0, 1.0, 10.0).unwrap();
        assert!(w.contains(&[0.5]) && !w.contains(&[1.5]) && w.contains(&[-1.5]) && !w.contains(&[-0.5]));
    }
}
