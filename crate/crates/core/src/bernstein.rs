//! Bernstein-type bounds on `E_N`, Gamma-function inequalities and the
//! expansion of `(H+n)^k` in the monomials `x^α ∂^β`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::hermite::{apply_position_derivative, harmonic_apply, indices_of_degree, ln_factorial, HermiteExpansion, MultiIndex};

/// One evaluation of `‖x^α∂^β f‖ ≤ 2^{(|α|+|β|)/2} √((N+|α|+|β|)!/N!) ‖f‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCheck {
    #[serde(rename = "N")]
    pub degree: usize,
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Right-hand side factor `2^{m/2} √((N+m)!/N!)`, in log space.
pub fn crude_bound_ln(degree: usize, order: usize) -> f64 {
    0.5 * order as f64 * std::f64::consts::LN_2 + 0.5 * (ln_factorial(degree + order) - ln_factorial(degree))
}

pub fn crude_bernstein_check(f: &HermiteExpansion, alpha: &MultiIndex, beta: &MultiIndex) -> Result<BernsteinCheck> {
    let g = apply_position_derivative(f, alpha, beta)?;
    let lhs = g.norm();
    let m = alpha.order() + beta.order();
    let rhs = (crude_bound_ln(f.degree(), m)).exp() * f.norm();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(BernsteinCheck { degree: f.degree(), alpha: alpha.clone(), beta: beta.clone(), lhs, rhs, ratio })
}

/// All pairs `(α, β)` in dimension `dim` with `|α| + |β| ≤ max_order`.
pub fn index_pairs(dim: usize, max_order: usize) -> Vec<(MultiIndex, MultiIndex)> {
    (0..=max_order)
        .flat_map(|d| indices_of_degree(2 * dim, d))
        .map(|ab| {
            let e = ab.entries();
            (MultiIndex::new(e[..dim].to_vec()), MultiIndex::new(e[dim..].to_vec()))
        })
        .collect()
}

pub fn write_bernstein_csv<W: Write>(rows: &[BernsteinCheck], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let csv_err = |e: csv::Error| Error::Inconsistent(format!("csv: {e}"));
    out.write_record(["N", "|alpha|", "|beta|", "lhs", "rhs", "ratio"]).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.degree.to_string(),
            r.alpha.order().to_string(),
            r.beta.order().to_string(),
            format!("{:.17e}", r.lhs),
            format!("{:.17e}", r.rhs),
            format!("{:.17e}", r.ratio),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Inconsistent(e.to_string()))
}

/// Empirical constants for
/// `‖x^α∂^β f‖ ≤ K̃ (δK)^{|α|+|β|} Γ((|α|+|β|)/(2−ε)+2) e^{N^{1−ε/2}/δ^{2−ε}} ‖f‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop53Fit {
    pub epsilon: f64,
    pub delta: f64,
    pub max_order: usize,
    pub k_tilde: f64,
    pub k: f64,
    /// `r_m`: largest normalized ratio at order `m`.
    pub ratios: Vec<f64>,
    /// The inequality holds on the whole sample with the fitted constants.
    pub certified: bool,
    pub samples: usize,
}

/// Fits `K̃ = max(1, r₀)` and `K = max(1, δ^{-1} max_m (r_m/K̃)^{1/m})`,
/// which are the smallest constants (with `K̃, K ≥ 1`) for which the shape
/// holds on the sample.
pub fn prop53_fit(samples: &[HermiteExpansion], epsilon: f64, delta: f64, max_order: usize) -> Result<Prop53Fit> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter("ε must lie in (0,1]".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0,1], got {delta}")));
    }
    if samples.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut ratios = vec![0.0f64; max_order + 1];
    for f in samples {
        let norm = f.norm();
        if norm == 0.0 {
            continue;
        }
        let n = f.degree() as f64;
        let growth_ln = n.powf(1.0 - epsilon / 2.0) / delta.powf(2.0 - epsilon);
        for (a, b) in index_pairs(f.dim(), max_order) {
            let m = a.order() + b.order();
            let g = apply_position_derivative(f, &a, &b)?;
            let shape_ln = ln_gamma(m as f64 / (2.0 - epsilon) + 2.0) + growth_ln;
            let r = (g.norm().ln() - norm.ln() - shape_ln).exp();
            ratios[m] = ratios[m].max(r);
        }
    }
    let k_tilde = ratios[0].max(1.0);
    let mut k = 1.0f64;
    for (m, &r) in ratios.iter().enumerate().skip(1) {
        if r > 0.0 {
            k = k.max((r / k_tilde).powf(1.0 / m as f64) / delta);
        }
    }
    let certified = ratios.iter().enumerate().all(|(m, &r)| r <= k_tilde * (delta * k).powi(m as i32) * (1.0 + 1e-12));
    Ok(Prop53Fit { epsilon, delta, max_order, k_tilde, k, ratios, certified, samples: samples.len() })
}

/// Grid check of the Gamma-function inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub points: usize,
    /// `x^y ≤ Γ(y+1) e^x` at every grid point.
    pub power_bound_ok: bool,
    /// Smallest log-margin `ln Γ(y+1) + x − y ln x`.
    pub power_bound_margin: f64,
    pub beta_r: f64,
    /// `Γ(x)Γ(y) ≤ B(r,r)/(2r) Γ(x+y+1)` at grid points with `x, y ≥ r`.
    pub beta_bound_ok: bool,
    pub beta_bound_margin: f64,
    /// `C_p` fitted as the largest observed ratio for `x ≥ 1`, per `p`.
    pub c_p: Vec<(u32, f64)>,
    /// For `x ≥ 2p`, the ratio stays below the explicit constant
    /// `((2π)^{(1−p)/2} p! p^{−1/2−p})^{1/p}`.
    pub c_p_explicit_ok: bool,
}

/// Runs all checks over `grid × grid`.
pub fn gamma_inequality_check(grid: &[f64], beta_r: f64, ps: &[u32]) -> Result<GammaReport> {
    if grid.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if grid.iter().any(|&v| !(v > 0.0)) || !(beta_r > 0.0) {
        return Err(Error::InvalidParameter("Gamma grid and r must be positive".into()));
    }
    let mut pm = f64::INFINITY;
    let mut bm = f64::INFINITY;
    let ln_b = ln_beta(beta_r, beta_r) - (2.0 * beta_r).ln();
    for &x in grid {
        for &y in grid {
            pm = pm.min(ln_gamma(y + 1.0) + x - y * x.ln());
            if x >= beta_r && y >= beta_r {
                bm = bm.min(ln_b + ln_gamma(x + y + 1.0) - ln_gamma(x) - ln_gamma(y));
            }
        }
    }
    let mut c_p = Vec::new();
    let mut explicit_ok = true;
    for &p in ps {
        if p == 0 {
            return Err(Error::InvalidParameter("p must be a positive integer".into()));
        }
        let pf = p as f64;
        let explicit_ln = ((1.0 - pf) / 2.0 * (2.0 * std::f64::consts::PI).ln() + ln_factorial(p as usize) - (0.5 + pf) * pf.ln()) / pf;
        let mut worst = f64::NEG_INFINITY;
        for &x in grid.iter().filter(|&&x| x >= 1.0) {
            let ln_ratio = ln_gamma(x) / pf - x * (pf.ln() + 1.0) / pf - ln_gamma(x / pf);
            worst = worst.max(ln_ratio);
            if x >= 2.0 * pf && ln_ratio > explicit_ln + 1e-12 {
                explicit_ok = false;
            }
        }
        c_p.push((p, worst.exp()));
    }
    Ok(GammaReport {
        points: grid.len() * grid.len(),
        power_bound_ok: pm >= -1e-12,
        power_bound_margin: pm,
        beta_r,
        beta_bound_ok: bm >= -1e-12,
        beta_bound_margin: bm,
        c_p,
        c_p_explicit_ok: explicit_ok,
    })
}

/// Largest `k` accepted by [`harmonic_power_expand`].
pub const MAX_POWER: usize = 12;

/// `(H+n)^k = Σ c^k_{αβ} x^α ∂^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorExpansion {
    pub k: usize,
    pub dim: usize,
    /// Non-zero coefficients keyed by `(α, β)`.
    pub terms: BTreeMap<(MultiIndex, MultiIndex), f64>,
    /// The one-dimensional recursion stayed within
    /// `|C^j_{l₁,l₂}| ≤ 3^j (j+1)^{(j+1−l₁−l₂)/2}` at every step.
    pub recursion_bound_ok: bool,
}

/// Coefficients `C^j` of `(x+∂)(x−∂)(x+∂)⋯` (`j+1` factors), keyed by `(l₁, l₂)`
/// for `x^{l₁}∂^{l₂}`, for `j = 0, …, jmax`. Exact integers.
pub fn ladder_product_coefficients(jmax: usize) -> Vec<BTreeMap<(usize, usize), i128>> {
    let mut out: Vec<BTreeMap<(usize, usize), i128>> = Vec::with_capacity(jmax + 1);
    out.push(BTreeMap::from([((1, 0), 1), ((0, 1), 1)]));
    for j in 0..jmax {
        let prev = &out[j];
        let sign: i128 = if (j + 1) % 2 == 0 { 1 } else { -1 };
        let mut next: BTreeMap<(usize, usize), i128> = BTreeMap::new();
        for (&(l1, l2), &c) in prev {
            // x^{l1}∂^{l2} ∘ x = x^{l1+1}∂^{l2} + l2 x^{l1}∂^{l2−1}
            *next.entry((l1 + 1, l2)).or_default() += c;
            if l2 > 0 {
                *next.entry((l1, l2 - 1)).or_default() += l2 as i128 * c;
            }
            // x^{l1}∂^{l2} ∘ (±∂)
            *next.entry((l1, l2 + 1)).or_default() += sign * c;
        }
        next.retain(|_, c| *c != 0);
        out.push(next);
    }
    out
}

fn recursion_bound_holds(levels: &[BTreeMap<(usize, usize), i128>]) -> bool {
    levels.iter().enumerate().all(|(j, m)| {
        m.iter().all(|(&(l1, l2), &c)| {
            let bound_ln = j as f64 * 3f64.ln() + 0.5 * (j as f64 + 1.0 - (l1 + l2) as f64) * ((j + 1) as f64).ln();
            (c.unsigned_abs() as f64).ln() <= bound_ln + 1e-12
        })
    })
}

/// `(H_j+1)^g` in one variable: identity for `g = 0`, else `C^{2g−1}`.
fn one_dim_power(levels: &[BTreeMap<(usize, usize), i128>], g: usize) -> Vec<((usize, usize), f64)> {
    if g == 0 {
        return vec![((0, 0), 1.0)];
    }
    levels[2 * g - 1].iter().map(|(&k, &c)| (k, c as f64)).collect()
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    indices_of_degree(parts, total).into_iter().map(|m| m.entries().to_vec()).collect()
}

pub fn harmonic_power_expand(k: usize, dim: usize) -> Result<OperatorExpansion> {
    if k > MAX_POWER {
        return Err(Error::DegreeOverflow { degree: k, cap: MAX_POWER });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let levels = ladder_product_coefficients((2 * k).max(1));
    let recursion_bound_ok = recursion_bound_holds(&levels);
    let mut terms: BTreeMap<(MultiIndex, MultiIndex), f64> = BTreeMap::new();
    let ln_kfact = ln_factorial(k);
    for gamma in compositions(k, dim) {
        let multinomial = (ln_kfact - gamma.iter().map(|&g| ln_factorial(g)).sum::<f64>()).exp().round();
        let factors: Vec<Vec<((usize, usize), f64)>> = gamma.iter().map(|&g| one_dim_power(&levels, g)).collect();
        // Cartesian product over coordinates.
        let mut partial: Vec<(Vec<usize>, Vec<usize>, f64)> = vec![(Vec::new(), Vec::new(), multinomial)];
        for fac in &factors {
            let mut next = Vec::with_capacity(partial.len() * fac.len());
            for (a, b, c) in &partial {
                for &((l1, l2), v) in fac {
                    let mut a2 = a.clone();
                    let mut b2 = b.clone();
                    a2.push(l1);
                    b2.push(l2);
                    next.push((a2, b2, c * v));
                }
            }
            partial = next;
        }
        for (a, b, c) in partial {
            *terms.entry((MultiIndex::new(a), MultiIndex::new(b))).or_default() += c;
        }
    }
    terms.retain(|_, c| *c != 0.0);
    Ok(OperatorExpansion { k, dim, terms, recursion_bound_ok })
}

impl OperatorExpansion {
    /// `3^{2k−n} n^k (2k)^{(2k−|α+β|)/2}`.
    pub fn coefficient_bound(&self, alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
        let (k, n) = (self.k as f64, self.dim as f64);
        let m = (alpha.order() + beta.order()) as f64;
        let base = 3f64.powf(2.0 * k - n) * n.powf(k);
        if self.k == 0 {
            base
        } else {
            base * (2.0 * k).powf((2.0 * k - m) / 2.0)
        }
    }

    /// Terms exceeding [`Self::coefficient_bound`].
    pub fn bound_violations(&self) -> Vec<(MultiIndex, MultiIndex, f64, f64)> {
        self.terms
            .iter()
            .filter_map(|((a, b), &c)| {
                let bound = self.coefficient_bound(a, b);
                (c.abs() > bound * (1.0 + 1e-12)).then(|| (a.clone(), b.clone(), c, bound))
            })
            .collect()
    }

    /// `Σ c x^α∂^β f`, computed termwise with exact ladder calculus.
    pub fn apply(&self, f: &HermiteExpansion) -> Result<HermiteExpansion> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: f.dim() });
        }
        let mut acc = HermiteExpansion::zeros(f.dim(), f.degree() + 2 * self.k);
        for ((a, b), &c) in &self.terms {
            let g = apply_position_derivative(f, a, b)?.with_degree(acc.degree());
            acc = acc.axpy(c, &g)?;
        }
        Ok(acc.with_degree(f.degree()))
    }
}

/// `(H+n)^k f` by repeated diagonal application.
pub fn harmonic_shift_power(f: &HermiteExpansion, k: usize) -> HermiteExpansion {
    let n = f.dim() as f64;
    let mut g = f.clone();
    for _ in 0..k {
        g = harmonic_apply(&g).axpy(n, &g).expect("same basis");
    }
    g
}
