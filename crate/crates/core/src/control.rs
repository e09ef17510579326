//! Null-control of the truncated system `f' = −Λf + G u` on `E_N`:
//! controllability Gramians, minimal-energy (HUM) controls, a
//! Lebeau-Robbiano schedule and observability constants.
//!
//! `Λ` is diagonal with entries `(2|α|+n)^s` and `G` is the Gram matrix of
//! `ω`, so the control acts only through `π_N(1_ω u)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ControlSet;
use crate::hermite::HermiteExpansion;
use crate::linalg::jacobi_eigen;
use crate::quadrature::GaussLegendre;
use crate::semigroup::EvolutionSpec;
use crate::spectral::{gram_matrix, linear_fit, GramMatrix, GramQuad};

/// Condition number above which a stage level is reduced.
pub const CONDITION_CAP: f64 = 1e12;
/// Nodes per time panel.
pub const TIME_NODES: usize = 32;
/// Relative Frobenius change that stops Gramian panel doubling.
pub const GRAMIAN_TOL: f64 = 1e-10;

/// Diagonal generator and actuator on `E_N`.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    pub degree: usize,
    pub spec: EvolutionSpec,
    /// `(2|α|+n)^s` in basis order.
    pub lambda: DVector<f64>,
    pub gram: DMatrix<f64>,
    levels: Vec<usize>,
}

impl TruncatedSystem {
    pub fn new(gram: &GramMatrix, spec: EvolutionSpec) -> Result<Self> {
        if gram.dim != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: gram.dim });
        }
        let levels: Vec<usize> = gram.basis.indices().iter().map(|a| a.order()).collect();
        let lambda = DVector::from_iterator(levels.len(), levels.iter().map(|&j| spec.eigenvalue(j)));
        Ok(Self { degree: gram.degree, spec, lambda, gram: gram.entries.clone(), levels })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Number of basis functions with `|α| ≤ k`.
    pub fn prefix_len(&self, k: usize) -> usize {
        self.levels.partition_point(|&j| j <= k)
    }

    /// `e^{−tΛ} f`.
    pub fn propagate(&self, f: &DVector<f64>, t: f64) -> DVector<f64> {
        DVector::from_iterator(f.len(), f.iter().zip(self.lambda.iter()).map(|(c, l)| c * (-t * l).exp()))
    }
}

/// Composite Gauss-Legendre nodes on `[0, tau]`.
fn time_nodes(tau: f64, panels: usize, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let h = tau / panels as f64;
    (0..panels).flat_map(|p| gl.mapped(p as f64 * h, (p + 1) as f64 * h).collect::<Vec<_>>()).collect()
}

/// Controllability Gramian `W = ∫₀^τ e^{−tΛ_k} G_kk² e^{−tΛ_k} dt`.
#[derive(Debug, Clone)]
pub struct Gramian {
    pub level: usize,
    pub tau: f64,
    pub w: DMatrix<f64>,
    /// Panels of the accepted rule.
    pub panels: usize,
    /// Relative Frobenius change at the last doubling.
    pub rel_change: f64,
}

fn gramian_with(sys: &TruncatedSystem, tau: f64, d: usize, panels: usize, gl: &GaussLegendre) -> DMatrix<f64> {
    let gk = sys.gram.view((0, 0), (d, d));
    let m = gk * gk;
    let lam = sys.lambda.rows(0, d);
    let mut w = DMatrix::<f64>::zeros(d, d);
    let mut e = vec![0.0; d];
    for (t, wt) in time_nodes(tau, panels, gl) {
        for i in 0..d {
            e[i] = (-t * lam[i]).exp();
        }
        for j in 0..d {
            let ej = wt * e[j];
            for i in 0..d {
                w[(i, j)] += e[i] * m[(i, j)] * ej;
            }
        }
    }
    w
}

pub fn gramian(sys: &TruncatedSystem, tau: f64, level: usize) -> Result<Gramian> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {tau}")));
    }
    if level > sys.degree {
        return Err(Error::DegreeOverflow { degree: level, cap: sys.degree });
    }
    let d = sys.prefix_len(level);
    let gl = GaussLegendre::new(TIME_NODES);
    let mut panels = 1;
    let mut prev = gramian_with(sys, tau, d, panels, &gl);
    loop {
        panels *= 2;
        let next = gramian_with(sys, tau, d, panels, &gl);
        let change = (&next - &prev).norm() / next.norm().max(f64::MIN_POSITIVE);
        if change <= GRAMIAN_TOL || panels >= 1 << 12 {
            if change > GRAMIAN_TOL {
                return Err(Error::Quadrature { tol: GRAMIAN_TOL, estimate: change });
            }
            return Ok(Gramian { level, tau, w: next, panels, rel_change: change });
        }
        prev = next;
    }
}

/// Minimal-energy control on one interval, `u(t) = −G_kk e^{−(τ−t)Λ_k} y`
/// with `y = W⁻¹ e^{−τΛ_k} g_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub start: f64,
    pub tau: f64,
    pub level: usize,
    /// Multiplier `y`.
    pub y: Vec<f64>,
    /// `∫‖u‖² dt = hᵀW⁻¹h` (Euclidean coefficient norm).
    pub cost: f64,
    /// `∫ uᵀ G_kk u dt`, the energy actually seen on `ω`.
    pub omega_cost: f64,
    pub condition: f64,
    /// Time-quadrature panels used for `W` and the simulation.
    pub panels: usize,
}

impl ControlSegment {
    /// Control coefficients at local time `t ∈ [0, τ]`.
    pub fn control_at(&self, sys: &TruncatedSystem, t: f64) -> DVector<f64> {
        let d = self.y.len();
        let z = DVector::from_iterator(d, self.y.iter().zip(sys.lambda.iter()).map(|(y, l)| y * (-(self.tau - t) * l).exp()));
        -(sys.gram.view((0, 0), (d, d)) * z)
    }
}

pub fn min_energy_control(sys: &TruncatedSystem, g: &DVector<f64>, tau: f64, level: usize) -> Result<ControlSegment> {
    if g.len() != sys.len() {
        return Err(Error::DimensionMismatch { expected: sys.len(), got: g.len() });
    }
    let gw = gramian(sys, tau, level)?;
    let d = gw.w.nrows();
    let h = DVector::from_iterator(d, (0..d).map(|i| g[i] * (-tau * sys.lambda[i]).exp()));
    let dec = jacobi_eigen(&gw.w)?;
    let lmin = dec.values[0];
    let lmax = dec.values[d - 1];
    if !(lmin > 0.0) {
        return Err(Error::DegenerateRestriction { lambda_min: lmin });
    }
    let condition = lmax / lmin;
    if condition > CONDITION_CAP {
        return Err(Error::IllConditioned { cond: condition, cap: CONDITION_CAP });
    }
    let proj = dec.vectors.transpose() * &h;
    let scaled = DVector::from_iterator(d, proj.iter().zip(dec.values.iter()).map(|(p, l)| p / l));
    let y = &dec.vectors * scaled;
    let cost = h.dot(&y);
    let omega_cost = omega_energy(sys, &y, tau, gw.panels);
    Ok(ControlSegment { start: 0.0, tau, level, y: y.iter().copied().collect(), cost, omega_cost, condition, panels: gw.panels })
}

fn omega_energy(sys: &TruncatedSystem, y: &DVector<f64>, tau: f64, panels: usize) -> f64 {
    let d = y.len();
    let gk = sys.gram.view((0, 0), (d, d));
    let gl = GaussLegendre::new(TIME_NODES);
    let seg =
        ControlSegment { start: 0.0, tau, level: 0, y: y.iter().copied().collect(), cost: 0.0, omega_cost: 0.0, condition: 0.0, panels };
    time_nodes(tau, panels, &gl)
        .into_iter()
        .map(|(t, w)| {
            let u = seg.control_at(sys, t);
            w * u.dot(&(gk * &u))
        })
        .sum()
}

/// Duhamel simulation of one controlled interval on the full state.
pub fn simulate_segment(sys: &TruncatedSystem, f: &DVector<f64>, seg: &ControlSegment, panels: usize) -> DVector<f64> {
    let d = seg.y.len();
    let full = sys.len();
    // f(τ) = e^{−τΛ} f + ∫₀^τ e^{−(τ−t)Λ} G[:, :d] u(t) dt
    let b = sys.gram.view((0, 0), (full, d)) * sys.gram.view((0, 0), (d, d));
    let gl = GaussLegendre::new(TIME_NODES);
    let mut forcing = DVector::<f64>::zeros(full);
    let mut z = DVector::<f64>::zeros(d);
    for (t, w) in time_nodes(seg.tau, panels, &gl) {
        let s = seg.tau - t;
        for i in 0..d {
            z[i] = seg.y[i] * (-s * sys.lambda[i]).exp();
        }
        let bz = &b * &z;
        for i in 0..full {
            forcing[i] -= w * (-s * sys.lambda[i]).exp() * bz[i];
        }
    }
    sys.propagate(f, seg.tau) + forcing
}

/// Dyadic Lebeau-Robbiano schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRSchedule {
    pub horizon: f64,
    /// Interval lengths as dyadic fractions `num / den` of the horizon.
    pub fractions: Vec<(u64, u64)>,
    pub levels: Vec<usize>,
    /// `a = (1+δ)/2`.
    pub a: f64,
    /// `b = s`.
    pub b: f64,
}

impl LRSchedule {
    /// Levels `2^j` capped at `N`, lengths `T/2^{j+1}` with the final
    /// interval absorbing the remainder.
    pub fn new(horizon: f64, degree: usize, s: f64, delta: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if !(delta >= 0.0) || !(delta < 2.0 * s - 1.0) {
            return Err(Error::InvalidParameter("δ < 2s−1 required".into()));
        }
        let mut levels = Vec::new();
        let mut k = 1usize;
        loop {
            levels.push(k.min(degree));
            if k >= degree {
                break;
            }
            k *= 2;
        }
        let stages = levels.len();
        let den = 1u64 << (stages - 1);
        let mut fractions: Vec<(u64, u64)> = (0..stages - 1).map(|j| (den >> (j + 1), den)).collect();
        fractions.push((1, den));
        Ok(Self { horizon, fractions, levels, a: (1.0 + delta) / 2.0, b: s })
    }

    /// `Σ lengths = T` in exact integer arithmetic.
    pub fn sums_exactly(&self) -> bool {
        let den = self.fractions[0].1;
        self.fractions.iter().all(|(_, d)| *d == den) && self.fractions.iter().map(|(n, _)| n).sum::<u64>() == den
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.fractions.iter().map(|(n, d)| self.horizon * (*n as f64) / (*d as f64)).collect()
    }
}

/// Null-control problem for the truncated system.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub horizon: f64,
    pub omega: ControlSet,
    pub degree: usize,
    pub f0: HermiteExpansion,
    /// Density growth exponent, used for the schedule parameter `a`.
    pub delta: f64,
    /// Acceptance threshold on `‖f(T)‖ / ‖f0‖`.
    pub tol: f64,
    pub system: TruncatedSystem,
}

impl ControlProblem {
    pub fn new(horizon: f64, omega: ControlSet, spec: EvolutionSpec, degree: usize, f0: HermiteExpansion, delta: f64) -> Result<Self> {
        Self::with_quad(horizon, omega, spec, degree, f0, delta, &GramQuad::default())
    }

    pub fn with_quad(
        horizon: f64,
        omega: ControlSet,
        spec: EvolutionSpec,
        degree: usize,
        f0: HermiteExpansion,
        delta: f64,
        quad: &GramQuad,
    ) -> Result<Self> {
        // validates T, δ and s together
        LRSchedule::new(horizon, degree, spec.s(), delta)?;
        if f0.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), got: f0.dim() });
        }
        let gram = gram_matrix(&omega, degree, quad)?;
        let system = TruncatedSystem::new(&gram, spec)?;
        Ok(Self { horizon, omega, degree, f0, delta, tol: 1e-6, system })
    }

    /// Same system and datum over a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        LRSchedule::new(horizon, self.degree, self.system.spec.s(), self.delta)?;
        Ok(Self { horizon, ..self.clone() })
    }
}

/// One Lebeau-Robbiano stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// `[start, end]`; the control acts on the first half.
    pub interval: (f64, f64),
    pub requested_level: usize,
    pub level: usize,
    pub cost: f64,
    pub omega_cost: f64,
    pub condition: f64,
    /// `‖f‖` at the end of the stage.
    pub residual: f64,
    pub segment: ControlSegment,
}

/// Trace of a synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub stages: Vec<StageRecord>,
    /// `Σ ∫‖u‖²` over stages (coefficient norm).
    pub total_cost: f64,
    /// `Σ ∫‖u‖²_{L²(ω)}` over stages.
    pub total_omega_cost: f64,
    /// `‖f(T)‖ / ‖f0‖` (absolute for `f0 = 0`).
    pub terminal_residual: f64,
    pub f0_norm: f64,
    /// `‖(1−π_N) f0‖`, the part of the datum outside the truncation.
    pub truncation_tail: f64,
    pub accepted: bool,
}

impl Synthesis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    /// Samples the forcing `π_N(1_ω u(t))` on `samples` points per segment.
    pub fn signal(&self, sys: &TruncatedSystem, samples: usize) -> ControlSignal {
        let segments = self.stages.iter().map(|st| SignalSegment::sample(sys, &st.segment, samples)).collect();
        ControlSignal { segments, total_cost: self.total_omega_cost }
    }
}

/// Stage failure, carrying the stages completed before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("stage {stage} failed: {cause}")]
pub struct SynthesisError {
    pub stage: usize,
    pub cause: Error,
    pub partial: Synthesis,
}

/// Forcing samples on one controlled interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSegment {
    pub interval: (f64, f64),
    pub level: usize,
    pub times: Vec<f64>,
    /// `G[:, :d] u(t)` at each sample time.
    pub forcing: Vec<Vec<f64>>,
}

impl SignalSegment {
    fn sample(sys: &TruncatedSystem, seg: &ControlSegment, samples: usize) -> Self {
        let d = seg.y.len();
        let n = samples.max(2);
        let times: Vec<f64> = (0..n).map(|i| seg.tau * i as f64 / (n - 1) as f64).collect();
        let forcing =
            times.iter().map(|&t| (sys.gram.view((0, 0), (sys.len(), d)) * seg.control_at(sys, t)).iter().copied().collect()).collect();
        Self { interval: (seg.start, seg.start + seg.tau), level: seg.level, times: times.iter().map(|t| seg.start + t).collect(), forcing }
    }
}

/// Control on `[0, T]`: forcing samples and `∫‖u‖²_{L²(ω)} dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub segments: Vec<SignalSegment>,
    pub total_cost: f64,
}

impl ControlSignal {
    pub fn is_supported_in(&self, horizon: f64) -> bool {
        self.segments
            .iter()
            .all(|s| s.interval.0 >= 0.0 && s.interval.1 <= horizon && s.times.iter().all(|t| *t >= s.interval.0 && *t <= s.interval.1))
    }
}

fn initial_state(p: &ControlProblem) -> (DVector<f64>, f64) {
    let inside = p.f0.with_degree(p.system.degree);
    let tail = (p.f0.norm_sq() - inside.norm_sq()).max(0.0).sqrt();
    (DVector::from_vec(inside.into_coeffs()), tail)
}

fn finish(stages: Vec<StageRecord>, f: &DVector<f64>, f0_norm: f64, truncation_tail: f64, tol: f64) -> Synthesis {
    let terminal_residual = if f0_norm > 0.0 { f.norm() / f0_norm } else { f.norm() };
    Synthesis {
        total_cost: stages.iter().map(|s| s.cost).sum(),
        total_omega_cost: stages.iter().map(|s| s.omega_cost).sum(),
        accepted: terminal_residual <= tol,
        stages,
        terminal_residual,
        f0_norm,
        truncation_tail,
    }
}

/// Dyadic schedule: kill `π_{k_j}` on the first half of each interval,
/// evolve freely on the second. Levels whose Gramian exceeds
/// [`CONDITION_CAP`] are lowered until it does not.
pub fn lebeau_robbiano_synthesize(p: &ControlProblem) -> std::result::Result<Synthesis, SynthesisError> {
    let sys = &p.system;
    let (mut f, truncation_tail) = initial_state(p);
    let f0_norm = f.norm();
    let schedule = LRSchedule::new(p.horizon, sys.degree, sys.spec.s(), p.delta).map_err(|cause| SynthesisError {
        stage: 0,
        cause,
        partial: finish(Vec::new(), &f, f0_norm, truncation_tail, p.tol),
    })?;
    let mut stages = Vec::new();
    let mut start = 0.0;
    for (j, (len, &requested)) in schedule.lengths().into_iter().zip(&schedule.levels).enumerate() {
        let tau = 0.5 * len;
        let mut level = requested;
        let seg = loop {
            match min_energy_control(sys, &f, tau, level) {
                Ok(s) => break s,
                Err(Error::IllConditioned { .. }) if level > 0 => level -= 1,
                Err(cause) => return Err(SynthesisError { stage: j, cause, partial: finish(stages, &f, f0_norm, truncation_tail, p.tol) }),
            }
        };
        let seg = ControlSegment { start, ..seg };
        f = simulate_segment(sys, &f, &seg, seg.panels);
        f = sys.propagate(&f, len - tau);
        stages.push(StageRecord {
            interval: (start, start + len),
            requested_level: requested,
            level,
            cost: seg.cost,
            omega_cost: seg.omega_cost,
            condition: seg.condition,
            residual: f.norm(),
            segment: seg,
        });
        start += len;
    }
    Ok(finish(stages, &f, f0_norm, truncation_tail, p.tol))
}

/// Re-runs the stored controls with `factor` times as many time panels and
/// returns the relative terminal residual.
pub fn resimulate(p: &ControlProblem, syn: &Synthesis, factor: usize) -> f64 {
    let sys = &p.system;
    let (mut f, _) = initial_state(p);
    let f0_norm = f.norm();
    for st in &syn.stages {
        let seg = &st.segment;
        f = simulate_segment(sys, &f, seg, seg.panels * factor.max(1));
        f = sys.propagate(&f, (st.interval.1 - st.interval.0) - seg.tau);
    }
    if f0_norm > 0.0 {
        f.norm() / f0_norm
    } else {
        f.norm()
    }
}

/// Single minimal-energy control over `[0, T]` on all of `E_N`.
pub fn one_shot_hum(p: &ControlProblem) -> Result<ControlSegment> {
    let (f, _) = initial_state(p);
    min_energy_control(&p.system, &f, p.horizon, p.system.degree)
}

/// Best observability constant on `E_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityReport {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub lambda_min: f64,
    /// `C_T = 1/λ_min(M_T)`.
    #[serde(rename = "C_T_lower")]
    pub c_t: f64,
}

/// `C_T = 1/λ_min(M)` with
/// `M_ij = G_ij (e^{T(λ_i+λ_j)} − 1)/(λ_i+λ_j)`, the observation form in
/// the variable `h = e^{−TΛ} g`.
pub fn observability_lower_bound(sys: &TruncatedSystem, horizon: f64) -> Result<ObservabilityReport> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let d = sys.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let s = sys.lambda[i] + sys.lambda[j];
        sys.gram[(i, j)] * (horizon * s).exp_m1() / s
    });
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned { cond: f64::INFINITY, cap: f64::MAX });
    }
    let dec = jacobi_eigen(&m)?;
    let lambda_min = dec.values[0];
    if !(lambda_min > 0.0) {
        return Err(Error::DegenerateRestriction { lambda_min });
    }
    Ok(ObservabilityReport { horizon, degree: sys.degree, lambda_min, c_t: 1.0 / lambda_min })
}

/// Fit `log C_T ≈ A + C·T^{−κ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityFit {
    pub a: f64,
    pub c: f64,
    pub kappa: f64,
    pub r2: f64,
    /// The optimum sits on an end of the `κ` grid, i.e. the data do not
    /// resolve an exponent there.
    pub at_grid_edge: bool,
    /// `(1+δ)(2m₁s+1)/(2s−1−δ)` with `m₁ = 1`.
    pub reference_exponent: f64,
    /// `(1+δ)m₁/(2s−1−δ)` with `m₁ = 1`.
    pub decay_exponent: f64,
}

const KAPPA_GRID: (f64, f64, usize) = (0.05, 0.01, 495);

/// Grid search over `κ ∈ [0.05, 5]` with linear least squares in `A, C`.
pub fn observability_fit(points: &[(f64, f64)], s: f64, delta: f64) -> Result<ObservabilityFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    if points.iter().any(|(t, c)| !(*t > 0.0) || !(*c > 0.0)) {
        return Err(Error::InvalidParameter("observability fit needs positive T and C_T".into()));
    }
    let ys: Vec<f64> = points.iter().map(|(_, c)| c.ln()).collect();
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let (k0, dk, steps) = KAPPA_GRID;
    for step in 0..=steps {
        let kappa = k0 + dk * step as f64;
        let xs: Vec<f64> = points.iter().map(|(t, _)| t.powf(-kappa)).collect();
        let (a, c, r2) = linear_fit(&xs, &ys);
        let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - c * x).powi(2)).sum();
        if best.is_none_or(|b| ss < b.4) {
            best = Some((a, c, kappa, r2, ss));
        }
    }
    let (a, c, kappa, r2, _) = best.expect("non-empty grid");
    let denom = 2.0 * s - 1.0 - delta;
    Ok(ObservabilityFit {
        a,
        c,
        kappa,
        r2,
        at_grid_edge: kappa <= k0 + 0.5 * dk || kappa >= k0 + dk * (steps as f64 - 0.5),
        reference_exponent: (1.0 + delta) * (2.0 * s + 1.0) / denom,
        decay_exponent: (1.0 + delta) / denom,
    })
}

/// One row of a `(T, C_T, cost)` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "C_T")]
    pub c_t: f64,
    pub cost: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Inconsistent(format!("csv: {e}")))?;
    }
    out.flush().map_err(|e| Error::Inconsistent(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gram_matrix, GramQuad};

    fn system(omega: &ControlSet, degree: usize) -> TruncatedSystem {
        let g = gram_matrix(omega, degree, &GramQuad::default()).unwrap();
        TruncatedSystem::new(&g, EvolutionSpec::new(1.0, 1).unwrap()).unwrap()
    }

    #[test]
    fn scalar_gramian_and_cost() {
        let sys = system(&ControlSet::full(1), 0);
        let w = gramian(&sys, 1.0, 0).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((w.w[(0, 0)] - want).abs() < 1e-14);
        let seg = min_energy_control(&sys, &DVector::from_vec(vec![1.0]), 1.0, 0).unwrap();
        assert!((seg.cost - (-2.0f64).exp() / want).abs() < 1e-12);
        let tiny = gramian(&sys, 1e-9, 0).unwrap();
        assert!(tiny.w[(0, 0)] < 2e-9);
    }

    #[test]
    fn zero_state_needs_no_control() {
        let sys = system(&ControlSet::periodic(1, 2.0, 0.5, 0.0).unwrap(), 6);
        let seg = min_energy_control(&sys, &DVector::zeros(sys.len()), 0.5, 6).unwrap();
        assert_eq!(seg.cost, 0.0);
        assert!(seg.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn schedule_is_dyadic() {
        let s = LRSchedule::new(1.0, 25, 1.0, 0.0).unwrap();
        assert_eq!(s.levels, vec![1, 2, 4, 8, 16, 25]);
        assert!(s.sums_exactly());
        assert_eq!(s.lengths(), vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125]);
        let s = LRSchedule::new(2.0, 1, 1.0, 0.0).unwrap();
        assert_eq!(s.levels, vec![1]);
        assert!(s.sums_exactly());
        assert_eq!(s.lengths(), vec![2.0]);
        let err = LRSchedule::new(1.0, 8, 0.75, 0.5).unwrap_err();
        assert_eq!(err, Error::InvalidParameter("δ < 2s−1 required".into()));
    }

    #[test]
    fn scalar_observability() {
        let sys = system(&ControlSet::full(1), 0);
        for t in [0.1, 0.5, 1.0, 2.0] {
            let r = observability_lower_bound(&sys, t).unwrap();
            let want = 1.0 / ((1.0 - (-2.0 * t).exp()) / 2.0 * (2.0 * t).exp());
            assert!((r.c_t / want - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn observability_fit_recovers_synthetic_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.2, 0.4, 0.8, 1.6].iter().map(|&t: &f64| (t, (0.3 + 2.0 * t.powf(-1.5)).exp())).collect();
        let fit = observability_fit(&pts, 1.0, 0.0).unwrap();
        assert!((fit.kappa - 1.5).abs() < 1e-9 && (fit.c - 2.0).abs() < 1e-6);
        assert!(!fit.at_grid_edge);
        assert!((fit.reference_exponent - 3.0).abs() < 1e-15);
    }
}
