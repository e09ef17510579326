//! Total validation of a parsed config.

use thicklab::hermite::span_dimension;

use crate::config::*;
use crate::error::Diagnostic;

pub const EPSILON_RANGE: &str = "ε must lie in (0,1]";
pub const S_LOWER: &str = "s must exceed 1/2";
pub const DELTA_RANGE: &str = "δ < 2s−1 required";

struct Sink(Vec<Diagnostic>);

impl Sink {
    fn check(&mut self, ok: bool, field: &str, message: impl Into<String>) {
        if !ok {
            self.0.push(Diagnostic::new(field, message));
        }
    }

    fn positive(&mut self, v: f64, field: &str) {
        self.check(v > 0.0 && v.is_finite(), field, format!("must be positive and finite, got {v}"));
    }

    fn epsilon(&mut self, e: f64, field: &str) {
        self.check(e > 0.0 && e <= 1.0, field, EPSILON_RANGE);
    }

    fn s(&mut self, s: f64, field: &str) {
        self.check(s > 0.5, field, S_LOWER);
        self.check(s <= 1.0, field, "s must not exceed 1");
    }

    fn omega(&mut self, o: &OmegaSpec, field: &str) {
        let f = |name: &str| format!("{field}.{name}");
        match o {
            OmegaSpec::Full { dim } => self.check((1..=3).contains(dim), &f("dim"), "dimension must be 1, 2 or 3"),
            OmegaSpec::Intervals { list } => {
                for (i, [a, b]) in list.iter().enumerate() {
                    self.check(a < b, &format!("{field}.list[{i}]"), "interval needs a < b");
                }
            }
            OmegaSpec::Boxes { list } => {
                self.check(!list.is_empty(), &f("list"), "at least one box required");
                let d = o.dim();
                for (i, b) in list.iter().enumerate() {
                    let ok = b.lo.len() == d && b.hi.len() == d && b.lo.iter().zip(&b.hi).all(|(a, c)| a < c);
                    self.check(ok, &format!("{field}.list[{i}]"), "box corners must have matching length and lo < hi");
                }
            }
            OmegaSpec::Balls { list } => {
                self.check(!list.is_empty(), &f("list"), "at least one ball required");
                let d = o.dim();
                for (i, b) in list.iter().enumerate() {
                    self.check(
                        b.center.len() == d && b.radius > 0.0,
                        &format!("{field}.list[{i}]"),
                        "ball needs matching dimension and positive radius",
                    );
                }
            }
            OmegaSpec::Periodic { dim, period, kept_fraction, offset } => {
                self.check((1..=3).contains(dim), &f("dim"), "dimension must be 1, 2 or 3");
                self.positive(*period, &f("period"));
                self.check(*kept_fraction > 0.0 && *kept_fraction <= 1.0, &f("kept_fraction"), "kept fraction must lie in (0,1]");
                self.check(offset.is_finite(), &f("offset"), "offset must be finite");
            }
            OmegaSpec::ThickFamily { epsilon, r, extent } => {
                self.epsilon(*epsilon, &f("epsilon"));
                self.positive(*r, &f("r"));
                self.positive(*extent, &f("extent"));
            }
            OmegaSpec::RandomCells { epsilon, r, extent, kept_fraction } => {
                self.epsilon(*epsilon, &f("epsilon"));
                self.positive(*r, &f("r"));
                self.positive(*extent, &f("extent"));
                self.check(*kept_fraction > 0.0 && *kept_fraction <= 1.0, &f("kept_fraction"), "kept fraction must lie in (0,1]");
            }
        }
    }

    fn density(&mut self, d: &DensitySpec, field: &str) {
        match *d {
            DensitySpec::Constant { m } => self.positive(m, &format!("{field}.m")),
            DensitySpec::Power { r, epsilon } => {
                self.positive(r, &format!("{field}.r"));
                self.epsilon(epsilon, &format!("{field}.epsilon"));
            }
        }
    }

    fn quad(&mut self, q: &QuadConfig, field: &str) {
        self.positive(q.panel_width, &format!("{field}.panel_width"));
        self.check(q.nodes > 0, &format!("{field}.nodes"), "must be positive");
        if let Some(r) = q.radius {
            self.positive(r, &format!("{field}.radius"));
        }
        if let Some(t) = q.verify_tol {
            self.positive(t, &format!("{field}.verify_tol"));
        }
    }

    fn degrees(&mut self, d: &Degrees, field: &str) -> Vec<usize> {
        let v = d.values();
        self.check(!v.is_empty(), field, "at least one degree required");
        self.check(v.windows(2).all(|w| w[0] < w[1]), field, "degrees must be strictly increasing");
        v
    }

    fn bounds(&mut self, lo: &[f64], hi: &[f64], dim: usize, field: &str) {
        let ok = lo.len() == dim && hi.len() == dim && lo.iter().zip(hi).all(|(a, b)| a < b && a.is_finite() && b.is_finite());
        self.check(ok, field, format!("lo/hi must be finite {dim}-vectors with lo < hi"));
    }
}

/// Diagnostics for `config`; empty iff the run can start.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut s = Sink(Vec::new());
    if let Some(t) = config.threads {
        s.check(t > 0, "threads", "must be positive");
    }
    let known = config.kind().metrics();
    for (name, b) in &config.acceptance {
        let field = format!("acceptance.{name}");
        s.check(known.contains(&name.as_str()), &field, format!("unknown metric for {}", config.kind()));
        s.check(b.min.is_some() || b.max.is_some(), &field, "needs min or max");
        if let (Some(lo), Some(hi)) = (b.min, b.max) {
            s.check(lo <= hi, &field, "min exceeds max");
        }
    }
    match &config.params {
        Params::SpectralScan(p) => {
            s.omega(&p.omega, "params.omega");
            let deg = s.degrees(&p.degrees, "params.degrees");
            if let Some(e) = p.epsilon {
                s.epsilon(e, "params.epsilon");
                s.check(deg.len() >= 5, "params.degrees", "the growth fit needs at least 5 degrees");
            }
            s.quad(&p.quad, "params.quad");
        }
        Params::BernsteinCheck(p) => {
            s.check((1..=3).contains(&p.dim), "params.dim", "dimension must be 1, 2 or 3");
            s.degrees(&p.degrees, "params.degrees");
            s.check(p.samples > 0, "params.samples", "must be positive");
        }
        Params::Covering(p) => {
            s.density(&p.density, "params.density");
            let dim = p.lo.len();
            s.check((1..=3).contains(&dim), "params.lo", "dimension must be 1, 2 or 3");
            s.bounds(&p.lo, &p.hi, dim, "params.hi");
            s.check(p.per_axis >= 2, "params.per_axis", "need at least 2 points per axis");
            if let Some(h) = p.spacing {
                s.positive(h, "params.spacing");
            }
            if let Some(t) = &p.transfer {
                s.omega(&t.omega, "params.transfer.omega");
                s.density(&t.rho1, "params.transfer.rho1");
                s.density(&t.rho2, "params.transfer.rho2");
                s.check((0.0..=1.0).contains(&t.gamma), "params.transfer.gamma", "γ must lie in [0,1]");
                s.check(t.centers > 0, "params.transfer.centers", "must be positive");
                s.bounds(&t.lo, &t.hi, t.omega.dim(), "params.transfer.hi");
            }
        }
        Params::Dissipation(p) => {
            s.s(p.s, "params.s");
            s.check(p.dim >= 1, "params.dim", "must be positive");
            s.check(!p.levels.is_empty(), "params.levels", "at least one level required");
            s.check(
                !p.times.is_empty() && p.times.iter().all(|t| *t >= 0.0 && t.is_finite()),
                "params.times",
                "times must be finite and non-negative",
            );
        }
        Params::ControlRun(p) => {
            s.s(p.s, "params.s");
            s.check(p.delta >= 0.0, "params.delta", "δ must be non-negative");
            s.check(p.delta < 2.0 * p.s - 1.0, "params.delta", DELTA_RANGE);
            s.omega(&p.omega, "params.omega");
            s.positive(p.horizon, "params.horizon");
            for (i, t) in p.sweep.iter().enumerate() {
                s.positive(*t, &format!("params.sweep[{i}]"));
            }
            s.check(p.observability.len() >= 3, "params.observability", "the blow-up fit needs at least 3 horizons");
            for (i, t) in p.observability.iter().enumerate() {
                s.positive(*t, &format!("params.observability[{i}]"));
            }
            s.positive(p.tol, "params.tol");
            s.quad(&p.quad, "params.quad");
            if let InitialState::Coefficients { values } = &p.f0 {
                let want = span_dimension(p.omega.dim(), p.degree);
                s.check(values.len() == want, "params.f0.values", format!("expected {want} coefficients, got {}", values.len()));
            }
        }
        Params::SingularSpace(p) => {
            s.check(p.form.is_some() != p.matrix.is_some(), "params", "give exactly one of form or matrix");
            s.positive(p.tol, "params.tol");
        }
    }
    s.0
}
