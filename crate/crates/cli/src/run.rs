//! Execution of a validated config.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thicklab::bernstein::{crude_bernstein_check, index_pairs, write_bernstein_csv};
use thicklab::control::*;
use thicklab::geometry::*;
use thicklab::hermite::{span_dimension, HermiteExpansion, MultiIndex};
use thicklab::semigroup::{decay_trace, dissipation_tail, write_decay_csv, EvolutionSpec};
use thicklab::spectral::{gram_matrix, growth_fit, spectral_constant, write_spectral_csv, GramQuad, SpectralRow};
use thicklab::symbols::{catalog, hamilton_map, partial_ellipticity_check, singular_space, QuadraticForm};

use crate::config::*;
use crate::error::CliError;
use crate::manifest::{Assertion, Outputs, RunManifest};
use crate::plot;
use crate::validate::validate;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

type Metrics = BTreeMap<String, f64>;

/// Deterministic generator for task `stream` of a run.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-norm expansion with uniform coefficients before normalization.
pub fn random_expansion(dim: usize, degree: usize, rng: &mut impl Rng) -> HermiteExpansion {
    let c: Vec<f64> = (0..span_dimension(dim, degree)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = HermiteExpansion::from_coeffs(dim, degree, c).expect("length matches basis");
    let n = f.norm();
    f.scale(1.0 / n)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> thicklab::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s.into_bytes()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Validates, executes and records one run.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let diags = validate(config);
    if !diags.is_empty() {
        return Err(CliError::Validation(diags));
    }
    let dir = opts.out.clone().or_else(|| config.output_dir.clone()).ok_or(CliError::NoOutputDir)?;
    let seed = opts.seed.unwrap_or(config.seed);
    let threads = opts.threads.or(config.threads).unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Threads(e.to_string()))?;

    let started = chrono::Utc::now();
    let clock = Instant::now();
    let mut out = Outputs::create(&dir)?;
    let metrics = pool.install(|| match &config.params {
        Params::SpectralScan(p) => spectral_scan(p, seed, &mut out),
        Params::BernsteinCheck(p) => bernstein_check(p, seed, &mut out),
        Params::Covering(p) => covering(p, seed, &mut out),
        Params::Dissipation(p) => dissipation(p, seed, &mut out),
        Params::ControlRun(p) => control_run(p, seed, &mut out),
        Params::SingularSpace(p) => singular(p, &mut out),
    })?;

    let acceptance: Vec<Assertion> = config
        .acceptance
        .iter()
        .map(|(metric, b)| {
            let value = metrics.get(metric).copied().filter(|v| !v.is_nan());
            Assertion { metric: metric.clone(), min: b.min, max: b.max, value, passed: value.is_some_and(|v| b.admits(v)) }
        })
        .collect();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        kind: config.kind(),
        config_sha256: crate::manifest::sha256_hex(config.source.as_bytes()),
        seed,
        threads,
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        runtime_seconds: clock.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
        passed: acceptance.iter().all(|a| a.passed),
        metrics,
        acceptance,
    };
    out.commit(&manifest)?;
    Ok(RunOutcome { dir, manifest })
}

fn spectral_scan(p: &SpectralScanParams, seed: u64, out: &mut Outputs) -> Result<Metrics, CliError> {
    let omega = p.omega.build(seed)?;
    let quad: GramQuad = p.quad.into();
    let rows = p
        .degrees
        .values()
        .par_iter()
        .map(|&n| {
            let g = gram_matrix(&omega, n, &quad)?;
            let sc = spectral_constant(&g)?;
            Ok(SpectralRow { degree: n, lambda_min: sc.lambda_min, c_n: sc.c_n, quad_tol: g.quad_error.unwrap_or(f64::NAN) })
        })
        .collect::<thicklab::Result<Vec<_>>>()?;
    out.write("spectral.csv", &csv_bytes(|b| write_spectral_csv(&rows, b))?)?;

    let mut m = Metrics::new();
    m.insert("c_n_min".into(), rows.iter().map(|r| r.c_n).fold(f64::INFINITY, f64::min));
    m.insert("c_n_max".into(), rows.iter().map(|r| r.c_n).fold(f64::NEG_INFINITY, f64::max));
    m.insert("lambda_min_min".into(), rows.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min));
    if p.quad.verify_tol.is_some() {
        m.insert("max_quad_error".into(), rows.iter().map(|r| r.quad_tol).fold(0.0, f64::max));
    }
    let mut fit_line = None;
    if let Some(eps) = p.epsilon {
        let pairs: Vec<(usize, f64)> = rows.iter().map(|r| (r.degree, r.c_n)).collect();
        let fit = growth_fit(&pairs, eps)?;
        m.insert("fit_r2".into(), fit.r2);
        m.insert("fit_slope".into(), fit.b);
        fit_line = Some((fit.a, fit.b, eps));
        out.write("growth_fit.json", &json_bytes(&fit))?;
    }
    out.write("spectral.gp", plot::spectral(fit_line).as_bytes())?;
    Ok(m)
}

fn bernstein_check(p: &BernsteinParams, seed: u64, out: &mut Outputs) -> Result<Metrics, CliError> {
    let pairs = index_pairs(p.dim, p.max_order);
    let tasks: Vec<(usize, usize)> = p.degrees.values().into_iter().flat_map(|n| (0..p.samples).map(move |i| (n, i))).collect();
    let rows = tasks
        .par_iter()
        .enumerate()
        .map(|(t, &(n, _))| {
            let f = random_expansion(p.dim, n, &mut task_rng(seed, t as u64));
            pairs.iter().map(|(a, b)| crude_bernstein_check(&f, a, b)).collect::<thicklab::Result<Vec<_>>>()
        })
        .collect::<thicklab::Result<Vec<_>>>()?
        .concat();
    out.write("bernstein.csv", &csv_bytes(|b| write_bernstein_csv(&rows, b))?)?;
    out.write("bernstein.gp", plot::bernstein().as_bytes())?;
    let mut m = Metrics::new();
    m.insert("max_ratio".into(), rows.iter().map(|r| r.ratio).fold(0.0, f64::max));
    m.insert("violations".into(), rows.iter().filter(|r| r.ratio > 1.0 + 1e-10).count() as f64);
    m.insert("checks".into(), rows.len() as f64);
    Ok(m)
}

fn covering(p: &CoveringParams, seed: u64, out: &mut Outputs) -> Result<Metrics, CliError> {
    let bounds = Bounds::new(p.lo.clone(), p.hi.clone())?;
    let rho = p.density.build();
    let cov = match p.spacing {
        Some(h) => covering_generate_with(&rho, &bounds, h)?,
        None => covering_generate(&rho, &bounds)?,
    };
    let rep = cov.verify(p.per_axis);
    out.write("covering.csv", &csv_bytes(|b| cov.write_csv(b))?)?;
    out.write("covering_report.json", &json_bytes(&rep))?;
    out.write("covering.gp", plot::covering(bounds.dim()).as_bytes())?;
    let mut m = Metrics::new();
    m.insert("balls".into(), cov.len() as f64);
    m.insert("covered".into(), flag(rep.covered));
    m.insert("disjoint".into(), flag(rep.disjoint));
    m.insert("max_multiplicity".into(), rep.max_multiplicity as f64);
    m.insert("overlap_bound".into(), rep.overlap_bound as f64);
    m.insert("uncovered_points".into(), rep.uncovered_points as f64);
    if let Some(t) = &p.transfer {
        let omega = t.omega.build(seed)?;
        let tb = Bounds::new(t.lo.clone(), t.hi.clone())?;
        let centers = sample_centers(&omega, &tb, t.centers)?;
        let r = thickness_transfer_check(&omega, &t.rho1.build(), &t.rho2.build(), t.gamma, &centers, &QuadSpec::default())?;
        out.write("transfer.json", &json_bytes(&r))?;
        m.insert("transfer_measured".into(), r.measured_rho2);
        m.insert("transfer_predicted".into(), r.predicted);
        m.insert("transfer_holds".into(), flag(r.holds));
    }
    Ok(m)
}

#[derive(Clone, Serialize)]
struct DissipationRow {
    sample: usize,
    k: usize,
    t: f64,
    tail_norm: f64,
    bound: f64,
    sharp_bound: f64,
    weak_bound: f64,
    holds: bool,
}

fn dissipation(p: &DissipationParams, seed: u64, out: &mut Outputs) -> Result<Metrics, CliError> {
    let spec = EvolutionSpec::new(p.s, p.dim)?;
    let samples: Vec<HermiteExpansion> = (0..p.samples).map(|i| random_expansion(p.dim, p.degree, &mut task_rng(seed, i as u64))).collect();
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rows = Vec::new();
            for &k in &p.levels {
                for &t in &p.times {
                    let r = dissipation_tail(f, k, t, &spec)?;
                    rows.push(DissipationRow {
                        sample: i,
                        k,
                        t,
                        tail_norm: r.tail_norm,
                        bound: r.bound,
                        sharp_bound: r.sharp_bound,
                        weak_bound: r.weak_bound,
                        holds: r.holds,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<thicklab::Result<Vec<_>>>()?
        .concat();

    // single modes Φ_{k+1} attain the rate exactly
    let mut sharp = 0.0f64;
    for &k in &p.levels {
        let alpha = MultiIndex::axis(p.dim, 0, k + 1);
        let f = HermiteExpansion::basis_function(&alpha);
        for &t in &p.times {
            let r = dissipation_tail(&f, k, t, &spec)?;
            sharp = sharp.max((r.tail_norm - (-t * spec.eigenvalue(k + 1)).exp()).abs());
        }
    }

    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        for r in &rows {
            w.serialize(r).map_err(|e| thicklab::Error::Inconsistent(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| CliError::io("dissipation.csv", e))?;
    }
    out.write("dissipation.csv", &buf)?;
    if let Some(f) = samples.first() {
        let trace = decay_trace(f, &p.times, &spec)?;
        out.write("decay.csv", &csv_bytes(|b| write_decay_csv(&trace, b))?)?;
        out.write("decay.gp", plot::dissipation().as_bytes())?;
    }
    let mut m = Metrics::new();
    m.insert("violations".into(), rows.iter().filter(|r| !r.holds).count() as f64);
    m.insert("checks".into(), rows.len() as f64);
    m.insert("max_sharp_error".into(), sharp);
    Ok(m)
}

#[derive(Serialize)]
struct ObservabilityOutput {
    points: Vec<ObservabilityReport>,
    monotone: bool,
    fit: ObservabilityFit,
}

fn control_run(p: &ControlRunParams, seed: u64, out: &mut Outputs) -> Result<Metrics, CliError> {
    let dim = p.omega.dim();
    let omega = p.omega.build(seed)?;
    let spec = EvolutionSpec::new(p.s, dim)?;
    let f0 = match &p.f0 {
        InitialState::Random => random_expansion(dim, p.degree, &mut task_rng(seed, 0)),
        InitialState::Coefficients { values } => HermiteExpansion::from_coeffs(dim, p.degree, values.clone())?,
    };
    let mut problem = ControlProblem::with_quad(p.horizon, omega, spec, p.degree, f0, p.delta, &p.quad.into())?;
    problem.tol = p.tol;

    let syn = lebeau_robbiano_synthesize(&problem).map_err(|e| CliError::Synthesis(Box::new(e)))?;
    let resim = resimulate(&problem, &syn, 2);
    let hum = one_shot_hum(&problem)?;
    out.write("trace.json", (syn.to_json() + "\n").as_bytes())?;

    let mut horizons = p.sweep.clone();
    horizons.push(p.horizon);
    horizons.sort_by(f64::total_cmp);
    horizons.dedup();
    let sweep = horizons
        .par_iter()
        .map(|&t| {
            let pt = problem.with_horizon(t)?;
            let s = lebeau_robbiano_synthesize(&pt).map_err(|e| e.cause)?;
            let c = observability_lower_bound(&problem.system, t)?;
            Ok(SweepRow { horizon: t, c_t: c.c_t, cost: s.total_cost })
        })
        .collect::<thicklab::Result<Vec<_>>>()?;
    out.write("cost.csv", &csv_bytes(|b| write_sweep_csv(&sweep, b))?)?;

    let mut grid = p.observability.clone();
    grid.sort_by(f64::total_cmp);
    let points = grid.par_iter().map(|&t| observability_lower_bound(&problem.system, t)).collect::<thicklab::Result<Vec<_>>>()?;
    let monotone = points.windows(2).all(|w| w[1].c_t <= w[0].c_t);
    let fit = observability_fit(&points.iter().map(|r| (r.horizon, r.c_t)).collect::<Vec<_>>(), p.s, p.delta)?;
    out.write("observability.json", &json_bytes(&ObservabilityOutput { points, monotone, fit: fit.clone() }))?;
    out.write("control.gp", plot::control().as_bytes())?;

    let cost_at = |t: f64| sweep.iter().find(|r| r.horizon == t).map(|r| r.cost).expect("horizon in sweep");
    let mut m = Metrics::new();
    m.insert("terminal_residual".into(), syn.terminal_residual);
    m.insert("resim_residual".into(), resim);
    m.insert("total_cost".into(), syn.total_cost);
    m.insert("omega_cost".into(), syn.total_omega_cost);
    m.insert("hum_cost".into(), hum.cost);
    m.insert("cost_ratio".into(), cost_at(horizons[0]) / cost_at(p.horizon));
    m.insert("lr_over_hum".into(), syn.total_cost / hum.cost);
    m.insert("truncation_tail".into(), syn.truncation_tail);
    m.insert("c_t_monotone".into(), flag(monotone));
    m.insert("kappa".into(), fit.kappa);
    m.insert("kappa_r2".into(), fit.r2);
    m.insert("reference_exponent".into(), fit.reference_exponent);
    m.insert("decay_exponent".into(), fit.decay_exponent);
    Ok(m)
}

#[derive(Serialize)]
struct SingularOutput<'a> {
    #[serde(flatten)]
    result: &'a thicklab::symbols::SingularSpaceResult,
    partially_elliptic: bool,
}

fn singular(p: &SingularSpaceParams, out: &mut Outputs) -> Result<Metrics, CliError> {
    let q: QuadraticForm = match (&p.form, &p.matrix) {
        (Some(name), _) => catalog::by_name(name)?,
        (None, Some(spec)) => spec.clone().try_into()?,
        (None, None) => unreachable!("validated"),
    };
    let res = singular_space(&hamilton_map(&q)?, p.tol)?;
    let pe = partial_ellipticity_check(&q, &res.basis, p.ellipticity_samples, p.tol)?;
    out.write("singular_space.json", &json_bytes(&SingularOutput { result: &res, partially_elliptic: pe }))?;
    let mut m = Metrics::new();
    m.insert("dim_s".into(), res.dim_s as f64);
    m.insert("k0".into(), res.k0.map_or(-1.0, |k| k as f64));
    m.insert("ambiguous".into(), flag(res.ambiguous));
    m.insert("partially_elliptic".into(), flag(pe));
    Ok(m)
}
