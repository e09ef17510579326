//! Experiment configuration: one TOML document per run.
//!
//! ```toml
//! kind = "spectral-scan"
//! seed = 7
//!
//! [params]
//! degrees = { from = 10, to = 120, step = 10 }
//! epsilon = 0.5
//! omega = { type = "thick-family", epsilon = 0.5, r = 0.5, extent = 40.0 }
//!
//! [acceptance]
//! fit_r2 = { min = 0.95 }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thicklab::geometry::{ControlSet, DensityFn, Primitive};
use thicklab::spectral::{thick_family, GramQuad};
use thicklab::symbols::QuadraticFormSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SpectralScan,
    BernsteinCheck,
    Covering,
    Dissipation,
    ControlRun,
    SingularSpace,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::SpectralScan, Kind::BernsteinCheck, Kind::Covering, Kind::Dissipation, Kind::ControlRun, Kind::SingularSpace];

    pub fn name(self) -> &'static str {
        match self {
            Kind::SpectralScan => "spectral-scan",
            Kind::BernsteinCheck => "bernstein-check",
            Kind::Covering => "covering",
            Kind::Dissipation => "dissipation",
            Kind::ControlRun => "control-run",
            Kind::SingularSpace => "singular-space",
        }
    }

    /// Metric names a run of this kind reports.
    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            Kind::SpectralScan => &["c_n_min", "c_n_max", "lambda_min_min", "fit_r2", "fit_slope", "max_quad_error"],
            Kind::BernsteinCheck => &["max_ratio", "violations", "checks"],
            Kind::Covering => &[
                "balls",
                "covered",
                "disjoint",
                "max_multiplicity",
                "overlap_bound",
                "uncovered_points",
                "transfer_measured",
                "transfer_predicted",
                "transfer_holds",
            ],
            Kind::Dissipation => &["violations", "checks", "max_sharp_error"],
            Kind::ControlRun => &[
                "terminal_residual",
                "resim_residual",
                "total_cost",
                "omega_cost",
                "hum_cost",
                "cost_ratio",
                "lr_over_hum",
                "truncation_tail",
                "c_t_monotone",
                "kappa",
                "kappa_r2",
                "reference_exponent",
                "decay_exponent",
            ],
            Kind::SingularSpace => &["dim_s", "k0", "ambiguous", "partially_elliptic"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Acceptance interval for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Degrees {
    Range { from: usize, to: usize, step: usize },
    List(Vec<usize>),
}

impl Degrees {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Degrees::Range { from, to, step } => (*from..=*to).step_by((*step).max(1)).collect(),
            Degrees::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Control region declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaSpec {
    Full {
        dim: usize,
    },
    Intervals {
        list: Vec<[f64; 2]>,
    },
    Boxes {
        list: Vec<BoxSpec>,
    },
    Balls {
        list: Vec<BallSpec>,
    },
    Periodic {
        dim: usize,
        period: f64,
        kept_fraction: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Cells of length `2R⟨c⟩^{1−ε}` from the origin, first half kept.
    ThickFamily {
        epsilon: f64,
        r: f64,
        extent: f64,
    },
    /// Same cells, keeping a sub-interval of relative length
    /// `kept_fraction` at a seeded uniform position in each cell.
    RandomCells {
        epsilon: f64,
        r: f64,
        extent: f64,
        kept_fraction: f64,
    },
}

impl OmegaSpec {
    pub fn dim(&self) -> usize {
        match self {
            OmegaSpec::Full { dim } | OmegaSpec::Periodic { dim, .. } => *dim,
            OmegaSpec::Boxes { list } => list.first().map_or(1, |b| b.lo.len()),
            OmegaSpec::Balls { list } => list.first().map_or(1, |b| b.center.len()),
            _ => 1,
        }
    }

    pub fn build(&self, seed: u64) -> Result<ControlSet, CliError> {
        let set = match self {
            OmegaSpec::Full { dim } => ControlSet::full(*dim),
            OmegaSpec::Intervals { list } => ControlSet::intervals(&list.iter().map(|[a, b]| (*a, *b)).collect::<Vec<_>>()),
            OmegaSpec::Boxes { list } => ControlSet::boxes(self.dim(), list.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect())?,
            OmegaSpec::Balls { list } => {
                ControlSet::new(self.dim(), list.iter().map(|b| Primitive::Ball { center: b.center.clone(), radius: b.radius }).collect())?
            }
            OmegaSpec::Periodic { dim, period, kept_fraction, offset } => ControlSet::periodic(*dim, *period, *kept_fraction, *offset)?,
            OmegaSpec::ThickFamily { epsilon, r, extent } => thick_family(*epsilon, *r, *extent)?,
            OmegaSpec::RandomCells { epsilon, r, extent, kept_fraction } => random_cells(*epsilon, *r, *extent, *kept_fraction, seed),
        };
        Ok(set)
    }
}

/// Seeded counterpart of [`thick_family`].
pub fn random_cells(epsilon: f64, r: f64, extent: f64, kept: f64, seed: u64) -> ControlSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iv = Vec::new();
    let mut c = 0.0f64;
    while c < extent {
        let l = 2.0 * r * (1.0 + c * c).powf((1.0 - epsilon) / 2.0);
        for lo in [c, -c - l] {
            let start = lo + rng.random_range(0.0..=1.0) * (1.0 - kept) * l;
            iv.push((start, start + kept * l));
        }
        c += l;
    }
    ControlSet::intervals(&iv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant { m: f64 },
    Power { r: f64, epsilon: f64 },
}

impl DensitySpec {
    pub fn build(&self) -> DensityFn {
        match *self {
            DensitySpec::Constant { m } => DensityFn::constant(m),
            DensitySpec::Power { r, epsilon } => DensityFn::power(r, epsilon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_panel_width")]
    pub panel_width: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    pub radius: Option<f64>,
    pub verify_tol: Option<f64>,
}

fn default_panel_width() -> f64 {
    0.25
}

fn default_nodes() -> usize {
    24
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { panel_width: default_panel_width(), nodes: default_nodes(), radius: None, verify_tol: None }
    }
}

impl From<QuadConfig> for GramQuad {
    fn from(q: QuadConfig) -> Self {
        GramQuad { panel_width: q.panel_width, nodes: q.nodes, radius: q.radius, verify_tol: q.verify_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralScanParams {
    pub omega: OmegaSpec,
    pub degrees: Degrees,
    /// Growth exponent for the `log C_N` fit, if any.
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub quad: QuadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinParams {
    #[serde(default = "one")]
    pub dim: usize,
    pub degrees: Degrees,
    pub samples: usize,
    pub max_order: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferParams {
    pub omega: OmegaSpec,
    pub rho1: DensitySpec,
    pub rho2: DensitySpec,
    pub gamma: f64,
    pub centers: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringParams {
    pub density: DensitySpec,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Test grid points per axis for verification.
    pub per_axis: usize,
    /// Candidate spacing; defaults to `0.25·min ρ/√n`.
    pub spacing: Option<f64>,
    pub transfer: Option<TransferParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationParams {
    pub s: f64,
    #[serde(default = "one")]
    pub dim: usize,
    pub degree: usize,
    pub levels: Vec<usize>,
    pub times: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Uniform coefficients in `[−1, 1]` from the run seed.
    Random,
    Coefficients {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRunParams {
    pub s: f64,
    #[serde(default)]
    pub delta: f64,
    pub degree: usize,
    pub omega: OmegaSpec,
    pub horizon: f64,
    /// Horizons for the cost sweep; always includes `horizon`.
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// Horizons for the observability constants.
    #[serde(default = "default_observability")]
    pub observability: Vec<f64>,
    #[serde(default = "default_control_tol")]
    pub tol: f64,
    #[serde(default = "default_f0")]
    pub f0: InitialState,
    #[serde(default)]
    pub quad: QuadConfig,
}

fn default_observability() -> Vec<f64> {
    vec![0.1, 0.2, 0.4, 0.8, 1.6]
}

fn default_control_tol() -> f64 {
    1e-6
}

fn default_f0() -> InitialState {
    InitialState::Random
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSpaceParams {
    /// Catalog name, or `matrix` below.
    pub form: Option<String>,
    pub matrix: Option<QuadraticFormSpec>,
    #[serde(default = "default_rank_tol")]
    pub tol: f64,
    #[serde(default = "default_ellipticity_samples")]
    pub ellipticity_samples: usize,
}

fn default_rank_tol() -> f64 {
    1e-10
}

fn default_ellipticity_samples() -> usize {
    200
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    SpectralScan(SpectralScanParams),
    BernsteinCheck(BernsteinParams),
    Covering(CoveringParams),
    Dissipation(DissipationParams),
    ControlRun(ControlRunParams),
    SingularSpace(SingularSpaceParams),
}

impl Params {
    pub fn kind(&self) -> Kind {
        match self {
            Params::SpectralScan(_) => Kind::SpectralScan,
            Params::BernsteinCheck(_) => Kind::BernsteinCheck,
            Params::Covering(_) => Kind::Covering,
            Params::Dissipation(_) => Kind::Dissipation,
            Params::ControlRun(_) => Kind::ControlRun,
            Params::SingularSpace(_) => Kind::SingularSpace,
        }
    }
}

/// A parsed run description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: Params,
    pub acceptance: BTreeMap<String, Bound>,
    /// The document text, hashed into the manifest.
    pub source: String,
}

impl ExperimentConfig {
    pub fn kind(&self) -> Kind {
        self.params.kind()
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        #[derive(Deserialize)]
        struct Header {
            kind: Kind,
        }
        let header: Header = toml::from_str(text).map_err(|e| schema_error(text, &e))?;
        let params = match header.kind {
            Kind::SpectralScan => Params::SpectralScan(document(text)?),
            Kind::BernsteinCheck => Params::BernsteinCheck(document(text)?),
            Kind::Covering => Params::Covering(document(text)?),
            Kind::Dissipation => Params::Dissipation(document(text)?),
            Kind::ControlRun => Params::ControlRun(document(text)?),
            Kind::SingularSpace => Params::SingularSpace(document(text)?),
        };
        let doc: Document<toml::Value> = toml::from_str(text).map_err(|e| schema_error(text, &e))?;
        Ok(Self {
            seed: doc.seed,
            output_dir: doc.output_dir,
            threads: doc.threads,
            params,
            acceptance: doc.acceptance,
            source: text.to_owned(),
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    #[allow(dead_code)]
    kind: Kind,
    #[serde(default)]
    seed: u64,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
    params: P,
    #[serde(default)]
    acceptance: BTreeMap<String, Bound>,
}

fn document<P: for<'de> Deserialize<'de>>(text: &str) -> Result<P, CliError> {
    toml::from_str::<Document<P>>(text).map(|d| d.params).map_err(|e| schema_error(text, &e))
}

fn schema_error(text: &str, e: &toml::de::Error) -> CliError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    CliError::Schema { line, column, message: e.message().to_owned() }
}
