use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bounds, DensityFn};

/// Slowness constant used for the overlap bound.
pub const SLOWNESS: u64 = 2;

/// Ball covering `B(x_k, ρ(x_k))` of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    /// `(4C³+1)ⁿ` with `C = 2`.
    pub overlap_bound: u64,
    pub bounds: Bounds,
    /// Candidate grid spacing used during selection.
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub covered: bool,
    pub uncovered_points: usize,
    pub disjoint: bool,
    pub max_multiplicity: usize,
    pub overlap_bound: u64,
    pub test_points: usize,
    /// `histogram[m]` counts test points lying in exactly `m` balls.
    pub histogram: Vec<usize>,
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn overlap_bound(dim: usize) -> u64 {
    (4 * SLOWNESS.pow(3) + 1).pow(dim as u32)
}

/// Greedy covering on a candidate grid with spacing `0.25·min ρ/√n`.
pub fn covering_generate(rho: &DensityFn, bounds: &Bounds) -> Result<Covering> {
    let n = bounds.dim() as f64;
    covering_generate_with(rho, bounds, 0.25 * rho.min_on(bounds) / n.sqrt())
}

/// Greedy covering with an explicit candidate spacing `h`.
///
/// A candidate `c` is kept iff `|c − x_k| ≥ (ρ(c) + ρ(x_k))/3` for every
/// center already kept, so the balls `B(x_k, ρ(x_k)/3)` are pairwise
/// disjoint. For a 1/2-Lipschitz `ρ` every rejected candidate lies within
/// `0.8ρ(x_k)` of some center, hence the balls `B(x_k, ρ(x_k))` cover the box
/// as long as `h√n/2 ≤ 0.2 min ρ`.
pub fn covering_generate_with(rho: &DensityFn, bounds: &Bounds, h: f64) -> Result<Covering> {
    rho.check()?;
    let dim = bounds.dim();
    let min_rho = rho.min_on(bounds);
    let limit = 0.4 * min_rho / (dim as f64).sqrt();
    if !(h > 0.0) || h > limit {
        return Err(Error::CoverageFailure(format!(
            "candidate spacing {h:.4e} exceeds 0.4·min ρ/√n = {limit:.4e} (min ρ = {min_rho:.4e})"
        )));
    }
    let per_axis: Vec<usize> = (0..dim).map(|j| ((bounds.hi[j] - bounds.lo[j]) / h).ceil() as usize + 1).collect();
    let total: usize = per_axis.iter().product();
    if total > 50_000_000 {
        return Err(Error::CoverageFailure(format!("candidate grid of {total} points is too large")));
    }
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    for mut flat in 0..total {
        let c: Vec<f64> = (0..dim)
            .map(|j| {
                let i = flat % per_axis[j];
                flat /= per_axis[j];
                (bounds.lo[j] + i as f64 * h).min(bounds.hi[j])
            })
            .collect();
        let rc = rho.value(&c);
        if centers.iter().zip(&radii).all(|(x, &r)| dist(&c, x) >= (rc + r) / 3.0) {
            centers.push(c);
            radii.push(rc);
        }
    }
    Ok(Covering { centers, radii, overlap_bound: overlap_bound(dim), bounds: bounds.clone(), spacing: h })
}

impl Covering {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn multiplicity(&self, x: &[f64]) -> usize {
        self.centers.iter().zip(&self.radii).filter(|(c, &r)| dist(x, c) <= r).count()
    }

    /// Exact pairwise disjointness of the third-radius balls.
    pub fn third_radius_disjoint(&self) -> bool {
        let k = self.len();
        (0..k).all(|i| ((i + 1)..k).all(|j| dist(&self.centers[i], &self.centers[j]) >= (self.radii[i] + self.radii[j]) / 3.0))
    }

    /// Coverage and multiplicity on a regular test grid with `per_axis`
    /// points per axis.
    pub fn verify(&self, per_axis: usize) -> CoveringReport {
        let grid = self.bounds.grid(per_axis);
        let mut histogram = vec![0usize; 1];
        let mut uncovered = 0;
        for p in &grid {
            let m = self.multiplicity(p);
            if m == 0 {
                uncovered += 1;
            }
            if m >= histogram.len() {
                histogram.resize(m + 1, 0);
            }
            histogram[m] += 1;
        }
        CoveringReport {
            covered: uncovered == 0,
            uncovered_points: uncovered,
            disjoint: self.third_radius_disjoint(),
            max_multiplicity: histogram.len() - 1,
            overlap_bound: self.overlap_bound,
            test_points: grid.len(),
            histogram,
        }
    }

    /// CSV with columns `x0, …, x{n−1}, radius`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let n = self.bounds.dim();
        let mut header: Vec<String> = (0..n).map(|j| format!("x{j}")).collect();
        header.push("radius".into());
        out.write_record(&header).map_err(io_err)?;
        for (c, r) in self.centers.iter().zip(&self.radii) {
            let mut row: Vec<String> = c.iter().map(|v| format!("{v:.17e}")).collect();
            row.push(format!("{r:.17e}"));
            out.write_record(&row).map_err(io_err)?;
        }
        out.flush().map_err(|e| Error::Inconsistent(e.to_string()))?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Inconsistent(format!("csv: {e}"))
}
