use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned bounded box `[lo, hi]`, used for sampling domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter("bounds must be finite with lo < hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self { lo: vec![a], hi: vec![b] }
    }

    pub fn cube(dim: usize, a: f64, b: f64) -> Self {
        Self { lo: vec![a; dim], hi: vec![b; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Regular grid with `per_axis` points per axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut flat| {
                (0..n)
                    .map(|j| {
                        let i = flat % per_axis;
                        flat /= per_axis;
                        self.lo[j] + (self.hi[j] - self.lo[j]) * i as f64 / (per_axis - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }
}

const HALTON_PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `i`-th Halton point mapped into `bounds`.
pub fn halton_point(i: usize, bounds: &Bounds) -> Vec<f64> {
    (0..bounds.dim())
        .map(|j| {
            let u = radical_inverse(i as u64, HALTON_PRIMES[j % HALTON_PRIMES.len()]);
            bounds.lo[j] + (bounds.hi[j] - bounds.lo[j]) * u
        })
        .collect()
}

/// A building block of a control set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Primitive {
    /// The whole space.
    Full,
    /// `∏ [lo_j, hi_j]`; bounds may be infinite.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : ((x_j − offset_j) mod L) ∈ [cell_lo_j, cell_hi_j) ∀j}`.
    Periodic {
        period: f64,
        cell_lo: Vec<f64>,
        cell_hi: Vec<f64>,
        offset: Vec<f64>,
    },
}

impl Primitive {
    fn dim(&self) -> Option<usize> {
        match self {
            Self::Full => None,
            Self::Box { lo, .. } => Some(lo.len()),
            Self::Ball { center, .. } => Some(center.len()),
            Self::Periodic { cell_lo, .. } => Some(cell_lo.len()),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Full => true,
            Self::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            Self::Ball { center, radius } => x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius,
            Self::Periodic { period, cell_lo, cell_hi, offset } => (0..x.len()).all(|j| {
                let u = (x[j] - offset[j]).rem_euclid(*period);
                cell_lo[j] <= u && u < cell_hi[j]
            }),
        }
    }

    /// Section `{y : (x0, y) ∈ self}` in one dimension fewer.
    fn slice(&self, x0: f64) -> Option<Primitive> {
        match self {
            Self::Full => Some(Self::Full),
            Self::Box { lo, hi } => (lo[0] <= x0 && x0 <= hi[0]).then(|| Self::Box { lo: lo[1..].to_vec(), hi: hi[1..].to_vec() }),
            Self::Ball { center, radius } => {
                let d = x0 - center[0];
                let r2 = radius * radius - d * d;
                (r2 > 0.0).then(|| Self::Ball { center: center[1..].to_vec(), radius: r2.sqrt() })
            }
            Self::Periodic { period, cell_lo, cell_hi, offset } => {
                let u = (x0 - offset[0]).rem_euclid(*period);
                (cell_lo[0] <= u && u < cell_hi[0]).then(|| Self::Periodic {
                    period: *period,
                    cell_lo: cell_lo[1..].to_vec(),
                    cell_hi: cell_hi[1..].to_vec(),
                    offset: offset[1..].to_vec(),
                })
            }
        }
    }

    fn push_intervals(&self, lo: f64, hi: f64, out: &mut Vec<(f64, f64)>) {
        match self {
            Self::Full => out.push((lo, hi)),
            Self::Box { lo: a, hi: b } => out.push((a[0].max(lo), b[0].min(hi))),
            Self::Ball { center, radius } => out.push(((center[0] - radius).max(lo), (center[0] + radius).min(hi))),
            Self::Periodic { period, cell_lo, cell_hi, offset } => {
                let first = ((lo - offset[0] - cell_hi[0]) / period).floor() as i64;
                let last = ((hi - offset[0] - cell_lo[0]) / period).ceil() as i64;
                for k in first..=last {
                    let base = offset[0] + k as f64 * period;
                    out.push(((base + cell_lo[0]).max(lo), (base + cell_hi[0]).min(hi)));
                }
            }
        }
    }

    fn push_breaks(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        match self {
            Self::Full => {}
            Self::Box { lo: a, hi: b } => out.extend([a[0], b[0]]),
            Self::Ball { center, radius } => out.extend([center[0] - radius, center[0] + radius]),
            Self::Periodic { period, cell_lo, cell_hi, offset } => {
                let first = ((lo - offset[0] - cell_hi[0]) / period).floor() as i64;
                let last = ((hi - offset[0] - cell_lo[0]) / period).ceil() as i64;
                for k in first..=last {
                    let base = offset[0] + k as f64 * period;
                    out.extend([base + cell_lo[0], base + cell_hi[0]]);
                }
            }
        }
    }
}

/// Measurable control region `ω ⊂ ℝⁿ`, a finite union of primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    pub dim: usize,
    pub parts: Vec<Primitive>,
}

impl ControlSet {
    pub fn new(dim: usize, parts: Vec<Primitive>) -> Result<Self> {
        let set = Self { dim, parts };
        set.check()?;
        Ok(set)
    }

    pub fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("control set dimension must be positive".into()));
        }
        for p in &self.parts {
            if let Some(d) = p.dim() {
                if d != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: d });
                }
            }
            match p {
                Primitive::Box { lo, hi } if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| a > b) => {
                    return Err(Error::InvalidParameter("box needs lo ≤ hi on every axis".into()));
                }
                Primitive::Ball { radius, .. } if !(*radius > 0.0) => {
                    return Err(Error::InvalidParameter("ball radius must be positive".into()));
                }
                Primitive::Periodic { period, cell_lo, cell_hi, offset } => {
                    let ok = *period > 0.0
                        && cell_lo.len() == cell_hi.len()
                        && offset.len() == cell_lo.len()
                        && cell_lo.iter().zip(cell_hi).all(|(a, b)| 0.0 <= *a && a < b && *b <= *period);
                    if !ok {
                        return Err(Error::InvalidParameter("periodic cell needs 0 ≤ cell_lo < cell_hi ≤ period".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn full(dim: usize) -> Self {
        Self { dim, parts: vec![Primitive::Full] }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, parts: Vec::new() }
    }

    /// Union of 1-D intervals `[a, b]`.
    pub fn intervals(list: &[(f64, f64)]) -> Self {
        Self { dim: 1, parts: list.iter().map(|&(a, b)| Primitive::Box { lo: vec![a], hi: vec![b] }).collect() }
    }

    pub fn boxes(dim: usize, list: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        Self::new(dim, list.into_iter().map(|(lo, hi)| Primitive::Box { lo, hi }).collect())
    }

    pub fn balls(dim: usize, list: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(dim, list.into_iter().map(|(center, radius)| Primitive::Ball { center, radius }).collect())
    }

    /// Periodic pattern keeping the sub-cube `[0, L·fraction^{1/n})ⁿ` of each
    /// cell of side `L`, shifted by `offset` on every axis.
    pub fn periodic(dim: usize, period: f64, kept_fraction: f64, offset: f64) -> Result<Self> {
        if !(kept_fraction > 0.0 && kept_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("kept fraction {kept_fraction} not in (0,1]")));
        }
        let side = period * kept_fraction.powf(1.0 / dim as f64);
        Self::new(dim, vec![Primitive::Periodic { period, cell_lo: vec![0.0; dim], cell_hi: vec![side; dim], offset: vec![offset; dim] }])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    pub fn is_full(&self) -> bool {
        self.parts.iter().any(|p| matches!(p, Primitive::Full))
    }

    /// Section at first coordinate `x0`.
    pub fn slice(&self, x0: f64) -> Result<ControlSet> {
        if self.dim < 2 {
            return Err(Error::UnsupportedShape("cannot slice a 1-D set".into()));
        }
        Ok(ControlSet { dim: self.dim - 1, parts: self.parts.iter().filter_map(|p| p.slice(x0)).collect() })
    }

    /// Sorted disjoint intervals of `ω ∩ [lo, hi]` (1-D only).
    pub fn intervals_within(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        if self.dim != 1 {
            return Err(Error::UnsupportedShape(format!("interval view needs n = 1, got n = {}", self.dim)));
        }
        let mut raw = Vec::new();
        for p in &self.parts {
            p.push_intervals(lo, hi, &mut raw);
        }
        raw.retain(|(a, b)| b > a);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(merged)
    }

    /// Complementary gaps of `ω` inside `[lo, hi]` (1-D only).
    pub fn gaps_within(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        let kept = self.intervals_within(lo, hi)?;
        let mut gaps = Vec::new();
        let mut cursor = lo;
        for (a, b) in kept {
            if a > cursor {
                gaps.push((cursor, a));
            }
            cursor = cursor.max(b);
        }
        if hi > cursor {
            gaps.push((cursor, hi));
        }
        Ok(gaps)
    }

    /// Boundary coordinates along the first axis inside `(lo, hi)`, sorted.
    pub fn axis0_breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.parts {
            p.push_breaks(lo, hi, &mut out);
        }
        out.retain(|x| x.is_finite() && *x > lo && *x < hi);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    /// Ball edges along the first axis (where sections have square-root
    /// behaviour and quadrature panels are graded).
    pub fn axis0_ball_edges(&self) -> Vec<f64> {
        self.parts
            .iter()
            .filter_map(|p| match p {
                Primitive::Ball { center, radius } => Some([center[0] - radius, center[0] + radius]),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_membership_and_intervals() {
        let w = ControlSet::periodic(1, 2.0, 0.5, 0.0).unwrap();
        assert!(w.contains(&[0.5]) && w.contains(&[-1.5]) && !w.contains(&[1.5]) && !w.contains(&[-0.5]));
        let iv = w.intervals_within(-0.5, 1.5).unwrap();
        assert_eq!(iv, vec![(0.0, 1.0)]);
        let iv = w.intervals_within(-3.0, 3.0).unwrap();
        assert_eq!(iv, vec![(-2.0, -1.0), (0.0, 1.0), (2.0, 3.0)]);
    }

    #[test]
    fn overlapping_boxes_merge() {
        let w = ControlSet::intervals(&[(0.0, 2.0), (1.0, 3.0), (5.0, 6.0)]);
        assert_eq!(w.intervals_within(-10.0, 10.0).unwrap(), vec![(0.0, 3.0), (5.0, 6.0)]);
        assert_eq!(w.gaps_within(-1.0, 7.0).unwrap(), vec![(-1.0, 0.0), (3.0, 5.0), (6.0, 7.0)]);
    }

    #[test]
    fn slicing_a_disc_gives_chord() {
        let w = ControlSet::balls(2, vec![(vec![0.0, 0.0], 1.0)]).unwrap();
        let s = w.slice(0.6).unwrap();
        let iv = s.intervals_within(-5.0, 5.0).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].1 - 0.8).abs() < 1e-15 && (iv[0].0 + 0.8).abs() < 1e-15);
        assert!(w.slice(1.5).unwrap().parts.is_empty());
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(ControlSet::balls(2, vec![(vec![0.0, 0.0], -1.0)]).is_err());
        assert!(ControlSet::boxes(2, vec![(vec![0.0], vec![1.0])]).is_err());
        assert!(ControlSet::periodic(1, 2.0, 1.5, 0.0).is_err());
        assert!(ControlSet::intervals(&[(0.0, 1.0)]).slice(0.0).is_err());
    }

    #[test]
    fn halton_points_lie_in_bounds() {
        let b = Bounds::cube(3, -2.0, 5.0);
        for i in 1..200 {
            assert!(b.contains(&halton_point(i, &b)));
        }
        assert_eq!(halton_point(1, &Bounds::interval(0.0, 1.0)), vec![0.5]);
    }
}
