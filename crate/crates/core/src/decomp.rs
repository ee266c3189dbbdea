//! Whitney cube decomposition of `ℝⁿ \ A`.
//!
//! The family `W` is never materialized. A dyadic cube of level `j` with
//! integer corner `z` is `Π [zᵢ/2ʲ, (zᵢ+1)/2ʲ]`; it belongs to `W` iff
//! `d(C, A) ≥ 4√n/2ʲ` while every strict ancestor violates its own criterion.
//! The cube containing a point is found by walking its dyadic ancestor chain
//! from level 0 down; the first qualifying level wins.
//!
//! Criteria are compared on squared distances (`d² ≥ 16n/4ʲ`), which is exact
//! for dyadic data.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default finest level: beyond double-precision dyadic resolution.
pub const DEFAULT_MAX_LEVEL: u32 = 52;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("closed set is empty")]
    EmptySet,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid box: {0}")]
    BadBox(String),
    #[error("point {0:?} lies on the closed set")]
    OnSet(Vec<f64>),
    #[error("no Whitney cube up to level {max_level} contains {point:?}")]
    ResolutionExceeded { point: Vec<f64>, max_level: u32 },
    #[error("coordinate {0} is too large for dyadic addressing")]
    OutOfRange(f64),
    #[error("cube at level {level} with corner {corner:?} is not a Whitney cube")]
    NotInDecomposition { level: u32, corner: Vec<i64> },
}

/// An axis-aligned closed box `Π [loᵢ, hiᵢ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AaBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AaBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<AaBox, DecompError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(DecompError::BadBox("bounds have different or zero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(DecompError::BadBox(format!("{lo:?} / {hi:?}")));
        }
        Ok(AaBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect()
    }

    fn dist_sq_point(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| {
                let g = (lo - v).max(v - hi).max(0.0);
                g * g
            })
            .sum()
    }

    fn dist_sq_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| {
                let g = (self.lo[i] - hi[i]).max(lo[i] - self.hi[i]).max(0.0);
                g * g
            })
            .sum()
    }

    fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= lo[i] && hi[i] <= self.hi[i])
    }
}

/// A non-empty closed subset of `ℝⁿ` with exact distance queries.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedSet {
    FinitePoints(Vec<Vec<f64>>),
    BoxUnion(Vec<AaBox>),
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl ClosedSet {
    pub fn points(points: Vec<Vec<f64>>) -> Result<ClosedSet, DecompError> {
        let n = points.first().ok_or(DecompError::EmptySet)?.len();
        if n == 0 || points.iter().any(|p| p.len() != n) {
            return Err(DecompError::Dimension("points must share a positive dimension".into()));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(DecompError::Dimension("non-finite coordinate".into()));
        }
        Ok(ClosedSet::FinitePoints(points))
    }

    pub fn boxes(boxes: Vec<AaBox>) -> Result<ClosedSet, DecompError> {
        let n = boxes.first().ok_or(DecompError::EmptySet)?.dim();
        if boxes.iter().any(|b| b.dim() != n) {
            return Err(DecompError::Dimension("boxes must share a dimension".into()));
        }
        Ok(ClosedSet::BoxUnion(boxes))
    }

    pub fn dim(&self) -> usize {
        match self {
            ClosedSet::FinitePoints(p) => p[0].len(),
            ClosedSet::BoxUnion(b) => b[0].dim(),
        }
    }

    pub fn distance_sq(&self, x: &[f64]) -> f64 {
        match self {
            ClosedSet::FinitePoints(ps) => ps
                .iter()
                .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min),
            ClosedSet::BoxUnion(bs) => bs
                .iter()
                .map(|b| b.dist_sq_point(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Euclidean `d(x, A)`.
    pub fn distance_to_set(&self, x: &[f64]) -> f64 {
        self.distance_sq(x).sqrt()
    }

    /// Squared distance from the closed box `[lo, hi]` to the set.
    pub fn box_distance_sq(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            ClosedSet::FinitePoints(ps) => ps
                .iter()
                .map(|p| {
                    (0..p.len())
                        .map(|i| {
                            let g = (lo[i] - p[i]).max(p[i] - hi[i]).max(0.0);
                            g * g
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min),
            ClosedSet::BoxUnion(bs) => bs
                .iter()
                .map(|b| b.dist_sq_box(lo, hi))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn cube_distance(&self, c: &WhitneyCube) -> f64 {
        self.box_distance_sq(&c.lo(), &c.hi()).sqrt()
    }

    /// A nearest point of the set to `y`; ties go to the lexicographically
    /// smallest candidate.
    pub fn nearest_point(&self, y: &[f64]) -> Vec<f64> {
        let candidates: Vec<Vec<f64>> = match self {
            ClosedSet::FinitePoints(ps) => ps.clone(),
            ClosedSet::BoxUnion(bs) => bs.iter().map(|b| b.clamp(y)).collect(),
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for c in candidates {
            let d = c.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            best = match best {
                None => Some((d, c)),
                Some((bd, bc)) => {
                    if d < bd || (d == bd && lex_cmp(&c, &bc) == Ordering::Less) {
                        Some((d, c))
                    } else {
                        Some((bd, bc))
                    }
                }
            };
        }
        best.unwrap().1
    }

    /// Whether the closed box lies inside a single box of a box union.
    fn covers_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self {
            ClosedSet::FinitePoints(_) => false,
            ClosedSet::BoxUnion(bs) => bs.iter().any(|b| b.contains_box(lo, hi)),
        }
    }
}

/// The dyadic cube `Π [zᵢ/2ʲ, (zᵢ+1)/2ʲ]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WhitneyCube {
    pub level: u32,
    pub corner: Vec<i64>,
}

fn scale(level: u32) -> f64 {
    (-(level as i32) as f64).exp2()
}

impl WhitneyCube {
    pub fn new(level: u32, corner: Vec<i64>) -> WhitneyCube {
        WhitneyCube { level, corner }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// Side length `l_C = 2^{-j}`.
    pub fn side(&self) -> f64 {
        scale(self.level)
    }

    pub fn lo(&self) -> Vec<f64> {
        let s = self.side();
        self.corner.iter().map(|&z| z as f64 * s).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        let s = self.side();
        self.corner.iter().map(|&z| (z + 1) as f64 * s).collect()
    }

    /// Center `y_C`.
    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.corner.iter().map(|&z| (z as f64 + 0.5) * s).collect()
    }

    pub fn diameter(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side()
    }

    /// The ancestor at a coarser `level`.
    pub fn ancestor(&self, level: u32) -> WhitneyCube {
        assert!(level <= self.level);
        let f = 1i64 << (self.level - level);
        WhitneyCube {
            level,
            corner: self.corner.iter().map(|z| z.div_euclid(f)).collect(),
        }
    }

    /// Closed-cube intersection test.
    pub fn touches(&self, other: &WhitneyCube) -> bool {
        let (alo, ahi, blo, bhi) = (self.lo(), self.hi(), other.lo(), other.hi());
        (0..self.dim()).all(|i| alo[i] <= bhi[i] && blo[i] <= ahi[i])
    }

    /// `x ∈ D_C`, the open sup-norm box of half-side `(3/4) l_C` around `y_C`.
    pub fn enlarged_contains(&self, x: &[f64]) -> bool {
        let c = self.center();
        let r = 0.75 * self.side();
        x.iter().zip(&c).all(|(a, b)| (a - b).abs() < r)
    }

    /// `x` in the half-open cube `Π [zᵢ/2ʲ, (zᵢ+1)/2ʲ)`.
    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        x.iter()
            .enumerate()
            .all(|(i, &v)| lo[i] <= v && v < hi[i])
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        x.iter()
            .enumerate()
            .all(|(i, &v)| lo[i] <= v && v <= hi[i])
    }

    /// The level-`j` dyadic cube containing `x` (half-open convention).
    pub fn containing(x: &[f64], level: u32) -> Result<WhitneyCube, DecompError> {
        let s = (level as f64).exp2();
        let corner = x
            .iter()
            .map(|&v| {
                let t = (v * s).floor();
                if !t.is_finite() || t.abs() >= 4.0e18 {
                    Err(DecompError::OutOfRange(v))
                } else {
                    Ok(t as i64)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WhitneyCube { level, corner })
    }
}

/// Squared membership threshold `(4√n / 2ʲ)² = 16 n / 4ʲ`.
fn threshold_sq(n: usize, level: u32) -> f64 {
    16.0 * n as f64 * scale(2 * level)
}

/// A Whitney decomposition of the complement of a closed set.
#[derive(Debug, Clone)]
pub struct Decomposition {
    set: ClosedSet,
    max_level: u32,
}

impl Decomposition {
    pub fn new(set: ClosedSet, max_level: u32) -> Decomposition {
        Decomposition { set, max_level }
    }

    pub fn set(&self) -> &ClosedSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Whether `C` satisfies its own level's distance criterion.
    pub fn satisfies_criterion(&self, c: &WhitneyCube) -> bool {
        self.set.box_distance_sq(&c.lo(), &c.hi()) >= threshold_sq(self.dim(), c.level)
    }

    /// Exact membership in `W`: criterion holds here and fails at every ancestor.
    pub fn is_member(&self, c: &WhitneyCube) -> bool {
        self.satisfies_criterion(c)
            && (0..c.level).all(|l| !self.satisfies_criterion(&c.ancestor(l)))
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), DecompError> {
        if x.len() != self.dim() {
            return Err(DecompError::Dimension(format!(
                "point has {} coordinates, set has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// The cube of `W` containing `x` (half-open convention).
    pub fn locate(&self, x: &[f64]) -> Result<WhitneyCube, DecompError> {
        self.check_dim(x)?;
        if self.set.distance_sq(x) == 0.0 {
            return Err(DecompError::OnSet(x.to_vec()));
        }
        for level in 0..=self.max_level {
            let c = WhitneyCube::containing(x, level)?;
            if self.satisfies_criterion(&c) {
                return Ok(c);
            }
        }
        Err(DecompError::ResolutionExceeded {
            point: x.to_vec(),
            max_level: self.max_level,
        })
    }

    fn touching_at_level(c: &WhitneyCube, level: u32) -> Vec<WhitneyCube> {
        let s = (level as f64).exp2();
        let (lo, hi) = (c.lo(), c.hi());
        let ranges: Vec<(i64, i64)> = (0..c.dim())
            .map(|i| (((lo[i] * s).ceil() as i64) - 1, (hi[i] * s).floor() as i64))
            .collect();
        let mut out = Vec::new();
        let mut corner: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(WhitneyCube::new(level, corner.clone()));
            let mut i = 0;
            loop {
                if i == corner.len() {
                    return out;
                }
                if corner[i] < ranges[i].1 {
                    corner[i] += 1;
                    break;
                }
                corner[i] = ranges[i].0;
                i += 1;
            }
        }
    }

    /// All cubes of `W` meeting the closed cube `C` (including `C`).
    pub fn neighbors(&self, c: &WhitneyCube) -> Result<Vec<WhitneyCube>, DecompError> {
        if !self.is_member(c) {
            return Err(DecompError::NotInDecomposition {
                level: c.level,
                corner: c.corner.clone(),
            });
        }
        let mut out = Vec::new();
        for level in c.level.saturating_sub(1)..=c.level + 1 {
            for cand in Self::touching_at_level(c, level) {
                if self.is_member(&cand) {
                    out.push(cand);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Anchor `x_C`: a nearest point of the set to the center `y_C`.
    pub fn anchor(&self, c: &WhitneyCube) -> Vec<f64> {
        self.set.nearest_point(&c.center())
    }

    /// All `C ∈ W` with `x ∈ D_C`; only neighbors of the cube of `x` qualify.
    pub fn supporting_cubes(&self, x: &[f64]) -> Result<Vec<WhitneyCube>, DecompError> {
        let home = self.locate(x)?;
        let mut out = Vec::new();
        for level in home.level.saturating_sub(1)..=home.level + 1 {
            for cand in Self::touching_at_level(&home, level) {
                if cand.enlarged_contains(x) && self.is_member(&cand) {
                    out.push(cand);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// All cubes of `W` meeting the closed box `[lo, hi]`, sorted by level
    /// then corner. Parts of the box inside a single set box are skipped; any
    /// other region needing cubes finer than the maximum level is an error.
    pub fn cubes_in_box(&self, lo: &[f64], hi: &[f64], limit: usize) -> Result<Vec<WhitneyCube>, DecompError> {
        self.check_dim(lo)?;
        self.check_dim(hi)?;
        if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
            return Err(DecompError::BadBox(format!("{lo:?} / {hi:?}")));
        }
        let zlo: Vec<i64> = lo.iter().map(|v| v.floor() as i64).collect();
        let zhi: Vec<i64> = hi.iter().map(|v| v.ceil() as i64).collect();
        let mut stack: Vec<WhitneyCube> = Vec::new();
        let mut corner = zlo.clone();
        'outer: loop {
            stack.push(WhitneyCube::new(0, corner.clone()));
            let mut i = 0;
            loop {
                if i == corner.len() {
                    break 'outer;
                }
                if corner[i] < zhi[i] {
                    corner[i] += 1;
                    break;
                }
                corner[i] = zlo[i];
                i += 1;
            }
        }
        let meets = |c: &WhitneyCube| {
            let (clo, chi) = (c.lo(), c.hi());
            (0..lo.len()).all(|i| clo[i] <= hi[i] && lo[i] <= chi[i])
        };
        let mut out = Vec::new();
        let mut visited = 0usize;
        while let Some(c) = stack.pop() {
            if !meets(&c) {
                continue;
            }
            visited += 1;
            if visited > limit {
                return Err(DecompError::ResolutionExceeded {
                    point: lo.to_vec(),
                    max_level: self.max_level,
                });
            }
            if self.satisfies_criterion(&c) {
                out.push(c);
                continue;
            }
            let (clo, chi) = (c.lo(), c.hi());
            let ilo: Vec<f64> = (0..lo.len()).map(|i| clo[i].max(lo[i])).collect();
            let ihi: Vec<f64> = (0..lo.len()).map(|i| chi[i].min(hi[i])).collect();
            if self.set.covers_box(&ilo, &ihi) {
                continue;
            }
            if c.level >= self.max_level {
                return Err(DecompError::ResolutionExceeded {
                    point: c.center(),
                    max_level: self.max_level,
                });
            }
            let n = c.dim();
            for mask in 0..(1u32 << n) {
                let corner = (0..n)
                    .map(|i| 2 * c.corner[i] + i64::from((mask >> i) & 1))
                    .collect();
                stack.push(WhitneyCube::new(c.level + 1, corner));
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}
