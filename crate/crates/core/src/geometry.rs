//! Space-time domains as implicit CSG trees over a handful of analytic primitives.
//!
//! Every primitive is an open set described by a closed-form inequality. Times are
//! absolute; `x` has the region's space dimension `n`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points with `|t - t_tip| < t_floor` near a logarithmic tip are treated as exterior.
pub const DEFAULT_T_FLOOR: f64 = 1e-6;

/// Relative boundary tolerance (multiplied by the diameter).
pub const DEFAULT_TOL_BOUNDARY: f64 = 1e-8;

fn default_t_floor() -> f64 {
    DEFAULT_T_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: impl Into<Vec<f64>>, t: f64) -> Self {
        Self { x: x.into(), t }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &SpaceTimePoint) -> f64 {
        let dx: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (dx + (self.t - other.t).powi(2)).sqrt()
    }

    /// `self + s * dir` where `dir` has `n + 1` components, time last.
    pub fn offset(&self, dir: &[f64], s: f64) -> SpaceTimePoint {
        let n = self.dim();
        SpaceTimePoint {
            x: self.x.iter().zip(dir).map(|(a, d)| a + s * d).collect(),
            t: self.t + s * dir[n],
        }
    }
}

impl fmt::Display for SpaceTimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x=[")?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "], t={})", self.t)
    }
}

/// Spatial cross-section `Q` of a cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SpatialDomain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl SpatialDomain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        SpatialDomain::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpatialDomain::Box { lo, .. } => lo.len(),
            SpatialDomain::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpatialDomain::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(invalid("box", "lo and hi need the same nonzero length"));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return Err(invalid("box", "need finite lo < hi on every axis"));
                }
            }
            SpatialDomain::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(invalid("ball", "center must be nonempty"));
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(invalid("radius", "must be > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape(true, false).contains(x)
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SpatialDomain::Box { lo, hi } => (lo.clone(), hi.clone()),
            SpatialDomain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Euclidean distance from `x` to the boundary of the set.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            SpatialDomain::Box { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b);
                if inside {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| (v - a).min(b - v))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| {
                            let d = (a - v).max(v - b).max(0.0);
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                }
            }
            SpatialDomain::Ball { center, radius } => (norm2(x, center).sqrt() - radius).abs(),
        }
    }

    fn shape(&self, active: bool, closed: bool) -> SliceShape<'_> {
        if !active {
            return SliceShape::Empty;
        }
        match self {
            SpatialDomain::Box { lo, hi } => SliceShape::Box { lo, hi, closed },
            SpatialDomain::Ball { center, radius } => SliceShape::Ball {
                center: Some(center),
                r2: radius * radius,
                closed,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeSide {
    /// `t < tau`
    Before,
    /// `t > tau`
    After,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryClass {
    Bottom,
    BottomEdge,
    Wall,
    Top,
    Curved,
    Earliest,
    Other,
}

impl BoundaryClass {
    /// Bottom, bottom edge and walls make up the parabolic boundary of a cylinder.
    pub fn is_parabolic(self) -> bool {
        matches!(
            self,
            BoundaryClass::Bottom | BoundaryClass::BottomEdge | BoundaryClass::Wall
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub point: SpaceTimePoint,
    pub class: BoundaryClass,
    /// An interior point within the boundary tolerance of `point`.
    pub witness: SpaceTimePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl BoundingBox {
    pub fn is_finite(&self) -> bool {
        self.t_lo.is_finite()
            && self.t_hi.is_finite()
            && self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn diagonal(&self) -> f64 {
        let dx: f64 = self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).powi(2)).sum();
        (dx + (self.t_hi - self.t_lo).powi(2)).sqrt()
    }

    fn intersect(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let b = BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect(),
            t_lo: self.t_lo.max(other.t_lo),
            t_hi: self.t_hi.min(other.t_hi),
        };
        b.nonempty().then_some(b)
    }

    fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
            t_lo: self.t_lo.min(other.t_lo),
            t_hi: self.t_hi.max(other.t_hi),
        }
    }

    fn nonempty(&self) -> bool {
        self.t_lo < self.t_hi && self.lo.iter().zip(&self.hi).all(|(a, b)| a < b)
    }
}

/// A bounded (after composition) space-time domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum Region {
    Empty {
        dim: usize,
    },
    /// `Q × (t0, t1)`
    Cylinder { base: SpatialDomain, t0: f64, t1: f64 },
    /// `|x - center|² + (t - t_center)² < radius²`
    Ball {
        center: Vec<f64>,
        t_center: f64,
        radius: f64,
    },
    /// `-cutoff < t < 0`, `|x|² < -factor · t · log|log|t||`
    Petrovsky {
        dim: usize,
        factor: f64,
        cutoff: f64,
        #[serde(default = "default_t_floor")]
        t_floor: f64,
    },
    /// `W(center - x, t_center - t) > level` with `W(x, t) = t^{-1/2} e^{-|x|²/4t}`
    HeatBall {
        center: Vec<f64>,
        t_center: f64,
        level: f64,
        #[serde(default = "default_t_floor")]
        t_floor: f64,
    },
    HalfSpace { dim: usize, tau: f64, side: TimeSide },
    /// Sub-level region of the irregularity function: `cutoff < t < 0`,
    /// `|x|²` below [`level_set_radius2`].
    LevelSetSubdomain {
        dim: usize,
        k: f64,
        alpha: f64,
        level: f64,
        cutoff: f64,
        #[serde(default = "default_t_floor")]
        t_floor: f64,
    },
    Union { children: Vec<Region> },
    Intersection { children: Vec<Region> },
    /// `left` minus the closure of `right`.
    Difference { left: Box<Region>, right: Box<Region> },
}

/// `-factor · t · log|log|t||` (may be negative when |t| > 1/e).
pub fn petrovsky_radius2(factor: f64, t: f64) -> f64 {
    let ll = (-(-t).ln()).ln();
    -factor * t * ll
}

/// Squared radius of the heat-ball slice at elapsed time `s = t_center - t > 0`,
/// from `-r²/(4s) > log c + ½ log s`.
pub fn heat_ball_radius2(level: f64, s: f64) -> f64 {
    -4.0 * s * (level.ln() + 0.5 * s.ln())
}

/// `|x|² = -4t((α+1)/k · log|log|t|| + (1/k) · log(1/log|log|t|| - c))`, NaN where the logs fail.
pub fn level_set_radius2(k: f64, alpha: f64, c: f64, t: f64) -> f64 {
    let lam = (-(-t).ln()).ln();
    -4.0 * t * ((alpha + 1.0) / k * lam + (1.0 / lam - c).ln() / k)
}

fn norm2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A fixed-time cross-section of a region.
#[derive(Debug, Clone)]
pub enum SliceShape<'a> {
    Empty,
    All,
    Box {
        lo: &'a [f64],
        hi: &'a [f64],
        closed: bool,
    },
    /// `center: None` is the origin.
    Ball {
        center: Option<&'a [f64]>,
        r2: f64,
        closed: bool,
    },
    Union(Vec<SliceShape<'a>>),
    Intersection(Vec<SliceShape<'a>>),
    Difference(Box<SliceShape<'a>>, Box<SliceShape<'a>>),
}

impl SliceShape<'_> {
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SliceShape::Empty => false,
            SliceShape::All => true,
            SliceShape::Box { lo, hi, closed } => {
                if *closed {
                    x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (a, b))| a <= v && v <= b)
                } else {
                    x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (a, b))| a < v && v < b)
                }
            }
            SliceShape::Ball { center, r2, closed } => {
                let d2 = match center {
                    None => x.iter().map(|v| v * v).sum(),
                    Some(c) => norm2(x, c),
                };
                if *closed {
                    d2 <= *r2
                } else {
                    d2 < *r2
                }
            }
            SliceShape::Union(cs) => cs.iter().any(|c| c.contains(x)),
            SliceShape::Intersection(cs) => cs.iter().all(|c| c.contains(x)),
            SliceShape::Difference(a, b) => a.contains(x) && !b.contains(x),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SliceShape::Empty)
    }
}

fn in_time(t: f64, lo: f64, hi: f64, closed: bool) -> bool {
    if closed {
        lo <= t && t <= hi
    } else {
        lo < t && t < hi
    }
}

fn ball_slice<'a>(center: Option<&'a [f64]>, r2: f64, closed: bool) -> SliceShape<'a> {
    if r2 > 0.0 || (closed && r2 == 0.0) {
        SliceShape::Ball { center, r2, closed }
    } else {
        SliceShape::Empty
    }
}

impl Region {
    pub fn cylinder(base: SpatialDomain, t0: f64, t1: f64) -> Self {
        Region::Cylinder { base, t0, t1 }
    }

    pub fn ball(center: impl Into<Vec<f64>>, t_center: f64, radius: f64) -> Self {
        Region::Ball {
            center: center.into(),
            t_center,
            radius,
        }
    }

    pub fn petrovsky(dim: usize, factor: f64, cutoff: f64) -> Self {
        Region::Petrovsky {
            dim,
            factor,
            cutoff,
            t_floor: DEFAULT_T_FLOOR,
        }
    }

    pub fn heat_ball(center: impl Into<Vec<f64>>, t_center: f64, level: f64) -> Self {
        Region::HeatBall {
            center: center.into(),
            t_center,
            level,
            t_floor: DEFAULT_T_FLOOR,
        }
    }

    pub fn level_set_subdomain(dim: usize, k: f64, alpha: f64, level: f64, cutoff: f64) -> Self {
        Region::LevelSetSubdomain {
            dim,
            k,
            alpha,
            level,
            cutoff,
            t_floor: DEFAULT_T_FLOOR,
        }
    }

    pub fn union(children: Vec<Region>) -> Self {
        Region::Union { children }
    }

    pub fn intersection(children: Vec<Region>) -> Self {
        Region::Intersection { children }
    }

    pub fn difference(left: Region, right: Region) -> Self {
        Region::Difference {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Empty { dim }
            | Region::Petrovsky { dim, .. }
            | Region::HalfSpace { dim, .. }
            | Region::LevelSetSubdomain { dim, .. } => *dim,
            Region::Cylinder { base, .. } => base.dim(),
            Region::Ball { center, .. } | Region::HeatBall { center, .. } => center.len(),
            Region::Union { children } | Region::Intersection { children } => {
                children.first().map_or(0, Region::dim)
            }
            Region::Difference { left, .. } => left.dim(),
        }
    }

    /// Check parameter constraints of every node.
    pub fn validate(&self) -> Result<()> {
        let dim_ok = |d: usize| {
            if d == 0 {
                Err(invalid("dim", "space dimension must be ≥ 1"))
            } else {
                Ok(())
            }
        };
        match self {
            Region::Empty { dim } => dim_ok(*dim),
            Region::Cylinder { base, t0, t1 } => {
                base.validate()?;
                if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
                    return Err(invalid("cylinder", "need finite t0 < t1"));
                }
                Ok(())
            }
            Region::Ball {
                center,
                t_center,
                radius,
            } => {
                dim_ok(center.len())?;
                if !(*radius > 0.0) || !radius.is_finite() || !t_center.is_finite() {
                    return Err(invalid("radius", "space-time ball radius must be > 0"));
                }
                Ok(())
            }
            Region::Petrovsky {
                dim,
                factor,
                cutoff,
                t_floor,
            } => {
                dim_ok(*dim)?;
                if !(*factor > 0.0) || !factor.is_finite() {
                    return Err(invalid("factor", "Petrovsky factor A must be > 0"));
                }
                if !(*cutoff > 0.0 && *cutoff < 1.0) {
                    return Err(invalid("cutoff", "Petrovsky cutoff c must lie in (0, 1)"));
                }
                if !(*t_floor >= 0.0 && t_floor < cutoff) {
                    return Err(invalid("tFloor", "need 0 ≤ tFloor < cutoff"));
                }
                Ok(())
            }
            Region::HeatBall {
                center,
                level,
                t_floor,
                ..
            } => {
                dim_ok(center.len())?;
                if !(*level > 0.0) || !level.is_finite() {
                    return Err(invalid("level", "heat-ball level c must be > 0"));
                }
                if !(*t_floor >= 0.0 && *t_floor < 1.0 / (level * level)) {
                    return Err(invalid("tFloor", "need 0 ≤ tFloor < 1/c²"));
                }
                Ok(())
            }
            Region::HalfSpace { dim, tau, .. } => {
                dim_ok(*dim)?;
                if !tau.is_finite() {
                    return Err(invalid("tau", "must be finite"));
                }
                Ok(())
            }
            Region::LevelSetSubdomain {
                dim,
                k,
                alpha,
                level,
                cutoff,
                t_floor,
            } => {
                dim_ok(*dim)?;
                if !(*k > 0.5 && *k < 1.0) {
                    return Err(invalid("k", "need 1/2 < k < 1"));
                }
                if !(*alpha > 0.0) {
                    return Err(invalid("alpha", "need α > 0"));
                }
                if !(*level < 0.0) {
                    return Err(invalid("level", "level c must be < 0"));
                }
                if !(*cutoff > -(-1.0f64).exp() && *cutoff < 0.0) {
                    return Err(invalid("cutoff", "cutoff t₀ must lie in (-1/e, 0)"));
                }
                if !(*t_floor >= 0.0 && *t_floor < -cutoff) {
                    return Err(invalid("tFloor", "need 0 ≤ tFloor < |t₀|"));
                }
                Ok(())
            }
            Region::Union { children } | Region::Intersection { children } => {
                let first = children
                    .first()
                    .ok_or_else(|| invalid("children", "combinator needs at least one child"))?;
                for c in children {
                    c.validate()?;
                    if c.dim() != first.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: first.dim(),
                            got: c.dim(),
                        });
                    }
                }
                Ok(())
            }
            Region::Difference { left, right } => {
                left.validate()?;
                right.validate()?;
                if left.dim() != right.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: left.dim(),
                        got: right.dim(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Cross-section at time `t`; the open set unless `closed`.
    pub fn slice(&self, t: f64, closed: bool) -> SliceShape<'_> {
        match self {
            Region::Empty { .. } => SliceShape::Empty,
            Region::Cylinder { base, t0, t1 } => base.shape(in_time(t, *t0, *t1, closed), closed),
            Region::Ball {
                center,
                t_center,
                radius,
            } => ball_slice(
                Some(center),
                radius * radius - (t - t_center).powi(2),
                closed,
            ),
            Region::Petrovsky {
                factor,
                cutoff,
                t_floor,
                ..
            } => {
                if !in_time(t, -cutoff, -t_floor, closed) || t >= 0.0 {
                    return SliceShape::Empty;
                }
                ball_slice(None, petrovsky_radius2(*factor, t), closed)
            }
            Region::HeatBall {
                center,
                t_center,
                level,
                t_floor,
            } => {
                let s = t_center - t;
                let ok = if closed { s >= *t_floor } else { s > *t_floor };
                if !ok || s <= 0.0 {
                    return SliceShape::Empty;
                }
                ball_slice(Some(center), heat_ball_radius2(*level, s), closed)
            }
            Region::HalfSpace { tau, side, .. } => {
                let inside = match (side, closed) {
                    (TimeSide::Before, false) => t < *tau,
                    (TimeSide::Before, true) => t <= *tau,
                    (TimeSide::After, false) => t > *tau,
                    (TimeSide::After, true) => t >= *tau,
                };
                if inside {
                    SliceShape::All
                } else {
                    SliceShape::Empty
                }
            }
            Region::LevelSetSubdomain {
                k,
                alpha,
                level,
                cutoff,
                t_floor,
                ..
            } => {
                if !in_time(t, *cutoff, -t_floor, closed) || t >= 0.0 {
                    return SliceShape::Empty;
                }
                let r2 = level_set_radius2(*k, *alpha, *level, t);
                if r2.is_nan() {
                    return SliceShape::Empty;
                }
                ball_slice(None, r2, closed)
            }
            Region::Union { children } => {
                let parts: Vec<_> = children
                    .iter()
                    .map(|c| c.slice(t, closed))
                    .filter(|s| !s.is_empty())
                    .collect();
                match parts.len() {
                    0 => SliceShape::Empty,
                    1 => parts.into_iter().next().unwrap_or(SliceShape::Empty),
                    _ => SliceShape::Union(parts),
                }
            }
            Region::Intersection { children } => {
                let mut parts = Vec::with_capacity(children.len());
                for c in children {
                    match c.slice(t, closed) {
                        SliceShape::Empty => return SliceShape::Empty,
                        SliceShape::All => {}
                        s => parts.push(s),
                    }
                }
                match parts.len() {
                    0 => SliceShape::All,
                    1 => parts.into_iter().next().unwrap_or(SliceShape::Empty),
                    _ => SliceShape::Intersection(parts),
                }
            }
            Region::Difference { left, right } => {
                let a = left.slice(t, closed);
                if a.is_empty() {
                    return a;
                }
                // open difference removes the closure of `right`
                let b = right.slice(t, !closed);
                match b {
                    SliceShape::Empty => a,
                    SliceShape::All => SliceShape::Empty,
                    b => SliceShape::Difference(Box::new(a), Box::new(b)),
                }
            }
        }
    }

    /// Interior test without dimension checking.
    #[inline]
    pub fn contains_xt(&self, x: &[f64], t: f64) -> bool {
        self.slice(t, false).contains(x)
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> Result<bool> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(self.contains_xt(&p.x, p.t))
    }

    pub fn contains_closed(&self, p: &SpaceTimePoint) -> bool {
        self.slice(p.t, true).contains(&p.x)
    }

    /// Enclosing box; `None` when the region is trivially empty. Half-spaces give
    /// infinite extents that only an intersection can tame.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let n = self.dim();
        let sym = |c: &[f64], r: f64, t_lo: f64, t_hi: f64| BoundingBox {
            lo: c.iter().map(|v| v - r).collect(),
            hi: c.iter().map(|v| v + r).collect(),
            t_lo,
            t_hi,
        };
        match self {
            Region::Empty { .. } => None,
            Region::Cylinder { base, t0, t1 } => {
                let (lo, hi) = base.bounds();
                Some(BoundingBox {
                    lo,
                    hi,
                    t_lo: *t0,
                    t_hi: *t1,
                })
            }
            Region::Ball {
                center,
                t_center,
                radius,
            } => Some(sym(center, *radius, t_center - radius, t_center + radius)),
            Region::Petrovsky {
                factor,
                cutoff,
                t_floor,
                ..
            } => {
                let s_hi = cutoff.min((-1.0f64).exp());
                let r2 = max_on_log_grid(|s| petrovsky_radius2(*factor, -s), *t_floor, s_hi);
                if !(r2 > 0.0) {
                    return None;
                }
                Some(sym(&vec![0.0; n], 1.02 * r2.sqrt(), -cutoff, -t_floor))
            }
            Region::HeatBall {
                center,
                t_center,
                level,
                t_floor,
            } => {
                let s_max = 1.0 / (level * level);
                let r = (2.0 * s_max / std::f64::consts::E).sqrt();
                Some(sym(center, r * (1.0 + 1e-9), t_center - s_max, t_center - t_floor))
            }
            Region::HalfSpace { tau, side, .. } => {
                let (t_lo, t_hi) = match side {
                    TimeSide::Before => (f64::NEG_INFINITY, *tau),
                    TimeSide::After => (*tau, f64::INFINITY),
                };
                Some(BoundingBox {
                    lo: vec![f64::NEG_INFINITY; n],
                    hi: vec![f64::INFINITY; n],
                    t_lo,
                    t_hi,
                })
            }
            Region::LevelSetSubdomain {
                k,
                alpha,
                level,
                cutoff,
                t_floor,
                ..
            } => {
                let r2 = max_on_log_grid(
                    |s| level_set_radius2(*k, *alpha, *level, -s),
                    *t_floor,
                    -cutoff,
                );
                if !(r2 > 0.0) {
                    return None;
                }
                Some(sym(&vec![0.0; n], 1.02 * r2.sqrt(), *cutoff, -t_floor))
            }
            Region::Union { children } => children
                .iter()
                .filter_map(Region::bounding_box)
                .reduce(|a, b| a.hull(&b)),
            Region::Intersection { children } => {
                let mut it = children.iter().map(Region::bounding_box);
                let mut acc = it.next()??;
                for b in it {
                    acc = acc.intersect(&b?)?;
                }
                Some(acc)
            }
            Region::Difference { left, .. } => left.bounding_box(),
        }
    }

    /// `(t_lo, t_hi)` of the enclosing box.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        self.bounding_box().map(|b| (b.t_lo, b.t_hi))
    }

    fn finite_box(&self) -> Result<BoundingBox> {
        let b = self.bounding_box().ok_or(Error::EmptyRegion)?;
        if !b.is_finite() {
            return Err(Error::Unbounded);
        }
        Ok(b)
    }

    /// Seeded uniform samples of the interior (rejection from the enclosing box).
    pub fn sample_interior(&self, count: usize, seed: u64) -> Result<Vec<SpaceTimePoint>> {
        let bb = self.finite_box()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let max_attempts = 2_000_000usize.max(count * 2000);
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::EmptyRegion);
            }
            let p = random_in_box(&bb, &mut rng);
            if self.contains_xt(&p.x, p.t) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Seeded boundary points: bisection along random rays from interior seeds.
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Result<Vec<BoundarySample>> {
        if count == 0 {
            return Err(invalid("count", "need count ≥ 1"));
        }
        let bb = self.finite_box()?;
        let seeds = self.sample_interior(count.clamp(16, 256), seed ^ 0x5eed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag = bb.diagonal();
        let tol = DEFAULT_TOL_BOUNDARY * diag;
        let step = diag / 512.0;
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let s0 = &seeds[rng.random_range(0..seeds.len())];
            let dir = random_direction(n + 1, &mut rng);
            let (a, b) = self.exit_along(s0, &dir, step, &bb);
            let point = s0.offset(&dir, b);
            let witness = s0.offset(&dir, a);
            let class = self.boundary_class(&point, tol.max(self.tip_floor()));
            out.push(BoundarySample {
                point,
                class,
                witness,
            });
        }
        Ok(out)
    }

    /// Ray parameters `(inside, outside)` bracketing the first exit, bisected to float resolution.
    fn exit_along(&self, s0: &SpaceTimePoint, dir: &[f64], step: f64, bb: &BoundingBox) -> (f64, f64) {
        let inside = |s: f64| {
            let p = s0.offset(dir, s);
            self.contains_xt(&p.x, p.t)
        };
        let mut a = 0.0;
        let mut b = step;
        let limit = 2.0 * bb.diagonal() + step;
        while inside(b) && b < limit {
            a = b;
            b += step;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if inside(m) {
                a = m;
            } else {
                b = m;
            }
        }
        (a, b)
    }

    /// Largest `t_floor` among tip primitives, used to widen boundary tolerances.
    pub fn tip_floor(&self) -> f64 {
        match self {
            Region::Petrovsky { t_floor, .. }
            | Region::HeatBall { t_floor, .. }
            | Region::LevelSetSubdomain { t_floor, .. } => *t_floor,
            Region::Union { children } | Region::Intersection { children } => {
                children.iter().map(Region::tip_floor).fold(0.0, f64::max)
            }
            Region::Difference { left, right } => left.tip_floor().max(right.tip_floor()),
            _ => 0.0,
        }
    }

    /// True if the interior indicator changes within `tol` of `p` along some coordinate axis.
    pub fn near_boundary(&self, p: &SpaceTimePoint, tol: f64) -> bool {
        let c = self.contains_xt(&p.x, p.t);
        let n = p.dim();
        let mut e = vec![0.0; n + 1];
        for axis in 0..=n {
            e[axis] = 1.0;
            for s in [tol, -tol, 0.5 * tol, -0.5 * tol] {
                let q = p.offset(&e, s);
                if self.contains_xt(&q.x, q.t) != c {
                    return true;
                }
            }
            e[axis] = 0.0;
        }
        false
    }

    /// Tag a boundary point by the primitive whose boundary it lies on.
    pub fn boundary_class(&self, p: &SpaceTimePoint, tol: f64) -> BoundaryClass {
        match self {
            Region::Cylinder { base, t0, t1 } => {
                let bottom = (p.t - t0).abs() <= tol;
                let top = (p.t - t1).abs() <= tol;
                let wall = base.boundary_distance(&p.x) <= tol;
                match (bottom, wall, top) {
                    (true, true, _) => BoundaryClass::BottomEdge,
                    (true, false, _) => BoundaryClass::Bottom,
                    (false, true, _) => BoundaryClass::Wall,
                    (false, false, true) => BoundaryClass::Top,
                    _ => BoundaryClass::Other,
                }
            }
            Region::Ball { .. } => BoundaryClass::Curved,
            Region::Petrovsky {
                cutoff, t_floor, ..
            } => {
                if (p.t + cutoff).abs() <= tol {
                    BoundaryClass::Earliest
                } else if (p.t + t_floor).abs() <= tol {
                    BoundaryClass::Other
                } else {
                    BoundaryClass::Curved
                }
            }
            Region::HeatBall {
                t_center, t_floor, ..
            } => {
                if (t_center - p.t - t_floor).abs() <= tol {
                    BoundaryClass::Other
                } else {
                    BoundaryClass::Curved
                }
            }
            Region::LevelSetSubdomain {
                cutoff, t_floor, ..
            } => {
                if (p.t - cutoff).abs() <= tol {
                    BoundaryClass::Earliest
                } else if (p.t + t_floor).abs() <= tol {
                    BoundaryClass::Other
                } else {
                    BoundaryClass::Curved
                }
            }
            Region::Empty { .. } | Region::HalfSpace { .. } => BoundaryClass::Other,
            Region::Union { children } | Region::Intersection { children } => children
                .iter()
                .find(|c| c.near_boundary(p, tol))
                .map_or(BoundaryClass::Other, |c| c.boundary_class(p, tol)),
            Region::Difference { left, right } => {
                if left.near_boundary(p, tol) {
                    left.boundary_class(p, tol)
                } else if right.near_boundary(p, tol) {
                    right.boundary_class(p, tol)
                } else {
                    BoundaryClass::Other
                }
            }
        }
    }

    /// Over-approximation of `sup |ζ - η|`: sampled boundary pairs, padded by 2%,
    /// capped by the enclosing-box diagonal.
    pub fn diameter(&self) -> Result<f64> {
        let bb = self.finite_box()?;
        let pts = self.sample_boundary(256, 0xD1A)?;
        let mut best: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max(a.point.distance(&b.point));
            }
        }
        Ok((1.02 * best).min(bb.diagonal()))
    }

    /// The part of the region before (`t < t0`) or after (`t > t0`) a time.
    pub fn clip_time(&self, t0: f64, side: TimeSide) -> Region {
        let n = self.dim();
        let Some((lo, hi)) = self.time_span() else {
            return Region::Empty { dim: n };
        };
        match side {
            TimeSide::Before if t0 <= lo => return Region::Empty { dim: n },
            TimeSide::After if t0 >= hi => return Region::Empty { dim: n },
            TimeSide::Before if t0 >= hi => return self.clone(),
            TimeSide::After if t0 <= lo => return self.clone(),
            _ => {}
        }
        if let Region::Cylinder { base, t0: a, t1: b } = self {
            return match side {
                TimeSide::Before => Region::cylinder(base.clone(), *a, t0.min(*b)),
                TimeSide::After => Region::cylinder(base.clone(), t0.max(*a), *b),
            };
        }
        Region::intersection(vec![
            self.clone(),
            Region::HalfSpace {
                dim: n,
                tau: t0,
                side,
            },
        ])
    }

    /// Whether `p` is exterior with an interior point within `tol`.
    pub fn is_boundary_point(&self, p: &SpaceTimePoint, tol: f64) -> bool {
        if self.contains_xt(&p.x, p.t) {
            return false;
        }
        let n = p.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0D);
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for axis in 0..=n {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; n + 1];
                e[axis] = sgn;
                dirs.push(e);
            }
        }
        dirs.extend((0..256).map(|_| random_direction(n + 1, &mut rng)));
        dirs.iter().any(|d| {
            [1.0, 0.5, 0.25, 0.0625, 0.01].iter().any(|f| {
                let q = p.offset(d, f * tol);
                self.contains_xt(&q.x, q.t)
            })
        })
    }
}

/// A straight way into a region from one of its boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct Approach {
    /// Unit space-time direction, time last.
    pub direction: Vec<f64>,
    /// Largest rung of the dyadic ladder up to which every rung lies inside.
    pub reach: f64,
}

impl Region {
    /// Inward direction at `p` that stays inside over the most rungs of the ladder
    /// `diag · 2^{-i}`. Rungs closer than `4 · tip_floor` are not tested. Ties go to
    /// the earlier candidate: time axis, space axes, axis diagonals, then seeded
    /// random directions.
    pub fn approach(&self, p: &SpaceTimePoint) -> Result<Approach> {
        let bb = self.finite_box()?;
        let diag = bb.diagonal();
        let s_min = (4.0 * self.tip_floor()).max(1e-9 * diag);
        let mut ladder: Vec<f64> = (0..200)
            .map(|i| diag * 0.5f64.powi(i))
            .take_while(|s| *s >= s_min)
            .collect();
        ladder.reverse();

        let n = p.dim();
        let unit = |axis: usize, s: f64| {
            let mut e = vec![0.0; n + 1];
            e[axis] = s;
            e
        };
        let mut cands = vec![unit(n, -1.0), unit(n, 1.0)];
        for axis in 0..n {
            cands.push(unit(axis, 1.0));
            cands.push(unit(axis, -1.0));
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for axis in 0..n {
            for (sx, st) in [(1.0, -1.0), (-1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                let mut e = vec![0.0; n + 1];
                e[axis] = sx * r;
                e[n] = st * r;
                cands.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
        cands.extend((0..128).map(|_| random_direction(n + 1, &mut rng)));

        let mut best: Option<(usize, Approach)> = None;
        for d in cands {
            let mut count = 0;
            let mut reach = 0.0;
            for s in &ladder {
                let q = p.offset(&d, *s);
                if !self.contains_xt(&q.x, q.t) {
                    break;
                }
                count += 1;
                reach = *s;
            }
            if count > 0 && best.as_ref().map_or(true, |(c, _)| count > *c) {
                best = Some((count, Approach { direction: d, reach }));
            }
        }
        best.map(|(_, a)| a)
            .ok_or_else(|| Error::Unsupported(format!("no inward direction found at {p}")))
    }

    /// Distance from `x` to the complement of the time-`t` slice, searched along axis
    /// and diagonal directions and capped at `max`.
    pub fn spatial_clearance(&self, x: &[f64], t: f64, max: f64) -> f64 {
        let slice = self.slice(t, false);
        if !slice.contains(x) {
            return 0.0;
        }
        let n = x.len();
        let mut dirs = Vec::new();
        for axis in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[axis] = s;
                dirs.push(e);
            }
        }
        if n > 1 {
            let norm = (n as f64).sqrt();
            for mask in 0..(1usize << n) {
                dirs.push(
                    (0..n)
                        .map(|a| if mask >> a & 1 == 1 { -1.0 } else { 1.0 } / norm)
                        .collect(),
                );
            }
        }
        let at = |d: &[f64], s: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + s * b).collect() };
        let steps = 64;
        let mut best = max;
        for d in &dirs {
            let mut prev = 0.0;
            for i in 1..=steps {
                let s = max * i as f64 / steps as f64;
                if s >= best {
                    break;
                }
                if !slice.contains(&at(d, s)) {
                    let (mut a, mut b) = (prev, s);
                    for _ in 0..40 {
                        let m = 0.5 * (a + b);
                        if slice.contains(&at(d, m)) {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    best = best.min(b);
                    break;
                }
                prev = s;
            }
        }
        best
    }
}

fn max_on_log_grid(f: impl Fn(f64) -> f64, s_lo: f64, s_hi: f64) -> f64 {
    let a = s_lo.max(1e-300).ln();
    let b = s_hi.ln();
    let m = 4000;
    (0..=m)
        .map(|i| f((a + (b - a) * i as f64 / m as f64).exp()))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn random_in_box(bb: &BoundingBox, rng: &mut impl Rng) -> SpaceTimePoint {
    let x = bb
        .lo
        .iter()
        .zip(&bb.hi)
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect();
    let t = bb.t_lo + (bb.t_hi - bb.t_lo) * rng.random::<f64>();
    SpaceTimePoint { x, t }
}

pub(crate) fn random_direction(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}
