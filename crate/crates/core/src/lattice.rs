//! Space-time lattices, sphere-direction stencils of radius ε = K·h, multilinear
//! interpolation and per-slice field storage.
//!
//! Spatial nodes sit at integer multiples of `h` (so the origin is always a node) and
//! cover the region's enclosing box plus a padding of `K + 1` nodes. Each slice stores
//! a dense array over all nodes: interior nodes hold the field, every other node holds
//! the boundary data `g` at that slice's time. Stencil reads therefore never branch.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{fmt_short, invalid, Error, Result};
use crate::geometry::Region;

/// Nodes beyond this count are refused.
pub const MAX_NODES: usize = 50_000_000;

type BoundaryFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Boundary data `g`, a continuous function on all of space-time.
#[derive(Clone)]
pub struct BoundaryData(Arc<BoundaryFn>);

impl BoundaryData {
    pub fn new(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        BoundaryData::new(move |_, _| c)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.0)(x, t)
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

/// Interpolation weights with `lo + hi == 1` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Weights {
    lo: f64,
    hi: f64,
}

impl Weights {
    fn new(f: f64) -> Self {
        if f >= 0.5 {
            Weights { lo: 1.0 - f, hi: f }
        } else {
            let lo = 1.0 - f;
            Weights { lo, hi: 1.0 - lo }
        }
    }
}

/// Linear blend that returns `a` bit-exactly when both ends agree.
#[inline(always)]
fn lerp(a: f64, b: f64, w: Weights) -> f64 {
    if a == b {
        a
    } else {
        w.lo * a + w.hi * b
    }
}

/// One interpolated stencil read, relative to a node's flat index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tap {
    base: isize,
    n: u8,
    axes: [(usize, Weights); 3],
}

impl Tap {
    #[inline(always)]
    pub(crate) fn read(&self, v: &[f64], node: usize) -> f64 {
        let j = (node as isize + self.base) as usize;
        read_cell(v, j, self.n, &self.axes)
    }
}

#[inline(always)]
fn read_cell(v: &[f64], j: usize, n: u8, axes: &[(usize, Weights); 3]) -> f64 {
    match n {
        0 => v[j],
        1 => {
            let (s0, w0) = axes[0];
            lerp(v[j], v[j + s0], w0)
        }
        2 => {
            let (s0, w0) = axes[0];
            let (s1, w1) = axes[1];
            lerp(
                lerp(v[j], v[j + s0], w0),
                lerp(v[j + s1], v[j + s1 + s0], w0),
                w1,
            )
        }
        _ => {
            let (s0, w0) = axes[0];
            let (s1, w1) = axes[1];
            let (s2, w2) = axes[2];
            let face = |k: usize| {
                lerp(
                    lerp(v[k], v[k + s0], w0),
                    lerp(v[k + s1], v[k + s1 + s0], w0),
                    w1,
                )
            };
            lerp(face(j), face(j + s2), w2)
        }
    }
}

const SNAP: f64 = 1e-12;

fn snap_unit(v: f64) -> f64 {
    if v.abs() < SNAP {
        0.0
    } else if (v.abs() - 1.0).abs() < SNAP {
        v.signum()
    } else {
        v
    }
}

/// Antipodally paired unit directions on `S^{n-1}`: the first half, then its negation.
pub fn sphere_directions(n: usize, dirs: usize) -> Result<Vec<Vec<f64>>> {
    if dirs < 2 || dirs % 2 != 0 {
        return Err(invalid("dirs", "direction count must be even and ≥ 2"));
    }
    let half = dirs / 2;
    let first: Vec<Vec<f64>> = match n {
        1 => {
            if dirs != 2 {
                return Err(invalid("dirs", "n = 1 forces dirs = 2"));
            }
            vec![vec![1.0]]
        }
        2 => (0..half)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / dirs as f64;
                vec![snap_unit(th.cos()), snap_unit(th.sin())]
            })
            .collect(),
        3 => {
            let mut v: Vec<Vec<f64>> = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
                .iter()
                .take(half)
                .map(|a| a.to_vec())
                .collect();
            // Fibonacci points on the upper hemisphere for the rest
            let m = half.saturating_sub(3);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..m {
                let z = 1.0 - (i as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                v.push(vec![r * phi.cos(), r * phi.sin(), z]);
            }
            v
        }
        _ => return Err(invalid("dim", "grid solving supports 1 ≤ n ≤ 3")),
    };
    let mut all = first.clone();
    all.extend(first.iter().map(|v| v.iter().map(|c| -c).collect::<Vec<_>>()));
    Ok(all)
}

/// Spatial node layout shared by every slice of a lattice.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    h: f64,
    k: usize,
    eps: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    coords: Vec<f64>,
    directions: Vec<Vec<f64>>,
    taps: Vec<Tap>,
}

impl Grid {
    /// Grid of spacing `h` covering `[lo, hi]` with `K + 1` padding nodes.
    pub fn new(lo: &[f64], hi: &[f64], h: f64, k: usize, dirs: usize) -> Result<Grid> {
        let dim = lo.len();
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("h", "spacing must be > 0"));
        }
        if k == 0 {
            return Err(invalid("K", "stencil factor K must be ≥ 1"));
        }
        let directions = sphere_directions(dim, dirs)?;
        let pad = k as i64 + 1;
        let mut ilo = Vec::with_capacity(dim);
        let mut shape = Vec::with_capacity(dim);
        for (a, b) in lo.iter().zip(hi) {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Unbounded);
            }
            let i0 = (a / h).floor() as i64 - pad;
            let i1 = (b / h).ceil() as i64 + pad;
            ilo.push(i0);
            shape.push((i1 - i0 + 1) as usize);
        }
        let len = shape.iter().try_fold(1usize, |acc, s| acc.checked_mul(*s));
        let len = match len {
            Some(l) if l <= MAX_NODES => l,
            _ => return Err(invalid("h", format!("lattice would exceed {MAX_NODES} nodes"))),
        };
        let mut strides = vec![1usize; dim];
        for a in 1..dim {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        let mut coords = vec![0.0; len * dim];
        for i in 0..len {
            let mut r = i;
            for a in 0..dim {
                let idx = r % shape[a];
                r /= shape[a];
                coords[i * dim + a] = (ilo[a] + idx as i64) as f64 * h;
            }
        }
        let eps = k as f64 * h;
        let taps = directions
            .iter()
            .map(|v| {
                let mut base = 0isize;
                let mut n = 0u8;
                let mut axes = [(0usize, Weights { lo: 1.0, hi: 0.0 }); 3];
                for a in 0..dim {
                    let o = k as f64 * v[a];
                    let mut fl = o.floor();
                    let mut f = o - fl;
                    if f < SNAP {
                        f = 0.0;
                    } else if f > 1.0 - SNAP {
                        f = 0.0;
                        fl += 1.0;
                    }
                    base += fl as isize * strides[a] as isize;
                    if f > 0.0 {
                        axes[n as usize] = (strides[a], Weights::new(f));
                        n += 1;
                    }
                }
                Tap { base, n, axes }
            })
            .collect();
        Ok(Grid {
            dim,
            h,
            k,
            eps,
            lo: ilo,
            shape,
            strides,
            len,
            coords,
            directions,
            taps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    #[inline]
    pub fn coords(&self, node: usize) -> &[f64] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    pub(crate) fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Flat index of the node at integer position `idx` (in units of `h`), if present.
    pub fn node_at(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for a in 0..self.dim {
            let r = idx[a] - self.lo[a];
            if r < 0 || r as usize >= self.shape[a] {
                return None;
            }
            flat += r as usize * self.strides[a];
        }
        Some(flat)
    }

    /// Node whose coordinates are closest to `x`, if inside the grid.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let idx: Vec<i64> = x.iter().map(|v| (v / self.h).round() as i64).collect();
        self.node_at(&idx)
    }

    /// Multilinear interpolation of a dense node array; `None` when a corner falls
    /// outside the grid.
    #[inline]
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        let mut base = 0usize;
        let mut n = 0u8;
        let mut axes = [(0usize, Weights { lo: 1.0, hi: 0.0 }); 3];
        for a in 0..self.dim {
            let p = x[a] / self.h - self.lo[a] as f64;
            let c = p.floor();
            if !(c >= 0.0) || c as usize >= self.shape[a] {
                return None;
            }
            let c = c as usize;
            let f = p - c as f64;
            base += c * self.strides[a];
            if f > 0.0 {
                if c + 1 >= self.shape[a] {
                    return None;
                }
                axes[n as usize] = (self.strides[a], Weights::new(f));
                n += 1;
            }
        }
        Some(read_cell(values, base, n, &axes))
    }

    /// Gradient and Hessian of the multilinear interpolant at `x` (piecewise smooth;
    /// evaluated in the cell containing `x`).
    pub fn interpolant_derivatives(&self, values: &[f64], x: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dim;
        let mut cell = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let p = x[a] / self.h - self.lo[a] as f64;
            let c = p.floor();
            if !(c >= 0.0) || c as usize + 1 >= self.shape[a] {
                return None;
            }
            cell[a] = c as usize;
            frac[a] = p - c;
        }
        let base: usize = (0..n).map(|a| cell[a] * self.strides[a]).sum();
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        for corner in 0..(1usize << n) {
            let mut idx = base;
            let bit = |a: usize| (corner >> a) & 1 == 1;
            for a in 0..n {
                if bit(a) {
                    idx += self.strides[a];
                }
            }
            let v = values[idx];
            // basis factor per axis and its derivative
            let fac = |a: usize| if bit(a) { frac[a] } else { 1.0 - frac[a] };
            let dfac = |a: usize| if bit(a) { 1.0 / self.h } else { -1.0 / self.h };
            for a in 0..n {
                let mut g = dfac(a);
                for b in 0..n {
                    if b != a {
                        g *= fac(b);
                    }
                }
                grad[a] += g * v;
                for b in 0..n {
                    if b == a {
                        continue;
                    }
                    let mut m = dfac(a) * dfac(b);
                    for c in 0..n {
                        if c != a && c != b {
                            m *= fac(c);
                        }
                    }
                    hess[a][b] += m * v;
                }
            }
        }
        Some((grad, hess))
    }
}

/// A space-time lattice over a region.
#[derive(Debug, Clone)]
pub struct Lattice {
    region: Region,
    grid: Grid,
    dt: f64,
    t_start: f64,
    steps: usize,
}

impl Lattice {
    /// Lattice covering the region's enclosing box with time levels `t_start + k·dt`.
    pub fn build(region: &Region, h: f64, k: usize, dt: f64, dirs: usize) -> Result<Lattice> {
        region.validate()?;
        if k == 0 {
            return Err(invalid("K", "stencil factor K must be ≥ 1"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "time step must be > 0"));
        }
        let eps = k as f64 * h;
        check_cfl(dt, eps)?;
        let bb = region.bounding_box().ok_or(Error::EmptyRegion)?;
        if !bb.is_finite() {
            return Err(Error::Unbounded);
        }
        let grid = Grid::new(&bb.lo, &bb.hi, h, k, dirs)?;
        let span = bb.t_hi - bb.t_lo;
        let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
        Ok(Lattice {
            region: region.clone(),
            grid,
            dt,
            t_start: bb.t_lo,
            steps,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim
    }
    pub fn h(&self) -> f64 {
        self.grid.h
    }
    pub fn k(&self) -> usize {
        self.grid.k
    }
    pub fn eps(&self) -> f64 {
        self.grid.eps
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.grid.directions
    }
    /// Number of time steps; there are `steps + 1` slices.
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn slice_count(&self) -> usize {
        self.steps + 1
    }
    pub fn node_count(&self) -> usize {
        self.grid.len
    }

    #[inline]
    pub fn time(&self, slice: usize) -> f64 {
        self.t_start + slice as f64 * self.dt
    }

    /// Slice index whose time is closest to `t`, clamped to the lattice.
    pub fn slice_near(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round();
        k.clamp(0.0, self.steps as f64) as usize
    }

    pub fn interior_mask(&self, slice: usize) -> Vec<bool> {
        let shape = self.region.slice(self.time(slice), false);
        (0..self.grid.len)
            .map(|i| shape.contains(self.grid.coords(i)))
            .collect()
    }

    pub fn interior_count(&self, slice: usize) -> usize {
        self.interior_mask(slice).iter().filter(|b| **b).count()
    }
}

pub(crate) fn check_cfl(dt: f64, eps: f64) -> Result<()> {
    let bound = eps * eps / 2.0;
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            dt,
            bound: fmt_short(bound).parse().unwrap_or(bound),
        });
    }
    Ok(())
}

/// Dense values and interior flags of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceData {
    pub values: Vec<f64>,
    pub interior: Vec<bool>,
}

/// Borrowed view of one slice, with the boundary data for off-grid reads.
#[derive(Clone, Copy)]
pub struct SliceView<'a> {
    pub lattice: &'a Lattice,
    pub data: &'a BoundaryData,
    pub index: usize,
    pub t: f64,
    pub values: &'a [f64],
    pub interior: &'a [bool],
}

impl SliceView<'_> {
    /// Multilinear interpolation; falls back to `g` off the grid.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.lattice
            .grid
            .interpolate(self.values, x)
            .unwrap_or_else(|| self.data.eval(x, self.t))
    }

    /// `(max, min)` of interpolated values on the ε-sphere around `x`; first index wins ties.
    pub fn sphere_values(&self, x: &[f64]) -> (f64, f64) {
        let eps = self.lattice.eps();
        let mut y = x.to_vec();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for v in self.lattice.directions() {
            for a in 0..x.len() {
                y[a] = x[a] + eps * v[a];
            }
            let u = self.interpolate(&y);
            if u > hi {
                hi = u;
            }
            if u < lo {
                lo = u;
            }
        }
        (hi, lo)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
    }

    /// CSV rows `slice,t,x1..xn,value` for interior nodes.
    pub fn write_csv_rows(&self, w: &mut impl Write) -> io::Result<()> {
        for i in self.interior_nodes() {
            write!(w, "{},{}", self.index, self.t)?;
            for c in self.lattice.grid.coords(i) {
                write!(w, ",{c}")?;
            }
            writeln!(w, ",{}", self.values[i])?;
        }
        Ok(())
    }
}

pub fn write_csv_header(w: &mut impl Write, dim: usize) -> io::Result<()> {
    write!(w, "slice,t")?;
    for a in 1..=dim {
        write!(w, ",x{a}")?;
    }
    writeln!(w, ",value")
}

/// Scalar field on every slice of a lattice.
#[derive(Debug, Clone)]
pub struct LatticeField {
    lattice: Arc<Lattice>,
    data: BoundaryData,
    slices: Vec<SliceData>,
}

impl LatticeField {
    pub fn new(lattice: Arc<Lattice>, data: BoundaryData, slices: Vec<SliceData>) -> Self {
        LatticeField {
            lattice,
            data,
            slices,
        }
    }

    /// Sample `f` on interior nodes; exterior nodes get `g`.
    pub fn from_fn(
        lattice: Arc<Lattice>,
        data: BoundaryData,
        f: impl Fn(&[f64], f64) -> f64,
    ) -> Self {
        let slices = (0..lattice.slice_count())
            .map(|s| {
                let t = lattice.time(s);
                let interior = lattice.interior_mask(s);
                let values = (0..lattice.node_count())
                    .map(|i| {
                        let x = lattice.grid.coords(i);
                        if interior[i] {
                            f(x, t)
                        } else {
                            data.eval(x, t)
                        }
                    })
                    .collect();
                SliceData { values, interior }
            })
            .collect();
        LatticeField {
            lattice,
            data,
            slices,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }
    pub fn data(&self) -> &BoundaryData {
        &self.data
    }
    pub fn slices(&self) -> &[SliceData] {
        &self.slices
    }
    pub fn slices_mut(&mut self) -> &mut [SliceData] {
        &mut self.slices
    }
    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    pub fn view(&self, slice: usize) -> SliceView<'_> {
        let s = &self.slices[slice];
        SliceView {
            lattice: &self.lattice,
            data: &self.data,
            index: slice,
            t: self.lattice.time(slice),
            values: &s.values,
            interior: &s.interior,
        }
    }

    pub fn interpolate(&self, slice: usize, x: &[f64]) -> f64 {
        self.view(slice).interpolate(x)
    }

    pub fn sphere_values(&self, slice: usize, x: &[f64]) -> (f64, f64) {
        self.view(slice).sphere_values(x)
    }

    /// Largest nodewise `|self - other|` over interior nodes of either field.
    pub fn max_abs_diff(&self, other: &LatticeField) -> f64 {
        self.slices
            .iter()
            .zip(&other.slices)
            .flat_map(|(a, b)| {
                a.values
                    .iter()
                    .zip(&b.values)
                    .zip(a.interior.iter().zip(&b.interior))
                    .filter(|(_, (ia, ib))| **ia || **ib)
                    .map(|((x, y), _)| (x - y).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        write_csv_header(w, self.lattice.dim())?;
        for s in 0..self.slices.len() {
            self.view(s).write_csv_rows(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SpatialDomain, SpaceTimePoint};
    use proptest::prelude::*;

    fn unit_cyl() -> Region {
        Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 1.0)
    }

    fn disk() -> Region {
        Region::cylinder(
            SpatialDomain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.0,
            0.1,
        )
    }

    #[test]
    fn build_example() {
        let l = Lattice::build(&unit_cyl(), 0.1, 1, 0.005, 2).unwrap();
        assert_eq!(l.directions(), &[vec![1.0], vec![-1.0]]);
        assert_eq!(l.steps(), 200);
        assert_eq!(l.interior_count(10), 9);
        // every interior node is in the region
        for s in [0, 1, 100, 200] {
            let m = l.interior_mask(s);
            for i in 0..l.node_count() {
                if m[i] {
                    let p = SpaceTimePoint::new(l.grid().coords(i).to_vec(), l.time(s));
                    assert!(l.region().contains(&p).unwrap());
                }
            }
        }
    }

    #[test]
    fn cfl_error_message() {
        let e = Lattice::build(&unit_cyl(), 0.1, 1, 0.006, 2).unwrap_err();
        assert!(e.to_string().starts_with("CFL: dt ≤ ε²/2") && e.to_string().contains("ε²/2 = 0.005"), "{e}");
    }

    #[test]
    fn disk_directions_are_paired() {
        let l = Lattice::build(&disk(), 0.05, 2, 0.0025, 16).unwrap();
        let d = l.directions();
        assert_eq!(d.len(), 16);
        for j in 0..8 {
            let th = 2.0 * std::f64::consts::PI * j as f64 / 16.0;
            assert!((d[j][0] - th.cos()).abs() < 1e-12 && (d[j][1] - th.sin()).abs() < 1e-12);
            assert_eq!(d[j + 8], vec![-d[j][0], -d[j][1]]);
        }
    }

    #[test]
    fn directions_in_three_dimensions() {
        let d = sphere_directions(3, 26).unwrap();
        for v in &d {
            let norm: f64 = v.iter().map(|a| a * a).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(d.iter().any(|w| w.iter().zip(v).all(|(a, b)| *a == -b)));
        }
        assert!(sphere_directions(1, 4).is_err());
        assert!(sphere_directions(2, 5).is_err());
    }

    fn field_of(region: &Region, h: f64, k: usize, dirs: usize, f: fn(&[f64]) -> f64) -> LatticeField {
        let eps = k as f64 * h;
        let l = Arc::new(Lattice::build(region, h, k, eps * eps / 2.0, dirs).unwrap());
        LatticeField::from_fn(l, BoundaryData::new(move |x, _| f(x)), move |x, _| f(x))
    }

    #[test]
    fn interpolation_examples() {
        let f = field_of(&unit_cyl(), 0.1, 1, 2, |x| 3.0 * x[0] + 1.0);
        assert!((f.interpolate(3, &[0.127]) - 1.381).abs() < 1e-14);
        let c = field_of(&unit_cyl(), 0.1, 1, 2, |_| 5.0);
        assert_eq!(c.interpolate(3, &[0.4321]), 5.0);
        let q = field_of(&unit_cyl(), 0.1, 1, 2, |x| x[0] * x[0]);
        assert!((q.interpolate(3, &[0.05]) - 0.005).abs() < 1e-15);
        // far outside the grid: g itself
        assert_eq!(q.interpolate(3, &[7.0]), 49.0);
    }

    #[test]
    fn sphere_values_examples() {
        let p = 1.7;
        let a = field_of(&unit_cyl(), 0.01, 3, 2, |x| 1.7 * x[0] - 0.2);
        let (hi, lo) = a.sphere_values(5, &[0.5]);
        assert!((hi - lo - 2.0 * 0.03 * p).abs() < 1e-12);

        let r = field_of(&unit_cyl(), 0.01, 3, 2, |x| x[0] * x[0]);
        let (hi, lo) = r.sphere_values(5, &[0.0]);
        let e2 = 0.03f64 * 0.03;
        assert!((hi - e2).abs() < 1e-15 && (lo - e2).abs() < 1e-15);

        // n = 2, dirs = 16: brute force over the directions with the interpolation
        // error bound h²/4 per axis
        let s = field_of(&disk(), 0.05, 2, 16, |x| x[0] * x[0] - x[1] * x[1]);
        let (hi, lo) = s.sphere_values(1, &[0.0, 0.0]);
        let e2 = 0.1f64 * 0.1;
        assert!((hi - e2).abs() < 1e-15, "{hi}");
        assert!((lo + e2).abs() < 1e-15, "{lo}");
        let radial = field_of(&disk(), 0.05, 2, 16, |x| x[0] * x[0] + x[1] * x[1]);
        let (hi, lo) = radial.sphere_values(1, &[0.0, 0.0]);
        assert!((lo - e2).abs() < 1e-15);
        assert!(hi >= e2 && hi <= e2 + 0.05 * 0.05 / 2.0);
    }

    #[test]
    fn reflection_swaps_extremes() {
        let f = field_of(&disk(), 0.05, 2, 16, |x| (x[0] + 2.0 * x[1]).sin() + x[0] * x[1]);
        let g = field_of(&disk(), 0.05, 2, 16, |x| (-x[0] - 2.0 * x[1]).sin() + x[0] * x[1]);
        let (a_hi, a_lo) = f.sphere_values(1, &[0.0, 0.0]);
        let (b_hi, b_lo) = g.sphere_values(1, &[0.0, 0.0]);
        assert!((a_hi - b_hi).abs() < 1e-14 && (a_lo - b_lo).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = field_of(&unit_cyl(), 0.1, 1, 2, |x| (x[0] * 7.3).sin() / 3.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("slice,t,x1,value"));
        let mut count = 0;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            let s: usize = cols[0].parse().unwrap();
            let x: f64 = cols[2].parse().unwrap();
            let v: f64 = cols[3].parse().unwrap();
            let node = f.lattice().grid().nearest_node(&[x]).unwrap();
            assert_eq!(f.slices()[s].values[node].to_bits(), v.to_bits());
            assert_eq!(cols[1].parse::<f64>().unwrap().to_bits(), f.lattice().time(s).to_bits());
            count += 1;
        }
        assert_eq!(count, 9 * 199);
    }

    #[test]
    fn interpolant_derivatives_match_bilinear() {
        let f = field_of(&disk(), 0.05, 2, 16, |x| 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1]);
        let v = &f.slices()[1].values;
        let (g, h) = f.lattice().grid().interpolant_derivatives(v, &[0.12, -0.33]).unwrap();
        // the bilinear interpolant of a bilinear function is the function itself
        assert!((g[0] - (2.0 + 3.0 * -0.33)).abs() < 1e-10);
        assert!((g[1] - (-1.0 + 3.0 * 0.12)).abs() < 1e-10);
        assert!((h[0][1] - 3.0).abs() < 1e-9 && h[0][0] == 0.0);
    }

    proptest! {
        #[test]
        fn affine_reproduced(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..1.0,
                             x in -0.8f64..0.8, y in -0.5f64..0.5) {
            let l = Arc::new(Lattice::build(&disk(), 0.05, 2, 0.005, 16).unwrap());
            let f = LatticeField::from_fn(l, BoundaryData::new(move |p, _| a * p[0] + b * p[1] + c),
                                          move |p, _| a * p[0] + b * p[1] + c);
            let exact = a * x + b * y + c;
            prop_assert!((f.interpolate(1, &[x, y]) - exact).abs() < 1e-12);
        }

        #[test]
        fn sphere_values_monotone(seed in 0u64..1000, node in 0usize..40, bump in 1e-12f64..1.0) {
            use rand::{Rng, SeedableRng};
            let l = Arc::new(Lattice::build(&disk(), 0.1, 2, 0.02, 16).unwrap());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..l.node_count()).map(|_| rng.random::<f64>()).collect();
            let g = BoundaryData::constant(0.0);
            let mut raised = vals.clone();
            let target = (node * 7919 + seed as usize) % l.node_count();
            raised[target] += bump;
            let mask = l.interior_mask(0);
            let s1 = SliceData { values: vals, interior: mask.clone() };
            let s2 = SliceData { values: raised, interior: mask };
            let f1 = LatticeField::new(l.clone(), g.clone(), vec![s1]);
            let f2 = LatticeField::new(l.clone(), g, vec![s2]);
            for i in 0..l.node_count() {
                let x = l.grid().coords(i).to_vec();
                let (h1, m1) = f1.sphere_values(0, &x);
                let (h2, m2) = f2.sphere_values(0, &x);
                prop_assert!(h1 <= h2 && m1 <= m2);
            }
        }
    }
}
