//! The monotone wide-stencil scheme for `u_t = Δ∞ᴺu` and friends.
//!
//! The discrete operator at a node is `(max + min - 2u) / ε²`, with `max`/`min` taken
//! over the interpolated ε-sphere. One explicit step with `λ = dt/ε² ≤ 1/2` is the
//! convex combination `(1 - 2λ)u + λ(max + min)`. The result is clamped to
//! `[min(u, min), max(u, max)]`, which only undoes rounding: it makes monotonicity and
//! preservation of constants hold exactly in floating point.

use std::ops::ControlFlow;
use std::sync::Arc;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Region, SpaceTimePoint, SpatialDomain};
use crate::lattice::{check_cfl, BoundaryData, Grid, Lattice, LatticeField, SliceData, SliceView, Tap};

/// Below this many nodes a slice is updated on one thread.
pub const PAR_MIN_NODES: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchemeConfig {
    pub eps: f64,
    pub dt: f64,
    pub max_iter: usize,
    pub fix_tol: f64,
}

impl SchemeConfig {
    pub fn new(eps: f64, dt: f64) -> Result<Self> {
        let c = SchemeConfig {
            eps,
            dt,
            max_iter: 2_000_000,
            fix_tol: 1e-10,
        };
        c.validate()?;
        Ok(c)
    }

    /// `dt = ε²/2`, the largest stable step.
    pub fn dpp(eps: f64) -> Self {
        SchemeConfig {
            eps,
            dt: eps * eps / 2.0,
            max_iter: 2_000_000,
            fix_tol: 1e-10,
        }
    }

    pub fn with_fix_tol(mut self, fix_tol: f64) -> Self {
        self.fix_tol = fix_tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(invalid("eps", "ε must be > 0"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "dt must be > 0"));
        }
        check_cfl(self.dt, self.eps)?;
        if !(self.fix_tol > 0.0) {
            return Err(invalid("fixTol", "fixTol must be > 0"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.dt / (self.eps * self.eps)
    }

    fn check_stencil(&self, h: f64, k: usize) -> Result<()> {
        let e = k as f64 * h;
        if (e - self.eps).abs() > 1e-12 * self.eps {
            return Err(invalid("eps", format!("ε = {} must equal K·h = {e}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Update {
    Explicit { lambda: f64 },
    Dpp,
    Stationary { shift: f64 },
}

impl Update {
    #[inline(always)]
    fn apply(self, u: f64, hi: f64, lo: f64) -> f64 {
        match self {
            Update::Explicit { lambda } => {
                let v = (1.0 - 2.0 * lambda) * u + lambda * (hi + lo);
                v.min(u.max(hi)).max(u.min(lo))
            }
            Update::Dpp => 0.5 * (hi + lo),
            Update::Stationary { shift } => 0.5 * (hi + lo) + shift,
        }
    }
}

#[inline(always)]
fn extremes(taps: &[Tap], v: &[f64], node: usize) -> (f64, f64) {
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for t in taps {
        let u = t.read(v, node);
        if u > hi {
            hi = u;
        }
        if u < lo {
            lo = u;
        }
    }
    (hi, lo)
}

/// Fill `next`/`mask` for time `t` from `prev`.
fn step_slice(
    lattice: &Lattice,
    g: &BoundaryData,
    update: Update,
    t: f64,
    prev: &[f64],
    next: &mut [f64],
    mask: &mut [bool],
) {
    let grid = lattice.grid();
    let shape = lattice.region().slice(t, false);
    let taps = grid.taps();
    let kernel = |offset: usize, vals: &mut [f64], flags: &mut [bool]| {
        for (j, (v, f)) in vals.iter_mut().zip(flags.iter_mut()).enumerate() {
            let i = offset + j;
            let x = grid.coords(i);
            if shape.contains(x) {
                *f = true;
                let (hi, lo) = extremes(taps, prev, i);
                *v = update.apply(prev[i], hi, lo);
            } else {
                *f = false;
                *v = g.eval(x, t);
            }
        }
    };
    if next.len() >= PAR_MIN_NODES {
        const CHUNK: usize = 2048;
        next.par_chunks_mut(CHUNK)
            .zip(mask.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, (vals, flags))| kernel(c * CHUNK, vals, flags));
    } else {
        kernel(0, next, mask);
    }
}

fn run_scheme<F>(lattice: &Lattice, g: &BoundaryData, update: Update, mut visit: F) -> Result<()>
where
    F: FnMut(SliceView<'_>) -> ControlFlow<()>,
{
    let n = lattice.node_count();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    let grid = lattice.grid();
    let t0 = lattice.time(0);
    // the earliest slice carries the data itself
    let mut prev: Vec<f64> = (0..n).map(|i| g.eval(grid.coords(i), t0)).collect();
    let mut prev_mask = lattice.interior_mask(0);
    let mut next = vec![0.0; n];
    let mut next_mask = vec![false; n];
    if visit(view(lattice, g, 0, &prev, &prev_mask)).is_break() {
        return Ok(());
    }
    for s in 1..=lattice.steps() {
        step_slice(lattice, g, update, lattice.time(s), &prev, &mut next, &mut next_mask);
        std::mem::swap(&mut prev, &mut next);
        std::mem::swap(&mut prev_mask, &mut next_mask);
        if visit(view(lattice, g, s, &prev, &prev_mask)).is_break() {
            break;
        }
    }
    Ok(())
}

fn view<'a>(
    lattice: &'a Lattice,
    data: &'a BoundaryData,
    index: usize,
    values: &'a [f64],
    interior: &'a [bool],
) -> SliceView<'a> {
    SliceView {
        lattice,
        data,
        index,
        t: lattice.time(index),
        values,
        interior,
    }
}

/// Stream the explicit scheme slice by slice without storing the history.
/// `visit` may stop the march early.
pub fn march_with<F>(lattice: &Lattice, g: &BoundaryData, visit: F) -> Result<()>
where
    F: FnMut(SliceView<'_>) -> ControlFlow<()>,
{
    let lambda = lattice.dt() / (lattice.eps() * lattice.eps());
    run_scheme(lattice, g, Update::Explicit { lambda }, visit)
}

/// As [`march_with`] with the mean-value update `½(max + min)`; needs `dt = ε²/2` exactly.
pub fn dpp_march_with<F>(lattice: &Lattice, g: &BoundaryData, visit: F) -> Result<()>
where
    F: FnMut(SliceView<'_>) -> ControlFlow<()>,
{
    let e = lattice.eps();
    if lattice.dt() != e * e / 2.0 {
        return Err(invalid("dt", "the mean-value form needs dt = ε²/2 exactly"));
    }
    run_scheme(lattice, g, Update::Dpp, visit)
}

fn collect(lattice: Arc<Lattice>, g: &BoundaryData, dpp: bool) -> Result<LatticeField> {
    let mut slices = Vec::with_capacity(lattice.slice_count());
    let keep = |v: SliceView<'_>| {
        slices.push(SliceData {
            values: v.values.to_vec(),
            interior: v.interior.to_vec(),
        });
        ControlFlow::Continue(())
    };
    if dpp {
        dpp_march_with(&lattice, g, keep)?;
    } else {
        march_with(&lattice, g, keep)?;
    }
    Ok(LatticeField::new(lattice, g.clone(), slices))
}

/// Explicit time marching over every slice of a fresh lattice.
pub fn march(
    region: &Region,
    g: &BoundaryData,
    cfg: &SchemeConfig,
    h: f64,
    k: usize,
    dirs: usize,
) -> Result<LatticeField> {
    cfg.validate()?;
    cfg.check_stencil(h, k)?;
    let lattice = Arc::new(Lattice::build(region, h, k, cfg.dt, dirs)?);
    collect(lattice, g, false)
}

/// [`march`] on an existing lattice.
pub fn march_lattice(lattice: Arc<Lattice>, g: &BoundaryData) -> Result<LatticeField> {
    collect(lattice, g, false)
}

/// Mean-value form of [`march`]; `cfg.dt` must equal `ε²/2`.
pub fn dpp_march(
    region: &Region,
    g: &BoundaryData,
    cfg: &SchemeConfig,
    h: f64,
    k: usize,
    dirs: usize,
) -> Result<LatticeField> {
    cfg.check_stencil(h, k)?;
    if cfg.dt != cfg.eps * cfg.eps / 2.0 {
        return Err(invalid("dt", "the mean-value form needs dt = ε²/2 exactly"));
    }
    let lattice = Arc::new(Lattice::build(region, h, k, cfg.dt, dirs)?);
    collect(lattice, g, true)
}

/// `(max + min - 2u(x)) / ε²` on a slice.
pub fn discrete_inf_laplacian(field: &LatticeField, slice: usize, x: &[f64]) -> f64 {
    slice_inf_laplacian(&field.view(slice), x)
}

pub fn slice_inf_laplacian(view: &SliceView<'_>, x: &[f64]) -> f64 {
    let e = view.lattice.eps();
    let (hi, lo) = view.sphere_values(x);
    (hi + lo - 2.0 * view.interpolate(x)) / (e * e)
}

/// Central-difference gradient with spacing `h`; reads `g` wherever the field does.
pub fn discrete_gradient(view: &SliceView<'_>, x: &[f64]) -> Vec<f64> {
    let h = view.lattice.h();
    let mut y = x.to_vec();
    (0..x.len())
        .map(|a| {
            y[a] = x[a] + h;
            let up = view.interpolate(&y);
            y[a] = x[a] - h;
            let dn = view.interpolate(&y);
            y[a] = x[a];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// `|D_h u|² · (max + min - 2u)/ε²`, the operator of `u_t = Σ u_i u_ij u_j`.
pub fn discrete_inf_laplacian_nonnormalized(field: &LatticeField, slice: usize, x: &[f64]) -> f64 {
    let v = field.view(slice);
    let g2: f64 = discrete_gradient(&v, x).iter().map(|d| d * d).sum();
    g2 * slice_inf_laplacian(&v, x)
}

/// Forward-in-time residual `(u_{s+1} - u_s)/dt - (max + min - 2u_s)/ε²` at a node.
pub fn discrete_residual(field: &LatticeField, slice: usize, node: usize) -> f64 {
    let l = field.lattice();
    let cur = &field.slices()[slice].values;
    let nxt = &field.slices()[slice + 1].values;
    let (hi, lo) = extremes(l.grid().taps(), cur, node);
    let e2 = l.eps() * l.eps();
    (nxt[node] - cur[node]) / l.dt() - (hi + lo - 2.0 * cur[node]) / e2
}

/// `u + ε/(T - t)` on every node and in the boundary data.
pub fn top_shift(field: &LatticeField, eps: f64, top: f64) -> LatticeField {
    let l = field.lattice().clone();
    let g = field.data().clone();
    let data = BoundaryData::new(move |x, t| g.eval(x, t) + eps / (top - t));
    let slices = field
        .slices()
        .iter()
        .enumerate()
        .map(|(s, d)| {
            let add = eps / (top - l.time(s));
            SliceData {
                values: d.values.iter().map(|v| v + add).collect(),
                interior: d.interior.clone(),
            }
        })
        .collect();
    LatticeField::new(l, data, slices)
}

/// Replace the field inside a cylinder by the scheme's solution that takes the field's
/// own values as parabolic boundary data.
pub fn parabolic_modification(field: &LatticeField, cylinder: &Region) -> Result<LatticeField> {
    if !matches!(cylinder, Region::Cylinder { .. }) {
        return Err(invalid("box", "the modification box must be a cylinder"));
    }
    let lattice = field.lattice().clone();
    if cylinder.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            got: cylinder.dim(),
        });
    }
    let grid = lattice.grid();
    let mut out = field.clone();
    for (s, d) in field.slices().iter().enumerate() {
        let t = lattice.time(s);
        let shape = cylinder.slice(t, false);
        for i in 0..grid.len() {
            if shape.contains(grid.coords(i)) && !d.interior[i] {
                return Err(Error::BoxNotContained {
                    point: SpaceTimePoint::new(grid.coords(i).to_vec(), t).to_string(),
                });
            }
        }
    }
    let lambda = lattice.dt() / (lattice.eps() * lattice.eps());
    let update = Update::Explicit { lambda };
    let taps = grid.taps();
    let slices = out.slices_mut();
    for s in 1..slices.len() {
        let t = lattice.time(s);
        let shape = cylinder.slice(t, false);
        if shape.is_empty() {
            continue;
        }
        let (before, after) = slices.split_at_mut(s);
        let prev = &before[s - 1].values;
        let cur = &mut after[0].values;
        for (i, v) in cur.iter_mut().enumerate() {
            if shape.contains(grid.coords(i)) {
                let (hi, lo) = extremes(taps, prev, i);
                *v = update.apply(prev[i], hi, lo);
            }
        }
    }
    Ok(out)
}

/// Solution of the stationary problem `Δ∞ᴺν = rhs` in `Q`, `ν = φ` outside.
#[derive(Debug, Clone)]
pub struct StationaryField {
    grid: Grid,
    phi: BoundaryData,
    values: Vec<f64>,
    interior: Vec<bool>,
    pub iterations: usize,
    pub last_change: f64,
}

impl StationaryField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn interior(&self) -> &[bool] {
        &self.interior
    }
    pub fn phi(&self) -> &BoundaryData {
        &self.phi
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.grid
            .interpolate(&self.values, x)
            .unwrap_or_else(|| self.phi.eval(x, 0.0))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.grid.len())
            .filter(|i| self.interior[*i])
            .map(|i| (self.grid.coords(i), self.values[i]))
    }

    /// `(max + min - 2ν(x)) / ε²` with off-grid reads from `φ`.
    pub fn inf_laplacian(&self, x: &[f64]) -> f64 {
        let e = self.grid.eps();
        let mut y = x.to_vec();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for v in self.grid.directions() {
            for a in 0..x.len() {
                y[a] = x[a] + e * v[a];
            }
            let u = self.interpolate(&y);
            hi = hi.max(u);
            lo = lo.min(u);
        }
        (hi + lo - 2.0 * self.interpolate(x)) / (e * e)
    }

    /// Interior node closest to `x`.
    pub fn nearest_interior_node(&self, x: &[f64]) -> Option<usize> {
        (0..self.grid.len())
            .filter(|i| self.interior[*i])
            .map(|i| {
                let d: f64 = self.grid.coords(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (i, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    /// Gradient and Hessian of the interpolant (cellwise).
    pub fn derivatives(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        self.grid.interpolant_derivatives(&self.values, x)
    }
}

/// Jacobi iteration `ν ← ½(max + min) - (ε²/2)·rhs` until the sup-change drops below
/// `cfg.fix_tol`.
pub fn stationary_solve(
    domain: &SpatialDomain,
    rhs: f64,
    phi: &BoundaryData,
    cfg: &SchemeConfig,
    h: f64,
    k: usize,
    dirs: usize,
) -> Result<StationaryField> {
    domain.validate()?;
    if !rhs.is_finite() {
        return Err(invalid("rhs", "must be finite"));
    }
    cfg.check_stencil(h, k)?;
    if !(cfg.fix_tol > 0.0) {
        return Err(invalid("fixTol", "fixTol must be > 0"));
    }
    let (lo, hi) = domain.bounds();
    let grid = Grid::new(&lo, &hi, h, k, dirs)?;
    let n = grid.len();
    let interior: Vec<bool> = (0..n).map(|i| domain.contains(grid.coords(i))).collect();
    let mut cur: Vec<f64> = (0..n).map(|i| phi.eval(grid.coords(i), 0.0)).collect();
    let mut nxt = cur.clone();
    let e2 = grid.eps() * grid.eps();
    let update = Update::Stationary { shift: -0.5 * e2 * rhs };
    let taps = grid.taps();
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let sweep = |offset: usize, out: &mut [f64]| -> f64 {
            let mut m: f64 = 0.0;
            for (j, v) in out.iter_mut().enumerate() {
                let i = offset + j;
                if interior[i] {
                    let (a, b) = extremes(taps, &cur, i);
                    *v = update.apply(cur[i], a, b);
                    m = m.max((*v - cur[i]).abs());
                }
            }
            m
        };
        change = if n >= PAR_MIN_NODES {
            nxt.par_chunks_mut(2048)
                .enumerate()
                .map(|(c, out)| sweep(c * 2048, out))
                .reduce(|| 0.0, f64::max)
        } else {
            sweep(0, &mut nxt)
        };
        std::mem::swap(&mut cur, &mut nxt);
        if it % 10_000 == 0 {
            debug!("slice={it} t={} max|Δu|={change}", it as f64 * 0.5 * e2);
        }
        if change < cfg.fix_tol {
            info!("slice={it} t={} max|Δu|={change}", it as f64 * 0.5 * e2);
            return Ok(StationaryField {
                grid,
                phi: phi.clone(),
                values: cur,
                interior,
                iterations: it,
                last_change: change,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval_cyl(a: f64, b: f64, t1: f64) -> Region {
        Region::cylinder(SpatialDomain::interval(a, b), 0.0, t1)
    }

    fn disk(t1: f64) -> Region {
        Region::cylinder(
            SpatialDomain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.0,
            t1,
        )
    }

    fn sampled(region: &Region, h: f64, k: usize, dirs: usize, f: fn(&[f64]) -> f64) -> LatticeField {
        let e = k as f64 * h;
        let l = Arc::new(Lattice::build(region, h, k, e * e / 2.0, dirs).unwrap());
        LatticeField::from_fn(l, BoundaryData::new(move |x, _| f(x)), move |x, _| f(x))
    }

    #[test]
    fn operator_on_affine_is_zero() {
        let f = sampled(&disk(0.1), 0.05, 2, 16, |x| 0.3 * x[0] - 1.2 * x[1] + 0.5);
        assert!(discrete_inf_laplacian(&f, 1, &[0.2, 0.1]).abs() < 1e-12);
        assert!(discrete_inf_laplacian_nonnormalized(&f, 1, &[0.2, 0.1]).abs() < 1e-12);
    }

    #[test]
    fn operator_on_quadratics() {
        // interpolation adds O(h²/ε²); K = 8 keeps it below 1%
        let f = sampled(&disk(0.1), 0.01, 8, 16, |x| x[0] * x[0] + x[1] * x[1]);
        let v = discrete_inf_laplacian(&f, 1, &[0.0, 0.0]);
        assert!((v - 2.0).abs() < 0.02, "{v}");
        let s = sampled(&disk(0.1), 0.01, 8, 16, |x| x[0] * x[0] - x[1] * x[1]);
        let v = discrete_inf_laplacian(&s, 1, &[0.0, 0.0]);
        assert!(v.abs() < 1e-12, "{v}");
        // non-normalized: (2r)² · 2 on the x-axis where stencil reads are nodes
        let r = 0.5;
        let v = discrete_inf_laplacian_nonnormalized(&f, 1, &[r, 0.0]);
        assert!((v - 8.0 * r * r).abs() < 1e-9, "{v}");
    }

    #[test]
    fn nonnormalized_four_thirds_power() {
        // Δ∞(r^{4/3}) = φ'² φ'' = (4/3)² (4/9) = 64/81
        let f = sampled(&disk(0.1), 0.005, 4, 16, |x| (x[0] * x[0] + x[1] * x[1]).powf(2.0 / 3.0));
        let v = discrete_inf_laplacian_nonnormalized(&f, 1, &[0.5, 0.0]);
        assert!((v - 64.0 / 81.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = BoundaryData::constant(7.0);
        let cfg = SchemeConfig::new(0.1, 0.004).unwrap();
        let f = march(&disk(0.05), &g, &cfg, 0.05, 2, 16).unwrap();
        for s in f.slices() {
            assert!(s.values.iter().all(|v| *v == 7.0));
        }
        let d = dpp_march(&disk(0.05), &g, &SchemeConfig::dpp(0.1), 0.05, 2, 16).unwrap();
        assert!(d.slices().iter().all(|s| s.values.iter().all(|v| *v == 7.0)));
    }

    #[test]
    fn heat_equation_in_one_dimension() {
        let pi = std::f64::consts::PI;
        let region = interval_cyl(0.0, pi, 0.5);
        let g = BoundaryData::new(|x, _| x[0].sin());
        let h = 0.02;
        let f = march(&region, &g, &SchemeConfig::dpp(h), h, 1, 2).unwrap();
        let mut err: f64 = 0.0;
        for s in 0..f.slice_count() {
            let v = f.view(s);
            for i in v.interior_nodes() {
                let x = f.lattice().grid().coords(i)[0];
                err = err.max((v.values[i] - (-v.t).exp() * x.sin()).abs());
            }
        }
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn dpp_matches_march() {
        let g = BoundaryData::new(|x, t| (3.0 * x[0]).sin() * x[1] + t);
        let cfg = SchemeConfig::dpp(0.1);
        let a = march(&disk(0.1), &g, &cfg, 0.05, 2, 16).unwrap();
        let b = dpp_march(&disk(0.1), &g, &cfg, 0.05, 2, 16).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
        let bad = SchemeConfig::new(0.1, 0.004).unwrap();
        assert!(dpp_march(&disk(0.1), &g, &bad, 0.05, 2, 16).is_err());
    }

    #[test]
    fn cfl_and_stencil_checks() {
        assert!(matches!(SchemeConfig::new(0.1, 0.006), Err(Error::Cfl { .. })));
        let cfg = SchemeConfig::dpp(0.1);
        assert!(march(&disk(0.1), &BoundaryData::constant(0.0), &cfg, 0.05, 3, 16).is_err());
    }

    #[test]
    fn stationary_affine_and_parabola() {
        let phi = BoundaryData::new(|x, _| 2.0 * x[0] - 0.5);
        let cfg = SchemeConfig::dpp(0.05).with_fix_tol(1e-13);
        let s = stationary_solve(&SpatialDomain::interval(0.0, 1.0), 0.0, &phi, &cfg, 0.05, 1, 2).unwrap();
        for (x, v) in s.interior_nodes() {
            assert!((v - (2.0 * x[0] - 0.5)).abs() < 1e-13);
        }
        let phi = BoundaryData::new(|x, _| x[0].abs());
        let eps: f64 = 0.05;
        let cfg = SchemeConfig::dpp(eps).with_fix_tol(0.1 * eps.powi(4));
        let s = stationary_solve(&SpatialDomain::interval(0.0, 1.0), -1.0, &phi, &cfg, eps, 1, 2).unwrap();
        let mid = s.interpolate(&[0.5]);
        assert!((mid - 0.625).abs() < eps * eps, "{mid}");
        for (x, v) in s.interior_nodes() {
            assert!(v >= x[0].abs() - 10.0 * eps);
        }
    }

    #[test]
    fn stationary_reports_nonconvergence() {
        let phi = BoundaryData::constant(0.0);
        let cfg = SchemeConfig::dpp(0.01).with_fix_tol(1e-15).with_max_iter(10);
        let e = stationary_solve(&SpatialDomain::interval(0.0, 1.0), -1.0, &phi, &cfg, 0.01, 1, 2).unwrap_err();
        assert!(matches!(e, Error::NonConvergence { iterations: 10, .. }));
    }

    #[test]
    fn modification_examples() {
        let region = interval_cyl(0.0, 1.0, 0.2);
        let g = BoundaryData::new(|x, t| x[0] * x[0] + (5.0 * t).cos());
        let cfg = SchemeConfig::new(0.05, 0.001).unwrap();
        let u = march(&region, &g, &cfg, 0.05, 1, 2).unwrap();
        let bx = interval_cyl(0.3, 0.7, 0.15);
        let bx = match bx {
            Region::Cylinder { base, .. } => Region::cylinder(base, 0.05, 0.15),
            _ => unreachable!(),
        };
        let same = parabolic_modification(&u, &bx).unwrap();
        assert!(same.max_abs_diff(&u) <= 1e-12);

        let mut bumped = u.clone();
        let l = u.lattice().clone();
        for (s, d) in bumped.slices_mut().iter_mut().enumerate() {
            let shape = bx.slice(l.time(s), false);
            for i in 0..d.values.len() {
                if shape.contains(l.grid().coords(i)) {
                    d.values[i] += 1.0;
                }
            }
        }
        let m = parabolic_modification(&bumped, &bx).unwrap();
        assert!(m.max_abs_diff(&u) <= 1e-12);
        for (a, b) in m.slices().iter().zip(bumped.slices()) {
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
        }

        let outside = interval_cyl(0.5, 1.5, 0.1);
        assert!(matches!(parabolic_modification(&u, &outside), Err(Error::BoxNotContained { .. })));
    }

    #[test]
    fn future_data_is_invisible() {
        let region = disk(0.1);
        let g1 = BoundaryData::new(|x, _| x[0] * x[1]);
        let g2 = BoundaryData::new(|x, t| x[0] * x[1] + if t > 0.05 { (t - 0.05) * 40.0 } else { 0.0 });
        let cfg = SchemeConfig::dpp(0.1);
        let a = march(&region, &g1, &cfg, 0.05, 2, 16).unwrap();
        let b = march(&region, &g2, &cfg, 0.05, 2, 16).unwrap();
        let l = a.lattice();
        let mut checked = 0;
        for s in 0..a.slice_count() {
            if l.time(s) < 0.05 {
                assert_eq!(a.slices()[s], b.slices()[s]);
                checked += 1;
            }
        }
        assert!(checked > 5);
    }

    #[test]
    fn top_shift_is_a_strict_supersolution() {
        let region = interval_cyl(0.0, 1.0, 0.1);
        let g = BoundaryData::new(|x, _| (4.0 * x[0]).sin());
        let cfg = SchemeConfig::new(0.05, 0.001).unwrap();
        let u = march(&region, &g, &cfg, 0.05, 1, 2).unwrap();
        let eps = 0.01;
        let top = 0.1;
        let w = top_shift(&u, eps, top);
        let l = w.lattice();
        for s in 1..w.slice_count() - 1 {
            let t = l.time(s);
            if t >= top {
                break;
            }
            for i in w.view(s).interior_nodes() {
                if !w.slices()[s + 1].interior[i] {
                    continue;
                }
                let r = discrete_residual(&w, s, i);
                assert!(r >= eps / (top - t).powi(2) - 1e-6, "slice {s}: {r}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn update_is_monotone(u in -2.0f64..2.0, hi in -2.0f64..2.0, lo in -2.0f64..2.0,
                              bump in 0.0f64..1e-9, lambda in 0.0f64..=0.5, which in 0usize..3) {
            let (hi, lo) = if hi >= lo { (hi, lo) } else { (lo, hi) };
            let up = Update::Explicit { lambda };
            let base = up.apply(u, hi, lo);
            let raised = match which {
                0 => up.apply(u + bump, hi, lo),
                1 => up.apply(u, hi + bump, lo),
                _ => up.apply(u, hi, (lo + bump).min(hi)),
            };
            prop_assert!(raised >= base);
            prop_assert_eq!(up.apply(u, u, u), u);
        }

        #[test]
        fn comparison_holds_exactly(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..0.5));
            let g1 = BoundaryData::new(move |x, t| a * x[0] + b * (x[0] * 3.0).cos() + t * c);
            let g2 = BoundaryData::new(move |x, t| a * x[0] + b * (x[0] * 3.0).cos() + t * c + c * x[0] * x[0]);
            let region = interval_cyl(-1.0, 1.0, 0.2);
            let cfg = SchemeConfig::new(0.1, 0.004).unwrap();
            let u1 = march(&region, &g1, &cfg, 0.1, 1, 2).unwrap();
            let u2 = march(&region, &g2, &cfg, 0.1, 1, 2).unwrap();
            for (s1, s2) in u1.slices().iter().zip(u2.slices()) {
                for (x, y) in s1.values.iter().zip(&s2.values) {
                    prop_assert!(x <= y);
                }
            }
        }
    }
}
