//! Numerical boundary-regularity classification.
//!
//! The region is marched with data `Ψ = |x - x₀|² + ε(t - t₀)²`, which vanishes only at
//! `ζ₀`. The solution is sampled along a straight inward ray at distances `ρ₀·2^{-j}`
//! and its limit at `ζ₀` is extrapolated. Near-zero limits that shrink under
//! refinement point to a regular point; limits bounded away from zero point to an
//! irregular one.

use std::io::{self, Write};
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{certify, BarrierForm, CertificateReport, Side};
use crate::error::{fmt_short, invalid, Error, Result};
use crate::geometry::{Region, SpaceTimePoint, SpatialDomain, TimeSide, DEFAULT_TOL_BOUNDARY};
use crate::lattice::{BoundaryData, Lattice};
use crate::operator::march_with;

/// Probes must keep this many grid spacings of spatial clearance from the boundary.
pub const CLEARANCE_CELLS: f64 = 3.0;
/// Number of smallest-distance probes entering the extrapolation.
pub const FIT_PROBES: usize = 4;

/// One grid of the refinement schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Resolution {
    pub h: f64,
    /// Stencil radius in cells, `ε = K·h`.
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "two")]
    pub dirs: usize,
    /// Defaults to `ε²/2`.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

impl Resolution {
    pub fn new(h: f64, k: usize, dirs: usize) -> Self {
        Self { h, k, dirs, dt: None }
    }

    pub fn eps(&self) -> f64 {
        self.k as f64 * self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| 0.5 * self.eps() * self.eps())
    }
}

/// `h ∈ {0.004, 0.002, 0.001}`, `K = 1`; 2 directions in one space dimension, 32 otherwise.
pub fn default_schedule(dim: usize) -> Vec<Resolution> {
    let dirs = if dim == 1 { 2 } else { 32 };
    [0.004, 0.002, 0.001]
        .into_iter()
        .map(|h| Resolution::new(h, 1, dirs))
        .collect()
}

/// Verdict thresholds, relative to `sup Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Thresholds {
    /// Finest limit must fall below this for a regular verdict.
    pub regular: f64,
    /// Both finest limits must reach this for an irregular verdict.
    pub irregular: f64,
    /// Required shrink factor of the limit per refinement for a regular verdict.
    pub shrink: f64,
    /// Set once the anchors have been checked against these values.
    #[serde(default)]
    pub calibrated: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            regular: 0.02,
            irregular: 0.10,
            shrink: 1.5,
            calibrated: false,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.regular > 0.0 && self.regular < self.irregular) {
            return Err(invalid("thresholds", "need 0 < regular < irregular"));
        }
        if !(self.shrink >= 1.0) {
            return Err(invalid("shrink", "must be ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityVerdict {
    Regular,
    Irregular,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Probe {
    pub distance: f64,
    pub point: SpaceTimePoint,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolutionResult {
    pub h: f64,
    pub eps: f64,
    pub dt: f64,
    pub k: usize,
    pub dirs: usize,
    pub probes: Vec<Probe>,
    /// Extrapolated value at `ζ₀`.
    pub limit: f64,
    /// `limit / sup Ψ`
    pub relative_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegularityReport {
    pub region: Region,
    pub zeta0: SpaceTimePoint,
    pub probe_eps: f64,
    pub sup_psi: f64,
    pub direction: Vec<f64>,
    pub resolutions: Vec<ResolutionResult>,
    pub thresholds: Thresholds,
    pub verdict: RegularityVerdict,
    pub evidence: String,
}

/// Header for [`RegularityReport::write_csv_rows`].
pub const PROBE_CSV_HEADER: &str = "label,resolution,h,distance,probeValue";

impl RegularityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn relative_limits(&self) -> Vec<f64> {
        self.resolutions.iter().map(|r| r.relative_limit).collect()
    }

    /// One row per probe: `label, resolution index, h, distance, value`.
    pub fn write_csv_rows(&self, label: &str, w: &mut impl Write) -> io::Result<()> {
        for (i, r) in self.resolutions.iter().enumerate() {
            for p in &r.probes {
                writeln!(w, "{label},{i},{},{},{}", r.h, p.distance, p.value)?;
            }
        }
        Ok(())
    }
}

fn boundary_check(region: &Region, zeta0: &SpaceTimePoint) -> Result<f64> {
    if zeta0.dim() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: zeta0.dim(),
        });
    }
    let diam = region.diameter()?;
    let tol = (DEFAULT_TOL_BOUNDARY * diam).max(4.0 * region.tip_floor());
    if !region.is_boundary_point(zeta0, tol) {
        return Err(Error::NotOnBoundary {
            point: zeta0.to_string(),
            tol,
        });
    }
    Ok(diam)
}

/// `0.5 / diam`, comfortably inside `ε·diam < 1`.
pub fn default_probe_eps(region: &Region) -> Result<f64> {
    Ok(0.5 / region.diameter()?)
}

/// Probe data `Ψ` as boundary data.
pub fn probe_data(zeta0: &SpaceTimePoint, eps: f64) -> BoundaryData {
    let x0 = zeta0.x.clone();
    let t0 = zeta0.t;
    BoundaryData::new(move |x, t| {
        let r2: f64 = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 + eps * (t - t0) * (t - t0)
    })
}

fn sup_psi(region: &Region, zeta0: &SpaceTimePoint, eps: f64) -> Result<f64> {
    let bb = region.bounding_box().ok_or(Error::EmptyRegion)?;
    let r2: f64 = bb
        .lo
        .iter()
        .zip(&bb.hi)
        .zip(&zeta0.x)
        .map(|((a, b), c)| (a - c).abs().max((b - c).abs()).powi(2))
        .sum();
    let dt = (bb.t_lo - zeta0.t).abs().max((bb.t_hi - zeta0.t).abs());
    Ok(r2 + eps * dt * dt)
}

/// Linear least squares of `v` against `w = 1/log(1/d)` over the last [`FIT_PROBES`]
/// probes; the intercept is the limit, clamped to `[0, last value]`.
pub fn extrapolate(probes: &[Probe]) -> f64 {
    let Some(last) = probes.last() else {
        return f64::NAN;
    };
    let tail = &probes[probes.len().saturating_sub(FIT_PROBES)..];
    if tail.len() < 2 {
        return last.value.max(0.0);
    }
    let ws: Vec<f64> = tail.iter().map(|p| 1.0 / (1.0 / p.distance).ln()).collect();
    let n = tail.len() as f64;
    let mw = ws.iter().sum::<f64>() / n;
    let mv = tail.iter().map(|p| p.value).sum::<f64>() / n;
    let sww: f64 = ws.iter().map(|w| (w - mw) * (w - mw)).sum();
    let swv: f64 = ws.iter().zip(tail).map(|(w, p)| (w - mw) * (p.value - mv)).sum();
    let intercept = if sww > 0.0 { mv - swv / sww * mw } else { mv };
    intercept.clamp(0.0, last.value.max(0.0))
}

struct Pending {
    distance: f64,
    point: SpaceTimePoint,
    k0: usize,
    frac: f64,
    lo: Option<f64>,
    value: Option<f64>,
}

fn run_resolution(
    region: &Region,
    zeta0: &SpaceTimePoint,
    direction: &[f64],
    rho0: f64,
    eps_probe: f64,
    sup: f64,
    res: &Resolution,
) -> Result<ResolutionResult> {
    let lattice = Lattice::build(region, res.h, res.k, res.dt(), res.dirs)?;
    let need = CLEARANCE_CELLS * res.h;
    let mut pending = Vec::new();
    let mut d = rho0;
    while d >= 1e-12 {
        let p = zeta0.offset(direction, d);
        let pos = (p.t - lattice.time(0)) / lattice.dt();
        let k0 = (pos.floor().max(0.0) as usize).min(lattice.steps());
        let frac = (pos - k0 as f64).clamp(0.0, 1.0);
        // both bracketing slices must see the probe well inside
        let k1 = (k0 + 1).min(lattice.steps());
        let ok = region.contains_xt(&p.x, p.t)
            && [p.t, lattice.time(k0), lattice.time(k1)]
                .iter()
                .all(|&t| region.spatial_clearance(&p.x, t, 4.0 * need) >= need);
        if ok {
            pending.push(Pending {
                distance: d,
                point: p,
                k0,
                frac,
                lo: None,
                value: None,
            });
        } else if !pending.is_empty() {
            break;
        }
        d *= 0.5;
    }
    if pending.is_empty() {
        return Err(Error::Unsupported(format!(
            "no probe point with clearance {} along the approach to {zeta0} at h = {}",
            fmt_short(need),
            fmt_short(res.h)
        )));
    }

    let g = probe_data(zeta0, eps_probe);
    let mut left = pending.len();
    march_with(&lattice, &g, |view| {
        for p in pending.iter_mut().filter(|p| p.value.is_none()) {
            if view.index == p.k0 {
                let u = view.interpolate(&p.point.x);
                if p.frac == 0.0 || p.k0 == lattice.steps() {
                    p.value = Some(u);
                    left -= 1;
                } else {
                    p.lo = Some(u);
                }
            } else if view.index == p.k0 + 1 {
                let lo = p.lo.expect("earlier slice visited");
                let u = view.interpolate(&p.point.x);
                p.value = Some(lo + p.frac * (u - lo));
                left -= 1;
            }
        }
        if left == 0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;

    let probes: Vec<Probe> = pending
        .into_iter()
        .map(|p| Probe {
            distance: p.distance,
            point: p.point,
            value: p.value.unwrap_or(f64::NAN),
        })
        .collect();
    let limit = extrapolate(&probes);
    Ok(ResolutionResult {
        h: res.h,
        eps: res.eps(),
        dt: res.dt(),
        k: res.k,
        dirs: res.dirs,
        probes,
        limit,
        relative_limit: limit / sup,
    })
}

fn decide(rel: &[f64], th: &Thresholds) -> (RegularityVerdict, String) {
    let n = rel.len();
    let (prev, fin) = (rel[n - 2], rel[n - 1]);
    let shrinking = fin <= prev / th.shrink || fin <= 1e-3 * th.regular;
    let verdict = if fin < th.regular && shrinking {
        RegularityVerdict::Regular
    } else if fin >= th.irregular && prev >= th.irregular {
        RegularityVerdict::Irregular
    } else {
        RegularityVerdict::Inconclusive
    };
    let list: Vec<String> = rel.iter().map(|v| fmt_short(*v)).collect();
    let evidence = format!(
        "limit/supΨ per resolution [{}]; regular needs finest < {} shrinking by {}, irregular needs ≥ {} at both finest",
        list.join(", "),
        fmt_short(th.regular),
        fmt_short(th.shrink),
        fmt_short(th.irregular)
    );
    (verdict, evidence)
}

/// Classification with the default thresholds.
pub fn classify(
    region: &Region,
    zeta0: &SpaceTimePoint,
    schedule: &[Resolution],
    probe_eps: f64,
) -> Result<RegularityReport> {
    classify_with(region, zeta0, schedule, probe_eps, &Thresholds::default())
}

pub fn classify_with(
    region: &Region,
    zeta0: &SpaceTimePoint,
    schedule: &[Resolution],
    probe_eps: f64,
    thresholds: &Thresholds,
) -> Result<RegularityReport> {
    if schedule.len() < 2 {
        return Err(Error::ScheduleTooShort(schedule.len()));
    }
    thresholds.validate()?;
    let diam = boundary_check(region, zeta0)?;
    if !(probe_eps > 0.0 && probe_eps * diam < 1.0) {
        return Err(invalid(
            "probeEps",
            format!("need 0 < ε·diam(Ω) < 1 (diam = {})", fmt_short(diam)),
        ));
    }
    let approach = region.approach(zeta0)?;
    let rho0 = (0.5 * approach.reach).min(0.25);
    let sup = sup_psi(region, zeta0, probe_eps)?;
    let resolutions = schedule
        .par_iter()
        .map(|r| run_resolution(region, zeta0, &approach.direction, rho0, probe_eps, sup, r))
        .collect::<Result<Vec<_>>>()?;
    let rel: Vec<f64> = resolutions.iter().map(|r| r.relative_limit).collect();
    let (verdict, evidence) = decide(&rel, thresholds);
    log::info!("classify {zeta0}: {evidence} -> {verdict:?}");
    Ok(RegularityReport {
        region: region.clone(),
        zeta0: zeta0.clone(),
        probe_eps,
        sup_psi: sup,
        direction: approach.direction,
        resolutions,
        thresholds: *thresholds,
        verdict,
        evidence,
    })
}

/// Lateral point of the cylinder `(0, ½) × (0, ½)`.
pub fn wall_anchor() -> (Region, SpaceTimePoint) {
    (
        Region::cylinder(SpatialDomain::interval(0.0, 0.5), 0.0, 0.5),
        SpaceTimePoint::new(vec![0.0], 0.25),
    )
}

/// Center of the heat ball `{W(-x, -t) > level}` in one space dimension.
pub fn heat_ball_anchor(level: f64) -> (Region, SpaceTimePoint) {
    (
        Region::heat_ball(vec![0.0], 0.0, level),
        SpaceTimePoint::new(vec![0.0], 0.0),
    )
}

/// Anchor runs behind a frozen set of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Calibration {
    pub thresholds: Thresholds,
    pub wall: RegularityReport,
    pub heat_ball: RegularityReport,
}

/// Checks that the cylinder-wall anchor classifies regular and the heat-ball center
/// irregular under `thresholds`, then returns them marked calibrated.
pub fn calibrate(schedule: &[Resolution], thresholds: &Thresholds) -> Result<Calibration> {
    let (wr, wz) = wall_anchor();
    let (hr, hz) = heat_ball_anchor(2.0);
    let (wall, heat_ball) = rayon::join(
        || classify_with(&wr, &wz, schedule, default_probe_eps(&wr)?, thresholds),
        || classify_with(&hr, &hz, schedule, default_probe_eps(&hr)?, thresholds),
    );
    let (wall, heat_ball) = (wall?, heat_ball?);
    if wall.verdict != RegularityVerdict::Regular || heat_ball.verdict != RegularityVerdict::Irregular {
        return Err(Error::Unsupported(format!(
            "anchors not separated: wall {:?} ({}), heat ball {:?} ({})",
            wall.verdict, wall.evidence, heat_ball.verdict, heat_ball.evidence
        )));
    }
    Ok(Calibration {
        thresholds: Thresholds {
            calibrated: true,
            ..*thresholds
        },
        wall,
        heat_ball,
    })
}

/// Whether every slice before `zeta0.t` is bit-identical when `perturbation` is added
/// to the data at times after `zeta0.t`.
pub fn future_blindness_test(
    region: &Region,
    zeta0: &SpaceTimePoint,
    g: &BoundaryData,
    perturbation: &BoundaryData,
    res: &Resolution,
) -> Result<bool> {
    let lattice = Lattice::build(region, res.h, res.k, res.dt(), res.dirs)?;
    let t0 = zeta0.t;
    let (base, pert) = (g.clone(), perturbation.clone());
    let g2 = BoundaryData::new(move |x, t| base.eval(x, t) + if t > t0 { pert.eval(x, t) } else { 0.0 });

    let mut before: Vec<Vec<u64>> = Vec::new();
    march_with(&lattice, g, |v| {
        if v.t >= t0 {
            return ControlFlow::Break(());
        }
        before.push(v.values.iter().map(|a| a.to_bits()).collect());
        ControlFlow::Continue(())
    })?;
    let mut idx = 0;
    let mut same = true;
    march_with(&lattice, &g2, |v| {
        if v.t >= t0 {
            return ControlFlow::Break(());
        }
        same &= v.values.iter().map(|a| a.to_bits()).eq(before[idx].iter().copied());
        idx += 1;
        ControlFlow::Continue(())
    })?;
    Ok(same && idx == before.len())
}

/// Classification on `Ω` and on its past part `Ω₋ = Ω ∩ {t < t₀}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PastAgreement {
    pub full: RegularityReport,
    /// `None` when `Ω₋` is empty or `ζ₀ ∉ ∂Ω₋`, in which case `ζ₀` must be regular.
    pub past: Option<RegularityReport>,
    pub agree: bool,
}

pub fn past_agreement(
    region: &Region,
    zeta0: &SpaceTimePoint,
    schedule: &[Resolution],
    probe_eps: f64,
    thresholds: &Thresholds,
) -> Result<PastAgreement> {
    let full = classify_with(region, zeta0, schedule, probe_eps, thresholds)?;
    let past_region = region.clip_time(zeta0.t, TimeSide::Before);
    let past = match &past_region {
        Region::Empty { .. } => None,
        r => match classify_with(r, zeta0, schedule, probe_eps, thresholds) {
            Ok(rep) => Some(rep),
            Err(Error::NotOnBoundary { .. }) | Err(Error::EmptyRegion) => None,
            Err(e) => return Err(e),
        },
    };
    let agree = match &past {
        Some(p) => p.verdict == full.verdict,
        None => full.verdict == RegularityVerdict::Regular,
    };
    Ok(PastAgreement { full, past, agree })
}

/// Where the exterior ball touches the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contact {
    North,
    South,
    Side,
}

/// Domain touching the closed ball of radius `r0` about the origin at one point.
#[derive(Debug, Clone)]
pub struct ExteriorSphereSetup {
    pub region: Region,
    pub zeta0: SpaceTimePoint,
    pub form: BarrierForm,
}

/// Builds the domain as a box minus a closed ball of radius `2·r0` that contains the
/// `r0`-ball and is tangent to it at the contact point, so the `r0`-ball meets the
/// closed domain only there. Side contact keeps `|x - x'| > δ = 0.6·r0` and uses
/// `a = (2r0 + 1)/(2δ²)`; north and south default to `a = 1` and `a = 4`.
pub fn exterior_sphere_setup(contact: Contact, r0: f64, dim: usize, a: Option<f64>) -> Result<ExteriorSphereSetup> {
    if !(r0 > 0.0) {
        return Err(invalid("R0", "must be > 0"));
    }
    if dim == 0 {
        return Err(invalid("dim", "must be ≥ 1"));
    }
    let r1 = 2.0 * r0;
    let mut lo = vec![-0.5; dim];
    let mut hi = vec![0.5; dim];
    let mut zeta = vec![0.0; dim];
    let mut big = vec![0.0; dim];
    let (t_lo, t_hi, zt, big_t, a) = match contact {
        Contact::Side => {
            let delta = 0.6 * r0;
            lo[0] = delta;
            hi[0] = r0 + 0.5;
            zeta[0] = r0;
            big[0] = r0 - r1;
            (-0.5, 0.5, 0.0, 0.0, a.unwrap_or((2.0 * r0 + 1.0) / (2.0 * delta * delta)))
        }
        Contact::North => (r0 - 0.5, r0 + 0.5, r0, r0 - r1, a.unwrap_or(1.0)),
        Contact::South => (-r0 - 0.5, -r0 + 0.2, -r0, -r0 + r1, a.unwrap_or(4.0)),
    };
    let outer = Region::cylinder(SpatialDomain::Box { lo, hi }, t_lo, t_hi);
    let region = Region::difference(outer, Region::ball(big, big_t, r1));
    Ok(ExteriorSphereSetup {
        region,
        zeta0: SpaceTimePoint::new(zeta, zt),
        form: BarrierForm::exterior_sphere(vec![0.0; dim], 0.0, r0, a)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExteriorSphereOutcome {
    pub contact: Contact,
    pub r0: f64,
    pub certificate: CertificateReport,
    pub regularity: RegularityReport,
}

pub fn exterior_sphere_experiment(
    contact: Contact,
    r0: f64,
    schedule: &[Resolution],
    thresholds: &Thresholds,
    samples: usize,
    seed: u64,
) -> Result<ExteriorSphereOutcome> {
    let setup = exterior_sphere_setup(contact, r0, 1, None)?;
    let certificate = certify(&setup.form, &setup.region, Side::Super, samples, seed, 1e-9)?;
    let eps = default_probe_eps(&setup.region)?;
    let regularity = classify_with(&setup.region, &setup.zeta0, schedule, eps, thresholds)?;
    Ok(ExteriorSphereOutcome {
        contact,
        r0,
        certificate,
        regularity,
    })
}

/// Classification of the origin for each factor `A` of `|x|² < -A·t·log|log|t||`,
/// `-c < t < 0`, in one space dimension.
pub fn petrovsky_sweep(
    factors: &[f64],
    c: f64,
    schedule: &[Resolution],
    thresholds: &Thresholds,
) -> Result<Vec<RegularityReport>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid("c", "need 0 < c < 1"));
    }
    if factors.iter().any(|a| !(*a > 0.0)) {
        return Err(invalid("factors", "must be > 0"));
    }
    factors
        .par_iter()
        .map(|&a| {
            let region = Region::petrovsky(1, a, c);
            let eps = default_probe_eps(&region)?;
            classify_with(&region, &SpaceTimePoint::new(vec![0.0], 0.0), schedule, eps, thresholds)
        })
        .collect()
}

/// Classification of the heat-ball center.
pub fn heat_ball_experiment(level: f64, schedule: &[Resolution], thresholds: &Thresholds) -> Result<RegularityReport> {
    if !(level > 0.0) {
        return Err(invalid("level", "must be > 0"));
    }
    let (region, zeta0) = heat_ball_anchor(level);
    let eps = default_probe_eps(&region)?;
    classify_with(&region, &zeta0, schedule, eps, thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::Verdict;

    fn coarse() -> Vec<Resolution> {
        vec![Resolution::new(0.01, 1, 2), Resolution::new(0.005, 1, 2)]
    }

    #[test]
    fn extrapolation_recovers_intercept() {
        let probes: Vec<Probe> = (0..6)
            .map(|j| {
                let d = 0.1 * 0.5f64.powi(j);
                Probe {
                    distance: d,
                    point: SpaceTimePoint::new(vec![0.0], 0.0),
                    value: 0.3 + 2.0 / (1.0 / d).ln(),
                }
            })
            .collect();
        assert!((extrapolate(&probes) - 0.3).abs() < 1e-12);
        // clamps at zero for linearly vanishing data
        let lin: Vec<Probe> = probes
            .iter()
            .map(|p| Probe {
                value: p.distance,
                ..p.clone()
            })
            .collect();
        let l = extrapolate(&lin);
        assert!(l >= 0.0 && l <= lin.last().unwrap().value);
    }

    #[test]
    fn short_schedule_rejected() {
        let (r, z) = wall_anchor();
        let e = classify(&r, &z, &coarse()[..1], 0.5).unwrap_err();
        assert_eq!(e, Error::ScheduleTooShort(1));
    }

    #[test]
    fn interior_point_rejected() {
        let (r, _) = wall_anchor();
        let e = classify(&r, &SpaceTimePoint::new(vec![0.25], 0.25), &coarse(), 0.5).unwrap_err();
        assert!(matches!(e, Error::NotOnBoundary { .. }));
    }

    #[test]
    fn probe_eps_constraint() {
        let (r, z) = wall_anchor();
        let e = classify(&r, &z, &coarse(), 5.0).unwrap_err();
        assert!(e.to_string().contains("ε·diam(Ω)"), "{e}");
    }

    #[test]
    fn wall_point_regular_and_probes_nonnegative() {
        let (r, z) = wall_anchor();
        let rep = classify(&r, &z, &coarse(), default_probe_eps(&r).unwrap()).unwrap();
        assert_eq!(rep.verdict, RegularityVerdict::Regular, "{}", rep.evidence);
        for res in &rep.resolutions {
            assert!(res.probes.iter().all(|p| p.value >= 0.0));
        }
    }

    #[test]
    fn classify_is_deterministic() {
        let (r, z) = wall_anchor();
        let a = classify(&r, &z, &coarse(), 0.5).unwrap();
        let b = classify(&r, &z, &coarse(), 0.5).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn future_blindness_on_cylinder() {
        let (r, _) = wall_anchor();
        let z = SpaceTimePoint::new(vec![0.0], 0.2);
        let g = BoundaryData::new(|x, t| x[0] + t);
        let bump = BoundaryData::new(|x, _| 10.0 * x[0].sin());
        assert!(future_blindness_test(&r, &z, &g, &bump, &Resolution::new(0.01, 1, 2)).unwrap());
    }

    #[test]
    fn earliest_point_regular_without_past() {
        let (r, _) = wall_anchor();
        let z = SpaceTimePoint::new(vec![0.25], 0.0);
        let pa = past_agreement(&r, &z, &coarse(), 0.5, &Thresholds::default()).unwrap();
        assert!(pa.past.is_none());
        assert!(pa.agree, "{}", pa.full.evidence);
    }

    #[test]
    fn exterior_sphere_setups() {
        for (contact, r0, expect) in [
            (Contact::Side, 0.5, Verdict::Certified),
            (Contact::North, 1.5, Verdict::Certified),
            (Contact::North, 0.5, Verdict::Refuted),
            (Contact::South, 0.5, Verdict::Refuted),
        ] {
            let s = exterior_sphere_setup(contact, r0, 1, None).unwrap();
            assert!(!s.region.contains(&s.zeta0).unwrap());
            assert!(s.region.is_boundary_point(&s.zeta0, 1e-6), "{contact:?}");
            let rep = certify(&s.form, &s.region, Side::Super, 400, 5, 1e-9).unwrap();
            assert_eq!(rep.verdict, expect, "{contact:?} r0={r0} min={}", rep.min_residual);
        }
    }

    #[test]
    fn csv_rows_have_header_width() {
        let (r, z) = wall_anchor();
        let rep = classify(&r, &z, &coarse(), 0.5).unwrap();
        let mut buf = Vec::new();
        rep.write_csv_rows("wall", &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let cols = PROBE_CSV_HEADER.split(',').count();
        assert!(s.lines().all(|l| l.split(',').count() == cols));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn extrapolated_limit_within_clamp(vals in proptest::collection::vec(0.0f64..5.0, 2..10)) {
                let probes: Vec<Probe> = vals
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| Probe {
                        distance: 0.2 * 0.5f64.powi(j as i32),
                        point: SpaceTimePoint::new(vec![0.0], 0.0),
                        value: v,
                    })
                    .collect();
                let l = extrapolate(&probes);
                prop_assert!(l >= 0.0 && l <= *vals.last().unwrap());
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(6))]
            #[test]
            fn wall_probes_nonnegative(t0 in 0.1f64..0.4, eps in 0.1f64..1.3) {
                let (r, _) = wall_anchor();
                let z = SpaceTimePoint::new(vec![0.5], t0);
                let rep = classify(&r, &z, &coarse(), eps).unwrap();
                for res in &rep.resolutions {
                    prop_assert!(res.probes.iter().all(|p| p.value >= 0.0));
                }
            }
        }
    }
}
