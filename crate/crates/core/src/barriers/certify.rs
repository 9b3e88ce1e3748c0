use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{irregularity_premise_lambda, BarrierForm, Equation, ResidualRule, Side};
use crate::error::{fmt_short, invalid, Error, Result};
use crate::geometry::{Region, SpaceTimePoint, DEFAULT_TOL_BOUNDARY};

/// Values at or below this count as zero for the vanishing condition.
const VANISH_TOL: f64 = 1e-8;
/// Minimum logarithmic decay exponent accepted for the vanishing condition.
const MIN_LOG_DECAY: f64 = 0.05;
/// Closest approach distance tried.
const APPROACH_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResidual {
    pub point: SpaceTimePoint,
    pub residual: f64,
    pub rule: ResidualRule,
}

/// A named check inside a barrier report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    /// Measured slack; its meaning is given in `detail`.
    pub margin: f64,
    /// Whether the verdict depends on this condition.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    pub form: String,
    pub params: BTreeMap<String, f64>,
    pub side: Side,
    pub equation: Equation,
    pub tol: f64,
    pub samples: Vec<SampleResidual>,
    pub min_residual: f64,
    pub max_residual: f64,
    pub verdict: Verdict,
    pub violations: Vec<SampleResidual>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn settle(&mut self) {
        let refuted = !self.violations.is_empty()
            || self.conditions.iter().any(|c| c.required && c.name == "positive" && !c.holds);
        self.verdict = if refuted {
            Verdict::Refuted
        } else if self.conditions.iter().all(|c| c.holds || !c.required) {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        };
    }
}

fn finite_or(v: f64, fallback: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        fallback
    }
}

fn premise_check(form: &BarrierForm, p: &SpaceTimePoint) -> Result<()> {
    match form {
        BarrierForm::IrregularityFunction { k, alpha } => {
            let lam0 = irregularity_premise_lambda(*k, *alpha)?;
            let lam = (-(-p.t).ln()).ln();
            let need = k.ln() + 1.0 / (1.0 - k);
            if lam > 0.0 && alpha * lam - 2.0 * lam.ln() >= need {
                Ok(())
            } else {
                Err(Error::OutsideValidity {
                    form: form.to_string(),
                    point: p.to_string(),
                    reason: format!(
                        "smallness premise k·e^{{1/(1-k)}} ≤ |log|t||^α/log²|log|t|| fails; it needs \
                         log|log|t|| ≥ {} (use the scaled certificate)",
                        fmt_short(lam0)
                    ),
                })
            }
        }
        BarrierForm::TopShift { base, .. } => premise_check(base, p),
        BarrierForm::Negated(b) => premise_check(b, p),
        _ => Ok(()),
    }
}

/// Residual signs at given points.
pub fn certify_points(
    form: &BarrierForm,
    points: &[SpaceTimePoint],
    side: Side,
    equation: Equation,
    tol: f64,
) -> Result<CertificateReport> {
    if points.is_empty() {
        return Err(invalid("samples", "must be ≥ 1"));
    }
    form.validate()?;
    let samples = points
        .par_iter()
        .map(|p| {
            premise_check(form, p)?;
            let (residual, rule) = form.residual(p, equation)?.for_side(side);
            Ok(SampleResidual {
                point: p.clone(),
                residual,
                rule,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<SampleResidual> = samples
        .iter()
        .filter(|s| match side {
            Side::Super => !(s.residual >= -tol),
            Side::Sub => !(s.residual <= tol),
        })
        .cloned()
        .collect();
    let min_residual = samples.iter().map(|s| s.residual).fold(f64::INFINITY, f64::min);
    let max_residual = samples.iter().map(|s| s.residual).fold(f64::NEG_INFINITY, f64::max);
    let mut rep = CertificateReport {
        form: form.to_string(),
        params: form.params(),
        side,
        equation,
        tol,
        samples,
        min_residual,
        max_residual,
        verdict: Verdict::Inconclusive,
        violations,
        conditions: Vec::new(),
        witnesses: BTreeMap::new(),
        notes: Vec::new(),
    };
    rep.settle();
    Ok(rep)
}

pub fn certify_with(
    form: &BarrierForm,
    region: &Region,
    side: Side,
    equation: Equation,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    if samples == 0 {
        return Err(invalid("samples", "must be ≥ 1"));
    }
    let points = region.sample_interior(samples, seed)?;
    certify_points(form, &points, side, equation, tol)
}

/// Normalized-equation certificate at `samples` seeded interior points.
pub fn certify(
    form: &BarrierForm,
    region: &Region,
    side: Side,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    certify_with(form, region, side, Equation::Normalized, samples, seed, tol)
}

/// Settings for [`check_barrier_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCheck {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub boundary_samples: usize,
    /// Boundary points closer than this to `ζ₀` are ignored; default `0.05 · diam`.
    pub exclusion: Option<f64>,
}

impl BarrierCheck {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            tol: 1e-9,
            boundary_samples: 400,
            exclusion: None,
        }
    }

    /// Default tolerance for `form`: `10⁻⁹`, or `eps` of the grid for numeric forms.
    pub fn for_form(form: &BarrierForm, samples: usize, seed: u64) -> Self {
        let mut c = Self::new(samples, seed);
        if let Some(eps) = numeric_eps(form) {
            c.tol = eps;
        }
        c
    }
}

fn numeric_eps(form: &BarrierForm) -> Option<f64> {
    match form {
        BarrierForm::WallBarrier { nu, .. } => Some(nu.grid().eps()),
        BarrierForm::TopShift { base, .. } => numeric_eps(base),
        BarrierForm::Negated(b) => numeric_eps(b),
        _ => None,
    }
}

fn boundary_tol(region: &Region, diam: f64) -> f64 {
    (DEFAULT_TOL_BOUNDARY * diam).max(4.0 * region.tip_floor())
}

fn require_boundary(region: &Region, zeta0: &SpaceTimePoint) -> Result<f64> {
    if zeta0.dim() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: zeta0.dim(),
        });
    }
    let diam = region.diameter()?;
    let tol = boundary_tol(region, diam);
    if !region.is_boundary_point(zeta0, tol) {
        return Err(Error::NotOnBoundary {
            point: zeta0.to_string(),
            tol,
        });
    }
    Ok(diam)
}

/// Values of `value` along the inward approach ray at distances `reach · 2^{-i}`.
fn approach_values(
    region: &Region,
    zeta0: &SpaceTimePoint,
    value: impl Fn(&SpaceTimePoint) -> Result<f64>,
) -> Result<Vec<(f64, f64)>> {
    let a = region.approach(zeta0)?;
    let mut out = Vec::new();
    let mut d = a.reach;
    while d >= APPROACH_FLOOR {
        if let Ok(v) = value(&zeta0.offset(&a.direction, d)) {
            if v.is_finite() {
                out.push((d, v));
            }
        }
        d *= 0.5;
    }
    Ok(out)
}

/// Whether the approach values tend to zero: the last value is below [`VANISH_TOL`], or
/// the positive tail decreases like `log(1/d)^{-p}` with `p ≥` [`MIN_LOG_DECAY`].
fn vanishing(seq: &[(f64, f64)]) -> Condition {
    let mut c = Condition {
        name: "vanishing".into(),
        holds: false,
        margin: 0.0,
        required: true,
        detail: String::new(),
    };
    let Some(&(d_last, v_last)) = seq.last() else {
        c.detail = "no valid approach points".into();
        return c;
    };
    c.margin = v_last.abs();
    if v_last.abs() <= VANISH_TOL {
        c.holds = true;
        c.detail = format!("|value| = {} at distance {}", fmt_short(v_last.abs()), fmt_short(d_last));
        return c;
    }
    let small: Vec<(f64, f64)> = seq.iter().copied().filter(|(d, _)| *d < 0.5).collect();
    let tail = &small[small.len() / 2..];
    let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
    if tail.len() < 4 || !decreasing || tail.iter().any(|(_, v)| *v <= 0.0) {
        c.detail = format!(
            "value {} at distance {} without monotone decay",
            fmt_short(v_last),
            fmt_short(d_last)
        );
        return c;
    }
    let xs: Vec<f64> = tail.iter().map(|(d, _)| (-d.ln()).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
    let p = -slope(&xs, &ys);
    c.holds = p >= MIN_LOG_DECAY;
    c.detail = format!(
        "value {} at distance {}, decays like log(1/d)^-{}",
        fmt_short(v_last),
        fmt_short(d_last),
        fmt_short(p)
    );
    c
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Barrier conditions at `zeta0`: positive supersolution, positive away from `zeta0`
/// on the boundary, vanishing at `zeta0`.
pub fn check_barrier(
    form: &BarrierForm,
    region: &Region,
    zeta0: &SpaceTimePoint,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    check_barrier_with(form, region, zeta0, &BarrierCheck::for_form(form, samples, seed))
}

pub fn check_barrier_with(
    form: &BarrierForm,
    region: &Region,
    zeta0: &SpaceTimePoint,
    opts: &BarrierCheck,
) -> Result<CertificateReport> {
    let diam = require_boundary(region, zeta0)?;
    let mut rep = certify(form, region, Side::Super, opts.samples, opts.seed, opts.tol)?;
    rep.conditions.push(Condition {
        name: "supersolution".into(),
        holds: rep.violations.is_empty(),
        margin: rep.min_residual,
        required: true,
        detail: format!("min residual over {} samples", rep.samples.len()),
    });

    let values = rep
        .samples
        .par_iter()
        .map(|s| form.value(&s.point))
        .collect::<Result<Vec<f64>>>()?;
    let min_val = values.iter().copied().fold(f64::INFINITY, f64::min);
    rep.conditions.push(Condition {
        name: "positive".into(),
        holds: min_val > 0.0,
        margin: min_val,
        required: true,
        detail: "min value at interior samples".into(),
    });

    let rho = opts.exclusion.unwrap_or(0.05 * diam);
    let bs = region.sample_boundary(opts.boundary_samples, opts.seed ^ 0x5EED)?;
    let far: Vec<f64> = bs
        .iter()
        .filter(|b| b.point.distance(zeta0) >= rho)
        .filter_map(|b| form.value(&b.point).ok())
        .filter(|v| v.is_finite())
        .collect();
    let bmin = far.iter().copied().fold(f64::INFINITY, f64::min);
    rep.conditions.push(Condition {
        name: "boundary-positive".into(),
        holds: !far.is_empty() && bmin > 0.0,
        margin: finite_or(bmin, 0.0),
        required: true,
        detail: format!(
            "min value over {} boundary samples at distance ≥ {} from ζ0",
            far.len(),
            fmt_short(rho)
        ),
    });

    let seq = approach_values(region, zeta0, |p| form.value(p))?;
    rep.conditions.push(vanishing(&seq));
    rep.min_residual = finite_or(rep.min_residual, 0.0);
    rep.max_residual = finite_or(rep.max_residual, 0.0);
    rep.settle();
    Ok(rep)
}

/// The family `Ψ_j = jα|x-x₀|^{4/3} + βjᵐ(t-t₀)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixFamilySpec {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub alpha: f64,
    /// `None` means `1/(2·diam)`.
    pub beta: Option<f64>,
    pub m: f64,
    pub js: Vec<u32>,
}

impl AppendixFamilySpec {
    /// `α = 1`, `m = 3`, `β = 1/(2·diam)`, `j = 1..=8`.
    pub fn defaults(x0: impl Into<Vec<f64>>, t0: f64) -> Self {
        Self {
            x0: x0.into(),
            t0,
            alpha: 1.0,
            beta: None,
            m: 3.0,
            js: (1..=8).collect(),
        }
    }

    pub fn beta_for(&self, diam: f64) -> f64 {
        self.beta.unwrap_or(0.5 / diam)
    }

    pub fn members(&self, diam: f64) -> Result<Vec<(u32, BarrierForm)>> {
        if self.js.is_empty() {
            return Err(invalid("js", "need at least one member"));
        }
        let beta = self.beta_for(diam);
        self.js
            .iter()
            .map(|&j| {
                Ok((
                    j,
                    BarrierForm::appendix_family(j, self.alpha, beta, self.m, self.x0.clone(), self.t0)?,
                ))
            })
            .collect()
    }

    /// `|x-x₀|^{4/3} + (t-t₀)²/(2·diam)`
    pub fn distance(&self, p: &SpaceTimePoint, diam: f64) -> f64 {
        let r2: f64 = p.x.iter().zip(&self.x0).map(|(a, b)| (a - b) * (a - b)).sum();
        r2.powf(2.0 / 3.0) + (p.t - self.t0).powi(2) / (2.0 * diam)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOptions {
    pub strong: bool,
    pub k_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub boundary_samples: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            strong: true,
            k_max: 5,
            samples: 400,
            seed: 0,
            tol: 1e-9,
            boundary_samples: 400,
        }
    }
}

/// Barrier-family conditions for the non-normalized equation. Each `Ψ_j` is checked as
/// a subsolution, so that the Perron solution `w_j` with data `Ψ_j` satisfies
/// `w_j ≥ Ψ_j`; boundary growth and the strong bound are read off `Ψ_j`.
pub fn check_barrier_family(
    family: &AppendixFamilySpec,
    region: &Region,
    zeta0: &SpaceTimePoint,
    opts: &FamilyOptions,
) -> Result<CertificateReport> {
    if opts.samples == 0 {
        return Err(invalid("samples", "must be ≥ 1"));
    }
    let diam = require_boundary(region, zeta0)?;
    let members = family.members(diam)?;
    let points = region.sample_interior(opts.samples, opts.seed)?;

    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), family.alpha);
    params.insert("beta".to_string(), family.beta_for(diam));
    params.insert("m".to_string(), family.m);
    params.insert("t0".to_string(), family.t0);
    params.insert("diam".to_string(), diam);
    for (i, v) in family.x0.iter().enumerate() {
        params.insert(format!("x0[{i}]"), *v);
    }
    let mut rep = CertificateReport {
        form: "AppendixFamily".into(),
        params,
        side: Side::Sub,
        equation: Equation::NonNormalized,
        tol: opts.tol,
        samples: Vec::new(),
        min_residual: f64::INFINITY,
        max_residual: f64::NEG_INFINITY,
        verdict: Verdict::Inconclusive,
        violations: Vec::new(),
        conditions: Vec::new(),
        witnesses: BTreeMap::new(),
        notes: Vec::new(),
    };

    let mut all_sub = true;
    let mut worst_sub = f64::NEG_INFINITY;
    let mut all_vanish = true;
    for (j, form) in &members {
        let r = certify_points(form, &points, Side::Sub, Equation::NonNormalized, opts.tol)?;
        all_sub &= r.violations.is_empty();
        worst_sub = worst_sub.max(r.max_residual);
        rep.min_residual = rep.min_residual.min(r.min_residual);
        rep.max_residual = rep.max_residual.max(r.max_residual);
        rep.samples.extend(r.samples);
        rep.violations.extend(r.violations);
        let v = vanishing(&approach_values(region, zeta0, |p| form.value(p))?);
        all_vanish &= v.holds;
        rep.notes.push(format!("j={j}: max residual {}, {}", fmt_short(r.max_residual), v.detail));
    }
    rep.conditions.push(Condition {
        name: "member-subsolution".into(),
        holds: all_sub,
        margin: -worst_sub,
        required: true,
        detail: "every Ψ_j is a subsolution (margin = -max residual)".into(),
    });
    rep.conditions.push(Condition {
        name: "vanishing".into(),
        holds: all_vanish,
        margin: 0.0,
        required: true,
        detail: "every Ψ_j tends to 0 at ζ0".into(),
    });

    // boundary growth: for each k some member is ≥ k on the boundary away from ζ0
    let bs = region.sample_boundary(opts.boundary_samples, opts.seed ^ 0x5EED)?;
    let mut growth_ok = true;
    let mut growth = Vec::new();
    for k in 1..=opts.k_max {
        let far: Vec<&SpaceTimePoint> = bs
            .iter()
            .map(|b| &b.point)
            .filter(|p| p.distance(zeta0) >= 1.0 / k as f64)
            .collect();
        let witness = members.iter().find(|(_, f)| {
            far.iter().all(|p| f.value(p).is_ok_and(|v| v >= k as f64))
        });
        match witness {
            Some((j, _)) => {
                rep.witnesses.insert(format!("boundary/k={k}"), *j);
                growth.push(format!("k={k}: j={j}"));
            }
            None => {
                growth_ok = false;
                growth.push(format!("k={k}: none"));
            }
        }
    }
    rep.conditions.push(Condition {
        name: "boundary-growth".into(),
        holds: growth_ok,
        margin: 0.0,
        required: true,
        detail: growth.join(", "),
    });

    if opts.strong {
        let d: Vec<f64> = points.iter().map(|p| family.distance(p, diam)).collect();
        let vals: Vec<Vec<f64>> = members
            .iter()
            .map(|(_, f)| points.iter().map(|p| f.value(p)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let mut strong_ok = true;
        let mut strong = Vec::new();
        for k in 1..=opts.k_max {
            let kf = k as f64;
            let w = members
                .iter()
                .zip(&vals)
                .find(|(_, v)| v.iter().zip(&d).all(|(a, b)| *a >= kf * b * (1.0 - 1e-12) - opts.tol));
            match w {
                Some(((j, _), _)) => {
                    rep.witnesses.insert(format!("strong/k={k}"), *j);
                    strong.push(format!("k={k}: j={j}"));
                }
                None => {
                    strong_ok = false;
                    strong.push(format!("k={k}: none"));
                }
            }
        }
        rep.conditions.push(Condition {
            name: "strong".into(),
            holds: strong_ok,
            margin: 0.0,
            required: true,
            detail: format!("Ψ_j ≥ k·d witnesses: {}", strong.join(", ")),
        });

        let mut cubic_margin = f64::INFINITY;
        for ((j, _), v) in members.iter().zip(&vals) {
            let j3 = (*j as f64).powi(3);
            for (a, b) in v.iter().zip(&d) {
                cubic_margin = cubic_margin.min(a - j3 * b);
            }
        }
        rep.conditions.push(Condition {
            name: "cubic-growth".into(),
            holds: cubic_margin >= -opts.tol,
            margin: finite_or(cubic_margin, 0.0),
            required: false,
            detail: "min of Ψ_j - j³·d over members and samples".into(),
        });
    }

    rep.min_residual = finite_or(rep.min_residual, 0.0);
    rep.max_residual = finite_or(rep.max_residual, 0.0);
    rep.settle();
    Ok(rep)
}

/// `B(z, λ)` with `u_t - Δ∞ᴺv = e^{kz}·B / (|t|·|log|t||^{1+α})` for the irregularity
/// function, where `z = |x|²/(4|t|)` and `λ = log|log|t||`.
pub fn irregularity_bracket(k: f64, alpha: f64, z: f64, lam: f64) -> f64 {
    -z * (k - k * k) + (1.0 + alpha) * (-lam).exp() + 0.5 * k - (-k * z + alpha * lam - 2.0 * lam.ln()).exp()
}

/// `z` on the curved boundary of the level-set subdomain `v = c`.
pub fn irregularity_zmax(k: f64, alpha: f64, c: f64, lam: f64) -> f64 {
    (alpha + 1.0) / k * lam + (1.0 / lam - c).ln() / k
}

/// Subsolution certificate for the irregularity function on its level-set subdomain,
/// in the coordinates `z = |x|²/(4|t|)`, `λ = log|log|t||`. The times where the
/// smallness premise holds are far below `f64` range, so `λ` is sampled directly on
/// `[λ₀, 64λ₀]` (log-uniform) and `z` uniformly on `[0, z_max(λ)]`; every eighth sample
/// sits on the axis `z = 0`. Also checks `z_max(λ) ≤ (factor/4)·λ`, i.e. that the
/// subdomain lies inside the Petrovsky region with that factor.
pub fn certify_irregularity_scaled(
    k: f64,
    alpha: f64,
    level: f64,
    factor: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    if samples == 0 {
        return Err(invalid("samples", "must be ≥ 1"));
    }
    if !(level < 0.0) {
        return Err(invalid("level", "need c < 0"));
    }
    if !(factor > 0.0) {
        return Err(invalid("factor", "must be > 0"));
    }
    let form = BarrierForm::irregularity_function(k, alpha)?;
    let lam0 = irregularity_premise_lambda(k, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (lam0.ln(), (64.0 * lam0).ln());
    let mut incl = f64::INFINITY;
    let samples: Vec<SampleResidual> = (0..samples)
        .map(|i| {
            let lam = (a + (b - a) * rng.random::<f64>()).exp();
            let zmax = irregularity_zmax(k, alpha, level, lam);
            incl = incl.min(0.25 * factor * lam - zmax);
            let (z, rule) = if i % 8 == 0 {
                (0.0, ResidualRule::EigenMax)
            } else {
                (zmax * rng.random::<f64>(), ResidualRule::Gradient)
            };
            SampleResidual {
                point: SpaceTimePoint::new(vec![z], lam),
                residual: irregularity_bracket(k, alpha, z, lam),
                rule,
            }
        })
        .collect();
    let violations: Vec<SampleResidual> = samples.iter().filter(|s| !(s.residual <= tol)).cloned().collect();
    let mut params = form.params();
    params.insert("level".into(), level);
    params.insert("factor".into(), factor);
    params.insert("lambda0".into(), lam0);
    let mut rep = CertificateReport {
        form: form.to_string(),
        params,
        side: Side::Sub,
        equation: Equation::Normalized,
        tol,
        min_residual: samples.iter().map(|s| s.residual).fold(f64::INFINITY, f64::min),
        max_residual: samples.iter().map(|s| s.residual).fold(f64::NEG_INFINITY, f64::max),
        samples,
        verdict: Verdict::Inconclusive,
        violations,
        conditions: vec![
            Condition {
                name: "premise".into(),
                holds: lam0.is_finite(),
                margin: lam0,
                required: true,
                detail: format!(
                    "k·e^{{1/(1-k)}} ≤ |log|t||^α/log²|log|t|| for log|log|t|| ≥ {}",
                    fmt_short(lam0)
                ),
            },
            Condition {
                name: "inclusion".into(),
                holds: incl >= 0.0,
                margin: incl,
                required: true,
                detail: format!("min of (factor/4)·λ - z_max(λ), factor = {}", fmt_short(factor)),
            },
        ],
        witnesses: BTreeMap::new(),
        notes: vec![
            "sample points are (x = [z], t = λ) with z = |x|²/(4|t|), λ = log|log|t||".into(),
            "residual column holds B(z, λ); the true residual is e^{kz}·B/(|t|·|log|t||^{1+α})".into(),
        ],
    };
    rep.settle();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpatialDomain;

    fn pt(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x.to_vec(), t)
    }

    #[test]
    fn petrovsky_barrier_certified_on_factor_four() {
        let region = Region::petrovsky(1, 4.0, 0.1);
        let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
        let rep = certify(&f, &region, Side::Super, 300, 7, 1e-9).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{}", rep.min_residual);
        assert!(rep.min_residual > 0.0);
    }

    #[test]
    fn petrovsky_barrier_check_holds() {
        let region = Region::petrovsky(1, 4.0, 0.1);
        let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
        let rep = check_barrier(&f, &region, &pt(&[0.0], 0.0), 200, 3).unwrap();
        for c in &rep.conditions {
            assert!(c.holds, "{c:?}");
        }
        assert_eq!(rep.verdict, Verdict::Certified);
    }

    #[test]
    fn bottom_barrier_check_holds() {
        let region = Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 1.0);
        let f = BarrierForm::bottom_barrier([0.4], 0.0);
        let rep = check_barrier(&f, &region, &pt(&[0.4], 0.0), 200, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{:?}", rep.conditions);
    }

    #[test]
    fn quadratic_probe_is_not_a_supersolution() {
        let region = Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 1.0);
        let f = BarrierForm::quadratic_probe([0.0], 0.5, 2.0).unwrap();
        let rep = check_barrier(&f, &region, &pt(&[0.0], 0.5), 100, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        assert!(!rep.condition("supersolution").unwrap().holds);
        assert!(!rep.violations.is_empty());
    }

    #[test]
    fn check_rejects_interior_point() {
        let region = Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 1.0);
        let f = BarrierForm::bottom_barrier([0.4], 0.0);
        let err = check_barrier(&f, &region, &pt(&[0.5], 0.5), 10, 1).unwrap_err();
        assert!(matches!(err, Error::NotOnBoundary { .. }));
    }

    #[test]
    fn irregularity_refused_without_premise() {
        let region = Region::level_set_subdomain(1, 0.9, 0.05, -1.0, -0.01);
        let f = BarrierForm::irregularity_function(0.9, 0.05).unwrap();
        let err = certify(&f, &region, Side::Sub, 10, 1, 1e-9).unwrap_err();
        assert!(matches!(err, Error::OutsideValidity { .. }), "{err}");
    }

    #[test]
    fn bracket_matches_analytic_residual() {
        let (k, alpha) = (0.9, 0.05);
        let f = BarrierForm::irregularity_function(k, alpha).unwrap();
        for (x, t) in [(0.05, -0.01), (0.002, -1e-4), (0.3, -0.2)] {
            let p = pt(&[x], t);
            let (r, _) = f.residual(&p, Equation::Normalized).unwrap().for_side(Side::Sub);
            let s: f64 = -t;
            let l = -s.ln();
            let z = x * x / (4.0 * s);
            let b = irregularity_bracket(k, alpha, z, l.ln());
            let scaled = (k * z).exp() * b / (s * l.powf(1.0 + alpha));
            assert!((r - scaled).abs() <= 1e-9 * r.abs().max(1.0), "{r} vs {scaled}");
        }
    }

    #[test]
    fn scaled_irregularity_certified() {
        let rep = certify_irregularity_scaled(0.9, 0.05, -1.0, 8.0, 500, 11, 1e-9).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{:?}", rep.conditions);
        assert!(rep.max_residual < 0.0);
        // factor 4 is too tight for (α+1)/k > 1
        let tight = certify_irregularity_scaled(0.9, 0.05, -1.0, 4.0, 100, 11, 1e-9).unwrap();
        assert!(!tight.condition("inclusion").unwrap().holds);
    }

    #[test]
    fn report_json_round_trip() {
        let region = Region::petrovsky(1, 4.0, 0.1);
        let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
        let rep = check_barrier(&f, &region, &pt(&[0.0], 0.0), 20, 3).unwrap();
        let s = rep.to_json();
        let back: CertificateReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert!(s.contains("\"minResidual\""));
    }

    #[test]
    fn wall_barrier_check_holds() {
        use crate::lattice::BoundaryData;
        use crate::operator::{stationary_solve, SchemeConfig};
        use std::sync::Arc;
        let eps: f64 = 0.02;
        let cfg = SchemeConfig::dpp(eps).with_fix_tol(0.1 * eps.powi(4));
        let phi = BoundaryData::new(|x, _| x[0].abs());
        let nu = stationary_solve(&SpatialDomain::interval(0.0, 1.0), -1.0, &phi, &cfg, eps, 1, 2).unwrap();
        let f = BarrierForm::wall_barrier(Arc::new(nu), [0.0], 0.5).unwrap();
        let region = Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 0.5);
        let rep = check_barrier(&f, &region, &pt(&[0.0], 0.5), 200, 2).unwrap();
        assert_eq!(rep.verdict, Verdict::Certified, "{:?}", rep.conditions);
        assert!(rep.samples.iter().all(|s| s.rule == ResidualRule::Discrete));
    }

    #[test]
    fn family_witnesses() {
        let region = Region::cylinder(SpatialDomain::interval(0.0, 1.0), 0.0, 1.0);
        let spec = AppendixFamilySpec::defaults([0.0], 0.5);
        let rep = check_barrier_family(
            &spec,
            &region,
            &pt(&[0.0], 0.5),
            &FamilyOptions {
                samples: 200,
                ..FamilyOptions::default()
            },
        )
        .unwrap();
        assert!(rep.condition("member-subsolution").unwrap().holds);
        assert!(rep.condition("strong").unwrap().holds);
        assert_eq!(rep.witnesses.get("strong/k=1"), Some(&1));
    }
}
