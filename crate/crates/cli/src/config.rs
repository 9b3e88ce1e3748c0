//! Experiment configuration files.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use infheat::barriers::{AppendixFamilySpec, BarrierForm, Equation, FamilyOptions, Side};
use infheat::lattice::BoundaryData;
use infheat::operator::{stationary_solve, SchemeConfig};
use infheat::regularity::{default_schedule, Contact, RegularityVerdict, Resolution, Thresholds};
use infheat::{Region, SpaceTimePoint, SpatialDomain, Verdict};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    March,
    Stationary,
    Certify,
    CheckBarrier,
    BarrierFamily,
    Classify,
    ExteriorSphere,
    PetrovskySweep,
    HeatBall,
    FutureBlindness,
}

/// One experiment. Fields not used by `experiment` are rejected by [`Config::validate`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Config {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub region: Option<Region>,
    /// Spatial domain of a stationary solve.
    pub domain: Option<SpatialDomain>,
    pub form: Option<FormSpec>,
    pub data: Option<DataSpec>,
    pub perturbation: Option<DataSpec>,
    pub rhs: Option<f64>,
    pub scheme: Option<SchemeSpec>,
    pub schedule: Option<Vec<Resolution>>,
    pub thresholds: Option<Thresholds>,
    /// Check the thresholds on the anchor points before classifying.
    #[serde(default)]
    pub calibrate: bool,
    pub zeta0: Option<SpaceTimePoint>,
    pub probe_eps: Option<f64>,
    pub side: Option<Side>,
    pub equation: Option<Equation>,
    pub samples: Option<usize>,
    pub boundary_samples: Option<usize>,
    pub tol: Option<f64>,
    pub exclusion: Option<f64>,
    pub family: Option<FamilySpec>,
    pub contact: Option<Contact>,
    pub r0: Option<f64>,
    pub factors: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub level: Option<f64>,
    pub oracle: Option<Oracle>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Grid and time step; `eps` defaults to `K·h` and `dt` to `ε²/2`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SchemeSpec {
    pub h: f64,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "two")]
    pub dirs: usize,
    pub dt: Option<f64>,
    pub eps: Option<f64>,
    /// March in mean-value form.
    #[serde(default)]
    pub dpp: bool,
    pub fix_tol: Option<f64>,
    pub max_iter: Option<usize>,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

impl SchemeSpec {
    pub fn scheme(&self) -> Result<SchemeConfig, CliError> {
        let eps = self.k as f64 * self.h;
        if let Some(e) = self.eps {
            if (e - eps).abs() > 1e-12 * eps {
                return Err(CliError::Config(format!("scheme.eps = {e} must equal K·h = {eps}")));
            }
        }
        let mut cfg = SchemeConfig::new(eps, self.dt.unwrap_or(0.5 * eps * eps))?;
        if let Some(t) = self.fix_tol {
            cfg = cfg.with_fix_tol(t);
        }
        if let Some(m) = self.max_iter {
            cfg = cfg.with_max_iter(m);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolution(&self) -> Resolution {
        Resolution {
            h: self.h,
            k: self.k,
            dirs: self.dirs,
            dt: self.dt,
        }
    }
}

/// Boundary data literal.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum DataSpec {
    Constant { value: f64 },
    /// `|x - x0|² + eps(t - t0)²`
    Probe { x0: Vec<f64>, t0: f64, eps: f64 },
    /// `|x - x0|`
    Distance { x0: Vec<f64> },
    /// `Π sin x_i`
    Sine,
    /// `a·x + b t + c`
    Linear {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
}

impl DataSpec {
    pub fn build(&self) -> BoundaryData {
        match self.clone() {
            DataSpec::Constant { value } => BoundaryData::constant(value),
            DataSpec::Probe { x0, t0, eps } => BoundaryData::new(move |x, t| {
                let r2: f64 = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 + eps * (t - t0) * (t - t0)
            }),
            DataSpec::Distance { x0 } => BoundaryData::new(move |x, _| {
                x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }),
            DataSpec::Sine => BoundaryData::new(|x, _| x.iter().map(|v| v.sin()).product()),
            DataSpec::Linear { a, b, c } => {
                BoundaryData::new(move |x, t| x.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>() + b * t + c)
            }
        }
    }

    fn point_dim(&self) -> Option<usize> {
        match self {
            DataSpec::Probe { x0, .. } | DataSpec::Distance { x0 } => Some(x0.len()),
            DataSpec::Linear { a, .. } => Some(a.len()),
            _ => None,
        }
    }
}

/// Barrier form literal; `kind` is the catalog name.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum FormSpec {
    QuadraticProbe {
        x0: Vec<f64>,
        t0: f64,
        eps: f64,
    },
    BottomBarrier {
        x0: Vec<f64>,
        #[serde(default)]
        t_bottom: f64,
    },
    ExteriorSphere {
        center: Vec<f64>,
        #[serde(default)]
        t_center: f64,
        r0: f64,
        a: f64,
    },
    PetrovskyBarrier {
        #[serde(default = "quarter")]
        delta: f64,
    },
    IrregularityFunction {
        k: f64,
        alpha: f64,
    },
    FundamentalW {
        x0: Vec<f64>,
        #[serde(default)]
        t0: f64,
    },
    /// `ν(x) + (t - t0)²` with `ν` solved on `domain` for `Δ∞ν = -1`, `ν = |x - x0|` outside.
    WallBarrier {
        x0: Vec<f64>,
        t0: f64,
        domain: SpatialDomain,
        h: f64,
        #[serde(default = "one")]
        k: usize,
        #[serde(default = "two")]
        dirs: usize,
        fix_tol: Option<f64>,
    },
    AppendixFamily {
        j: u32,
        #[serde(default = "unit")]
        alpha: f64,
        /// Defaults to `1/(2·diam)` of the region.
        beta: Option<f64>,
        #[serde(default = "three")]
        m: f64,
        x0: Vec<f64>,
        t0: f64,
    },
    TopShift {
        base: Box<FormSpec>,
        eps: f64,
        top: f64,
    },
    Negated {
        base: Box<FormSpec>,
    },
}

fn quarter() -> f64 {
    0.25
}

fn unit() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl FormSpec {
    pub fn build(&self, region: Option<&Region>) -> Result<BarrierForm, CliError> {
        Ok(match self {
            FormSpec::QuadraticProbe { x0, t0, eps } => BarrierForm::quadratic_probe(x0.clone(), *t0, *eps)?,
            FormSpec::BottomBarrier { x0, t_bottom } => BarrierForm::bottom_barrier(x0.clone(), *t_bottom),
            FormSpec::ExteriorSphere { center, t_center, r0, a } => {
                BarrierForm::exterior_sphere(center.clone(), *t_center, *r0, *a)?
            }
            FormSpec::PetrovskyBarrier { delta } => BarrierForm::petrovsky_barrier(*delta)?,
            FormSpec::IrregularityFunction { k, alpha } => BarrierForm::irregularity_function(*k, *alpha)?,
            FormSpec::FundamentalW { x0, t0 } => BarrierForm::fundamental_w(x0.clone(), *t0),
            FormSpec::WallBarrier {
                x0,
                t0,
                domain,
                h,
                k,
                dirs,
                fix_tol,
            } => {
                let eps = *k as f64 * h;
                let cfg = SchemeConfig::dpp(eps).with_fix_tol(fix_tol.unwrap_or(0.1 * eps.powi(4)));
                let phi = DataSpec::Distance { x0: x0.clone() }.build();
                let nu = stationary_solve(domain, -1.0, &phi, &cfg, *h, *k, *dirs)?;
                BarrierForm::wall_barrier(Arc::new(nu), x0.clone(), *t0)?
            }
            FormSpec::AppendixFamily { j, alpha, beta, m, x0, t0 } => {
                let beta = match (beta, region) {
                    (Some(b), _) => *b,
                    (None, Some(r)) => 0.5 / r.diameter()?,
                    (None, None) => return Err(CliError::Config("AppendixFamily needs beta or a region".into())),
                };
                BarrierForm::appendix_family(*j, *alpha, beta, *m, x0.clone(), *t0)?
            }
            FormSpec::TopShift { base, eps, top } => base.build(region)?.top_shift(*eps, *top)?,
            FormSpec::Negated { base } => base.build(region)?.negated(),
        })
    }
}

/// The family `Ψ_j` for `barrier-family`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct FamilySpec {
    pub x0: Vec<f64>,
    pub t0: f64,
    #[serde(default = "unit")]
    pub alpha: f64,
    pub beta: Option<f64>,
    #[serde(default = "three")]
    pub m: f64,
    pub js: Option<Vec<u32>>,
    #[serde(default = "yes")]
    pub strong: bool,
    pub k_max: Option<u32>,
}

fn yes() -> bool {
    true
}

impl FamilySpec {
    pub fn spec(&self) -> AppendixFamilySpec {
        let mut s = AppendixFamilySpec::defaults(self.x0.clone(), self.t0);
        s.alpha = self.alpha;
        s.beta = self.beta;
        s.m = self.m;
        if let Some(js) = &self.js {
            s.js = js.clone();
        }
        s
    }

    pub fn options(&self, samples: Option<usize>, seed: u64, tol: Option<f64>, boundary: Option<usize>) -> FamilyOptions {
        let d = FamilyOptions::default();
        FamilyOptions {
            strong: self.strong,
            k_max: self.k_max.unwrap_or(d.k_max),
            samples: samples.unwrap_or(d.samples),
            seed,
            tol: tol.unwrap_or(d.tol),
            boundary_samples: boundary.unwrap_or(d.boundary_samples),
        }
    }
}

/// Exact solution compared against a march or stationary solve.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Oracle {
    /// `e^{-t} sin x` in one space dimension.
    HeatSine,
    Constant { value: f64 },
    /// Quadratic through the interval end values with `ν'' = rhs`.
    #[serde(rename = "quadratic-1d")]
    Quadratic1d,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Expect {
    pub verdict: Option<Verdict>,
    pub regularity: Option<RegularityVerdict>,
    pub verdicts: Option<Vec<RegularityVerdict>>,
    pub max_error: Option<f64>,
    pub blind: Option<bool>,
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputSpec {
    #[serde(default = "dot")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default = "yes")]
    pub curves: bool,
}

fn dot() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: dot(),
            fields: true,
            curves: true,
        }
    }
}

fn need<'a, T>(v: &'a Option<T>, key: &str, kind: ExperimentKind) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::Config(format!("`{key}` is required for experiment {kind:?}")))
}

impl Config {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn region(&self) -> Result<&Region, CliError> {
        need(&self.region, "region", self.experiment)
    }

    pub fn zeta0(&self) -> Result<&SpaceTimePoint, CliError> {
        need(&self.zeta0, "zeta0", self.experiment)
    }

    pub fn scheme_spec(&self) -> Result<&SchemeSpec, CliError> {
        need(&self.scheme, "scheme", self.experiment)
    }

    pub fn form(&self) -> Result<&FormSpec, CliError> {
        need(&self.form, "form", self.experiment)
    }

    pub fn data(&self) -> Result<&DataSpec, CliError> {
        need(&self.data, "data", self.experiment)
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds.unwrap_or_default()
    }

    pub fn schedule(&self, dim: usize) -> Vec<Resolution> {
        self.schedule.clone().unwrap_or_else(|| default_schedule(dim))
    }

    /// Re-checks every numeric constraint the experiment will hit.
    pub fn validate(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        let kind = self.experiment;
        if let Some(r) = &self.region {
            r.validate()?;
        }
        if let Some(s) = &self.scheme {
            s.scheme()?;
        }
        if let Some(th) = &self.thresholds {
            th.validate()?;
        }
        if let Some(sch) = &self.schedule {
            for r in sch {
                SchemeConfig::new(r.eps(), r.dt())?;
            }
        }
        if let (Some(r), Some(d)) = (&self.region, &self.data) {
            if let Some(n) = d.point_dim() {
                if n != r.dim() {
                    return Err(infheat::Error::DimensionMismatch {
                        expected: r.dim(),
                        got: n,
                    }
                    .into());
                }
            }
        }
        match kind {
            March => {
                self.region()?;
                self.data()?;
                self.scheme_spec()?;
            }
            Stationary => {
                need(&self.domain, "domain", kind)?.validate()?;
                need(&self.rhs, "rhs", kind)?;
                self.data()?;
                self.scheme_spec()?;
            }
            Certify => {
                self.form()?.build(Some(self.region()?))?;
            }
            CheckBarrier => {
                self.form()?.build(Some(self.region()?))?;
                self.zeta0()?;
            }
            BarrierFamily => {
                self.region()?;
                self.zeta0()?;
                need(&self.family, "family", kind)?;
            }
            Classify => {
                let r = self.region()?;
                self.zeta0()?;
                if let Some(e) = self.probe_eps {
                    let diam = r.diameter()?;
                    if !(e > 0.0 && e * diam < 1.0) {
                        return Err(CliError::Config(format!(
                            "probeEps = {e}: ε·diam(Ω) must be < 1 (diam = {diam})"
                        )));
                    }
                }
            }
            ExteriorSphere => {
                need(&self.contact, "contact", kind)?;
                if !(*need(&self.r0, "r0", kind)? > 0.0) {
                    return Err(CliError::Config("r0 must be > 0".into()));
                }
            }
            PetrovskySweep => {
                let f = need(&self.factors, "factors", kind)?;
                if f.is_empty() || f.iter().any(|a| !(*a > 0.0)) {
                    return Err(CliError::Config("factors must be a nonempty list of A > 0".into()));
                }
                if let Some(c) = self.c {
                    if !(c > 0.0 && c < 1.0) {
                        return Err(CliError::Config("c must lie in (0, 1)".into()));
                    }
                }
            }
            HeatBall => {
                if let Some(l) = self.level {
                    if !(l > 0.0) {
                        return Err(CliError::Config("level must be > 0".into()));
                    }
                }
            }
            FutureBlindness => {
                self.region()?;
                self.zeta0()?;
                self.data()?;
                need(&self.perturbation, "perturbation", kind)?;
                self.scheme_spec()?;
            }
        }
        Ok(())
    }
}
