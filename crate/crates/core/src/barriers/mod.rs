//! Closed-form barriers and probes with hand-coded derivatives, and viscosity
//! certificate checks built on top of them.

mod certify;

pub use certify::{
    certify, certify_irregularity_scaled, certify_points, certify_with, check_barrier,
    check_barrier_family, check_barrier_with, irregularity_bracket, irregularity_zmax, AppendixFamilySpec, BarrierCheck, CertificateReport,
    Condition, FamilyOptions, SampleResidual, Verdict,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{fmt_short, invalid, Error, Result};
use crate::geometry::{level_set_radius2, SpaceTimePoint};
use crate::operator::StationaryField;

/// Which inequality a certificate is checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `u_t - F(u) ≥ 0`
    Super,
    /// `u_t - F(u) ≤ 0`
    Sub,
}

/// Spatial operator in the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// `⟨D²u ν, ν⟩`, `ν = Du/|Du|`
    #[default]
    Normalized,
    /// `⟨D²u Du, Du⟩`
    NonNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualRule {
    Gradient,
    EigenMin,
    EigenMax,
    /// Discrete operator on a numeric spatial part.
    Discrete,
}

/// Pointwise residual `u_t - F(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Residual {
    Gradient(f64),
    /// `Du = 0`: `u_t - λ(D²u)` and `u_t - Λ(D²u)`.
    Degenerate { eigen_min: f64, eigen_max: f64 },
    Discrete(f64),
}

impl Residual {
    /// The value relevant for `side`, with the rule that produced it.
    pub fn for_side(self, side: Side) -> (f64, ResidualRule) {
        match (self, side) {
            (Residual::Gradient(v), _) => (v, ResidualRule::Gradient),
            (Residual::Discrete(v), _) => (v, ResidualRule::Discrete),
            (Residual::Degenerate { eigen_min, .. }, Side::Super) => (eigen_min, ResidualRule::EigenMin),
            (Residual::Degenerate { eigen_max, .. }, Side::Sub) => (eigen_max, ResidualRule::EigenMax),
        }
    }

    fn negate(self) -> Residual {
        match self {
            Residual::Gradient(v) => Residual::Gradient(-v),
            Residual::Discrete(v) => Residual::Discrete(-v),
            // λ(-H) = -Λ(H)
            Residual::Degenerate {
                eigen_min,
                eigen_max,
            } => Residual::Degenerate {
                eigen_min: -eigen_max,
                eigen_max: -eigen_min,
            },
        }
    }
}

/// Spatial Hessian.
#[derive(Debug, Clone, PartialEq)]
pub enum Hessian {
    /// `c1·Id + c2·y⊗y`, `y = x - x₀`.
    Radial { c1: f64, c2: f64, y: Vec<f64> },
    Dense(Vec<Vec<f64>>),
}

impl Hessian {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Radial { y, .. } => y.len(),
            Hessian::Dense(m) => m.len(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        match self {
            Hessian::Radial { c1, c2, y } => (0..y.len())
                .map(|i| {
                    (0..y.len())
                        .map(|j| c2 * y[i] * y[j] + if i == j { *c1 } else { 0.0 })
                        .collect()
                })
                .collect(),
            Hessian::Dense(m) => m.clone(),
        }
    }

    /// `vᵀ H v`
    pub fn quad(&self, v: &[f64]) -> f64 {
        match self {
            Hessian::Radial { c1, c2, y } => {
                let vv: f64 = v.iter().map(|a| a * a).sum();
                let yv: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
                c1 * vv + c2 * yv * yv
            }
            Hessian::Dense(m) => m
                .iter()
                .zip(v)
                .map(|(row, vi)| vi * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                .sum(),
        }
    }

    /// `(λ, Λ)`, the smallest and largest eigenvalue.
    pub fn eigen_extremes(&self) -> (f64, f64) {
        match self {
            Hessian::Radial { c1, c2, y } => {
                let r2: f64 = y.iter().map(|a| a * a).sum();
                let along = c1 + c2 * r2;
                if y.len() == 1 {
                    (along, along)
                } else {
                    (c1.min(along), c1.max(along))
                }
            }
            Hessian::Dense(m) => dense_eigen_extremes(m),
        }
    }

    fn scaled(self, s: f64) -> Hessian {
        match self {
            Hessian::Radial { c1, c2, y } => Hessian::Radial {
                c1: s * c1,
                c2: s * c2,
                y,
            },
            Hessian::Dense(m) => {
                Hessian::Dense(m.into_iter().map(|r| r.into_iter().map(|v| s * v).collect()).collect())
            }
        }
    }
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn dense_eigen_extremes(m: &[Vec<f64>]) -> (f64, f64) {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Value and first/second derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub ut: f64,
    pub grad: Vec<f64>,
    pub hess: Hessian,
}

/// One entry of the closed-form catalog.
#[derive(Debug, Clone)]
pub enum BarrierForm {
    /// `|x - x₀|² + ε(t - t₀)²`
    QuadraticProbe { x0: Vec<f64>, t0: f64, eps: f64 },
    /// `|x - x₀|² + 2(t - t_bottom)`
    BottomBarrier { x0: Vec<f64>, t_bottom: f64 },
    /// `e^{-aR₀²} - e^{-aR²}`, `R² = |x - x'|² + (t - t')²`
    ExteriorSphere {
        center: Vec<f64>,
        t_center: f64,
        r0: f64,
        a: f64,
    },
    /// `f(t)e^{-|x|²/4t} + g(t)`, `f = -½|log|t||^{-(δ+1)}`, `g = |log|t||^{-δ}`
    PetrovskyBarrier { delta: f64 },
    /// `f(t)e^{-k|x|²/4t} + g(t)`, `f = -|log|t||^{-(1+α)}`, `g = 1/log|log|t||`
    IrregularityFunction { k: f64, alpha: f64 },
    /// `s^{-1/2} e^{-|x - x₀|²/4s}`, `s = t - t₀ > 0`
    FundamentalW { x0: Vec<f64>, t0: f64 },
    /// `ν(x) + (t₀ - t)` with `ν` from the stationary solver.
    WallBarrier {
        nu: Arc<StationaryField>,
        x0: Vec<f64>,
        t0: f64,
    },
    /// `jα|x - x₀|^{4/3} + βjᵐ(t - t₀)²`
    AppendixFamily {
        j: u32,
        alpha: f64,
        beta: f64,
        m: f64,
        x0: Vec<f64>,
        t0: f64,
    },
    /// `base + ε/(T - t)`
    TopShift {
        base: Box<BarrierForm>,
        eps: f64,
        top: f64,
    },
    Negated(Box<BarrierForm>),
}

fn sub(x: &[f64], x0: &[f64]) -> Vec<f64> {
    x.iter().zip(x0).map(|(a, b)| a - b).collect()
}

fn sq(y: &[f64]) -> f64 {
    y.iter().map(|a| a * a).sum()
}

fn scale(y: &[f64], s: f64) -> Vec<f64> {
    y.iter().map(|a| s * a).collect()
}

impl BarrierForm {
    pub fn quadratic_probe(x0: impl Into<Vec<f64>>, t0: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid("eps", "must be > 0"));
        }
        Ok(BarrierForm::QuadraticProbe {
            x0: x0.into(),
            t0,
            eps,
        })
    }

    pub fn bottom_barrier(x0: impl Into<Vec<f64>>, t_bottom: f64) -> Self {
        BarrierForm::BottomBarrier {
            x0: x0.into(),
            t_bottom,
        }
    }

    pub fn exterior_sphere(center: impl Into<Vec<f64>>, t_center: f64, r0: f64, a: f64) -> Result<Self> {
        let f = BarrierForm::ExteriorSphere {
            center: center.into(),
            t_center,
            r0,
            a,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn petrovsky_barrier(delta: f64) -> Result<Self> {
        let f = BarrierForm::PetrovskyBarrier { delta };
        f.validate()?;
        Ok(f)
    }

    pub fn irregularity_function(k: f64, alpha: f64) -> Result<Self> {
        let f = BarrierForm::IrregularityFunction { k, alpha };
        f.validate()?;
        Ok(f)
    }

    pub fn fundamental_w(x0: impl Into<Vec<f64>>, t0: f64) -> Self {
        BarrierForm::FundamentalW { x0: x0.into(), t0 }
    }

    pub fn wall_barrier(nu: Arc<StationaryField>, x0: impl Into<Vec<f64>>, t0: f64) -> Result<Self> {
        let x0 = x0.into();
        if nu.grid().dim() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: nu.grid().dim(),
                got: x0.len(),
            });
        }
        Ok(BarrierForm::WallBarrier { nu, x0, t0 })
    }

    pub fn appendix_family(
        j: u32,
        alpha: f64,
        beta: f64,
        m: f64,
        x0: impl Into<Vec<f64>>,
        t0: f64,
    ) -> Result<Self> {
        let f = BarrierForm::AppendixFamily {
            j,
            alpha,
            beta,
            m,
            x0: x0.into(),
            t0,
        };
        f.validate()?;
        Ok(f)
    }

    /// Member `j` with `α = 1`, `m = 3`, `β = 1/(2·diam)`.
    pub fn appendix_default(j: u32, x0: impl Into<Vec<f64>>, t0: f64, diam: f64) -> Result<Self> {
        if !(diam > 0.0) {
            return Err(invalid("diam", "must be > 0"));
        }
        Self::appendix_family(j, 1.0, 0.5 / diam, 3.0, x0, t0)
    }

    pub fn top_shift(self, eps: f64, top: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps", "must be > 0"));
        }
        Ok(BarrierForm::TopShift {
            base: Box::new(self),
            eps,
            top,
        })
    }

    pub fn negated(self) -> Self {
        match self {
            BarrierForm::Negated(b) => *b,
            f => BarrierForm::Negated(Box::new(f)),
        }
    }

    /// Parameter constraints of the catalog.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be > 0"))
            }
        };
        match self {
            BarrierForm::QuadraticProbe { eps, .. } => pos("eps", *eps),
            BarrierForm::BottomBarrier { .. } | BarrierForm::FundamentalW { .. } => Ok(()),
            BarrierForm::WallBarrier { .. } => Ok(()),
            BarrierForm::ExteriorSphere { r0, a, .. } => {
                pos("r0", *r0)?;
                pos("a", *a)
            }
            BarrierForm::PetrovskyBarrier { delta } => {
                if *delta > 0.0 && *delta <= 0.25 {
                    Ok(())
                } else {
                    Err(invalid("delta", "need 0 < δ ≤ 1/4"))
                }
            }
            BarrierForm::IrregularityFunction { k, alpha } => {
                if !(*k > 0.5 && *k < 1.0) {
                    return Err(invalid("k", "need 1/2 < k < 1"));
                }
                pos("alpha", *alpha)
            }
            BarrierForm::AppendixFamily {
                j, alpha, beta, m, ..
            } => {
                if *j == 0 {
                    return Err(invalid("j", "must be ≥ 1"));
                }
                pos("alpha", *alpha)?;
                pos("beta", *beta)?;
                pos("m", *m)
            }
            BarrierForm::TopShift { base, eps, .. } => {
                pos("eps", *eps)?;
                base.validate()
            }
            BarrierForm::Negated(b) => b.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BarrierForm::QuadraticProbe { .. } => "QuadraticProbe",
            BarrierForm::BottomBarrier { .. } => "BottomBarrier",
            BarrierForm::ExteriorSphere { .. } => "ExteriorSphere",
            BarrierForm::PetrovskyBarrier { .. } => "PetrovskyBarrier",
            BarrierForm::IrregularityFunction { .. } => "IrregularityFunction",
            BarrierForm::FundamentalW { .. } => "FundamentalW",
            BarrierForm::WallBarrier { .. } => "WallBarrier",
            BarrierForm::AppendixFamily { .. } => "AppendixFamily",
            BarrierForm::TopShift { .. } => "TopShift",
            BarrierForm::Negated(_) => "Negated",
        }
    }

    /// Flat parameter map; vector entries become `name[i]`, wrapped forms prefix `base.`.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let put_vec = |out: &mut BTreeMap<String, f64>, name: &str, v: &[f64]| {
            for (i, a) in v.iter().enumerate() {
                out.insert(format!("{name}[{i}]"), *a);
            }
        };
        match self {
            BarrierForm::QuadraticProbe { x0, t0, eps } => {
                put_vec(&mut out, "x0", x0);
                out.insert("t0".into(), *t0);
                out.insert("eps".into(), *eps);
            }
            BarrierForm::BottomBarrier { x0, t_bottom } => {
                put_vec(&mut out, "x0", x0);
                out.insert("tBottom".into(), *t_bottom);
            }
            BarrierForm::ExteriorSphere {
                center,
                t_center,
                r0,
                a,
            } => {
                put_vec(&mut out, "center", center);
                out.insert("tCenter".into(), *t_center);
                out.insert("r0".into(), *r0);
                out.insert("a".into(), *a);
            }
            BarrierForm::PetrovskyBarrier { delta } => {
                out.insert("delta".into(), *delta);
            }
            BarrierForm::IrregularityFunction { k, alpha } => {
                out.insert("k".into(), *k);
                out.insert("alpha".into(), *alpha);
            }
            BarrierForm::FundamentalW { x0, t0 } => {
                put_vec(&mut out, "x0", x0);
                out.insert("t0".into(), *t0);
            }
            BarrierForm::WallBarrier { nu, x0, t0 } => {
                put_vec(&mut out, "x0", x0);
                out.insert("t0".into(), *t0);
                out.insert("h".into(), nu.grid().h());
                out.insert("eps".into(), nu.grid().eps());
            }
            BarrierForm::AppendixFamily {
                j,
                alpha,
                beta,
                m,
                x0,
                t0,
            } => {
                out.insert("j".into(), *j as f64);
                out.insert("alpha".into(), *alpha);
                out.insert("beta".into(), *beta);
                out.insert("m".into(), *m);
                put_vec(&mut out, "x0", x0);
                out.insert("t0".into(), *t0);
            }
            BarrierForm::TopShift { base, eps, top } => {
                for (k, v) in base.params() {
                    out.insert(format!("base.{k}"), v);
                }
                out.insert("eps".into(), *eps);
                out.insert("top".into(), *top);
            }
            BarrierForm::Negated(b) => {
                for (k, v) in b.params() {
                    out.insert(format!("base.{k}"), v);
                }
            }
        }
        out
    }

    fn check_dim(x0: &[f64], p: &SpaceTimePoint) -> Result<()> {
        if x0.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    fn outside(&self, p: &SpaceTimePoint, reason: impl Into<String>) -> Error {
        Error::OutsideValidity {
            form: self.to_string(),
            point: p.to_string(),
            reason: reason.into(),
        }
    }

    /// Value and derivatives at `p`; errors where the closed form is undefined.
    pub fn eval(&self, p: &SpaceTimePoint) -> Result<Derivatives> {
        if !p.is_finite() {
            return Err(self.outside(p, "non-finite coordinates"));
        }
        let d = match self {
            BarrierForm::QuadraticProbe { x0, t0, eps } => {
                Self::check_dim(x0, p)?;
                let y = sub(&p.x, x0);
                let dt = p.t - t0;
                Derivatives {
                    value: sq(&y) + eps * dt * dt,
                    ut: 2.0 * eps * dt,
                    grad: scale(&y, 2.0),
                    hess: Hessian::Radial { c1: 2.0, c2: 0.0, y },
                }
            }
            BarrierForm::BottomBarrier { x0, t_bottom } => {
                Self::check_dim(x0, p)?;
                let y = sub(&p.x, x0);
                Derivatives {
                    value: sq(&y) + 2.0 * (p.t - t_bottom),
                    ut: 2.0,
                    grad: scale(&y, 2.0),
                    hess: Hessian::Radial { c1: 2.0, c2: 0.0, y },
                }
            }
            BarrierForm::ExteriorSphere {
                center,
                t_center,
                r0,
                a,
            } => {
                Self::check_dim(center, p)?;
                let y = sub(&p.x, center);
                let dt = p.t - t_center;
                let e = (-a * (sq(&y) + dt * dt)).exp();
                Derivatives {
                    value: (-a * r0 * r0).exp() - e,
                    ut: 2.0 * a * e * dt,
                    grad: scale(&y, 2.0 * a * e),
                    hess: Hessian::Radial {
                        c1: 2.0 * a * e,
                        c2: -4.0 * a * a * e,
                        y,
                    },
                }
            }
            BarrierForm::PetrovskyBarrier { delta } => {
                if !(p.t > -1.0 && p.t < 0.0) {
                    return Err(self.outside(p, "need -1 < t < 0"));
                }
                let s = -p.t;
                let l = -s.ln();
                let r2 = sq(&p.x);
                let e = (r2 / (4.0 * s)).exp();
                if !e.is_finite() {
                    return Err(self.outside(p, "e^{-|x|²/4t} overflows"));
                }
                let f = -0.5 * l.powf(-(delta + 1.0));
                let fp = 0.5 * (delta + 1.0) * l.powf(-delta - 2.0) / s;
                let g = l.powf(-delta);
                let gp = -delta * l.powf(-delta - 1.0) / s;
                let fe = f * e;
                Derivatives {
                    value: fe + g,
                    ut: fp * e + fe * r2 / (4.0 * s * s) + gp,
                    grad: scale(&p.x, fe / (2.0 * s)),
                    hess: Hessian::Radial {
                        c1: fe / (2.0 * s),
                        c2: fe / (4.0 * s * s),
                        y: p.x.clone(),
                    },
                }
            }
            BarrierForm::IrregularityFunction { k, alpha } => {
                let lim = -(-1.0f64).exp();
                if !(p.t > lim && p.t < 0.0) {
                    return Err(self.outside(p, "need -1/e < t < 0 so that log|log|t|| > 0"));
                }
                let s = -p.t;
                let l = -s.ln();
                let lam = l.ln();
                let r2 = sq(&p.x);
                let e = (k * r2 / (4.0 * s)).exp();
                if !e.is_finite() {
                    return Err(self.outside(p, "e^{-k|x|²/4t} overflows"));
                }
                let f = -l.powf(-(1.0 + alpha));
                let fp = (1.0 + alpha) * l.powf(-(2.0 + alpha)) / s;
                let g = 1.0 / lam;
                let gp = -1.0 / (s * l * lam * lam);
                let fe = f * e;
                Derivatives {
                    value: fe + g,
                    ut: fp * e + fe * k * r2 / (4.0 * s * s) + gp,
                    grad: scale(&p.x, k * fe / (2.0 * s)),
                    hess: Hessian::Radial {
                        c1: k * fe / (2.0 * s),
                        c2: k * k * fe / (4.0 * s * s),
                        y: p.x.clone(),
                    },
                }
            }
            BarrierForm::FundamentalW { x0, t0 } => {
                Self::check_dim(x0, p)?;
                let s = p.t - t0;
                if !(s > 0.0) {
                    return Err(self.outside(p, "need t > t0"));
                }
                let y = sub(&p.x, x0);
                let r2 = sq(&y);
                let w = s.powf(-0.5) * (-r2 / (4.0 * s)).exp();
                Derivatives {
                    value: w,
                    ut: w * (-0.5 / s + r2 / (4.0 * s * s)),
                    grad: scale(&y, -w / (2.0 * s)),
                    hess: Hessian::Radial {
                        c1: -w / (2.0 * s),
                        c2: w / (4.0 * s * s),
                        y,
                    },
                }
            }
            BarrierForm::WallBarrier { nu, x0, t0 } => {
                Self::check_dim(x0, p)?;
                let Some((grad, hess)) = nu.derivatives(&p.x) else {
                    return Err(self.outside(p, "x is off the stationary grid"));
                };
                Derivatives {
                    value: nu.interpolate(&p.x) + (t0 - p.t),
                    ut: -1.0,
                    grad,
                    hess: Hessian::Dense(hess),
                }
            }
            BarrierForm::AppendixFamily {
                j,
                alpha,
                beta,
                m,
                x0,
                t0,
            } => {
                Self::check_dim(x0, p)?;
                let y = sub(&p.x, x0);
                let r2 = sq(&y);
                if !(r2 > 0.0) {
                    return Err(self.outside(p, "|x|^{4/3} has no second derivative at x = x0"));
                }
                let r = r2.sqrt();
                let jf = *j as f64;
                let a = jf * alpha;
                let jm = jf.powf(*m);
                let dt = p.t - t0;
                let c1 = 4.0 / 3.0 * a * r.powf(-2.0 / 3.0);
                Derivatives {
                    value: a * r.powf(4.0 / 3.0) + beta * jm * dt * dt,
                    ut: 2.0 * beta * jm * dt,
                    grad: scale(&y, c1),
                    hess: Hessian::Radial {
                        c1,
                        c2: -8.0 / 9.0 * a * r.powf(-8.0 / 3.0),
                        y,
                    },
                }
            }
            BarrierForm::TopShift { base, eps, top } => {
                if !(p.t < *top) {
                    return Err(self.outside(p, "need t < T"));
                }
                let mut d = base.eval(p)?;
                let gap = top - p.t;
                d.value += eps / gap;
                d.ut += eps / (gap * gap);
                d
            }
            BarrierForm::Negated(b) => {
                let d = b.eval(p)?;
                Derivatives {
                    value: -d.value,
                    ut: -d.ut,
                    grad: scale(&d.grad, -1.0),
                    hess: d.hess.scaled(-1.0),
                }
            }
        };
        Ok(d)
    }

    pub fn value(&self, p: &SpaceTimePoint) -> Result<f64> {
        match self {
            // no derivatives needed, and the interpolant is defined everywhere
            BarrierForm::WallBarrier { nu, x0, t0 } => {
                Self::check_dim(x0, p)?;
                Ok(nu.interpolate(&p.x) + (t0 - p.t))
            }
            BarrierForm::AppendixFamily {
                j,
                alpha,
                beta,
                m,
                x0,
                t0,
            } => {
                Self::check_dim(x0, p)?;
                let r2 = sq(&sub(&p.x, x0));
                let jf = *j as f64;
                Ok(jf * alpha * r2.powf(2.0 / 3.0) + beta * jf.powf(*m) * (p.t - t0).powi(2))
            }
            _ => Ok(self.eval(p)?.value),
        }
    }

    /// Whether the spatial part is a numeric field. Its residual is the discrete one at
    /// the interior grid node nearest to the point.
    pub fn is_numeric(&self) -> bool {
        match self {
            BarrierForm::WallBarrier { .. } => true,
            BarrierForm::TopShift { base, .. } => base.is_numeric(),
            BarrierForm::Negated(b) => b.is_numeric(),
            _ => false,
        }
    }

    fn discrete_residual(&self, p: &SpaceTimePoint) -> Result<f64> {
        match self {
            BarrierForm::WallBarrier { nu, x0, .. } => {
                Self::check_dim(x0, p)?;
                // the discrete equation holds at interior nodes only
                let node = nu
                    .nearest_interior_node(&p.x)
                    .ok_or_else(|| self.outside(p, "stationary field has no interior nodes"))?;
                Ok(-1.0 - nu.inf_laplacian(nu.grid().coords(node)))
            }
            BarrierForm::TopShift { base, eps, top } => {
                if !(p.t < *top) {
                    return Err(self.outside(p, "need t < T"));
                }
                Ok(base.discrete_residual(p)? + eps / ((top - p.t) * (top - p.t)))
            }
            BarrierForm::Negated(b) => Ok(-b.discrete_residual(p)?),
            _ => unreachable!("analytic forms have no discrete residual"),
        }
    }

    /// `u_t - F(u)` at `p`.
    pub fn residual(&self, p: &SpaceTimePoint, equation: Equation) -> Result<Residual> {
        if self.is_numeric() {
            if equation == Equation::NonNormalized {
                return Err(Error::Unsupported(
                    "numeric forms are only checked against the normalized operator".into(),
                ));
            }
            return Ok(Residual::Discrete(self.discrete_residual(p)?));
        }
        if let BarrierForm::Negated(b) = self {
            return Ok(b.residual(p, equation)?.negate());
        }
        let d = self.eval(p)?;
        let g2 = sq(&d.grad);
        Ok(match equation {
            Equation::NonNormalized => Residual::Gradient(d.ut - d.hess.quad(&d.grad)),
            Equation::Normalized if g2 > 0.0 => Residual::Gradient(d.ut - d.hess.quad(&d.grad) / g2),
            Equation::Normalized => {
                let (lo, hi) = d.hess.eigen_extremes();
                Residual::Degenerate {
                    eigen_min: d.ut - lo,
                    eigen_max: d.ut - hi,
                }
            }
        })
    }

    /// Largest relative gap between the analytic derivatives at `p` and central
    /// differences with step `step` (value differences for `u_t` and `Du`, gradient
    /// differences for `D²u`). Each entry is compared against the largest analytic
    /// entry of its kind.
    pub fn fd_discrepancy(&self, p: &SpaceTimePoint, step: f64) -> Result<f64> {
        let d = self.eval(p)?;
        let n = p.dim();
        let val = |q: &SpaceTimePoint| -> Result<f64> { Ok(self.eval(q)?.value) };
        let grad = |q: &SpaceTimePoint| -> Result<Vec<f64>> { Ok(self.eval(q)?.grad) };
        let mut dir = vec![0.0; n + 1];

        dir[n] = 1.0;
        let fd_t = (val(&p.offset(&dir, step))? - val(&p.offset(&dir, -step))?) / (2.0 * step);
        dir[n] = 0.0;
        let mut worst = rel(fd_t, d.ut, d.ut.abs());

        let gscale = d.grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dense = d.hess.to_dense();
        let hscale = dense.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            dir[i] = 1.0;
            let (qp, qm) = (p.offset(&dir, step), p.offset(&dir, -step));
            dir[i] = 0.0;
            let fd = (val(&qp)? - val(&qm)?) / (2.0 * step);
            worst = worst.max(rel(fd, d.grad[i], gscale));
            let (gp, gm) = (grad(&qp)?, grad(&qm)?);
            for jx in 0..n {
                let fd = (gp[jx] - gm[jx]) / (2.0 * step);
                worst = worst.max(rel(fd, dense[jx][i], hscale));
            }
        }
        Ok(worst)
    }
}

fn rel(fd: f64, exact: f64, scale: f64) -> f64 {
    let s = scale.max(exact.abs());
    if s == 0.0 {
        fd.abs()
    } else {
        (fd - exact).abs() / s
    }
}

impl fmt::Display for BarrierForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BarrierForm::TopShift { base, .. } => write!(f, "TopShift({base})"),
            BarrierForm::Negated(b) => write!(f, "Negated({b})"),
            other => f.write_str(other.kind()),
        }
    }
}

/// Squared radius of the level set `v = c` of the irregularity function at time `t`.
pub fn petrovsky_level_curve(k: f64, alpha: f64, c: f64, t: f64) -> Result<f64> {
    if !(t > -1.0 && t < 0.0) {
        return Err(invalid("t", format!("need -1 < t < 0, got {}", fmt_short(t))));
    }
    if !(c < 0.0) {
        return Err(invalid("c", "need c < 0"));
    }
    BarrierForm::irregularity_function(k, alpha)?;
    let r2 = level_set_radius2(k, alpha, c, t);
    if !r2.is_finite() {
        return Err(invalid("t", "log|log|t|| must be positive (|t| < 1/e)"));
    }
    Ok(r2)
}

/// `|x|² = -4t(log|log|t|| + log 2)`, the zero set of the Petrovsky barrier with `δ` free.
pub fn petrovsky_barrier_zero_level(t: f64) -> Result<f64> {
    if !(t > -1.0 && t < 0.0) {
        return Err(invalid("t", format!("need -1 < t < 0, got {}", fmt_short(t))));
    }
    let lam = (-(-t).ln()).ln();
    Ok(-4.0 * t * (lam + std::f64::consts::LN_2))
}

/// Smallest `λ = log|log|t||` with `k e^{1/(1-k)} ≤ e^{αλ}/λ²`, the smallness premise
/// of the irregularity function.
pub fn irregularity_premise_lambda(k: f64, alpha: f64) -> Result<f64> {
    BarrierForm::irregularity_function(k, alpha)?;
    let target = k.ln() + 1.0 / (1.0 - k);
    let h = |lam: f64| alpha * lam - 2.0 * lam.ln() - target;
    // increasing past its minimum at 2/α
    let mut lo = (2.0 / alpha).max(std::f64::consts::E);
    if h(lo) >= 0.0 {
        // may also hold below the minimum; take the smallest root from the left
        let mut a = 1.0;
        let mut b = lo;
        if h(a) >= 0.0 {
            return Ok(a);
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if h(m) >= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        return Ok(b);
    }
    let mut hi = 2.0 * lo;
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if h(m) >= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(hi)
}

/// One line of the catalog listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub formula: &'static str,
    pub params: &'static str,
    pub constraints: &'static str,
    pub anchor: &'static str,
}

pub const CATALOG: [CatalogEntry; 9] = [
    CatalogEntry {
        kind: "QuadraticProbe",
        formula: "|x-x0|^2 + eps(t-t0)^2",
        params: "x0, t0, eps",
        constraints: "0 < eps·diam(Ω) < 1",
        anchor: "boundary data for the barrier/regularity equivalence; subsolution, residual 2eps(t-t0) - 2",
    },
    CatalogEntry {
        kind: "BottomBarrier",
        formula: "|x-x0|^2 + 2t",
        params: "x0, tBottom (default 0)",
        constraints: "none",
        anchor: "barrier at bottom points of a cylinder",
    },
    CatalogEntry {
        kind: "ExteriorSphere",
        formula: "e^{-a R0^2} - e^{-a R^2}, R^2 = |x-x'|^2 + (t-t')^2",
        params: "center x', tCenter t', r0 R0, a",
        constraints: "a > 0, R0 > 0; side contact needs 2aδ² ≥ 2R₀+1 on |x-x'| > δ; north pole needs R₀ ≥ 1",
        anchor: "exterior space-time ball condition (south pole excluded)",
    },
    CatalogEntry {
        kind: "PetrovskyBarrier",
        formula: "f(t)e^{-|x|^2/4t} + g(t), f = -1/2 |log|t||^{-(δ+1)}, g = |log|t||^{-δ}",
        params: "delta δ (default 1/4)",
        constraints: "0 < δ ≤ 1/4, -1 < t < 0",
        anchor: "regularity of the origin for |x|^2 < -4t log|log|t||",
    },
    CatalogEntry {
        kind: "IrregularityFunction",
        formula: "f(t)e^{-k|x|^2/4t} + g(t), f = -|log|t||^{-(1+α)}, g = 1/log|log|t||",
        params: "k, alpha α",
        constraints: "1/2 < k < 1, α > 0, k e^{1/(1-k)} ≤ |log|t||^α / log²|log|t||",
        anchor: "irregularity of the origin for factor 4(1+ε), subsolution on the level-set subdomain",
    },
    CatalogEntry {
        kind: "FundamentalW",
        formula: "t^{-1/2} e^{-|x|^2/4t}",
        params: "x0, t0 (shift)",
        constraints: "t > t0",
        anchor: "explicit solution; level sets give the infinity heat balls",
    },
    CatalogEntry {
        kind: "WallBarrier",
        formula: "ν(x) + (t0 - t), Δ∞ᴺν = -1 in Q, ν = |x-x0| on ∂Q",
        params: "x0, t0, stationary grid (h, K, dirs)",
        constraints: "ν numeric; residual checked with the discrete operator to O(eps)",
        anchor: "barrier at lateral points of a cylinder",
    },
    CatalogEntry {
        kind: "AppendixFamily",
        formula: "jα|x-x0|^{4/3} + βj^m(t-t0)^2",
        params: "j, alpha α, beta β, m, x0, t0",
        constraints: "defaults α=1, m=3, β=1/(2·diam(Ω)); j ≥ 1",
        anchor: "strong barrier family for the non-normalized equation",
    },
    CatalogEntry {
        kind: "TopShift",
        formula: "base + eps/(T - t)",
        params: "base form, eps, top T",
        constraints: "eps > 0, t < T",
        anchor: "strict supersolution shift used in the comparison argument",
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: &[f64], t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x.to_vec(), t)
    }

    fn gradient_value(r: Residual) -> f64 {
        match r {
            Residual::Gradient(v) => v,
            other => panic!("expected gradient rule, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_probe_residual_exact() {
        let f = BarrierForm::quadratic_probe([0.2, -0.1], 0.3, 0.4).unwrap();
        for (x, t) in [([0.5, 0.5], 0.9), ([0.0, 1.0], -0.2), ([-0.7, 0.1], 0.3)] {
            let r = gradient_value(f.residual(&pt(&x, t), Equation::Normalized).unwrap());
            assert!((r - (2.0 * 0.4 * (t - 0.3) - 2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn fundamental_w_solves() {
        let f = BarrierForm::fundamental_w([0.0, 0.0], 0.0);
        for (x, t) in [([0.3, 0.4], 0.5), ([1.0, -2.0], 1.7), ([0.01, 0.0], 0.1)] {
            let r = gradient_value(f.residual(&pt(&x, t), Equation::Normalized).unwrap());
            assert!(r.abs() < 1e-10, "{r}");
        }
        assert!(f.eval(&pt(&[0.1, 0.1], 0.0)).is_err());
    }

    #[test]
    fn exterior_sphere_axis_uses_eigen_rule() {
        let a = 2.0;
        let f = BarrierForm::exterior_sphere([0.0], 0.0, 1.5, a).unwrap();
        let p = pt(&[0.0], 1.8);
        let d = f.eval(&p).unwrap();
        assert_eq!(d.grad, vec![0.0]);
        let e = (-a * 1.8f64 * 1.8).exp();
        match f.residual(&p, Equation::Normalized).unwrap() {
            Residual::Degenerate { eigen_min, .. } => {
                assert!((eigen_min - 2.0 * a * e * (1.8 - 1.0)).abs() < 1e-14)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exterior_sphere_gradient_residual_formula() {
        let a = 1.3;
        let f = BarrierForm::exterior_sphere([0.1, 0.0], 0.2, 0.5, a).unwrap();
        let p = pt(&[0.6, -0.3], 0.4);
        let r2 = 0.25 + 0.09;
        let dt = 0.2;
        let e = (-a * (r2 + dt * dt)).exp();
        let r = gradient_value(f.residual(&p, Equation::Normalized).unwrap());
        assert!((r - 2.0 * a * e * (dt - 1.0 + 2.0 * a * r2)).abs() < 1e-14);
    }

    #[test]
    fn petrovsky_barrier_positive_bound() {
        let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
        for t in [-0.09, -0.01, -1e-4] {
            let l: f64 = -(-t as f64).ln();
            let r2 = crate::geometry::petrovsky_radius2(4.0, t);
            let v = f.value(&pt(&[0.0], t)).unwrap();
            assert!(v > 0.5 * l.powf(-0.25));
            // on the curved boundary the value is exactly half of g
            let vb = f.value(&pt(&[r2.sqrt()], t)).unwrap();
            assert!((vb - 0.5 * l.powf(-0.25)).abs() < 1e-12);
        }
        assert!(f.eval(&pt(&[0.0], 0.0)).is_err());
        assert!(BarrierForm::petrovsky_barrier(0.3).is_err());
    }

    #[test]
    fn appendix_operator_constant() {
        // non-normalized residual at t = t0 is -(64/81)(jα)^3
        for j in [1u32, 2, 5] {
            let f = BarrierForm::appendix_family(j, 1.0, 0.3, 3.0, [0.0, 0.0], 0.0).unwrap();
            let r = gradient_value(f.residual(&pt(&[0.3, -0.4], 0.0), Equation::NonNormalized).unwrap());
            let a = j as f64;
            assert!((r + 64.0 / 81.0 * a * a * a).abs() < 1e-9 * a.powi(3), "{r}");
        }
    }

    #[test]
    fn top_shift_adds_positive_term() {
        let base = BarrierForm::bottom_barrier([0.5], 0.0);
        let r0 = gradient_value(base.residual(&pt(&[0.2], 0.5), Equation::Normalized).unwrap());
        let f = base.top_shift(0.1, 1.0).unwrap();
        let r1 = gradient_value(f.residual(&pt(&[0.2], 0.5), Equation::Normalized).unwrap());
        assert!((r1 - r0 - 0.1 / 0.25).abs() < 1e-14);
        assert!(f.eval(&pt(&[0.2], 1.0)).is_err());
    }

    #[test]
    fn level_curve_round_trip() {
        let (k, alpha, c) = (0.9, 0.05, -1.0);
        let f = BarrierForm::irregularity_function(k, alpha).unwrap();
        for t in [-0.3, -0.1, -1e-2, -1e-4] {
            let r2 = petrovsky_level_curve(k, alpha, c, t).unwrap();
            let v = f.value(&pt(&[r2.sqrt()], t)).unwrap();
            assert!((v - c).abs() < 1e-10, "t={t} v={v}");
        }
        assert!(petrovsky_level_curve(k, alpha, c, 0.1).is_err());
        assert!(petrovsky_level_curve(k, alpha, 0.5, -0.1).is_err());
    }

    #[test]
    fn level_curve_inside_factor_eight() {
        for e in 2..=5 {
            let t = -(10f64.powi(-e));
            let r2 = petrovsky_level_curve(0.9, 0.05, -1.0, t).unwrap();
            let lam = (-(-t).ln()).ln();
            assert!(r2 <= -4.0 * 2.0 * t * lam, "t={t}");
        }
    }

    #[test]
    fn zero_level_value() {
        let r2 = petrovsky_barrier_zero_level(-0.1).unwrap();
        assert!((r2 - 0.6109).abs() < 1e-4, "{r2}");
    }

    #[test]
    fn premise_threshold() {
        let lam = irregularity_premise_lambda(0.9, 0.05).unwrap();
        assert!(lam > 400.0 && lam < 500.0, "{lam}");
        let lhs = 0.9f64.ln() + 10.0;
        assert!(0.05 * lam - 2.0 * lam.ln() >= lhs - 1e-9);
        assert!(0.05 * (lam - 0.01) - 2.0 * (lam - 0.01).ln() < lhs);
    }

    #[test]
    fn catalog_has_every_kind() {
        assert_eq!(CATALOG.len(), 9);
        let ext = CATALOG.iter().find(|e| e.kind == "ExteriorSphere").unwrap();
        assert!(ext.constraints.contains("2aδ² ≥ 2R₀+1"));
        let app = CATALOG.iter().find(|e| e.kind == "AppendixFamily").unwrap();
        assert!(app.constraints.contains("α=1, m=3"));
    }

    #[test]
    fn dense_eigen_matches_radial() {
        let h = Hessian::Radial {
            c1: 0.7,
            c2: -1.3,
            y: vec![0.4, -0.2, 0.9],
        };
        let (a, b) = h.eigen_extremes();
        let (c, d) = dense_eigen_extremes(&h.to_dense());
        assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
    }

    fn audit(form: &BarrierForm, points: &[SpaceTimePoint], step: impl Fn(&SpaceTimePoint) -> f64) {
        for p in points {
            let e = form.fd_discrepancy(p, step(p)).unwrap();
            assert!(e <= 1e-6, "{form} at {p}: {e}");
        }
    }

    fn grid_points(n: usize, lo: f64, hi: f64, t: (f64, f64)) -> Vec<SpaceTimePoint> {
        (0..20)
            .map(|i| {
                let u = (i as f64 + 0.5) / 20.0;
                let x = (0..n).map(|a| lo + (hi - lo) * ((u * (a as f64 + 1.7) * 7.3).fract())).collect::<Vec<_>>();
                SpaceTimePoint::new(x, t.0 + (t.1 - t.0) * ((u * 3.1).fract()))
            })
            .collect()
    }

    #[test]
    fn derivative_audit_analytic_forms() {
        let pts = grid_points(2, -1.0, 1.0, (-1.0, 1.0));
        audit(&BarrierForm::quadratic_probe([0.1, 0.2], 0.3, 0.5).unwrap(), &pts, |_| 1e-5);
        audit(&BarrierForm::bottom_barrier([0.1, 0.2], 0.0), &pts, |_| 1e-5);
        let ext = BarrierForm::exterior_sphere([0.1, -0.2], 0.1, 0.5, 2.0).unwrap();
        audit(&ext, &pts, |_| 1e-5);
        audit(&ext.top_shift(0.1, 2.0).unwrap(), &pts, |_| 1e-5);
        let pts_w = grid_points(2, -1.0, 1.0, (0.2, 2.0));
        audit(&BarrierForm::fundamental_w([0.0, 0.0], 0.0), &pts_w, |_| 1e-5);
        let pts_a: Vec<_> = pts.into_iter().filter(|p| p.x[0].hypot(p.x[1]) > 0.1).collect();
        audit(&BarrierForm::appendix_default(3, [0.0, 0.0], 0.0, 2.0).unwrap(), &pts_a, |_| 1e-6);
    }

    #[test]
    fn derivative_audit_log_forms() {
        let mut pts = Vec::new();
        for i in 0..20 {
            let t = -(10f64.powf(-1.0 - 3.0 * i as f64 / 19.0));
            let r = crate::geometry::petrovsky_radius2(4.0, t).sqrt();
            pts.push(SpaceTimePoint::new(vec![r * ((i as f64 * 0.37).fract() - 0.5)], t));
        }
        let step = |p: &SpaceTimePoint| 1e-5 * p.t.abs();
        audit(&BarrierForm::petrovsky_barrier(0.25).unwrap(), &pts, step);
        audit(&BarrierForm::irregularity_function(0.9, 0.05).unwrap(), &pts, step);
    }

    fn radial_hessian() -> impl Strategy<Value = Hessian> {
        (1usize..=3, -5.0..5.0f64, -5.0..5.0f64, prop::collection::vec(-2.0..2.0f64, 3)).prop_map(
            |(n, c1, c2, y)| Hessian::Radial {
                c1,
                c2,
                y: y[..n].to_vec(),
            },
        )
    }

    proptest! {
        #[test]
        fn radial_eigen_rule(h in radial_hessian()) {
            let (a, b) = h.eigen_extremes();
            let (c, d) = dense_eigen_extremes(&h.to_dense());
            prop_assert!((a - c).abs() <= 1e-12 * (1.0 + c.abs()));
            prop_assert!((b - d).abs() <= 1e-12 * (1.0 + d.abs()));
        }

        #[test]
        fn negation_mirrors_residual(x in -1.0..1.0f64, y in -1.0..1.0f64, t in 0.05..1.0f64) {
            let f = BarrierForm::exterior_sphere([0.0, 0.0], 0.0, 0.5, 2.0).unwrap();
            let p = pt(&[x, y], t);
            let (r, rule) = f.residual(&p, Equation::Normalized).unwrap().for_side(Side::Super);
            let (rn, rule_n) = f.clone().negated().residual(&p, Equation::Normalized).unwrap().for_side(Side::Sub);
            prop_assert_eq!(r, -rn);
            prop_assert_eq!(rule == ResidualRule::EigenMin, rule_n == ResidualRule::EigenMax);
        }

        #[test]
        fn petrovsky_positive_inside(u in 0.0..1.0f64, e in 1.0..6.0f64) {
            let t = -(10f64.powf(-e));
            let rmax = crate::geometry::petrovsky_radius2(4.0, t).sqrt();
            let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
            let l = -(-t).ln();
            let v = f.value(&pt(&[u * rmax], t)).unwrap();
            prop_assert!(v >= 0.5 * l.powf(-0.25) * (1.0 - 1e-12));
        }
    }
}
