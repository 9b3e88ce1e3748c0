//! Executes a parsed [`Config`] and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use infheat::barriers::{
    certify_with, check_barrier_family, check_barrier_with, BarrierCheck, CertificateReport, Equation, Side,
};
use infheat::lattice::LatticeField;
use infheat::operator::{dpp_march, march, stationary_solve, SchemeConfig};
use infheat::regularity::{
    calibrate, classify_with, default_probe_eps, exterior_sphere_experiment, future_blindness_test,
    heat_ball_experiment, past_agreement, petrovsky_sweep, PastAgreement, RegularityReport, Resolution,
    Thresholds, PROBE_CSV_HEADER,
};
use infheat::geometry::{heat_ball_radius2, level_set_radius2, petrovsky_radius2};
use infheat::{Region, SpatialDomain};

use crate::config::{Config, ExperimentKind, Oracle};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarchReport {
    pub region: Region,
    pub scheme: SchemeConfig,
    pub h: f64,
    pub k: usize,
    pub dirs: usize,
    pub dpp: bool,
    pub nodes: usize,
    pub slices: usize,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StationaryReport {
    pub domain: SpatialDomain,
    pub rhs: f64,
    pub scheme: SchemeConfig,
    pub h: f64,
    pub k: usize,
    pub dirs: usize,
    pub interior_nodes: usize,
    pub min_value: f64,
    pub max_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepReport {
    pub c: f64,
    pub factors: Vec<f64>,
    pub reports: Vec<RegularityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlindnessReport {
    pub resolution: Resolution,
    pub blind: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub past_agreement: Option<PastAgreement>,
}

/// Outcome of one expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

impl Check {
    fn eq<T: PartialEq + std::fmt::Debug>(name: &str, expected: &T, actual: &T) -> Self {
        Check {
            name: name.into(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
            ok: expected == actual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

struct Artifacts {
    report: String,
    fields: Option<String>,
    curves: Option<String>,
    extra: Vec<(&'static str, String)>,
    checks: Vec<Check>,
    summary: String,
}

impl Artifacts {
    fn new(report: String, summary: String) -> Self {
        Self {
            report,
            fields: None,
            curves: None,
            extra: Vec::new(),
            checks: Vec::new(),
            summary,
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Reads, validates and runs a config file.
pub fn run_file(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = Config::parse(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        e => e,
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    run(&cfg, &dir)
}

pub fn run(cfg: &Config, dir: &Path) -> Result<Outcome, CliError> {
    use ExperimentKind::*;
    let art = match cfg.experiment {
        March => run_march(cfg)?,
        Stationary => run_stationary(cfg)?,
        Certify => run_certify(cfg)?,
        CheckBarrier => run_check(cfg)?,
        BarrierFamily => run_family(cfg)?,
        Classify => run_classify(cfg)?,
        ExteriorSphere => run_exterior(cfg)?,
        PetrovskySweep => run_sweep(cfg)?,
        HeatBall => run_heat_ball(cfg)?,
        FutureBlindness => run_blindness(cfg)?,
    };
    let io = |path: &Path, source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = vec![("report.json", Some(art.report))];
    if cfg.output.fields {
        files.push(("fields.csv", art.fields));
    }
    if cfg.output.curves {
        files.push(("curves.csv", art.curves));
    }
    let mut written = Vec::new();
    for (name, body) in files.into_iter().chain(art.extra.into_iter().map(|(n, b)| (n, Some(b)))) {
        if let Some(body) = body {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| io(&p, e))?;
            written.push(p);
        }
    }
    Ok(Outcome {
        out_dir: dir.to_path_buf(),
        written,
        checks: art.checks,
        summary: art.summary,
    })
}

fn max_error_check(limit: Option<f64>, err: Option<f64>) -> Result<Option<Check>, CliError> {
    let Some(limit) = limit else { return Ok(None) };
    let err = err.ok_or_else(|| CliError::Config("expect.maxError needs an `oracle`".into()))?;
    Ok(Some(Check {
        name: "maxError".into(),
        expected: format!("≤ {limit}"),
        actual: format!("{err}"),
        ok: err <= limit,
    }))
}

fn heat_sine(x: &[f64], t: f64) -> f64 {
    (-t).exp() * x.iter().map(|v| v.sin()).product::<f64>()
}

fn run_march(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let spec = cfg.scheme_spec()?;
    let scheme = spec.scheme()?;
    let g = cfg.data()?.build();
    let field = if spec.dpp {
        dpp_march(region, &g, &scheme, spec.h, spec.k, spec.dirs)?
    } else {
        march(region, &g, &scheme, spec.h, spec.k, spec.dirs)?
    };
    let lat = field.lattice().clone();
    let exact: Option<Box<dyn Fn(&[f64], f64) -> f64>> = match &cfg.oracle {
        None => None,
        Some(Oracle::HeatSine) => Some(Box::new(heat_sine)),
        Some(Oracle::Constant { value }) => {
            let v = *value;
            Some(Box::new(move |_, _| v))
        }
        Some(Oracle::Quadratic1d) => {
            return Err(CliError::Config("oracle quadratic-1d applies to stationary solves".into()));
        }
    };
    let mut curve = String::from("t,maxError\n");
    let mut max_error = None;
    if let Some(f) = &exact {
        let mut worst = 0.0f64;
        for s in 0..field.slice_count() {
            let v = field.view(s);
            let e = (0..v.values.len())
                .filter(|&i| v.interior[i])
                .map(|i| (v.values[i] - f(lat.grid().coords(i), v.t)).abs())
                .fold(0.0, f64::max);
            worst = worst.max(e);
            writeln!(curve, "{},{e}", v.t).unwrap();
        }
        max_error = Some(worst);
    }
    let report = MarchReport {
        region: region.clone(),
        scheme,
        h: spec.h,
        k: spec.k,
        dirs: spec.dirs,
        dpp: spec.dpp,
        nodes: lat.node_count(),
        slices: field.slice_count(),
        t_end: lat.time(lat.steps()),
        max_error,
    };
    let mut art = Artifacts::new(
        json(&report),
        format!(
            "march: {} slices, {} nodes{}",
            report.slices,
            report.nodes,
            max_error.map(|e| format!(", max error {e}")).unwrap_or_default()
        ),
    );
    art.fields = Some(field_csv(&field));
    art.curves = exact.is_some().then_some(curve);
    art.checks.extend(max_error_check(cfg.expect.max_error, max_error)?);
    Ok(art)
}

fn field_csv(field: &LatticeField) -> String {
    let mut buf = Vec::new();
    field.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn run_stationary(cfg: &Config) -> Result<Artifacts, CliError> {
    let domain = cfg.domain.as_ref().expect("validated");
    let rhs = cfg.rhs.expect("validated");
    let spec = cfg.scheme_spec()?;
    let scheme = spec.scheme()?;
    let phi = cfg.data()?.build();
    let nu = stationary_solve(domain, rhs, &phi, &scheme, spec.h, spec.k, spec.dirs)?;
    let exact: Option<Box<dyn Fn(&[f64]) -> f64>> = match &cfg.oracle {
        None => None,
        Some(Oracle::Constant { value }) => {
            let v = *value;
            Some(Box::new(move |_| v))
        }
        Some(Oracle::Quadratic1d) => {
            let (lo, hi) = domain.bounds();
            if lo.len() != 1 {
                return Err(CliError::Config("oracle quadratic-1d needs a one-dimensional domain".into()));
            }
            let (a, b) = (lo[0], hi[0]);
            let (pa, pb) = (phi.eval(&[a], 0.0), phi.eval(&[b], 0.0));
            Some(Box::new(move |x| {
                0.5 * rhs * (x[0] - a) * (x[0] - b) + pa + (pb - pa) * (x[0] - a) / (b - a)
            }))
        }
        Some(Oracle::HeatSine) => {
            return Err(CliError::Config("oracle heat-sine applies to marches".into()));
        }
    };
    let dim = domain.dim();
    let mut fields = String::new();
    let cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(fields, "{},nu", cols.join(",")).unwrap();
    let (mut lo, mut hi, mut n, mut err) = (f64::INFINITY, f64::NEG_INFINITY, 0usize, 0.0f64);
    for (x, v) in nu.interior_nodes() {
        let xs: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        writeln!(fields, "{},{v}", xs.join(",")).unwrap();
        lo = lo.min(v);
        hi = hi.max(v);
        n += 1;
        if let Some(f) = &exact {
            err = err.max((v - f(x)).abs());
        }
    }
    let max_error = exact.is_some().then_some(err);
    let report = StationaryReport {
        domain: domain.clone(),
        rhs,
        scheme,
        h: spec.h,
        k: spec.k,
        dirs: spec.dirs,
        interior_nodes: n,
        min_value: lo,
        max_value: hi,
        max_error,
    };
    let mut art = Artifacts::new(
        json(&report),
        format!(
            "stationary: {n} interior nodes, ν ∈ [{lo}, {hi}]{}",
            max_error.map(|e| format!(", max error {e}")).unwrap_or_default()
        ),
    );
    art.fields = Some(fields);
    art.checks.extend(max_error_check(cfg.expect.max_error, max_error)?);
    Ok(art)
}

fn samples_csv(rep: &CertificateReport) -> String {
    let dim = rep.samples.first().map_or(0, |s| s.point.dim());
    let cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let mut s = String::new();
    writeln!(s, "{},t,residual,rule", cols.join(",")).unwrap();
    for p in &rep.samples {
        let xs: Vec<String> = p.point.x.iter().map(|c| c.to_string()).collect();
        let rule = serde_json::to_value(p.rule).expect("rule serializes");
        writeln!(s, "{},{},{},{}", xs.join(","), p.point.t, p.residual, rule.as_str().unwrap_or("")).unwrap();
    }
    s
}

/// `t, radius` along the curved boundary of the tip regions.
pub fn region_curve(region: &Region) -> Option<String> {
    const N: usize = 200;
    let rows: Vec<(f64, f64)> = match region {
        Region::Petrovsky {
            factor, cutoff, t_floor, ..
        } => log_ladder(*cutoff, t_floor.max(1e-12), N)
            .map(|s| (-s, petrovsky_radius2(*factor, -s).max(0.0).sqrt()))
            .collect(),
        Region::LevelSetSubdomain {
            k,
            alpha,
            level,
            cutoff,
            t_floor,
            ..
        } => log_ladder(-cutoff, t_floor.max(1e-12), N)
            .map(|s| (-s, level_set_radius2(*k, *alpha, *level, -s).max(0.0).sqrt()))
            .collect(),
        Region::HeatBall {
            t_center, level, t_floor, ..
        } => log_ladder(1.0 / (level * level), t_floor.max(1e-12), N)
            .map(|s| (t_center - s, heat_ball_radius2(*level, s).max(0.0).sqrt()))
            .collect(),
        _ => return None,
    };
    let mut out = String::from("t,radius\n");
    for (t, r) in rows {
        writeln!(out, "{t},{r}").unwrap();
    }
    Some(out)
}

fn log_ladder(top: f64, floor: f64, n: usize) -> impl Iterator<Item = f64> {
    let ratio = (floor / top).ln();
    (0..n).map(move |i| top * (ratio * i as f64 / (n - 1) as f64).exp())
}

fn certificate_artifacts(rep: CertificateReport, cfg: &Config, region: &Region) -> Artifacts {
    let mut art = Artifacts::new(
        rep.to_json() + "\n",
        format!(
            "{} {:?}: {:?}, residual ∈ [{}, {}]",
            rep.form, rep.side, rep.verdict, rep.min_residual, rep.max_residual
        ),
    );
    art.fields = Some(samples_csv(&rep));
    art.curves = region_curve(region);
    if let Some(v) = cfg.expect.verdict {
        art.checks.push(Check::eq("verdict", &v, &rep.verdict));
    }
    art
}

fn run_certify(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let form = cfg.form()?.build(Some(region))?;
    let rep = certify_with(
        &form,
        region,
        cfg.side.unwrap_or(Side::Super),
        cfg.equation.unwrap_or(Equation::Normalized),
        cfg.samples.unwrap_or(2000),
        cfg.seed,
        cfg.tol.unwrap_or(1e-9),
    )?;
    Ok(certificate_artifacts(rep, cfg, region))
}

fn run_check(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let form = cfg.form()?.build(Some(region))?;
    let mut opts = BarrierCheck::for_form(&form, cfg.samples.unwrap_or(2000), cfg.seed);
    if let Some(t) = cfg.tol {
        opts.tol = t;
    }
    if let Some(b) = cfg.boundary_samples {
        opts.boundary_samples = b;
    }
    opts.exclusion = cfg.exclusion;
    let rep = check_barrier_with(&form, region, cfg.zeta0()?, &opts)?;
    Ok(certificate_artifacts(rep, cfg, region))
}

fn run_family(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let fam = cfg.family.as_ref().expect("validated");
    let opts = fam.options(cfg.samples, cfg.seed, cfg.tol, cfg.boundary_samples);
    let rep = check_barrier_family(&fam.spec(), region, cfg.zeta0()?, &opts)?;
    Ok(certificate_artifacts(rep, cfg, region))
}

fn probe_csv(reports: &[(String, &RegularityReport)]) -> String {
    let mut out = format!("{PROBE_CSV_HEADER}\n");
    for (label, r) in reports {
        let mut rows = Vec::new();
        r.write_csv_rows(label, &mut rows).expect("in-memory write");
        out.push_str(&String::from_utf8(rows).expect("csv is utf-8"));
    }
    out
}

fn thresholds(cfg: &Config, schedule: &[Resolution], art_extra: &mut Vec<(&'static str, String)>) -> Result<Thresholds, CliError> {
    let th = cfg.thresholds();
    if !cfg.calibrate {
        return Ok(th);
    }
    let cal = calibrate(schedule, &th)?;
    art_extra.push(("calibration.json", json(&cal)));
    Ok(cal.thresholds)
}

fn regularity_artifacts(rep: &RegularityReport, cfg: &Config, label: &str) -> Artifacts {
    let mut art = Artifacts::new(
        json(rep),
        format!("classify {}: {:?} ({})", rep.zeta0, rep.verdict, rep.evidence),
    );
    art.curves = Some(probe_csv(&[(label.to_string(), rep)]));
    art.fields = region_curve(&rep.region);
    if let Some(v) = cfg.expect.regularity {
        art.checks.push(Check::eq("regularity", &v, &rep.verdict));
    }
    art
}

fn run_classify(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let zeta0 = cfg.zeta0()?;
    let schedule = cfg.schedule(region.dim());
    let mut extra = Vec::new();
    let th = thresholds(cfg, &schedule, &mut extra)?;
    let eps = match cfg.probe_eps {
        Some(e) => e,
        None => default_probe_eps(region)?,
    };
    let rep = classify_with(region, zeta0, &schedule, eps, &th)?;
    let mut art = regularity_artifacts(&rep, cfg, "classify");
    art.extra = extra;
    Ok(art)
}

fn run_exterior(cfg: &Config) -> Result<Artifacts, CliError> {
    let contact = cfg.contact.expect("validated");
    let r0 = cfg.r0.expect("validated");
    let schedule = cfg.schedule(1);
    let mut extra = Vec::new();
    let th = thresholds(cfg, &schedule, &mut extra)?;
    let out = exterior_sphere_experiment(contact, r0, &schedule, &th, cfg.samples.unwrap_or(2000), cfg.seed)?;
    let mut art = regularity_artifacts(&out.regularity, cfg, &format!("{contact:?}").to_lowercase());
    art.report = json(&out);
    art.fields = Some(samples_csv(&out.certificate));
    art.summary = format!(
        "exterior sphere {contact:?} R0={r0}: certificate {:?}, classify {:?}",
        out.certificate.verdict, out.regularity.verdict
    );
    if let Some(v) = cfg.expect.verdict {
        art.checks.push(Check::eq("verdict", &v, &out.certificate.verdict));
    }
    art.extra = extra;
    Ok(art)
}

fn run_sweep(cfg: &Config) -> Result<Artifacts, CliError> {
    let factors = cfg.factors.clone().expect("validated");
    let c = cfg.c.unwrap_or(0.1);
    let schedule = cfg.schedule(1);
    let mut extra = Vec::new();
    let th = thresholds(cfg, &schedule, &mut extra)?;
    let reports = petrovsky_sweep(&factors, c, &schedule, &th)?;
    let labelled: Vec<(String, &RegularityReport)> = factors.iter().map(|a| a.to_string()).zip(&reports).collect();
    let verdicts: Vec<_> = reports.iter().map(|r| r.verdict).collect();
    let summary = factors
        .iter()
        .zip(&reports)
        .map(|(a, r)| format!("A={a}: {:?} {:?}", r.verdict, r.relative_limits()))
        .collect::<Vec<_>>()
        .join("; ");
    let mut art = Artifacts::new(json(&SweepReport { c, factors, reports: reports.clone() }), format!("petrovsky sweep: {summary}"));
    art.curves = Some(probe_csv(&labelled));
    if let Some(v) = &cfg.expect.verdicts {
        art.checks.push(Check::eq("verdicts", v, &verdicts));
    }
    art.extra = extra;
    Ok(art)
}

fn run_heat_ball(cfg: &Config) -> Result<Artifacts, CliError> {
    let schedule = cfg.schedule(1);
    let mut extra = Vec::new();
    let th = thresholds(cfg, &schedule, &mut extra)?;
    let rep = heat_ball_experiment(cfg.level.unwrap_or(2.0), &schedule, &th)?;
    let mut art = regularity_artifacts(&rep, cfg, "heat-ball");
    art.extra = extra;
    Ok(art)
}

fn run_blindness(cfg: &Config) -> Result<Artifacts, CliError> {
    let region = cfg.region()?;
    let zeta0 = cfg.zeta0()?;
    let res = cfg.scheme_spec()?.resolution();
    let g = cfg.data()?.build();
    let pert = cfg.perturbation.as_ref().expect("validated").build();
    let blind = future_blindness_test(region, zeta0, &g, &pert, &res)?;
    let past = match &cfg.schedule {
        Some(s) => {
            let eps = match cfg.probe_eps {
                Some(e) => e,
                None => default_probe_eps(region)?,
            };
            Some(past_agreement(region, zeta0, s, eps, &cfg.thresholds())?)
        }
        None => None,
    };
    let summary = format!(
        "future blindness at {zeta0}: {blind}{}",
        past.as_ref().map(|p| format!(", past agreement {}", p.agree)).unwrap_or_default()
    );
    let mut art = Artifacts::new(
        json(&BlindnessReport {
            resolution: res,
            blind,
            past_agreement: past.clone(),
        }),
        summary,
    );
    if let Some(b) = cfg.expect.blind {
        art.checks.push(Check::eq("blind", &b, &blind));
    }
    if let Some(a) = cfg.expect.agree {
        let got = past
            .as_ref()
            .map(|p| p.agree)
            .ok_or_else(|| CliError::Config("expect.agree needs a `schedule`".into()))?;
        art.checks.push(Check::eq("agree", &a, &got));
    }
    if let Some(p) = &past {
        let mut list = vec![("full".to_string(), &p.full)];
        if let Some(q) = &p.past {
            list.push(("past".to_string(), q));
        }
        art.curves = Some(probe_csv(&list));
    }
    Ok(art)
}
