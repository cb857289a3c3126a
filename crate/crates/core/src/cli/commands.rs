use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::{BenchOp, Command, Forcing, Format, RunConfig, Scheme, Suite};
use super::emit::{
    fmt17, json_lines, kernel_csv, ml_csv, report_summary_csv, sidecar, sidecar_name, KernelRecord, MlRecord,
};
use crate::error::{Error, Result};
use crate::fraccalc::TimeGrid;
use crate::kernels::{kernel_eval, ContourSpec, KernelKind, KernelQuery, SeriesControl, SpatialDerivative};
use crate::solver::{
    solve_fd_variable, solve_spectral_constant, CoefficientField, SpaceGrid, SpaceTimeField,
};
use crate::specfun::{gamma, mittag_leffler_real, mittag_leffler_with, FracOrder, MLQuery, MlControl};
use crate::verify::{
    apriori_probe, duhamel_probe, envelope_probe, glp_estimate_probe, im_probe, im_value, kernel_l1_bounds,
    BandLimitedForcing, EnvelopeSide, EstimateReport, GlpSettings, ImGrid, L1Samples,
};

/// Files produced by one run, in write order, plus the ids of failed probes.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub failed: Vec<String>,
}

impl Artifacts {
    fn push(&mut self, cfg: &RunConfig, name: String, bytes: Vec<u8>, meta: serde_json::Value) {
        self.files.push((sidecar_name(&name), sidecar(cfg, &name, meta)));
        self.files.push((name, bytes));
    }
}

fn series_control(cfg: &RunConfig) -> SeriesControl {
    SeriesControl {
        max_terms: cfg.series_terms,
        tol: cfg.series_tol,
        ..SeriesControl::default()
    }
}

fn contour_spec(cfg: &RunConfig) -> ContourSpec {
    ContourSpec {
        tol: cfg.contour_tol,
        max_nodes: cfg.contour_nodes,
        ..ContourSpec::for_kernel(cfg.alpha, cfg.d)
    }
}

fn on_axis(d: usize, x: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = x;
    v
}

/// Builds every artifact of the configured command in memory.
pub fn execute(cfg: &RunConfig) -> Result<Artifacts> {
    match cfg.command {
        Command::Ml => run_ml(cfg),
        Command::Kernel => run_kernel(cfg),
        Command::Solve => run_solve(cfg),
        Command::Verify => run_verify(cfg),
        Command::Bench => run_bench(cfg),
    }
}

fn run_ml(cfg: &RunConfig) -> Result<Artifacts> {
    let ctl = MlControl {
        tol: cfg.ml_tol,
        ..MlControl::default()
    };
    let records = cfg
        .zs
        .values()
        .par_iter()
        .map(|&z| {
            let (v, strategy) = mittag_leffler_with(MLQuery::real(cfg.alpha, cfg.beta, z)?, &ctl)?;
            Ok(MlRecord {
                alpha: cfg.alpha,
                beta: cfg.beta,
                z,
                value: v.re,
                strategy: strategy.name().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bytes = match cfg.format {
        Format::Csv => ml_csv(&records)?,
        Format::Json => json_lines(&records)?,
    };
    let mut out = Artifacts::default();
    out.push(cfg, cfg.artifact_name(), bytes, json!({ "rows": records.len() }));
    Ok(out)
}

pub fn kernel_records(cfg: &RunConfig) -> Result<Vec<KernelRecord>> {
    let ctl = series_control(cfg);
    let spec = contour_spec(cfg);
    let spatial = cfg.spatial.0;
    cfg.xs
        .values()
        .par_iter()
        .map(|&x| {
            let q = KernelQuery::new(cfg.kind, cfg.alpha, cfg.t, &on_axis(cfg.d, x), cfg.n, spatial)?;
            let v = kernel_eval(&q, &ctl, &spec)?;
            Ok(KernelRecord {
                alpha: cfg.alpha,
                d: cfg.d,
                kind: cfg.kind,
                n: cfg.n,
                m: spatial.order(),
                t: cfg.t,
                x: q.x.clone(),
                big_r: v.big_r,
                value: v.value,
                regime: v.regime,
                flag: if v.underflow { "underflow" } else { "ok" }.to_string(),
            })
        })
        .collect()
}

fn run_kernel(cfg: &RunConfig) -> Result<Artifacts> {
    let records = kernel_records(cfg)?;
    let bytes = match cfg.format {
        Format::Csv => kernel_csv(cfg.d, &records)?,
        Format::Json => json_lines(&records)?,
    };
    let mut out = Artifacts::default();
    out.push(cfg, cfg.artifact_name(), bytes, json!({ "rows": records.len() }));
    Ok(out)
}

/// Forcing and, where known, the exact solution of the configured problem.
type Exact = Box<dyn Fn(f64, &[f64]) -> f64 + Sync>;

fn problem(cfg: &RunConfig, time: &TimeGrid, space: &SpaceGrid) -> Result<(SpaceTimeField, Option<Exact>)> {
    let a = cfg.alpha;
    let k = 2.0 * PI / cfg.length;
    Ok(match cfg.forcing {
        Forcing::SingleMode => {
            let f = SpaceTimeField::from_fn(time, space, |_, x| (k * x[0]).sin());
            // E_alpha is evaluated once per time node
            let relax: Vec<f64> = time
                .nodes
                .iter()
                .map(|&t| Ok((1.0 - mittag_leffler_real(a, 1.0, -t.powf(a) * k * k)?) / (k * k)))
                .collect::<Result<_>>()?;
            let nodes = time.nodes.clone();
            let exact: Exact = Box::new(move |t, x| {
                let i = nodes.partition_point(|&s| s < t).min(nodes.len() - 1);
                relax[i] * (k * x[0]).sin()
            });
            (f, Some(exact))
        }
        Forcing::Manufactured => {
            let c = gamma(3.0) / gamma(3.0 - a);
            let f = SpaceTimeField::from_fn(time, space, |t, x| (c * t.powf(2.0 - a) + k * k * t * t) * (k * x[0]).sin());
            (f, Some(Box::new(move |t: f64, x: &[f64]| t * t * (k * x[0]).sin()) as Exact))
        }
        Forcing::BandLimited => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let g = BandLimitedForcing::random(&mut rng, &vec![cfg.length; cfg.d], cfg.horizon, 4, 3);
            (g.sample(time, space), None)
        }
    })
}

fn field_csv(u: &SpaceTimeField) -> Result<Vec<u8>> {
    let d = u.space.d;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("u".into());
    w.write_record(&header).map_err(io)?;
    for i in 0..u.n_times() {
        let t = fmt17(u.time.nodes[i]);
        for (j, v) in u.slice(i).iter().enumerate() {
            let mut row = vec![t.clone()];
            row.extend(u.space.coords(j).into_iter().map(fmt17));
            row.push(fmt17(*v));
            w.write_record(&row).map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn field_json(u: &SpaceTimeField) -> Result<Vec<u8>> {
    let rows: Vec<serde_json::Value> = (0..u.n_times())
        .flat_map(|i| {
            u.slice(i)
                .iter()
                .enumerate()
                .map(move |(j, v)| json!({ "t": u.time.nodes[i], "x": u.space.coords(j), "u": v }))
        })
        .collect();
    json_lines(&rows)
}

fn run_solve(cfg: &RunConfig) -> Result<Artifacts> {
    let order = FracOrder::new(cfg.alpha)?;
    let time = TimeGrid::uniform(cfg.horizon, cfg.nt)?;
    let space = SpaceGrid::cube(cfg.d, cfg.length, cfg.nx)?;
    let (f, exact) = problem(cfg, &time, &space)?;
    let u = match cfg.scheme {
        Scheme::Spectral => solve_spectral_constant(order, &f)?,
        Scheme::Fd => solve_fd_variable(order, &CoefficientField::laplacian(cfg.d, cfg.horizon), &f)?,
    };
    let max_error = exact.map(|e| u.max_abs_diff(&SpaceTimeField::from_fn(&time, &space, |t, x| e(t, x)))).transpose()?;
    let bytes = match cfg.format {
        Format::Csv => field_csv(&u)?,
        Format::Json => field_json(&u)?,
    };
    let meta = json!({
        "grid": {
            "d": cfg.d,
            "box": vec![cfg.length; cfg.d],
            "points": cfg.nx,
            "steps": cfg.nt,
            "horizon": cfg.horizon,
            "alpha": cfg.alpha,
        },
        "max_abs_error": max_error,
    });
    let mut out = Artifacts::default();
    out.push(cfg, cfg.artifact_name(), bytes, meta);
    Ok(out)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

/// Exact zero of I_M at xi = 0 over the standard tau grid, at M and 2M.
fn im_zero_report(alpha: f64, grid: &ImGrid) -> Result<EstimateReport> {
    let mut sup = [0.0f64; 2];
    for (level, m) in [grid.m, 2.0 * grid.m].into_iter().enumerate() {
        for &tau in &grid.taus {
            sup[level] = sup[level].max(im_value(alpha, m, tau, 0.0)?.norm());
        }
    }
    let mut r = EstimateReport::from_levels(
        "im_xi_zero",
        "sup over the tau grid at xi = 0; M doubled",
        [("alpha".to_string(), alpha), ("M".to_string(), grid.m)].into_iter().collect(),
        sup[0],
        sup[1],
        0.01,
    );
    r.pass = r.pass && r.constant <= 1e-15;
    Ok(r)
}

pub fn verify_reports(cfg: &RunConfig) -> Result<Vec<EstimateReport>> {
    let a = cfg.alpha;
    let mut reports: Vec<EstimateReport> = Vec::new();
    let mut add = |batch: Vec<EstimateReport>, seconds: f64| {
        let share = seconds / batch.len().max(1) as f64;
        reports.extend(batch.into_iter().map(|r| r.timed(share)));
    };
    let suite = cfg.suite;
    let want = |s: Suite| suite == s || suite == Suite::All || (suite == Suite::KernelBounds && matches!(s, Suite::Envelopes | Suite::KernelL1));
    if want(Suite::Envelopes) {
        let spatial = [SpatialDerivative::None, SpatialDerivative::Gradient(0), SpatialDerivative::Hessian(0, 0)];
        for kind in [KernelKind::P, KernelKind::Q] {
            for side in [EnvelopeSide::Small, EnvelopeSide::Large] {
                for n in 0..=1 {
                    for s in spatial {
                        let (r, secs) = timed(|| envelope_probe(kind, a, cfg.d, n, s, side, cfg.points))?;
                        add(vec![r], secs);
                    }
                }
            }
        }
    }
    if want(Suite::KernelL1) {
        let samples = L1Samples::random(cfg.samples, cfg.seed);
        let (r, secs) = timed(|| kernel_l1_bounds(a, cfg.d, &samples))?;
        add(r.to_vec(), secs);
    }
    if want(Suite::Operators) {
        let settings = GlpSettings {
            d: cfg.d,
            length: cfg.length,
            horizon: cfg.horizon,
            points: cfg.nx,
            steps: cfg.nt,
            seed: cfg.seed,
            ..GlpSettings::default()
        };
        let (r, secs) = timed(|| glp_estimate_probe(a, cfg.p, cfg.q, cfg.samples, &settings))?;
        add(r.to_vec(), secs);
        let (r, secs) = timed(|| duhamel_probe(a, cfg.p, cfg.samples, &settings))?;
        add(vec![r], secs);
        let (r, secs) = timed(|| apriori_probe(a, cfg.p, cfg.q, cfg.samples, &settings))?;
        add(vec![r], secs);
    }
    if want(Suite::Im) {
        let grid = ImGrid::standard();
        let (r, secs) = timed(|| im_probe(a, &grid))?;
        add(vec![r], secs);
        let (r, secs) = timed(|| im_zero_report(a, &grid))?;
        add(vec![r], secs);
    }
    Ok(reports)
}

fn run_verify(cfg: &RunConfig) -> Result<Artifacts> {
    let timed_reports = verify_reports(cfg)?;
    let timings: Vec<Vec<String>> = timed_reports
        .iter()
        .map(|r| vec![r.id.clone(), fmt17(r.seconds.unwrap_or(0.0))])
        .collect();
    let reports: Vec<EstimateReport> = timed_reports
        .into_iter()
        .map(|r| EstimateReport { seconds: None, ..r })
        .collect();
    let mut out = Artifacts::default();
    out.failed = reports.iter().filter(|r| !r.pass).map(|r| r.id.clone()).collect();
    let summary = json!({ "reports": reports.len(), "failed": out.failed });
    out.push(cfg, cfg.artifact_name(), json_lines(&reports)?, summary.clone());
    out.push(cfg, "summary.csv".into(), report_summary_csv(&reports)?, summary);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["id", "seconds"]).map_err(io)?;
    for row in &timings {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push(cfg, "timings.csv".into(), bytes, json!({ "note": "wall-clock seconds; not deterministic" }));
    Ok(out)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-query median over `repeats` evaluations, then the median per regime.
fn run_bench(cfg: &RunConfig) -> Result<Artifacts> {
    let mut by_regime: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    match cfg.op {
        BenchOp::KernelEval => {
            let ctl = series_control(cfg);
            let spec = contour_spec(cfg);
            for i in 0..31 {
                let big_r = 10f64.powf(-3.0 + 0.2 * i as f64);
                let x = (big_r * cfg.t.powf(cfg.alpha)).sqrt();
                let q = KernelQuery::new(cfg.kind, cfg.alpha, cfg.t, &on_axis(cfg.d, x), cfg.n, cfg.spatial.0)?;
                let mut times = Vec::with_capacity(cfg.repeats);
                let mut regime = "";
                for _ in 0..cfg.repeats {
                    let (v, secs) = timed(|| kernel_eval(&q, &ctl, &spec))?;
                    regime = v.regime.name();
                    times.push(secs);
                }
                by_regime.entry(regime.to_string()).or_default().push(median(&mut times));
            }
        }
        BenchOp::MittagLeffler => {
            let ctl = MlControl {
                tol: cfg.ml_tol,
                ..MlControl::default()
            };
            for z in cfg.zs.values() {
                let q = MLQuery::real(cfg.alpha, cfg.beta, z)?;
                let mut times = Vec::with_capacity(cfg.repeats);
                let mut regime = "";
                for _ in 0..cfg.repeats {
                    let ((_, s), secs) = timed(|| mittag_leffler_with(q, &ctl))?;
                    regime = s.name();
                    times.push(secs);
                }
                by_regime.entry(regime.to_string()).or_default().push(median(&mut times));
            }
        }
    }
    let op = match cfg.op {
        BenchOp::KernelEval => "kernel_eval",
        BenchOp::MittagLeffler => "mittag_leffler",
    };
    let rows: Vec<serde_json::Value> = by_regime
        .iter_mut()
        .map(|(regime, v)| json!({ "op": op, "regime": regime, "count": v.len(), "median_seconds": median(v) }))
        .collect();
    let bytes = match cfg.format {
        Format::Json => json_lines(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["op", "regime", "count", "median_seconds"]).map_err(io)?;
            for r in &rows {
                w.write_record([
                    op.to_string(),
                    r["regime"].as_str().unwrap_or_default().to_string(),
                    r["count"].to_string(),
                    fmt17(r["median_seconds"].as_f64().unwrap_or(f64::NAN)),
                ])
                .map_err(io)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))?
        }
    };
    let mut out = Artifacts::default();
    out.push(cfg, cfg.artifact_name(), bytes, json!({ "note": "wall-clock seconds; not deterministic" }));
    Ok(out)
}
