//! Command dispatch. Every command computes its outputs in memory first
//! and only then writes them, so failures leave no partial files.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde_json::json;

use ipcw::io::{self, write_comments};
use ipcw::simulation::{self, SimConfig, SimReport};
use ipcw::{
    BandConfig, BandwidthRule, BaseKernel, Dataset, Estimator, GSpec, KernelSpec, KnownG, Region,
    Transform,
};

use crate::args::*;
use crate::error::{CliError, ExitCode};
use crate::parse::{self, BandwidthSpec};
use crate::svg::{self, Series};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "IPCW_THREADS";

/// One artifact: a file, or stdout when `path` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

impl Output {
    fn new(path: Option<PathBuf>, bytes: Vec<u8>) -> Self {
        Output { path, bytes }
    }
}

/// Parses `args` (program name first), runs the command, writes outputs and
/// returns the process exit code. Errors are reported on stderr as JSON.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match parse_and_run(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code() as i32
        }
    }
}

fn parse_and_run(mut argv: Vec<OsString>) -> Result<i32, CliError> {
    if let Some(path) = config_path(&argv) {
        let text = fs::read_to_string(&path).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            source: e.into(),
        })?;
        merge_config(&mut argv, &text)?;
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(0);
            }
            return Err(CliError::config(e.to_string()));
        }
    };
    configure_threads(cli.threads)?;
    let outputs = run(&cli)?;
    write_outputs(&outputs)?;
    Ok(ExitCode::Ok as i32)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Appends config-file values for flags not given on the command line.
fn merge_config(argv: &mut Vec<OsString>, text: &str) -> Result<(), CliError> {
    let present: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    for (key, value) in parse::config_to_args(text)? {
        let flag = format!("--{key}");
        let given = present
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given || key == "config" {
            continue;
        }
        argv.push(flag.into());
        if let Some(v) = value {
            argv.push(v.into());
        }
    }
    Ok(())
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::config("thread count must be positive"));
        }
        // A pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn write_outputs(outputs: &[Output]) -> Result<(), CliError> {
    for out in outputs {
        match &out.path {
            Some(p) => {
                let io_err = |e: std::io::Error| CliError::Output {
                    path: p.display().to_string(),
                    source: e,
                };
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(io_err)?;
                }
                fs::write(p, &out.bytes).map_err(io_err)?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(&out.bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Output {
                        path: "<stdout>".into(),
                        source: e,
                    })?;
            }
        }
    }
    Ok(())
}

/// Runs a parsed command and returns its artifacts without writing them.
pub fn run(cli: &Cli) -> Result<Vec<Output>, CliError> {
    let prov = provenance(&cli.command);
    match &cli.command {
        Command::Km(a) => km(a, &prov),
        Command::Fit(a) => {
            let psi = with_cutoff(parse::parse_psi(&a.psi)?, a.est.tau0);
            estimate(&a.est, &prov, Quantity::Regression(psi))
        }
        Command::Cdf(a) => estimate(&a.est, &prov, Quantity::Cdf { t: a.t }),
        Command::Density(a) => estimate(&a.est, &prov, Quantity::Density { t: a.t, ell: a.ell }),
        Command::Hazard(a) => estimate(&a.est, &prov, Quantity::Hazard { t: a.t, ell: a.ell }),
        Command::Bands(a) => bands(a, &prov),
        Command::Simulate(SimulateCommand::Generate(a)) => generate(a, &prov),
        Command::Simulate(SimulateCommand::Epsilon1(a)) => epsilon1(a, &prov),
        Command::Simulate(SimulateCommand::Coverage(a)) => coverage(a, &prov),
    }
}

fn provenance(command: &Command) -> Vec<String> {
    vec![
        format!("ipcw {}", ipcw::VERSION),
        format!(
            "config: {}",
            serde_json::to_string(command).unwrap_or_else(|_| "{}".into())
        ),
    ]
}

fn sim_provenance(prov: &[String]) -> Vec<String> {
    let mut p = prov.to_vec();
    p.push(format!("rng: {}", simulation::RNG_ALGORITHM));
    p
}

fn provenance_json(prov: &[String]) -> serde_json::Value {
    json!(prov)
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    io::parse_dataset(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        source: e,
    })
}

fn build_kernel(name: &str, dim: usize) -> Result<KernelSpec, CliError> {
    let base: BaseKernel = name.parse().map_err(|e: ipcw::Error| CliError::config(e.to_string()))?;
    Ok(KernelSpec::new(base, dim)?)
}

fn build_g(path: Option<&Path>) -> Result<GSpec, CliError> {
    match path {
        None => Ok(GSpec::KaplanMeier),
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| CliError::Input {
                path: p.display().to_string(),
                source: e.into(),
            })?;
            let sf = io::read_distribution_table(file).map_err(|e| CliError::Input {
                path: p.display().to_string(),
                source: e,
            })?;
            Ok(GSpec::Known(KnownG::Step(sf)))
        }
    }
}

fn with_cutoff(psi: Transform, tau0: Option<f64>) -> Transform {
    match tau0 {
        Some(t) => psi.with_cutoff(t),
        None => psi,
    }
}

fn data_region(data: &Dataset) -> Result<Region, CliError> {
    let d = data.dim();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for i in 0..data.len() {
        for (b, &v) in bounds.iter_mut().zip(data.covariate(i)) {
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    Region::new(bounds).map_err(|_| {
        CliError::config("covariates have zero range; pass --region or --at explicitly")
    })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn x_header(d: usize, single_name: bool) -> Vec<String> {
    if d == 1 && single_name {
        vec!["x".into()]
    } else {
        (1..=d).map(|j| format!("x{j}")).collect()
    }
}

/// CSV rendered with leading provenance comments.
fn csv_bytes(comments: &[String], header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    write_comments(&mut out, comments).expect("in-memory write");
    out.extend_from_slice(header.join(",").as_bytes());
    out.push(b'\n');
    for r in rows {
        out.extend_from_slice(r.join(",").as_bytes());
        out.push(b'\n');
    }
    out
}

fn km(a: &KmArgs, prov: &[String]) -> Result<Vec<Output>, CliError> {
    let data = load_dataset(&a.data)?;
    let g = ipcw::km_censoring(&data)?;
    let rows: Vec<Vec<String>> = g
        .jumps()
        .iter()
        .zip(g.values())
        .map(|(u, v)| vec![fmt(*u), fmt(*v)])
        .collect();
    let bytes = csv_bytes(prov, &["u".into(), "G".into()], &rows);
    Ok(vec![Output::new(a.out.clone(), bytes)])
}

enum Quantity {
    Regression(Transform),
    Cdf { t: f64 },
    Density { t: f64, ell: f64 },
    Hazard { t: f64, ell: f64 },
}

fn estimate(a: &EstimationArgs, prov: &[String], q: Quantity) -> Result<Vec<Output>, CliError> {
    let data = load_dataset(&a.data)?;
    let d = data.dim();
    let kernel = build_kernel(&a.kernel, d)?;
    let g = build_g(a.known_g.as_deref())?;
    let hs = match (&a.h, &a.h_grid) {
        (Some(h), None) => vec![*h],
        (None, Some(grid)) => parse::parse_h_grid(grid)?,
        _ => return Err(CliError::config("exactly one of --h or --h-grid is required")),
    };
    if hs.iter().any(|h| !(*h > 0.0)) {
        return Err(CliError::config("bandwidths must be positive"));
    }
    let points = evaluation_points(a, &data)?;
    let est = Estimator::new(&data, &kernel, &g)?;
    let beyond = match (&q, a.tau0) {
        (Quantity::Cdf { t } | Quantity::Density { t, .. } | Quantity::Hazard { t, .. }, Some(tau0)) => {
            *t > tau0
        }
        _ => false,
    };

    let jobs: Vec<(&Vec<f64>, f64)> = points
        .iter()
        .flat_map(|x| hs.iter().map(move |&h| (x, h)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(x, h)| -> Result<Vec<String>, CliError> {
            let mut flags = Vec::new();
            let value = match &q {
                Quantity::Regression(psi) => est.regression(psi, x, h).map(Some),
                Quantity::Cdf { t } => est.cdf(*t, x, h).map(|c| {
                    if c.raw != c.value {
                        flags.push("clamped");
                    }
                    Some(c.value)
                }),
                Quantity::Density { t, ell } => est.density(*t, *ell, x, h).map(Some),
                Quantity::Hazard { t, ell } => {
                    match est.hazard(*t, *ell, x, h, ipcw::estimators::HAZARD_GUARD) {
                        Err(ipcw::Error::DegenerateDenominator { .. }) => {
                            flags.push("degenerate");
                            Ok(None)
                        }
                        other => other.map(Some),
                    }
                }
            };
            let value = match value {
                Ok(v) => v,
                Err(ipcw::Error::EmptyWindow { .. }) => {
                    flags.push("missing");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            if beyond {
                flags.push("beyond_tau0");
            }
            let mut row: Vec<String> = x.iter().map(|v| fmt(*v)).collect();
            row.push(fmt(h));
            row.push(value.map(fmt).unwrap_or_default());
            row.push(if flags.is_empty() { "ok".into() } else { flags.join("|") });
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut header = x_header(d, false);
    header.extend(["h", "estimate", "flag"].map(String::from));
    Ok(vec![Output::new(a.out.clone(), csv_bytes(prov, &header, &rows))])
}

fn evaluation_points(a: &EstimationArgs, data: &Dataset) -> Result<Vec<Vec<f64>>, CliError> {
    if let Some(at) = &a.at {
        let x = parse::parse_list(at)?;
        if x.len() != data.dim() {
            return Err(CliError::config(format!(
                "--at has {} coordinates but the dataset has d = {}",
                x.len(),
                data.dim()
            )));
        }
        return Ok(vec![x]);
    }
    let region = match &a.region {
        Some(r) => parse::parse_region(r)?,
        None => data_region(data)?,
    };
    if region.dim() != data.dim() {
        return Err(CliError::config("region dimension does not match the dataset"));
    }
    grid_points(&region, a.grid)
}

fn grid_points(region: &Region, steps: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if steps == 0 {
        return Err(CliError::config("--grid must be positive"));
    }
    let total = (steps as f64).powi(region.dim() as i32);
    if total > 1e7 {
        return Err(CliError::config("evaluation grid is too large"));
    }
    Ok(region.grid(steps))
}

/// Piecewise-linear interpolation of a tabulated truth; NaN outside.
fn interpolate(table: &ipcw::StepFunction, x: f64) -> f64 {
    let xs = table.jumps();
    let ys = table.values();
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 || (k == xs.len() && x > xs[xs.len() - 1]) {
        return f64::NAN;
    }
    if k == xs.len() {
        return ys[k - 1];
    }
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn bandwidth_rule(spec: BandwidthSpec, bounds: Option<&str>) -> Result<BandwidthRule, CliError> {
    Ok(match spec {
        BandwidthSpec::Fixed(h) => BandwidthRule::Fixed(h),
        BandwidthSpec::PowerLaw { a, delta0 } => BandwidthRule::PowerLaw { a, delta0 },
        BandwidthSpec::Table(path) => {
            let file = fs::File::open(&path).map_err(|e| CliError::Input {
                path: path.display().to_string(),
                source: e.into(),
            })?;
            let mut table = io::read_bandwidth_table(file).map_err(|e| CliError::Input {
                path: path.display().to_string(),
                source: e,
            })?;
            if let Some(b) = bounds {
                let (c1, c2, hn) = parse::parse_bounds(b)?;
                table = table.with_reference(c1, c2, hn);
            }
            BandwidthRule::PerPoint(table)
        }
    })
}

fn bands(a: &BandsArgs, prov: &[String]) -> Result<Vec<Output>, CliError> {
    let spec = parse::parse_bandwidth(&a.bandwidth)?;
    let psi = with_cutoff(parse::parse_psi(&a.psi)?, a.tau0);
    let data = load_dataset(&a.data)?;
    let d = data.dim();
    let kernel = build_kernel(&a.kernel, d)?;
    let g = build_g(a.known_g.as_deref())?;
    let region = match &a.region {
        Some(r) => parse::parse_region(r)?,
        None => data_region(&data)?,
    };
    let rule = bandwidth_rule(spec, a.bounds.as_deref())?;
    let cfg = BandConfig::new(a.theta.unwrap_or(std::f64::consts::E), region, rule)?;
    let truth = match &a.truth {
        Some(p) => {
            if d != 1 {
                return Err(CliError::config("--truth is only supported for d = 1"));
            }
            let file = fs::File::open(p).map_err(|e| CliError::Input {
                path: p.display().to_string(),
                source: e.into(),
            })?;
            Some(io::read_step_table(file).map_err(|e| CliError::Input {
                path: p.display().to_string(),
                source: e,
            })?)
        }
        None => None,
    };
    let grid = grid_points(&cfg.region, a.grid)?;
    let est = Estimator::new(&data, &kernel, &g)?;
    let curve = est.confidence_band(&psi, &grid, &cfg)?;

    let mut comments = prov.to_vec();
    for w in &curve.warnings {
        eprintln!("{}", json!({ "warning": w }));
        comments.push(format!("warning: {w}"));
    }
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            let mut row: Vec<String> = p.x.iter().map(|v| fmt(*v)).collect();
            row.push(fmt(p.h));
            match &p.band {
                Some(b) => {
                    row.extend([fmt(b.estimate), fmt(b.lower), fmt(b.upper), "ok".into()]);
                }
                None => row.extend([String::new(), String::new(), String::new(), "missing".into()]),
            }
            row
        })
        .collect();
    let mut header = x_header(d, true);
    header.extend(["h", "estimate", "lower", "upper", "flag"].map(String::from));
    let mut outputs = vec![Output::new(a.out.clone(), csv_bytes(&comments, &header, &rows))];

    if let Some(svg_path) = &a.svg {
        if d != 1 {
            return Err(CliError::config("--svg is only supported for d = 1"));
        }
        let pick = |f: fn(&ipcw::bands::Band) -> f64| -> Vec<(f64, f64)> {
            curve
                .points
                .iter()
                .map(|p| (p.x[0], p.band.as_ref().map_or(f64::NAN, f)))
                .collect()
        };
        let mut series = vec![
            Series { label: "estimate", points: pick(|b| b.estimate), color: "black", dash: Some("6,4") },
            Series { label: "lower", points: pick(|b| b.lower), color: "steelblue", dash: Some("2,3") },
            Series { label: "upper", points: pick(|b| b.upper), color: "steelblue", dash: Some("2,3") },
        ];
        if let Some(t) = &truth {
            series.push(Series {
                label: "truth",
                points: curve.points.iter().map(|p| (p.x[0], interpolate(t, p.x[0]))).collect(),
                color: "firebrick",
                dash: None,
            });
        }
        let svg = svg::line_plot("IPCW estimate and simultaneous band", &series);
        outputs.push(Output::new(Some(svg_path.clone()), svg.into_bytes()));
    }
    Ok(outputs)
}

fn generate(a: &GenerateArgs, prov: &[String]) -> Result<Vec<Output>, CliError> {
    if a.n == 0 {
        return Err(CliError::config("--n must be positive"));
    }
    let data = simulation::generate_sample(&SimConfig::new(a.n, a.seed))?;
    let mut bytes = Vec::new();
    io::write_dataset(&mut bytes, &data, &sim_provenance(prov)).expect("in-memory write");
    Ok(vec![Output::new(a.out.clone(), bytes)])
}

fn replication_header() -> Vec<String> {
    [
        "n", "h", "replication", "ok", "censoring_rate", "x0", "estimate", "truth", "halfwidth",
        "sup_error", "epsilon1", "critical_inflation", "covered",
    ]
    .map(String::from)
    .to_vec()
}

fn replication_rows(report: &SimReport, h: &str) -> Vec<Vec<String>> {
    report
        .records
        .iter()
        .map(|r| {
            vec![
                report.n.to_string(),
                h.to_string(),
                r.replication.to_string(),
                u8::from(r.ok).to_string(),
                fmt(r.censoring_rate),
                r.x0.first().map(|v| fmt(*v)).unwrap_or_default(),
                fmt(r.estimate),
                fmt(r.truth),
                fmt(r.halfwidth),
                fmt(r.sup_error),
                fmt(r.epsilon1),
                fmt(r.critical_inflation),
                u8::from(r.covered).to_string(),
            ]
        })
        .collect()
}

fn study_summary(report: &SimReport, bandwidth: &str) -> serde_json::Value {
    json!({
        "n": report.n,
        "bandwidth": bandwidth,
        "seed": report.seed,
        "replications": report.replications,
        "failed": report.failed,
        "inflation": report.inflation,
        "epsilon1": report.epsilon1,
        "median_abs_epsilon1": report.median_abs_epsilon1(),
        "sup_error": report.sup_error,
        "censoring_rate": report.censoring_rate,
        "simultaneous_coverage": report.simultaneous_coverage,
        "simultaneous_coverage_at_1": report.coverage_at(1.0),
    })
}

fn study_grid(steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::config("--grid must be positive"));
    }
    Ok(ipcw::bands::linspace(-1.0, 1.0, steps))
}

/// Estimate, band and truth on the first replication's sample.
fn figure1(
    cfg: &SimConfig,
    band: &BandConfig,
    grid: &[f64],
    dir: &Path,
    stem: &str,
    prov: &[String],
) -> Result<Vec<Output>, CliError> {
    let data = simulation::generate_replicate(cfg, 0)?;
    let est = Estimator::new(&data, &KernelSpec::epanechnikov(1), &GSpec::KaplanMeier)?;
    let points: Vec<Vec<f64>> = grid.iter().map(|&x| vec![x]).collect();
    let curve = est.confidence_band(&cfg.design.transform(), &points, band)?;
    let mut rows = Vec::new();
    let mut series: [Vec<(f64, f64)>; 4] = Default::default();
    for p in &curve.points {
        let x = p.x[0];
        let truth = simulation::true_regression(x);
        let (e, l, u) = p
            .band
            .map_or((f64::NAN, f64::NAN, f64::NAN), |b| (b.estimate, b.lower, b.upper));
        rows.push(vec![fmt(x), fmt(p.h), fmt(e), fmt(l), fmt(u), fmt(truth)]);
        for (s, v) in series.iter_mut().zip([e, l, u, truth]) {
            s.push((x, v));
        }
    }
    let header = ["x", "h", "estimate", "lower", "upper", "truth"].map(String::from);
    let [e, l, u, t] = series;
    let svg = svg::line_plot(
        &format!("n = {}, {stem}", cfg.n),
        &[
            Series { label: "truth", points: t, color: "black", dash: None },
            Series { label: "estimate", points: e, color: "firebrick", dash: Some("6,4") },
            Series { label: "band", points: l, color: "steelblue", dash: Some("2,3") },
            Series { label: "", points: u, color: "steelblue", dash: Some("2,3") },
        ],
    );
    Ok(vec![
        Output::new(Some(dir.join(format!("figure1_{stem}.csv"))), csv_bytes(prov, &header, &rows)),
        Output::new(Some(dir.join(format!("figure1_{stem}.svg"))), svg.into_bytes()),
    ])
}

fn epsilon1(a: &Epsilon1Args, prov: &[String]) -> Result<Vec<Output>, CliError> {
    let ns = parse::parse_count_list(&a.n)?;
    let hs = parse::parse_list(&a.h)?;
    if ns.contains(&0) || hs.iter().any(|&h| !(h > 0.0)) {
        return Err(CliError::config("sample sizes and bandwidths must be positive"));
    }
    if a.reps == 0 {
        return Err(CliError::config("--reps must be positive"));
    }
    if a.figures && a.out_dir.is_none() {
        return Err(CliError::config("--figures requires --out-dir"));
    }
    let grid = study_grid(a.grid)?;
    let theta = a.theta.unwrap_or(std::f64::consts::E);
    let prov = sim_provenance(prov);

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut boxes = Vec::new();
    let mut fig2_rows = Vec::new();
    for &n in &ns {
        for &h in &hs {
            let band = BandConfig::new(theta, Region::interval(-1.0, 1.0)?, BandwidthRule::Fixed(h))?;
            let cfg = SimConfig::new(n, a.seed);
            let report = simulation::epsilon1_study(&cfg, h, a.reps, &grid, &band)?;
            rows.extend(replication_rows(&report, &fmt(h)));
            summaries.push(study_summary(&report, &format!("fixed:{h}")));
            let q = report.epsilon1;
            fig2_rows.push(vec![n.to_string(), fmt(h), fmt(q.q05), fmt(q.q25), fmt(q.q50), fmt(q.q75), fmt(q.q95)]);
            boxes.push((format!("n={n} h={h}"), q));
        }
    }
    let summary = json!({ "provenance": provenance_json(&prov), "studies": summaries });
    let summary_bytes = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")).into_bytes();
    let Some(dir) = &a.out_dir else {
        return Ok(vec![Output::new(None, summary_bytes)]);
    };
    let mut outputs = vec![
        Output::new(Some(dir.join("replications.csv")), csv_bytes(&prov, &replication_header(), &rows)),
        Output::new(Some(dir.join("summary.json")), summary_bytes),
    ];
    if a.figures {
        let header = ["n", "h", "q05", "q25", "q50", "q75", "q95"].map(String::from);
        outputs.push(Output::new(Some(dir.join("figure2.csv")), csv_bytes(&prov, &header, &fig2_rows)));
        outputs.push(Output::new(
            Some(dir.join("figure2.svg")),
            svg::box_plot("epsilon1(h, n)", &boxes).into_bytes(),
        ));
        for &h in &hs {
            let band = BandConfig::new(theta, Region::interval(-1.0, 1.0)?, BandwidthRule::Fixed(h))?;
            let cfg = SimConfig::new(ns[0], a.seed);
            outputs.extend(figure1(&cfg, &band, &grid, dir, &format!("h{h}"), &prov)?);
        }
    }
    Ok(outputs)
}

fn coverage(a: &CoverageArgs, prov: &[String]) -> Result<Vec<Output>, CliError> {
    let rule = match parse::parse_bandwidth(&a.bandwidth)? {
        BandwidthSpec::Table(_) => {
            return Err(CliError::config("coverage studies take fixed or power bandwidths"))
        }
        spec => bandwidth_rule(spec, None)?,
    };
    if a.n == 0 || a.reps == 0 {
        return Err(CliError::config("--n and --reps must be positive"));
    }
    if a.figures && a.out_dir.is_none() {
        return Err(CliError::config("--figures requires --out-dir"));
    }
    let grid = study_grid(a.grid)?;
    let band = BandConfig::new(
        a.theta.unwrap_or(std::f64::consts::E),
        Region::interval(-1.0, 1.0)?,
        rule,
    )?;
    let cfg = SimConfig::new(a.n, a.seed);
    let report = simulation::coverage_study(&cfg, &band, a.reps, &grid, a.inflation)?;
    let prov = sim_provenance(prov);
    let h = fmt(band.bandwidth.resolve(&[0.0], a.n));
    let mut summary = study_summary(&report, &a.bandwidth);
    summary["provenance"] = provenance_json(&prov);
    let summary_bytes = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")).into_bytes();
    let Some(dir) = &a.out_dir else {
        return Ok(vec![Output::new(None, summary_bytes)]);
    };
    let pointwise: Vec<Vec<String>> = grid
        .iter()
        .zip(&report.pointwise_coverage)
        .map(|(x, c)| vec![fmt(*x), fmt(*c)])
        .collect();
    let mut outputs = vec![
        Output::new(
            Some(dir.join("replications.csv")),
            csv_bytes(&prov, &replication_header(), &replication_rows(&report, &h)),
        ),
        Output::new(
            Some(dir.join("pointwise.csv")),
            csv_bytes(&prov, &["x".into(), "coverage".into()], &pointwise),
        ),
        Output::new(Some(dir.join("summary.json")), summary_bytes),
    ];
    if a.figures {
        outputs.extend(figure1(&cfg, &band, &grid, dir, &format!("h{h}"), &prov)?);
    }
    Ok(outputs)
}
