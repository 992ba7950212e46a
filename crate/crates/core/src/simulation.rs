//! Seeded data generation and Monte Carlo studies.
//!
//! Reproducibility: replication `r` of a study with master seed `s` draws
//! from `ChaCha8Rng::seed_from_u64(s)` switched to stream `r` (see
//! [`replication_rng`]). Results therefore do not depend on the order in
//! which replications run or on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{BandConfig, BandPoint};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, GSpec, KnownG, Transform, TransformKind};
use crate::kernels::KernelSpec;
use crate::quadrature::{adaptive_simpson, integrate_box};
use crate::survival::Dataset;

/// Generator identification written into study metadata.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9); seed_from_u64(seed), stream = replication index; normals via rand_distr 0.5 StandardNormal";

pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One latent draw: covariates, response and censoring time.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub x: Vec<f64>,
    pub y: f64,
    pub c: f64,
}

/// A data-generating law for censored regression studies.
pub trait Design: Sync {
    fn dim(&self) -> usize;

    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw;

    /// Covariates and uncensored response.
    fn draw_response(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let d = self.draw(rng);
        (d.x, d.y)
    }

    /// `m_psi(x) = E[psi(Y) | X = x]`.
    fn regression(&self, psi: &Transform, x: &[f64]) -> f64;

    /// Density of the covariate at `x`.
    fn covariate_density(&self, x: &[f64]) -> f64;

    /// Distribution function of the censoring variable.
    fn censoring(&self) -> KnownG;

    /// `E[psi^2(Y) / (1 - G(Y)) | X = x] - m_psi(x)^2`, when finite and
    /// available in closed form.
    fn conditional_variance(&self, psi: &Transform, x: &[f64]) -> Option<f64>;

    /// `E[psi(Y) K((x - X)/h)] / E[K((x - X)/h)]` by quadrature over the
    /// kernel window.
    fn centering(&self, psi: &Transform, x: &[f64], h: f64, kernel: &KernelSpec) -> f64 {
        let r = h * kernel.support_radius();
        let lo: Vec<f64> = x.iter().map(|v| v - r).collect();
        let hi: Vec<f64> = x.iter().map(|v| v + r).collect();
        let weight = |u: &[f64]| {
            let s: Vec<f64> = x.iter().zip(u).map(|(a, b)| (a - b) / h).collect();
            kernel.eval_unchecked(&s) * self.covariate_density(u)
        };
        let num = integrate_box(
            &|u: &[f64]| weight(u) * self.regression(psi, u),
            &lo,
            &hi,
            1e-12,
        );
        let den = integrate_box(&weight, &lo, &hi, 1e-12);
        num / den
    }
}

/// `X ~ N(0,1)`, `p(x) = 0.25 + 0.5 cos^2(x)`,
/// `Y | X ~ U(t - p(X), 1 + t - p(X))` so that `P(Y <= t | X) = p(X)`,
/// and `C ~ U(0, 1)` independent of `(X, Y)`. The default threshold is
/// `t = 0.9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineDesign {
    pub threshold: f64,
}

impl Default for CosineDesign {
    fn default() -> Self {
        CosineDesign { threshold: 0.9 }
    }
}

/// `p(x) = 0.25 + 0.5 cos^2(x)`.
pub fn true_regression(x: f64) -> f64 {
    let c = x.cos();
    0.25 + 0.5 * c * c
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl CosineDesign {
    fn response_support(&self, x: f64) -> (f64, f64) {
        let a = self.threshold - true_regression(x);
        (a, a + 1.0)
    }

    /// The transform whose regression is `p`: `1{y <= threshold}`.
    pub fn transform(&self) -> Transform {
        Transform::indicator(self.threshold)
    }
}

/// Upper limit below which an indicator-type transform equals one, if the
/// transform is an indicator (possibly truncated).
fn indicator_limit(psi: &Transform) -> Option<f64> {
    match psi.kind {
        TransformKind::IndicatorLeq(t) => Some(match psi.upper_cutoff {
            Some(c) => t.min(c),
            None => t,
        }),
        _ => None,
    }
}

impl Design for CosineDesign {
    fn dim(&self) -> usize {
        1
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        let x: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let c: f64 = rng.random();
        let (a, _) = self.response_support(x);
        Draw {
            x: vec![x],
            y: a + u,
            c,
        }
    }

    fn regression(&self, psi: &Transform, x: &[f64]) -> f64 {
        let (a, b) = self.response_support(x[0]);
        if let Some(t) = indicator_limit(psi) {
            return (t.min(b) - a).clamp(0.0, 1.0);
        }
        let top = psi.upper_cutoff.map_or(b, |c| c.min(b));
        if top <= a {
            return 0.0;
        }
        match &psi.kind {
            TransformKind::Identity => 0.5 * (top * top - a * a),
            _ => adaptive_simpson(&|y| psi.apply(y), a, top, 1e-12),
        }
    }

    fn covariate_density(&self, x: &[f64]) -> f64 {
        std_normal_pdf(x[0])
    }

    fn censoring(&self) -> KnownG {
        KnownG::Uniform { lo: 0.0, hi: 1.0 }
    }

    /// Closed form for indicators below one:
    /// `int_a^t dy / (1 - y) - m^2 = ln((1 - a) / (1 - t)) - m^2`.
    fn conditional_variance(&self, psi: &Transform, x: &[f64]) -> Option<f64> {
        let t = indicator_limit(psi)?;
        let (a, b) = self.response_support(x[0]);
        let top = t.min(b);
        if top >= 1.0 {
            return None;
        }
        let m = self.regression(psi, x);
        let second = if top <= a {
            0.0
        } else {
            ((1.0 - a.max(0.0)) / (1.0 - top)).ln()
        };
        Some(second - m * m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    pub design: CosineDesign,
}

impl SimConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SimConfig {
            n,
            seed,
            design: CosineDesign::default(),
        }
    }
}

/// Draws `n` censored observations from `design` using `rng`.
pub fn generate_from<D: Design + ?Sized>(design: &D, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = design.dim();
    let mut z = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        let draw = design.draw(rng);
        z.push(draw.y.min(draw.c));
        delta.push(draw.y <= draw.c);
        x.extend_from_slice(&draw.x);
    }
    Dataset::new(z, delta, x, d)
}

/// Sample for replication 0 of `cfg`.
pub fn generate_sample(cfg: &SimConfig) -> Result<Dataset> {
    generate_replicate(cfg, 0)
}

pub fn generate_replicate(cfg: &SimConfig, replication: u64) -> Result<Dataset> {
    let mut rng = replication_rng(cfg.seed, replication);
    generate_from(&cfg.design, cfg.n, &mut rng)
}

/// Linear-interpolation quantile of sorted data (`p` in `[0, 1]`).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Quantiles {
    /// Quantiles of the finite entries of `values`.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Quantiles {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        Quantiles {
            q05: quantile_sorted(&v, 0.05),
            q25: quantile_sorted(&v, 0.25),
            q50: quantile_sorted(&v, 0.50),
            q75: quantile_sorted(&v, 0.75),
            q95: quantile_sorted(&v, 0.95),
        }
    }
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    Quantiles::of(values).q50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub censoring_rate: f64,
    /// False when no grid point had a nonempty kernel window.
    pub ok: bool,
    /// Location of the largest absolute error over the grid.
    pub x0: Vec<f64>,
    pub estimate: f64,
    pub truth: f64,
    pub halfwidth: f64,
    pub sup_error: f64,
    /// `|estimate - truth| - halfwidth` at `x0`.
    pub epsilon1: f64,
    /// Smallest band inflation covering the truth at every grid point.
    pub critical_inflation: f64,
    pub covered: bool,
    pub missing_points: usize,
}

impl ReplicationRecord {
    fn failed(replication: u64, censoring_rate: f64, missing: usize) -> Self {
        ReplicationRecord {
            replication,
            censoring_rate,
            ok: false,
            x0: Vec::new(),
            estimate: f64::NAN,
            truth: f64::NAN,
            halfwidth: f64::NAN,
            sup_error: f64::NAN,
            epsilon1: f64::NAN,
            critical_inflation: f64::INFINITY,
            covered: false,
            missing_points: missing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub seed: u64,
    pub replications: usize,
    pub failed: usize,
    pub inflation: f64,
    pub records: Vec<ReplicationRecord>,
    pub epsilon1: Quantiles,
    pub sup_error: Quantiles,
    pub censoring_rate: Quantiles,
    /// Fraction of replications whose inflated band covers the truth at
    /// every grid point.
    pub simultaneous_coverage: f64,
    /// Per grid point, fraction of replications covering the truth there.
    pub pointwise_coverage: Vec<f64>,
    pub rng: String,
}

impl SimReport {
    /// Simultaneous coverage at another inflation, from the recorded
    /// critical inflations.
    pub fn coverage_at(&self, inflation: f64) -> f64 {
        let hit = self
            .records
            .iter()
            .filter(|r| r.ok && r.critical_inflation <= inflation)
            .count();
        hit as f64 / self.replications as f64
    }

    pub fn median_abs_epsilon1(&self) -> f64 {
        median(self.records.iter().filter(|r| r.ok).map(|r| r.epsilon1.abs()))
    }
}

/// Bandwidth handling of a study: one fixed value or the band rule.
enum StudyBandwidth<'a> {
    Fixed(f64),
    Rule(&'a BandConfig),
}

struct ReplicationOutcome {
    record: ReplicationRecord,
    pointwise: Vec<bool>,
}

#[allow(clippy::too_many_arguments)]
fn run_replication(
    cfg: &SimConfig,
    replication: u64,
    bandwidth: &StudyBandwidth<'_>,
    grid: &[Vec<f64>],
    band_cfg: &BandConfig,
    kernel: &KernelSpec,
    g: &GSpec,
    inflation: f64,
) -> Result<ReplicationOutcome> {
    let data = generate_replicate(cfg, replication)?;
    let censoring_rate = 1.0 - data.uncensored_fraction();
    let est = Estimator::new(&data, kernel, g)?;
    let psi = cfg.design.transform();
    let volume = band_cfg.region.volume();
    let n = data.len();

    let mut points: Vec<Option<(BandPoint, f64)>> = Vec::with_capacity(grid.len());
    for x in grid {
        let h = match bandwidth {
            StudyBandwidth::Fixed(h) => *h,
            StudyBandwidth::Rule(c) => c.bandwidth.resolve(x, n),
        };
        match est.band_point(&psi, x, h, band_cfg.theta, volume) {
            Ok(bp) => points.push(Some((bp, cfg.design.regression(&psi, x)))),
            Err(Error::EmptyWindow { .. }) => points.push(None),
            Err(e) => return Err(e),
        }
    }

    let missing = points.iter().filter(|p| p.is_none()).count();
    let mut best: Option<usize> = None;
    let mut best_err = f64::NEG_INFINITY;
    let mut critical = 0.0_f64;
    let mut pointwise = Vec::with_capacity(grid.len());
    for (k, p) in points.iter().enumerate() {
        match p {
            Some((bp, truth)) => {
                let err = (bp.estimate - truth).abs();
                // strict: ties keep the earliest (smallest) grid point
                if err > best_err {
                    best_err = err;
                    best = Some(k);
                }
                let ratio = if err == 0.0 {
                    0.0
                } else if bp.halfwidth == 0.0 {
                    f64::INFINITY
                } else {
                    err / bp.halfwidth
                };
                critical = critical.max(ratio);
                pointwise.push(covers(err, bp.halfwidth, inflation));
            }
            None => pointwise.push(false),
        }
    }
    let Some(k0) = best else {
        return Ok(ReplicationOutcome {
            record: ReplicationRecord::failed(replication, censoring_rate, missing),
            pointwise,
        });
    };
    if missing > 0 {
        critical = f64::INFINITY;
    }
    let (bp, truth) = points[k0].expect("argmax is a present point");
    let record = ReplicationRecord {
        replication,
        censoring_rate,
        ok: true,
        x0: grid[k0].clone(),
        estimate: bp.estimate,
        truth,
        halfwidth: bp.halfwidth,
        sup_error: best_err,
        epsilon1: epsilon1(bp.estimate, truth, bp.halfwidth),
        critical_inflation: critical,
        covered: pointwise.iter().all(|&c| c),
        missing_points: missing,
    };
    Ok(ReplicationOutcome { record, pointwise })
}

fn covers(err: f64, halfwidth: f64, inflation: f64) -> bool {
    inflation == f64::INFINITY || err <= inflation * halfwidth
}

/// `|estimate - truth| - halfwidth`.
pub fn epsilon1(estimate: f64, truth: f64, halfwidth: f64) -> f64 {
    (estimate - truth).abs() - halfwidth
}

#[allow(clippy::too_many_arguments)]
fn run_study(
    cfg: &SimConfig,
    bandwidth: StudyBandwidth<'_>,
    replications: usize,
    grid: &[Vec<f64>],
    band_cfg: &BandConfig,
    kernel: &KernelSpec,
    g: &GSpec,
    inflation: f64,
) -> Result<SimReport> {
    if replications == 0 {
        return Err(Error::param("at least one replication is required"));
    }
    if grid.is_empty() {
        return Err(Error::param("study grid is empty"));
    }
    if !(inflation >= 0.0) {
        return Err(Error::param(format!("inflation must be nonnegative, got {inflation}")));
    }
    band_cfg.validate()?;
    let outcomes: Vec<ReplicationOutcome> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            run_replication(cfg, r, &bandwidth, grid, band_cfg, kernel, g, inflation).unwrap_or_else(
                |_| ReplicationOutcome {
                    record: ReplicationRecord::failed(r, f64::NAN, grid.len()),
                    pointwise: vec![false; grid.len()],
                },
            )
        })
        .collect();

    let reps = replications as f64;
    let mut pointwise_coverage = vec![0.0; grid.len()];
    for o in &outcomes {
        for (acc, &c) in pointwise_coverage.iter_mut().zip(&o.pointwise) {
            if c {
                *acc += 1.0;
            }
        }
    }
    for v in &mut pointwise_coverage {
        *v /= reps;
    }
    let records: Vec<ReplicationRecord> = outcomes.into_iter().map(|o| o.record).collect();
    let ok = || records.iter().filter(|r| r.ok);
    Ok(SimReport {
        n: cfg.n,
        seed: cfg.seed,
        replications,
        failed: records.iter().filter(|r| !r.ok).count(),
        inflation,
        epsilon1: Quantiles::of(ok().map(|r| r.epsilon1)),
        sup_error: Quantiles::of(ok().map(|r| r.sup_error)),
        censoring_rate: Quantiles::of(records.iter().map(|r| r.censoring_rate)),
        simultaneous_coverage: records.iter().filter(|r| r.covered).count() as f64 / reps,
        pointwise_coverage,
        records,
        rng: RNG_ALGORITHM.to_string(),
    })
}

/// Distribution of `epsilon1(h, n)` over replications, with Kaplan-Meier
/// censoring weights and the Epanechnikov kernel. The band is evaluated at
/// inflation one.
pub fn epsilon1_study(
    cfg: &SimConfig,
    h: f64,
    replications: usize,
    x_grid: &[f64],
    band_cfg: &BandConfig,
) -> Result<SimReport> {
    let grid: Vec<Vec<f64>> = x_grid.iter().map(|&x| vec![x]).collect();
    run_study(
        cfg,
        StudyBandwidth::Fixed(h),
        replications,
        &grid,
        band_cfg,
        &KernelSpec::epanechnikov(1),
        &GSpec::KaplanMeier,
        1.0,
    )
}

/// Coverage of `m* +/- inflation * L_n` for the true regression, with the
/// bandwidth taken from `band_cfg`.
pub fn coverage_study(
    cfg: &SimConfig,
    band_cfg: &BandConfig,
    replications: usize,
    x_grid: &[f64],
    inflation: f64,
) -> Result<SimReport> {
    let grid: Vec<Vec<f64>> = x_grid.iter().map(|&x| vec![x]).collect();
    run_study(
        cfg,
        StudyBandwidth::Rule(band_cfg),
        replications,
        &grid,
        band_cfg,
        &KernelSpec::epanechnikov(1),
        &GSpec::KaplanMeier,
        inflation,
    )
}

/// Default study grid: 201 equally spaced points on `[-1, 1]`.
pub fn default_grid() -> Vec<f64> {
    crate::bands::linspace(-1.0, 1.0, 201)
}

/// `sqrt( int K^2 * sup_x sigma^2(x) / f(x) )` over `grid`.
pub fn limit_constant<D: Design + ?Sized>(
    design: &D,
    psi: &Transform,
    kernel: &KernelSpec,
    grid: &[Vec<f64>],
) -> Option<f64> {
    let mut sup = f64::NEG_INFINITY;
    for x in grid {
        let s = design.conditional_variance(psi, x)? / design.covariate_density(x);
        sup = sup.max(s);
    }
    Some((kernel.l2_norm() * sup).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub n: usize,
    pub limit: f64,
    /// `D_n / limit` per replication.
    pub ratios: Vec<f64>,
    pub ratio_quantiles: Quantiles,
}

/// Normalized uniform deviation
/// `D_n = sup_{h, x} sqrt(n h^d) |m*(x; h) - centering(x; h)| / sqrt(2 log(1/h^d))`
/// over a bandwidth grid and a point grid, relative to [`limit_constant`].
pub fn sup_deviation_study(
    cfg: &SimConfig,
    h_grid: &[f64],
    grid: &[Vec<f64>],
    replications: usize,
) -> Result<DeviationReport> {
    if h_grid.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
        return Err(Error::param("deviation bandwidths must lie in (0, 1)"));
    }
    if replications == 0 || grid.is_empty() || h_grid.is_empty() {
        return Err(Error::param("deviation study needs replications, bandwidths and points"));
    }
    let kernel = KernelSpec::epanechnikov(1);
    let psi = cfg.design.transform();
    let limit = limit_constant(&cfg.design, &psi, &kernel, grid)
        .ok_or_else(|| Error::param("conditional variance unavailable for this transform"))?;
    let centering: Vec<Vec<f64>> = h_grid
        .iter()
        .map(|&h| {
            grid.par_iter()
                .map(|x| cfg.design.centering(&psi, x, h, &kernel))
                .collect()
        })
        .collect();
    let n = cfg.n as f64;
    let ratios = (0..replications as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let data = generate_replicate(cfg, r)?;
            let est = Estimator::new(&data, &kernel, &GSpec::KaplanMeier)?;
            let mut sup = 0.0_f64;
            for (hk, &h) in h_grid.iter().enumerate() {
                let norm = (n * h).sqrt() / (2.0 * (1.0 / h).ln()).sqrt();
                for (x, c) in grid.iter().zip(&centering[hk]) {
                    match est.regression(&psi, x, h) {
                        Ok(m) => sup = sup.max(norm * (m - c).abs()),
                        Err(Error::EmptyWindow { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(sup / limit)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DeviationReport {
        n: cfg.n,
        limit,
        ratio_quantiles: Quantiles::of(ratios.iter().copied()),
        ratios,
    })
}
