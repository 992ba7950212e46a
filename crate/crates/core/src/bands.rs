//! Plug-in variance estimates and simultaneous confidence bands.
//!
//! At a point `x` with bandwidth `H = H_n(x)` the band is
//! `m*(x) +/- L_n(x)` where
//!
//! ```text
//! L_n(x) = sqrt( 2 log_{theta,K}(V_I / H^d) / (n H^d) * sigma*^2(x) / f_n(x) ) * sqrt(int K^2)
//! ```
//!
//! with `sigma*^2` the IPCW plug-in conditional variance, `f_n` the kernel
//! estimate of the covariate density and `V_I` the volume of the region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimator, GSpec, Transform};
use crate::kernels::KernelSpec;
use crate::survival::Dataset;

/// Axis-aligned box `prod_j [lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::param("region needs at least one axis"));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(format!("invalid region axis [{lo}, {hi}]")));
            }
        }
        Ok(Region { bounds })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Product grid with `steps` equally spaced points per axis (endpoints
    /// included), in lexicographic order with the last axis fastest.
    pub fn grid(&self, steps: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| linspace(lo, hi, steps))
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// `steps` equally spaced points from `lo` to `hi`; a single point is `lo`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (steps - 1) as f64;
            (0..steps)
                .map(|k| if k + 1 == steps { hi } else { lo + step * k as f64 })
                .collect()
        }
    }
}

/// Per-point bandwidths `H_n(x)`, looked up by nearest tabulated point in
/// the max norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTable {
    points: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
    /// `(c1, c2, h_n)`: expected `c1 h_n <= H_n(x) <= c2 h_n`.
    pub reference: Option<(f64, f64, f64)>,
}

impl BandwidthTable {
    pub fn new(points: Vec<Vec<f64>>, bandwidths: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != bandwidths.len() {
            return Err(Error::param(
                "bandwidth table needs one bandwidth per tabulated point",
            ));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::param("bandwidth table points have inconsistent dimension"));
        }
        if let Some(h) = bandwidths.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::param(format!("tabulated bandwidth {h} is not positive")));
        }
        Ok(BandwidthTable {
            points,
            bandwidths,
            reference: None,
        })
    }

    pub fn with_reference(mut self, c1: f64, c2: f64, hn: f64) -> Self {
        self.reference = Some((c1, c2, hn));
        self
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn lookup(&self, x: &[f64]) -> f64 {
        let dist = |p: &[f64]| {
            p.iter()
                .zip(x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let d = dist(p);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        self.bandwidths[best]
    }

    /// Tabulated bandwidths outside `[c1 h_n, c2 h_n]`.
    pub fn bound_violations(&self) -> Vec<String> {
        let Some((c1, c2, hn)) = self.reference else {
            return Vec::new();
        };
        self.points
            .iter()
            .zip(&self.bandwidths)
            .filter(|(_, &h)| h < c1 * hn || h > c2 * hn)
            .map(|(p, h)| format!("bandwidth {h} at {p:?} outside [{}, {}]", c1 * hn, c2 * hn))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    Fixed(f64),
    /// `h_n = a * n^(-delta0)`.
    PowerLaw { a: f64, delta0: f64 },
    PerPoint(BandwidthTable),
}

impl BandwidthRule {
    pub fn resolve(&self, x: &[f64], n: usize) -> f64 {
        match self {
            BandwidthRule::Fixed(h) => *h,
            BandwidthRule::PowerLaw { a, delta0 } => a * (n as f64).powf(-delta0),
            BandwidthRule::PerPoint(table) => table.lookup(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    /// Floor constant of `log_{theta,K}`; must exceed one.
    pub theta: f64,
    pub region: Region,
    pub bandwidth: BandwidthRule,
}

impl BandConfig {
    pub fn new(theta: f64, region: Region, bandwidth: BandwidthRule) -> Result<Self> {
        let cfg = BandConfig {
            theta,
            region,
            bandwidth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `theta = e` on `[lo, hi]` with a fixed bandwidth.
    pub fn fixed(h: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            std::f64::consts::E,
            Region::interval(lo, hi)?,
            BandwidthRule::Fixed(h),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 1.0 && self.theta.is_finite()) {
            return Err(Error::param(format!("theta must exceed 1, got {}", self.theta)));
        }
        if !(self.region.volume() > 0.0) {
            return Err(Error::param("region volume must be positive"));
        }
        let d = self.region.dim();
        match &self.bandwidth {
            BandwidthRule::Fixed(h) if !(h.is_finite() && *h > 0.0) => {
                Err(Error::param(format!("bandwidth must be positive, got {h}")))
            }
            BandwidthRule::PowerLaw { a, delta0 } => {
                let lower = 1.0 / (4.0 + d as f64);
                if !(a.is_finite() && *a > 0.0) {
                    Err(Error::param(format!("power-law constant must be positive, got {a}")))
                } else if !(*delta0 >= lower && *delta0 < 1.0) {
                    Err(Error::param(format!(
                        "power-law exponent must lie in [{lower}, 1), got {delta0}"
                    )))
                } else {
                    Ok(())
                }
            }
            BandwidthRule::PerPoint(t) if t.dim() != d => Err(Error::DimensionMismatch {
                expected: d,
                got: t.dim(),
            }),
            _ => Ok(()),
        }
    }

    pub fn with_bandwidth(&self, bandwidth: BandwidthRule) -> Self {
        BandConfig {
            bandwidth,
            ..self.clone()
        }
    }
}

/// Plug-in conditional variance; `clamped` is floored at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub raw: f64,
    pub clamped: f64,
}

impl VarianceEstimate {
    fn from_raw(raw: f64) -> Self {
        VarianceEstimate {
            raw,
            clamped: raw.max(0.0),
        }
    }
}

/// `log( max(theta, u * int K^2) )`.
pub fn log_theta_k(u: f64, kernel: &KernelSpec, theta: f64) -> f64 {
    theta.max(u * kernel.l2_norm()).ln()
}

/// `L_n` from its ingredients: sample size, bandwidth, the variance and
/// design-density plug-ins, and the band constants.
#[allow(clippy::too_many_arguments)]
pub fn halfwidth_from_plugins(
    n: usize,
    h: f64,
    dim: usize,
    variance: f64,
    design_density: f64,
    kernel: &KernelSpec,
    theta: f64,
    volume: f64,
) -> f64 {
    let hd = h.powi(dim as i32);
    let log_term = log_theta_k(volume / hd, kernel, theta);
    let scale = 2.0 * log_term / (n as f64 * hd);
    (scale * variance.max(0.0) / design_density).sqrt() * kernel.l2_norm().sqrt()
}

/// Everything computed at one band point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub h: f64,
    pub estimate: f64,
    pub variance: VarianceEstimate,
    pub design_density: f64,
    pub halfwidth: f64,
}

impl<'a> Estimator<'a> {
    pub fn variance(&self, psi: &Transform, x: &[f64], h: f64) -> Result<VarianceEstimate> {
        let m = self.local_moments(psi, x, h)?;
        Ok(VarianceEstimate::from_raw(self.centered_spread(psi, x, h, &m)))
    }

    pub fn band_point(
        &self,
        psi: &Transform,
        x: &[f64],
        h: f64,
        theta: f64,
        volume: f64,
    ) -> Result<BandPoint> {
        let m = self.local_moments(psi, x, h)?;
        let n = self.data().len();
        let d = self.data().dim();
        let estimate = m.mean();
        let variance = VarianceEstimate::from_raw(self.centered_spread(psi, x, h, &m));
        let design_density = m.kernel_sum / (n as f64 * h.powi(d as i32));
        if !(design_density > 0.0) {
            return Err(Error::ZeroDensity(x.to_vec()));
        }
        let halfwidth = halfwidth_from_plugins(
            n,
            h,
            d,
            variance.clamped,
            design_density,
            self.kernel(),
            theta,
            volume,
        );
        Ok(BandPoint {
            h,
            estimate,
            variance,
            design_density,
            halfwidth,
        })
    }

    pub fn confidence_band(
        &self,
        psi: &Transform,
        grid: &[Vec<f64>],
        cfg: &BandConfig,
    ) -> Result<EstimateCurve> {
        cfg.validate()?;
        if grid.is_empty() {
            return Err(Error::param("confidence band grid is empty"));
        }
        if cfg.region.dim() != self.data().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data().dim(),
                got: cfg.region.dim(),
            });
        }
        if let Some(x) = grid.iter().find(|x| !cfg.region.contains(x)) {
            return Err(Error::param(format!("grid point {x:?} lies outside the region")));
        }
        let n = self.data().len();
        let volume = cfg.region.volume();
        let points = grid
            .par_iter()
            .map(|x| {
                let h = cfg.bandwidth.resolve(x, n);
                let band = match self.band_point(psi, x, h, cfg.theta, volume) {
                    Ok(bp) => Some(Band::new(bp.estimate, bp.halfwidth)),
                    Err(Error::EmptyWindow { .. }) => None,
                    Err(e) => return Err(e),
                };
                Ok(CurvePoint {
                    x: x.clone(),
                    h,
                    band,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if points.iter().all(|p| p.band.is_none()) {
            return Err(Error::AllMissing);
        }
        let warnings = match &cfg.bandwidth {
            BandwidthRule::PerPoint(t) => t.bound_violations(),
            _ => Vec::new(),
        };
        Ok(EstimateCurve { points, warnings })
    }
}

/// Symmetric interval `estimate +/- halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub halfwidth: f64,
}

impl Band {
    pub fn new(estimate: f64, halfwidth: f64) -> Self {
        Band {
            estimate,
            lower: estimate - halfwidth,
            upper: estimate + halfwidth,
            halfwidth,
        }
    }

    /// Whether `value` lies in `estimate +/- inflation * halfwidth`.
    pub fn covers(&self, value: f64, inflation: f64) -> bool {
        (value - self.estimate).abs() <= inflation * self.halfwidth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: Vec<f64>,
    pub h: f64,
    /// `None` when the kernel window at `x` holds no observation.
    pub band: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCurve {
    pub points: Vec<CurvePoint>,
    /// Non-fatal diagnostics, e.g. tabulated bandwidths outside their bounds.
    pub warnings: Vec<String>,
}

impl EstimateCurve {
    pub fn missing(&self) -> usize {
        self.points.iter().filter(|p| p.band.is_none()).count()
    }
}

pub fn variance_estimate(
    data: &Dataset,
    psi: &Transform,
    x: &[f64],
    h: f64,
    kernel: &KernelSpec,
    g: &GSpec,
) -> Result<VarianceEstimate> {
    Estimator::new(data, kernel, g)?.variance(psi, x, h)
}

#[allow(clippy::too_many_arguments)]
pub fn band_halfwidth(
    data: &Dataset,
    psi: &Transform,
    x: &[f64],
    h: f64,
    kernel: &KernelSpec,
    g: &GSpec,
    cfg: &BandConfig,
) -> Result<f64> {
    cfg.validate()?;
    Estimator::new(data, kernel, g)?
        .band_point(psi, x, h, cfg.theta, cfg.region.volume())
        .map(|bp| bp.halfwidth)
}

pub fn confidence_band(
    data: &Dataset,
    psi: &Transform,
    grid: &[Vec<f64>],
    kernel: &KernelSpec,
    g: &GSpec,
    cfg: &BandConfig,
) -> Result<EstimateCurve> {
    Estimator::new(data, kernel, g)?.confidence_band(psi, grid, cfg)
}
