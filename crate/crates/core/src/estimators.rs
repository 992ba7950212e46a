//! IPCW Nadaraya-Watson estimators of the regression function, the
//! conditional distribution function, the conditional density and the
//! conditional hazard.
//!
//! Every estimator has the form `sum_i w_i(x) * delta_i * phi(Z_i) / (1 - G(Z_i))`
//! with `w_i(x) = K((x - X_i)/h) / sum_j K((x - X_j)/h)`. Terms whose
//! survival denominator `1 - G(Z_i)` vanishes are dropped (`0/0 = 0`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::simulation::Design;
use crate::survival::{Dataset, StepFunction};

/// Default guard for the hazard denominator `1 - F(t|x)`.
pub const HAZARD_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransformKind {
    Identity,
    /// `y -> 1{y <= t}`.
    IndicatorLeq(f64),
    /// Piecewise-constant table.
    Tabulated(StepFunction),
}

/// The function `psi` whose conditional mean `E[psi(Y) | X = x]` is estimated.
/// With an upper cutoff `tau0` set, `psi` is taken to vanish on `(tau0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub kind: TransformKind,
    pub upper_cutoff: Option<f64>,
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            kind: TransformKind::Identity,
            upper_cutoff: None,
        }
    }

    pub fn indicator(t: f64) -> Self {
        Transform {
            kind: TransformKind::IndicatorLeq(t),
            upper_cutoff: None,
        }
    }

    pub fn tabulated(table: StepFunction) -> Self {
        Transform {
            kind: TransformKind::Tabulated(table),
            upper_cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, tau0: f64) -> Self {
        self.upper_cutoff = Some(tau0);
        self
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        if let Some(tau0) = self.upper_cutoff {
            if y > tau0 {
                return 0.0;
            }
        }
        match &self.kind {
            TransformKind::Identity => y,
            TransformKind::IndicatorLeq(t) => {
                if y <= *t {
                    1.0
                } else {
                    0.0
                }
            }
            TransformKind::Tabulated(table) => table.eval(y),
        }
    }
}

/// Known censoring distribution functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KnownG {
    /// No censoring mass: `G = 0`.
    Zero,
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Step(StepFunction),
}

impl KnownG {
    pub fn cdf(&self, u: f64) -> f64 {
        match self {
            KnownG::Zero => 0.0,
            KnownG::Uniform { lo, hi } => ((u - lo) / (hi - lo)).clamp(0.0, 1.0),
            KnownG::Exponential { rate } => {
                if u <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * u).exp()
                }
            }
            KnownG::Step(sf) => sf.eval(u),
        }
    }
}

/// Censoring distribution used in the IPCW denominators.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum GSpec {
    /// Kaplan-Meier estimate from the same sample, cached on the dataset.
    #[default]
    KaplanMeier,
    Known(KnownG),
}

/// Conditional CDF estimate, clamped to `[0, 1]` with the raw sum kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfEstimate {
    pub raw: f64,
    pub value: f64,
}

/// Kernel sums at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMoments {
    /// `sum_i K((x - X_i)/h)`
    pub kernel_sum: f64,
    /// `sum_i K_i * delta_i psi(Z_i) / (1 - G(Z_i))`
    pub first: f64,
    /// `sum_i K_i * delta_i psi(Z_i)^2 / (1 - G(Z_i))^2`
    pub second: f64,
}

impl LocalMoments {
    pub fn mean(&self) -> f64 {
        self.first / self.kernel_sum
    }

    pub fn second_moment(&self) -> f64 {
        self.second / self.kernel_sum
    }
}

/// A dataset prepared for repeated evaluation: the inverse censoring
/// weights are computed once, and for `d = 1` covariates are indexed in
/// sorted order so that each evaluation only touches the kernel window.
#[derive(Debug, Clone)]
pub struct Estimator<'a> {
    data: &'a Dataset,
    kernel: KernelSpec,
    ipcw: Vec<f64>,
    sorted: Option<SortedCovariate>,
}

#[derive(Debug, Clone)]
struct SortedCovariate {
    order: Vec<usize>,
    values: Vec<f64>,
}

impl<'a> Estimator<'a> {
    pub fn new(data: &'a Dataset, kernel: &KernelSpec, g: &GSpec) -> Result<Self> {
        if kernel.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: kernel.dim(),
            });
        }
        let survival_at = |z: f64| match g {
            GSpec::KaplanMeier => 1.0 - data.censoring_km().eval(z),
            GSpec::Known(known) => 1.0 - known.cdf(z),
        };
        let ipcw = data
            .z()
            .iter()
            .zip(data.delta())
            .map(|(&z, &d)| {
                if !d {
                    return 0.0;
                }
                let s = survival_at(z);
                if s > 0.0 {
                    1.0 / s
                } else {
                    0.0
                }
            })
            .collect();
        let sorted = (data.dim() == 1).then(|| {
            let x = data.covariates();
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            let values = order.iter().map(|&i| x[i]).collect();
            SortedCovariate { order, values }
        });
        Ok(Estimator {
            data,
            kernel: kernel.clone(),
            ipcw,
            sorted,
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// `delta_i / (1 - G(Z_i))`, zero for censored or dropped terms.
    pub fn inverse_censoring_weights(&self) -> &[f64] {
        &self.ipcw
    }

    fn check_point(&self, x: &[f64], h: f64) -> Result<()> {
        if x.len() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                got: x.len(),
            });
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param(format!("bandwidth must be positive, got {h}")));
        }
        Ok(())
    }

    /// Calls `visit(i, K((x - X_i)/h))` for every observation with a
    /// nonzero kernel value.
    fn for_each_in_window(&self, x: &[f64], h: f64, mut visit: impl FnMut(usize, f64)) {
        let reach = h * self.kernel.support_radius() * (1.0 + 1e-9);
        match &self.sorted {
            Some(s) => {
                let lo = s.values.partition_point(|&v| v < x[0] - reach);
                let hi = s.values.partition_point(|&v| v <= x[0] + reach);
                for k in lo..hi {
                    let w = self.kernel.eval_unchecked(&[(x[0] - s.values[k]) / h]);
                    if w != 0.0 {
                        visit(s.order[k], w);
                    }
                }
            }
            None => {
                let mut u = vec![0.0; x.len()];
                for i in 0..self.data.len() {
                    for (j, (uj, xi)) in u.iter_mut().zip(self.data.covariate(i)).enumerate() {
                        *uj = (x[j] - xi) / h;
                    }
                    let w = self.kernel.eval_unchecked(&u);
                    if w != 0.0 {
                        visit(i, w);
                    }
                }
            }
        }
    }

    /// Kernel sums at `x` for the response transform `psi`.
    pub fn local_moments(&self, psi: &Transform, x: &[f64], h: f64) -> Result<LocalMoments> {
        self.check_point(x, h)?;
        let z = self.data.z();
        let mut m = LocalMoments {
            kernel_sum: 0.0,
            first: 0.0,
            second: 0.0,
        };
        self.for_each_in_window(x, h, |i, k| {
            m.kernel_sum += k;
            let a = self.ipcw[i];
            if a != 0.0 {
                let v = psi.apply(z[i]) * a;
                m.first += k * v;
                m.second += k * v * v;
            }
        });
        if m.kernel_sum == 0.0 {
            return Err(Error::EmptyWindow { x: x.to_vec(), h });
        }
        Ok(m)
    }

    /// `sum_i w_i(x) (V_i - center)^2` with `V_i = delta_i psi(Z_i) / (1 - G(Z_i))`;
    /// a second pass over the window, so near-constant responses do not
    /// cancel catastrophically.
    pub(crate) fn centered_spread(
        &self,
        psi: &Transform,
        x: &[f64],
        h: f64,
        m: &LocalMoments,
    ) -> f64 {
        let z = self.data.z();
        let center = m.mean();
        let mut acc = 0.0;
        self.for_each_in_window(x, h, |i, k| {
            let a = self.ipcw[i];
            let v = if a != 0.0 { psi.apply(z[i]) * a } else { 0.0 };
            acc += k * (v - center) * (v - center);
        });
        acc / m.kernel_sum
    }

    /// Nadaraya-Watson weights `w_i(x)` in observation order.
    pub fn weights(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        self.check_point(x, h)?;
        let mut w = vec![0.0; self.data.len()];
        let mut total = 0.0;
        self.for_each_in_window(x, h, |i, k| {
            w[i] = k;
            total += k;
        });
        if total == 0.0 {
            return Err(Error::EmptyWindow { x: x.to_vec(), h });
        }
        for v in &mut w {
            *v /= total;
        }
        Ok(w)
    }

    /// `sum_i w_i(x) delta_i psi(Z_i) / (1 - G(Z_i))`.
    pub fn regression(&self, psi: &Transform, x: &[f64], h: f64) -> Result<f64> {
        Ok(self.local_moments(psi, x, h)?.mean())
    }

    pub fn cdf(&self, t: f64, x: &[f64], h: f64) -> Result<CdfEstimate> {
        let raw = self.regression(&Transform::indicator(t), x, h)?;
        Ok(CdfEstimate {
            raw,
            value: raw.clamp(0.0, 1.0),
        })
    }

    /// `(1/ell) sum_i w_i(x) delta_i 1{|Z_i - t| <= ell/2} / (1 - G(Z_i))`.
    pub fn density(&self, t: f64, ell: f64, x: &[f64], h: f64) -> Result<f64> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::param(format!(
                "response bandwidth must be positive, got {ell}"
            )));
        }
        self.check_point(x, h)?;
        let (lo, hi) = (t - 0.5 * ell, t + 0.5 * ell);
        let z = self.data.z();
        let mut total = 0.0;
        let mut num = 0.0;
        self.for_each_in_window(x, h, |i, k| {
            total += k;
            if self.ipcw[i] != 0.0 && z[i] >= lo && z[i] <= hi {
                num += k * self.ipcw[i];
            }
        });
        if total == 0.0 {
            return Err(Error::EmptyWindow { x: x.to_vec(), h });
        }
        Ok(num / total / ell)
    }

    pub fn hazard(&self, t: f64, ell: f64, x: &[f64], h: f64, guard: f64) -> Result<f64> {
        let f = self.density(t, ell, x, h)?;
        let cdf = self.cdf(t, x, h)?.raw;
        if cdf >= 1.0 - guard {
            return Err(Error::DegenerateDenominator { cdf, guard });
        }
        Ok(f / (1.0 - cdf))
    }

    /// Kernel estimate of the covariate density, `sum_i K_i / (n h^d)`.
    pub fn design_density(&self, x: &[f64], h: f64) -> Result<f64> {
        self.check_point(x, h)?;
        let mut total = 0.0;
        self.for_each_in_window(x, h, |_, k| total += k);
        Ok(total / (self.data.len() as f64 * h.powi(self.data.dim() as i32)))
    }
}

pub fn nw_weights(data: &Dataset, x: &[f64], h: f64, kernel: &KernelSpec) -> Result<Vec<f64>> {
    Estimator::new(data, kernel, &GSpec::Known(KnownG::Zero))?.weights(x, h)
}

pub fn ipcw_regression(
    data: &Dataset,
    psi: &Transform,
    x: &[f64],
    h: f64,
    kernel: &KernelSpec,
    g: &GSpec,
) -> Result<f64> {
    Estimator::new(data, kernel, g)?.regression(psi, x, h)
}

pub fn conditional_cdf(
    data: &Dataset,
    t: f64,
    x: &[f64],
    h: f64,
    kernel: &KernelSpec,
    g: &GSpec,
) -> Result<CdfEstimate> {
    Estimator::new(data, kernel, g)?.cdf(t, x, h)
}

#[allow(clippy::too_many_arguments)]
pub fn conditional_density(
    data: &Dataset,
    t: f64,
    x: &[f64],
    h: f64,
    ell: f64,
    kernel: &KernelSpec,
    g: &GSpec,
) -> Result<f64> {
    Estimator::new(data, kernel, g)?.density(t, ell, x, h)
}

#[allow(clippy::too_many_arguments)]
pub fn conditional_hazard(
    data: &Dataset,
    t: f64,
    x: &[f64],
    h: f64,
    ell: f64,
    kernel: &KernelSpec,
    g: &GSpec,
) -> Result<f64> {
    Estimator::new(data, kernel, g)?.hazard(t, ell, x, h, HAZARD_GUARD)
}

/// Monte Carlo estimate together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Centering term `E[psi(Y) K((x - X)/h)] / E[K((x - X)/h)]` under the true
/// law of `design`, estimated from `mc_size` uncensored draws.
pub fn centering_term_mc_with_se<D: Design + ?Sized>(
    h: f64,
    x: &[f64],
    psi: &Transform,
    kernel: &KernelSpec,
    design: &D,
    mc_size: usize,
    seed: u64,
) -> Result<McEstimate> {
    if mc_size < 10_000 {
        return Err(Error::param(format!(
            "centering term needs at least 10^4 draws, got {mc_size}"
        )));
    }
    if x.len() != kernel.dim() || design.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: x.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ks = Vec::with_capacity(mc_size);
    let mut vs = Vec::with_capacity(mc_size);
    let mut u = vec![0.0; x.len()];
    for _ in 0..mc_size {
        let (cov, y) = design.draw_response(&mut rng);
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = (x[j] - cov[j]) / h;
        }
        let k = kernel.eval_unchecked(&u);
        ks.push(k);
        vs.push(psi.apply(y));
    }
    let n = mc_size as f64;
    let mean_k = ks.iter().sum::<f64>() / n;
    if mean_k <= 0.0 {
        return Err(Error::param(
            "centering term denominator estimate is not positive",
        ));
    }
    let mean_kv = ks.iter().zip(&vs).map(|(k, v)| k * v).sum::<f64>() / n;
    let value = mean_kv / mean_k;
    let resid = ks
        .iter()
        .zip(&vs)
        .map(|(k, v)| (k * (v - value)).powi(2))
        .sum::<f64>()
        / n;
    Ok(McEstimate {
        value,
        std_error: (resid / n).sqrt() / mean_k,
    })
}

pub fn centering_term_mc<D: Design + ?Sized>(
    h: f64,
    x: &[f64],
    psi: &Transform,
    kernel: &KernelSpec,
    design: &D,
    mc_size: usize,
    seed: u64,
) -> Result<f64> {
    centering_term_mc_with_se(h, x, psi, kernel, design, mc_size, seed).map(|e| e.value)
}
