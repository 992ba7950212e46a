//! Censored samples, right-continuous step functions, and the
//! Kaplan-Meier estimator of the censoring distribution.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous piecewise-constant function on the real line.
///
/// Takes `left_value` on `(-inf, jumps[0])` and `values[k]` on
/// `[jumps[k], jumps[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    jumps: Vec<f64>,
    values: Vec<f64>,
    left_value: f64,
}

impl StepFunction {
    pub fn new(jumps: Vec<f64>, values: Vec<f64>, left_value: f64) -> Result<Self> {
        if jumps.len() != values.len() {
            return Err(Error::param(format!(
                "step function has {} jump locations but {} values",
                jumps.len(),
                values.len()
            )));
        }
        if jumps.iter().chain(&values).any(|v| v.is_nan()) || left_value.is_nan() {
            return Err(Error::param("step function contains NaN"));
        }
        if jumps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "step function jump locations must be strictly increasing",
            ));
        }
        Ok(StepFunction {
            jumps,
            values,
            left_value,
        })
    }

    pub fn constant(value: f64) -> Self {
        StepFunction {
            jumps: Vec::new(),
            values: Vec::new(),
            left_value: value,
        }
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_value(&self) -> f64 {
        self.left_value
    }

    /// Value at `u`, right-continuous at jump locations.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.jumps.partition_point(|&j| j <= u) {
            0 => self.left_value,
            k => self.values[k - 1],
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        let mut prev = self.left_value;
        for &v in &self.values {
            if v < prev {
                return false;
            }
            prev = v;
        }
        true
    }

    /// True when all values lie in `[0, 1]` and the function never decreases.
    pub fn is_distribution_function(&self) -> bool {
        self.is_nondecreasing()
            && std::iter::once(&self.left_value)
                .chain(&self.values)
                .all(|v| (0.0..=1.0).contains(v))
    }
}

/// Free-function form of [`StepFunction::eval`].
pub fn step_eval(sf: &StepFunction, u: f64) -> f64 {
    sf.eval(u)
}

/// Right-censored sample `(Z_i, delta_i, X_i)`, `i = 1..n`, with covariates
/// stored row-major in an `n x d` buffer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    z: Vec<f64>,
    delta: Vec<bool>,
    x: Vec<f64>,
    dim: usize,
    #[serde(skip)]
    censoring_km: OnceLock<StepFunction>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.z == other.z && self.delta == other.delta && self.x == other.x
    }
}

impl Dataset {
    pub fn new(z: Vec<f64>, delta: Vec<bool>, x: Vec<f64>, dim: usize) -> Result<Self> {
        let n = z.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::InvalidDataset(
                "covariate dimension must be positive".into(),
            ));
        }
        if delta.len() != n || x.len() != n * dim {
            return Err(Error::InvalidDataset(format!(
                "inconsistent lengths: {} times, {} indicators, {} covariate entries for d = {dim}",
                n,
                delta.len(),
                x.len()
            )));
        }
        if let Some(i) = z.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidDataset(format!("observation {i} has a NaN time")));
        }
        if let Some(k) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidDataset(format!(
                "observation {} has a NaN covariate",
                k / dim
            )));
        }
        Ok(Dataset {
            z,
            delta,
            x,
            dim,
            censoring_km: OnceLock::new(),
        })
    }

    /// Convenience constructor for one-dimensional covariates.
    pub fn univariate(z: Vec<f64>, delta: Vec<bool>, x: Vec<f64>) -> Result<Self> {
        Self::new(z, delta, x, 1)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn covariate(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn uncensored_fraction(&self) -> f64 {
        self.delta.iter().filter(|&&d| d).count() as f64 / self.len() as f64
    }

    /// Kaplan-Meier estimate of the censoring law, computed on first use.
    pub fn censoring_km(&self) -> &StepFunction {
        self.censoring_km
            .get_or_init(|| product_limit(&self.z, |i| !self.delta[i]))
    }

    /// Same sample with the roles of events and censorings swapped.
    pub fn flipped(&self) -> Dataset {
        Dataset {
            z: self.z.clone(),
            delta: self.delta.iter().map(|d| !d).collect(),
            x: self.x.clone(),
            dim: self.dim,
            censoring_km: OnceLock::new(),
        }
    }
}

/// Kaplan-Meier estimator `G*_n` of the censoring distribution function.
///
/// `G*_n(u) = 1 - prod_{i: Z_i <= u} ((N(Z_i) - 1) / N(Z_i))^(1 - delta_i)`
/// with `N(t) = #{j: Z_j >= t}`. Each censored observation contributes its
/// own factor; tied observations share the same risk-set size.
pub fn km_censoring(data: &Dataset) -> Result<StepFunction> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(data.censoring_km().clone())
}

/// Kaplan-Meier estimator of the distribution of the response `Y`
/// (events are the uncensored observations).
pub fn km_response(data: &Dataset) -> Result<StepFunction> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(product_limit(data.z(), |i| data.delta()[i]))
}

/// Product-limit distribution function jumping at observations where
/// `jumps_at(i)` holds. Factors are multiplied in ascending order of `Z`
/// (ties in index order); the result jumps at every distinct time that
/// carries at least one such observation.
fn product_limit(z: &[f64], jumps_at: impl Fn(usize) -> bool) -> StepFunction {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));

    let mut jumps = Vec::new();
    let mut values = Vec::new();
    let mut survival = 1.0_f64;
    let mut k = 0;
    while k < n {
        let t = z[order[k]];
        // every member of the tie group has N(t) = n - k
        let at_risk = (n - k) as f64;
        let factor = (at_risk - 1.0) / at_risk;
        let mut end = k;
        let mut any = false;
        while end < n && z[order[end]] == t {
            if jumps_at(order[end]) {
                survival *= factor;
                any = true;
            }
            end += 1;
        }
        if any {
            jumps.push(t);
            values.push(1.0 - survival);
        }
        k = end;
    }
    StepFunction {
        jumps,
        values,
        left_value: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::univariate(vec![1.0, 2.0, 3.0], vec![true, false, true], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn all_uncensored_gives_zero() {
        let d = Dataset::univariate(vec![3.0, 1.0, 2.0], vec![true; 3], vec![0.0; 3]).unwrap();
        let g = km_censoring(&d).unwrap();
        assert!(g.jumps().is_empty());
        for u in [-1.0, 1.0, 2.5, 10.0] {
            assert_eq!(g.eval(u), 0.0);
        }
    }

    #[test]
    fn single_censored_observation() {
        let d = Dataset::univariate(vec![5.0], vec![false], vec![0.0]).unwrap();
        let g = km_censoring(&d).unwrap();
        assert_eq!(g.eval(4.999), 0.0);
        assert_eq!(g.eval(5.0), 1.0);
        assert_eq!(g.eval(7.0), 1.0);
    }

    #[test]
    fn hand_evaluated_toy() {
        let g = km_censoring(&toy()).unwrap();
        assert_eq!(g.jumps(), &[2.0]);
        assert_eq!(g.eval(1.5), 0.0);
        assert_eq!(g.eval(2.0), 0.5);
        assert_eq!(g.eval(1.999), 0.0);
        assert_eq!(g.eval(3.0), 0.5);
    }

    #[test]
    fn tied_censorings_share_risk_set() {
        // N(2) = 3 for both censored ties: G = 1 - (2/3)^2
        let d = Dataset::univariate(
            vec![1.0, 2.0, 2.0, 4.0],
            vec![true, false, false, true],
            vec![0.0; 4],
        )
        .unwrap();
        let g = km_censoring(&d).unwrap();
        assert_eq!(g.eval(2.0), 1.0 - (2.0 / 3.0) * (2.0 / 3.0));
    }

    #[test]
    fn terminal_censored_maximum_reaches_one() {
        let d = Dataset::univariate(
            vec![1.0, 2.0, 3.0],
            vec![true, true, false],
            vec![0.0; 3],
        )
        .unwrap();
        assert_eq!(d.censoring_km().eval(3.0), 1.0);
    }

    #[test]
    fn constant_step_function() {
        let s = StepFunction::constant(0.0);
        assert_eq!(step_eval(&s, -1e300), 0.0);
        assert_eq!(step_eval(&s, 1e300), 0.0);
    }

    #[test]
    fn step_function_validation() {
        assert!(StepFunction::new(vec![1.0, 1.0], vec![0.1, 0.2], 0.0).is_err());
        assert!(StepFunction::new(vec![1.0], vec![], 0.0).is_err());
        assert!(StepFunction::new(vec![1.0], vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(matches!(
            Dataset::univariate(vec![], vec![], vec![]),
            Err(Error::EmptyDataset)
        ));
        assert!(Dataset::univariate(vec![1.0], vec![true, false], vec![0.0]).is_err());
        assert!(Dataset::univariate(vec![f64::NAN], vec![true], vec![0.0]).is_err());
        assert!(Dataset::new(vec![1.0], vec![true], vec![0.0], 2).is_err());
    }

    #[test]
    fn response_km_with_no_censoring_is_empirical_cdf() {
        let d = Dataset::univariate(vec![2.0, 1.0, 3.0, 4.0], vec![true; 4], vec![0.0; 4]).unwrap();
        let f = km_response(&d).unwrap();
        assert!((f.eval(1.0) - 0.25).abs() < 1e-15);
        assert!((f.eval(2.5) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval(4.0), 1.0);
    }
}
