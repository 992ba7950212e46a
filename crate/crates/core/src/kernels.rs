//! Compactly supported smoothing kernels on `R^d`.
//!
//! Every kernel vanishes outside the cube `max_j |u_j| < support_radius`
//! and integrates to one. Multivariate kernels are products of univariate
//! ones sharing the same support radius.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Univariate kernel shapes, defined on the canonical support `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKernel {
    Epanechnikov,
    Box,
    Triangular,
}

impl BaseKernel {
    /// Kernel on `[-1, 1]`, zero for `|u| >= 1`.
    #[inline]
    fn canonical(self, u: f64) -> f64 {
        let a = u.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            BaseKernel::Epanechnikov => 0.75 * (1.0 - u * u),
            BaseKernel::Box => 0.5,
            BaseKernel::Triangular => 1.0 - a,
        }
    }

    /// `int k^2` for the canonical kernel.
    fn canonical_l2(self) -> f64 {
        match self {
            BaseKernel::Epanechnikov => 0.6,
            BaseKernel::Box => 0.5,
            BaseKernel::Triangular => 2.0 / 3.0,
        }
    }

    /// Support radius used when none is requested explicitly. The box
    /// kernel defaults to the unit-length window `[-1/2, 1/2]`.
    pub fn default_radius(self) -> f64 {
        match self {
            BaseKernel::Box => 0.5,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseKernel::Epanechnikov => "epanechnikov",
            BaseKernel::Box => "box",
            BaseKernel::Triangular => "triangular",
        }
    }
}

impl FromStr for BaseKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(BaseKernel::Epanechnikov),
            "box" | "uniform" => Ok(BaseKernel::Box),
            "triangular" | "tri" => Ok(BaseKernel::Triangular),
            other => Err(Error::param(format!("unknown kernel '{other}'"))),
        }
    }
}

impl fmt::Display for BaseKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    Epanechnikov,
    Box,
    Triangular,
    /// One univariate shape per coordinate.
    Product(Vec<BaseKernel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    dim: usize,
    support_radius: f64,
}

impl KernelSpec {
    /// `base` applied in each of `dim` coordinates, at its default radius.
    pub fn new(base: BaseKernel, dim: usize) -> Result<Self> {
        Self::with_radius(base, dim, base.default_radius())
    }

    pub fn with_radius(base: BaseKernel, dim: usize, support_radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("kernel dimension must be positive"));
        }
        check_radius(support_radius)?;
        let family = match base {
            BaseKernel::Epanechnikov => KernelFamily::Epanechnikov,
            BaseKernel::Box => KernelFamily::Box,
            BaseKernel::Triangular => KernelFamily::Triangular,
        };
        Ok(KernelSpec {
            family,
            dim,
            support_radius,
        })
    }

    /// Product kernel with a possibly different shape per coordinate.
    pub fn product(factors: Vec<BaseKernel>, support_radius: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::param("product kernel needs at least one factor"));
        }
        check_radius(support_radius)?;
        Ok(KernelSpec {
            dim: factors.len(),
            family: KernelFamily::Product(factors),
            support_radius,
        })
    }

    pub fn epanechnikov(dim: usize) -> Self {
        Self::new(BaseKernel::Epanechnikov, dim).expect("positive dimension")
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn factor(&self, j: usize) -> BaseKernel {
        match &self.family {
            KernelFamily::Epanechnikov => BaseKernel::Epanechnikov,
            KernelFamily::Box => BaseKernel::Box,
            KernelFamily::Triangular => BaseKernel::Triangular,
            KernelFamily::Product(f) => f[j],
        }
    }

    /// Univariate factor `j`, rescaled to the support radius.
    #[inline]
    fn eval_1d(&self, j: usize, u: f64) -> f64 {
        let r = self.support_radius;
        self.factor(j).canonical(u / r) / r
    }

    /// `K(u)`. Zero whenever `max_j |u_j| >= support_radius`.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        Ok(self.eval_unchecked(u))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> f64 {
        let mut value = 1.0;
        for (j, &uj) in u.iter().enumerate() {
            value *= self.eval_1d(j, uj);
            if value == 0.0 {
                return 0.0;
            }
        }
        value
    }

    /// `int_{R^d} K^2(t) dt`, in closed form for every built-in family.
    pub fn l2_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| self.factor(j).canonical_l2() / self.support_radius)
            .product()
    }

    /// Every built-in family is nonnegative, so monotonicity of the
    /// conditional CDF estimate holds.
    pub fn is_nonnegative(&self) -> bool {
        true
    }

    pub fn name(&self) -> String {
        match &self.family {
            KernelFamily::Product(f) => f
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join("*"),
            _ => self.factor(0).name().to_string(),
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("support radius must be positive, got {r}")))
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, u: &[f64]) -> Result<f64> {
    spec.eval(u)
}

/// Free-function form of [`KernelSpec::l2_norm`].
pub fn kernel_l2_norm(spec: &KernelSpec) -> f64 {
    spec.l2_norm()
}
