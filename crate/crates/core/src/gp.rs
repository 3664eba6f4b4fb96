//! Exact Gaussian process regression with a constant prior mean.
//!
//! The covariance of the training set is `K = [k(x_i, x_j)] + noise * I`. Its
//! Cholesky factor is computed once at fit time; posterior queries then need
//! one kernel row and one triangular solve:
//!
//! ```text
//! mean(x*) = prior_mean + k* K^-1 (y - prior_mean)
//! var(x*)  = k(x*, x*) - k* K^-1 k*^T          (latent variance, clamped at 0)
//! ```
//!
//! Hyperparameters are fixed: there is no marginal-likelihood tuning.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::acquisition::ActionBounds;
use crate::error::{Error, Result};

/// Jitter levels added to the diagonal, in order, when the plain factorization fails.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Matern52,
    Matern32,
    SquaredExponential,
}

/// Stationary covariance function parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Length scale, in action-space units.
    pub length_scale: f64,
    /// Signal variance; `k(x, x) == output_scale`.
    pub output_scale: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, length_scale: f64, output_scale: f64) -> Result<Self> {
        let spec = KernelSpec { kind, length_scale, output_scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(Error::InvalidArgument("kernel length_scale must be positive"));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::InvalidArgument("kernel output_scale must be positive"));
        }
        Ok(())
    }

    /// Covariance as a function of Euclidean distance `r`.
    pub fn at_distance(&self, r: f64) -> f64 {
        let s = r / self.length_scale;
        let shape = match self.kind {
            KernelKind::Matern52 => {
                let u = libm::sqrt(5.0) * s;
                (1.0 + u + u * u / 3.0) * libm::exp(-u)
            }
            KernelKind::Matern32 => {
                let u = libm::sqrt(3.0) * s;
                (1.0 + u) * libm::exp(-u)
            }
            KernelKind::SquaredExponential => libm::exp(-0.5 * s * s),
        };
        self.output_scale * shape
    }

    fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.at_distance(libm::sqrt(r2))
    }
}

/// Matérn 5/2 with length scale 0.2 on the unit action box and prior variance 0.01.
impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec { kind: KernelKind::Matern52, length_scale: 0.2, output_scale: 0.01 }
    }
}

/// Evaluates `k(a, b)`.
pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(spec.eval_unchecked(a, b))
}

/// Training inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    bounds: Option<ActionBounds>,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset { dim, bounds: None, inputs: Vec::new(), targets: Vec::new() }
    }

    /// A dataset whose inputs must all lie inside `bounds`.
    pub fn within(bounds: ActionBounds) -> Self {
        Dataset { dim: bounds.dim(), bounds: Some(bounds), inputs: Vec::new(), targets: Vec::new() }
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) || !y.is_finite() {
            return Err(Error::InvalidArgument("dataset values must be finite"));
        }
        if let Some(b) = &self.bounds {
            if !b.contains(x) {
                return Err(Error::InvalidArgument("input outside declared bounds"));
            }
        }
        self.inputs.push(x.to_vec());
        self.targets.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// A fitted, immutable GP posterior.
#[derive(Debug, Clone)]
pub struct GpModel {
    data: Dataset,
    kernel: KernelSpec,
    noise: f64,
    prior_mean: f64,
    jitter: f64,
    factor: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Assembles `K + noise*I`, factorizes it and caches `K^-1 (y - prior_mean)`.
    pub fn fit(data: Dataset, kernel: KernelSpec, noise: f64, prior_mean: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::InvalidArgument("noise must be non-negative"));
        }
        if !prior_mean.is_finite() {
            return Err(Error::InvalidArgument("prior mean must be finite"));
        }
        let n = data.len();
        if n == 0 {
            return Ok(GpModel {
                data,
                kernel,
                noise,
                prior_mean,
                jitter: 0.0,
                factor: None,
                alpha: DVector::zeros(0),
            });
        }

        let xs = data.inputs();
        let base = DMatrix::from_fn(n, n, |i, j| {
            let k = kernel.eval_unchecked(&xs[i], &xs[j]);
            if i == j {
                k + noise
            } else {
                k
            }
        });

        let mut tried = Vec::new();
        let mut jitter = 0.0;
        let mut factor = Cholesky::new(base.clone());
        for level in JITTER_LADDER {
            if factor.is_some() {
                break;
            }
            tried.push(level);
            jitter = level;
            let mut m = base.clone();
            for i in 0..n {
                m[(i, i)] += level;
            }
            factor = Cholesky::new(m);
        }
        let factor = factor.ok_or(Error::NumericalFailure { tried })?;

        let resid = DVector::from_iterator(n, data.targets().iter().map(|y| y - prior_mean));
        let alpha = factor.solve(&resid);
        Ok(GpModel { data, kernel, noise, prior_mean, jitter, factor: Some(factor), alpha })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Diagonal jitter that was needed to factorize, 0 if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior `(mean, variance)` of the latent function at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let prior_var = self.kernel.output_scale;
        let Some(factor) = &self.factor else {
            return (self.prior_mean, prior_var);
        };
        let xs = self.data.inputs();
        let kstar = DVector::from_iterator(xs.len(), xs.iter().map(|xi| self.kernel.eval_unchecked(x, xi)));
        let mean = self.prior_mean + kstar.dot(&self.alpha);
        let v = factor
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor has a positive diagonal");
        let var = prior_var - v.norm_squared();
        (mean, if var > 0.0 { var } else { 0.0 })
    }
}
