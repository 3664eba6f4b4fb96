//! Confidence-bound acquisition with a decaying exploration weight and an
//! age penalty on stale observations, plus a deterministic box-constrained
//! optimizer for it.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::gp::GpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayShape {
    /// `beta_k + (beta0 - beta_k) * (1 - (i/k)^2)`, floored at `beta_k`.
    Quadratic,
    /// `beta_k + (beta0 - beta_k) * (1 - i/k)`, floored at `beta_k`.
    Linear,
}

/// Exploration weight as a function of the response step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub beta0: f64,
    pub beta_k: f64,
    pub k_step: u32,
    pub shape: DecayShape,
}

impl BetaSchedule {
    pub fn new(beta0: f64, beta_k: f64, k_step: u32, shape: DecayShape) -> Result<Self> {
        let s = BetaSchedule { beta0, beta_k, k_step, shape };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_k >= 0.0 && self.beta0.is_finite()) {
            return Err(Error::InvalidArgument("beta_k must be non-negative"));
        }
        if !(self.beta0 > self.beta_k) {
            return Err(Error::InvalidArgument("beta0 must exceed beta_k"));
        }
        if self.k_step < 1 {
            return Err(Error::InvalidArgument("k_step must be at least 1"));
        }
        Ok(())
    }
}

/// `beta(i) = max(0, 0.07 - 0.0028 i^2)`: full exploration at step 0, pure
/// exploitation from step 5 on.
impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule { beta0: 0.07, beta_k: 0.0, k_step: 5, shape: DecayShape::Quadratic }
    }
}

pub fn beta_at(sched: &BetaSchedule, i: u32) -> f64 {
    if i >= sched.k_step {
        return sched.beta_k;
    }
    let frac = f64::from(i) / f64::from(sched.k_step);
    let decay = match sched.shape {
        DecayShape::Quadratic => 1.0 - frac * frac,
        DecayShape::Linear => 1.0 - frac,
    };
    let b = sched.beta_k + (sched.beta0 - sched.beta_k) * decay;
    if b < sched.beta_k {
        sched.beta_k
    } else {
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMode {
    /// `rate + q(tau)`.
    Additive,
    /// Scales the rate's magnitude by `1 + q(tau)` in the unfavourable direction
    /// (positive rates grow, negative rates shrink toward zero).
    Multiplicative,
}

/// Age penalty `q(tau) = gain * ln(tau) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub gain: f64,
    pub offset: f64,
    pub mode: PenaltyMode,
}

impl PenaltyConfig {
    pub fn new(gain: f64, offset: f64) -> Result<Self> {
        let c = PenaltyConfig { gain, offset, mode: PenaltyMode::Additive };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain >= 0.0 && self.gain.is_finite() && self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::InvalidArgument("penalty gain and offset must be non-negative"));
        }
        Ok(())
    }

    pub fn q(&self, age: u32) -> f64 {
        self.gain * libm::log(f64::from(age)) + self.offset
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig { gain: 6.15, offset: 0.1, mode: PenaltyMode::Additive }
    }
}

/// Discounts an error-rate observation of the given age (in steps, >= 1).
pub fn penalize(rate: f64, age: u32, cfg: &PenaltyConfig) -> Result<f64> {
    if age < 1 {
        return Err(Error::InvalidArgument("observation age must be at least 1"));
    }
    let q = cfg.q(age);
    Ok(match cfg.mode {
        PenaltyMode::Additive => rate + q,
        PenaltyMode::Multiplicative => {
            if rate >= 0.0 {
                rate * (1.0 + q)
            } else {
                rate / (1.0 + q)
            }
        }
    })
}

/// Axis-aligned action box.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument("action bounds need at least one axis"));
        }
        if !lower.iter().zip(&upper).all(|(l, u)| l.is_finite() && u.is_finite() && l < u) {
            return Err(Error::InvalidArgument("action bounds need lower < upper on every axis"));
        }
        Ok(ActionBounds { lower, upper })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        ActionBounds { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Acquisition optimizer budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptBudget {
    /// Grid points per axis for the initial scan.
    pub grid_per_axis: usize,
    /// Number of best grid cells refined by pattern search.
    pub refine_starts: usize,
    /// Smallest pattern step, as a fraction of the axis width.
    pub min_step: f64,
    /// Hard cap on acquisition evaluations per refinement.
    pub max_evals: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        OptBudget { grid_per_axis: 16, refine_starts: 4, min_step: 1e-4, max_evals: 20_000 }
    }
}

/// Upper bound `mean + sqrt(beta var)` when maximizing, lower bound
/// `mean - sqrt(beta var)` when minimizing.
pub fn acquisition_value(model: &GpModel, a: &[f64], beta: f64, sense: Sense) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument("beta must be non-negative"));
    }
    let (mean, var) = model.posterior(a)?;
    Ok(bound(mean, var, beta, sense))
}

fn bound(mean: f64, var: f64, beta: f64, sense: Sense) -> f64 {
    let width = libm::sqrt(beta * var);
    match sense {
        Sense::Maximize => mean + width,
        Sense::Minimize => mean - width,
    }
}

/// Candidate ordering: lower cost first, exact ties broken by the
/// lexicographically smallest coordinate vector.
fn order(a_cost: f64, a: &[f64], b_cost: f64, b: &[f64]) -> Ordering {
    a_cost
        .partial_cmp(&b_cost)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
}

/// Finds the best acquisition point in `bounds`: a uniform grid scan, then
/// coordinate pattern search with step halving from the best few cells.
/// A perfectly flat acquisition surface returns the box center.
pub fn optimize_acquisition(
    model: &GpModel,
    beta: f64,
    bounds: &ActionBounds,
    sense: Sense,
    budget: &OptBudget,
) -> Result<Vec<f64>> {
    if bounds.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: bounds.dim() });
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument("beta must be non-negative"));
    }
    if budget.grid_per_axis < 1 || budget.refine_starts < 1 || !(budget.min_step > 0.0) {
        return Err(Error::InvalidArgument("optimizer budget must be positive"));
    }
    let cost = |x: &[f64]| {
        let (m, v) = model.posterior_unchecked(x);
        let b = bound(m, v, beta, sense);
        match sense {
            Sense::Minimize => b,
            Sense::Maximize => -b,
        }
    };

    let dim = bounds.dim();
    let g = budget.grid_per_axis;
    let widths: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| (u - l) / g as f64).collect();
    let total = g.checked_pow(dim as u32).ok_or(Error::InvalidArgument("grid too large"))?;

    let mut scanned: Vec<(f64, Vec<f64>)> = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let x: Vec<f64> = (0..dim).map(|k| bounds.lower[k] + (idx[k] as f64 + 0.5) * widths[k]).collect();
        scanned.push((cost(&x), x));
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
        }
    }

    let first = scanned[0].0;
    if scanned.iter().all(|(c, _)| c.to_bits() == first.to_bits()) {
        return Ok(bounds.center());
    }

    scanned.sort_by(|a, b| order(a.0, &a.1, b.0, &b.1));
    scanned.truncate(budget.refine_starts);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (c0, x0) in scanned {
        let (c, x) = pattern_search(&cost, bounds, x0, c0, &widths, budget);
        let better = match &best {
            None => true,
            Some((bc, bx)) => order(c, &x, *bc, bx) == Ordering::Less,
        };
        if better {
            best = Some((c, x));
        }
    }
    Ok(best.map(|(_, x)| x).unwrap_or_else(|| bounds.center()))
}

fn pattern_search(
    cost: &impl Fn(&[f64]) -> f64,
    bounds: &ActionBounds,
    mut x: Vec<f64>,
    mut fx: f64,
    widths: &[f64],
    budget: &OptBudget,
) -> (f64, Vec<f64>) {
    let mut step = widths.to_vec();
    let span: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| u - l).collect();
    let mut evals = 0usize;
    let mut trial = x.clone();
    loop {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [-1.0, 1.0] {
                trial.copy_from_slice(&x);
                trial[k] = (x[k] + dir * step[k]).clamp(bounds.lower[k], bounds.upper[k]);
                if trial[k] == x[k] {
                    continue;
                }
                let ft = cost(&trial);
                evals += 1;
                if ft < fx {
                    fx = ft;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if evals >= budget.max_evals {
            break;
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step.iter().zip(&span).all(|(s, w)| *s < budget.min_step * w) {
                break;
            }
        }
    }
    (fx, x)
}
