//! Emergency detection: a rolling window of raw errors is fit with a
//! low-order polynomial and extrapolated a few steps ahead; the detector
//! fires when the trailing extrapolated values all exceed the upper error
//! limit. The limit itself comes from nominal (danger-free) error samples.

mod burr;
mod polyfit;

use alloc::collections::VecDeque;
use alloc::vec::Vec;

pub use burr::{
    burr3_cdf, burr3_quantile, fit_burr3, fit_burr3_with_loc, neg_log_likelihood, BurrParams, MIN_FIT_SAMPLES,
};
pub use polyfit::{eval_polynomial, fit_polynomial, Extrapolator};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Number of most recent errors fit (M).
    pub window: usize,
    /// Extrapolation horizon in steps (K).
    pub horizon: usize,
    /// Required length of the trailing run of exceedances (q).
    pub trailing: usize,
    /// Upper error limit; `+inf` disables firing.
    pub threshold: f64,
    pub degree: usize,
}

impl DetectorConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        DetectorConfig { threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.trailing && self.trailing <= self.horizon) {
            return Err(Error::InvalidArgument("trailing count must lie in 1..=horizon"));
        }
        if self.window <= self.degree + 1 {
            return Err(Error::InvalidArgument("window must exceed degree + 1"));
        }
        if self.threshold.is_nan() {
            return Err(Error::InvalidArgument("threshold must not be NaN"));
        }
        Ok(())
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { window: 15, horizon: 7, trailing: 3, threshold: f64::INFINITY, degree: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub fired: bool,
    /// Empty until the window has filled.
    pub extrapolated: Vec<f64>,
}

/// Number of consecutive values at the end of `values` that exceed `threshold`.
pub fn trailing_exceedances(values: &[f64], threshold: f64) -> usize {
    values.iter().rev().take_while(|v| **v > threshold).count()
}

/// Rolling-window extrapolation detector.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    extrapolator: Extrapolator,
    buffer: VecDeque<(u64, f64)>,
    next_index: u64,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Detector {
            extrapolator: Extrapolator::new(cfg.window, cfg.horizon, cfg.degree)?,
            buffer: VecDeque::with_capacity(cfg.window),
            next_index: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.cfg.threshold = threshold;
    }

    /// Buffered `(step index, error)` pairs, oldest first.
    pub fn buffer(&self) -> impl Iterator<Item = &(u64, f64)> {
        self.buffer.iter()
    }

    pub fn recent_errors(&self) -> Vec<f64> {
        self.buffer.iter().map(|(_, e)| *e).collect()
    }

    pub fn push_and_check(&mut self, e: f64) -> Result<Detection> {
        if !e.is_finite() {
            return Err(Error::InvalidArgument("error sample must be finite"));
        }
        if self.buffer.len() == self.cfg.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back((self.next_index, e));
        self.next_index += 1;
        Ok(self.check())
    }

    /// Re-evaluates the rule on the current buffer.
    pub fn check(&self) -> Detection {
        if self.buffer.len() < self.cfg.window {
            return Detection { fired: false, extrapolated: Vec::new() };
        }
        let extrapolated = self.extrapolator.apply(self.buffer.iter().map(|(_, e)| e));
        let fired = trailing_exceedances(&extrapolated, self.cfg.threshold) >= self.cfg.trailing;
        Detection { fired, extrapolated }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMethod {
    /// Nearest-rank order statistic.
    Empirical,
    /// Quantile of a fitted Burr Type III distribution.
    BurrFit,
}

/// Result of threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub method: CalibrationMethod,
    pub rho: f64,
    pub params: Option<BurrParams>,
    pub threshold: f64,
}

/// Nearest-rank quantile: the `ceil(rho * n)`-th smallest sample.
pub fn empirical_quantile(samples: &[f64], rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument("rho must lie in (0, 1)"));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let r = rho * n as f64;
    // absorb representation error in rho (0.995 * 1000 must rank 995, not 996)
    let rank = if (r - libm::round(r)).abs() < 1e-9 { libm::round(r) } else { libm::ceil(r) };
    let rank = (rank as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

pub fn calibrate(samples: &[f64], rho: f64, method: CalibrationMethod) -> Result<Calibration> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument("rho must lie in (0, 1)"));
    }
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_FIT_SAMPLES, got: samples.len() });
    }
    if !samples.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite"));
    }
    match method {
        CalibrationMethod::Empirical => {
            Ok(Calibration { method, rho, params: None, threshold: empirical_quantile(samples, rho)? })
        }
        CalibrationMethod::BurrFit => {
            let params = fit_burr3(samples)?;
            Ok(Calibration { method, rho, params: Some(params), threshold: burr3_quantile(rho, &params)? })
        }
    }
}

/// One-sided confidence limit on nominal errors.
pub fn calibrate_threshold(samples: &[f64], rho: f64, method: CalibrationMethod) -> Result<f64> {
    calibrate(samples, rho, method).map(|c| c.threshold)
}
