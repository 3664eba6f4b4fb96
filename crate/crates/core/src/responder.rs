//! Sequential response generation.
//!
//! Each step credits the previous action with the one-step change of the
//! smoothed error signal, discounts every stored rate by its age, refits a GP
//! on (action, discounted rate) pairs and picks the next action by minimizing
//! the lower confidence bound.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{
    beta_at, optimize_acquisition, penalize, ActionBounds, BetaSchedule, OptBudget, PenaltyConfig, Sense,
};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpModel, KernelSpec};

/// Mean squared element-wise difference between an observation and its reconstruction.
pub fn reconstruction_error(observed: &[f64], reconstructed: &[f64]) -> Result<f64> {
    if observed.len() != reconstructed.len() {
        return Err(Error::DimensionMismatch { expected: observed.len(), got: reconstructed.len() });
    }
    if observed.is_empty() {
        return Err(Error::InvalidArgument("reconstruction error needs at least one element"));
    }
    let sum: f64 = observed.iter().zip(reconstructed).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / observed.len() as f64)
}

/// Causal trailing moving average; the first `w - 1` outputs average over
/// whatever history exists.
pub fn smooth(errors: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(errors.len());
    for k in 0..errors.len() {
        let lo = (k + 1).saturating_sub(w);
        let window = &errors[lo..=k];
        out.push(window.iter().sum::<f64>() / window.len() as f64);
    }
    out
}

/// One-step difference of the last two smoothed samples.
pub fn error_rate(smoothed: &[f64]) -> Result<f64> {
    match smoothed {
        [.., prev, last] => Ok(last - prev),
        _ => Err(Error::InsufficientData { needed: 2, got: smoothed.len() }),
    }
}

/// A single uncertainty sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorObservation {
    pub t: u64,
    pub e: f64,
}

impl ErrorObservation {
    pub fn new(t: u64, e: f64) -> Result<Self> {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument("error observations must be finite and non-negative"));
        }
        Ok(ErrorObservation { t, e })
    }
}

/// How the first action of an episode is chosen, before any data exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstAction {
    /// Optimizer on the flat prior, which resolves to the box center.
    Center,
    /// Uniform draw from the action box (ablation).
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponderConfig {
    /// Episode length N.
    pub horizon: usize,
    pub smoothing_window: usize,
    pub bounds: ActionBounds,
    pub kernel: KernelSpec,
    pub noise: f64,
    pub schedule: BetaSchedule,
    pub penalty: PenaltyConfig,
    pub budget: OptBudget,
    pub first_action: FirstAction,
}

impl Default for ResponderConfig {
    fn default() -> Self {
        ResponderConfig {
            horizon: 30,
            smoothing_window: 5,
            bounds: ActionBounds::unit(2),
            kernel: KernelSpec::default(),
            noise: 0.01,
            schedule: BetaSchedule::default(),
            penalty: PenaltyConfig::default(),
            budget: OptBudget::default(),
            first_action: FirstAction::Center,
        }
    }
}

impl ResponderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidArgument("response horizon must be at least 1"));
        }
        if self.smoothing_window < 2 {
            return Err(Error::InvalidArgument("smoothing window must be at least 2"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidArgument("noise must be non-negative"));
        }
        self.kernel.validate()?;
        self.schedule.validate()?;
        self.penalty.validate()
    }
}

/// What happened at one response step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub raw_error: f64,
    pub smoothed_error: f64,
    /// Rate credited to the previous action; `None` at step 0.
    pub error_rate: Option<f64>,
    /// Count, minimum and mean of the penalized targets the GP was fit on.
    pub targets: TargetDigest,
    pub beta: f64,
    pub action: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetDigest {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
}

impl TargetDigest {
    fn of(targets: &[f64]) -> Self {
        if targets.is_empty() {
            return TargetDigest::default();
        }
        let min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        TargetDigest { count: targets.len(), min, mean: targets.iter().sum::<f64>() / targets.len() as f64 }
    }
}

/// One response episode.
#[derive(Debug, Clone)]
pub struct ResponderState {
    cfg: ResponderConfig,
    step: usize,
    actions: Vec<Vec<f64>>,
    rates: Vec<f64>,
    raw_errors: Vec<f64>,
    seeded: usize,
    records: Vec<StepRecord>,
}

/// Starts an episode from the errors observed before the trigger.
pub fn begin_response(cfg: ResponderConfig, recent_errors: &[f64]) -> Result<ResponderState> {
    cfg.validate()?;
    if recent_errors.len() < cfg.smoothing_window {
        return Err(Error::InsufficientData { needed: cfg.smoothing_window, got: recent_errors.len() });
    }
    if !recent_errors.iter().all(|e| e.is_finite()) {
        return Err(Error::InvalidArgument("errors must be finite"));
    }
    Ok(ResponderState {
        step: 0,
        actions: Vec::with_capacity(cfg.horizon),
        rates: Vec::with_capacity(cfg.horizon),
        raw_errors: recent_errors.to_vec(),
        seeded: recent_errors.len(),
        records: Vec::with_capacity(cfg.horizon),
        cfg,
    })
}

impl ResponderState {
    pub fn is_complete(&self) -> bool {
        self.step >= self.cfg.horizon
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn config(&self) -> &ResponderConfig {
        &self.cfg
    }

    /// Actions taken so far.
    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    /// Raw error-rates credited to the actions, oldest first.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Pre-trigger history followed by every error fed to `respond_step`.
    pub fn raw_errors(&self) -> &[f64] {
        &self.raw_errors
    }

    /// Number of pre-trigger errors at the head of `raw_errors`.
    pub fn seed_len(&self) -> usize {
        self.seeded
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    /// Penalized targets `rate_j + q(i - j)` for the current step `i`.
    pub fn penalized_targets(&self) -> Result<Vec<f64>> {
        let i = self.rates.len();
        self.rates
            .iter()
            .enumerate()
            .map(|(j, r)| penalize(*r, (i - j) as u32, &self.cfg.penalty))
            .collect()
    }

    /// Consumes the newest error and returns the next action.
    pub fn respond_step(&mut self, new_error: f64) -> Result<Vec<f64>> {
        if self.is_complete() {
            return Err(Error::EpisodeComplete);
        }
        if !new_error.is_finite() {
            return Err(Error::InvalidArgument("errors must be finite"));
        }
        self.raw_errors.push(new_error);
        let smoothed = smooth(&self.raw_errors, self.cfg.smoothing_window);
        let smoothed_now = *smoothed.last().expect("non-empty history");
        let rate = if self.step > 0 {
            let r = error_rate(&smoothed)?;
            self.rates.push(r);
            Some(r)
        } else {
            None
        };

        let targets = self.penalized_targets()?;
        let mut data = Dataset::within(self.cfg.bounds.clone());
        for (a, y) in self.actions.iter().zip(&targets) {
            data.push(a, *y)?;
        }
        let beta = beta_at(&self.cfg.schedule, self.step as u32);

        let action = match (self.step, self.cfg.first_action) {
            (0, FirstAction::Random { seed }) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b = &self.cfg.bounds;
                b.lower().iter().zip(b.upper()).map(|(l, u)| rng.random_range(*l..=*u)).collect()
            }
            _ => {
                let model = GpModel::fit(data, self.cfg.kernel, self.cfg.noise, 0.0)?;
                optimize_acquisition(&model, beta, &self.cfg.bounds, Sense::Minimize, &self.cfg.budget)?
            }
        };

        self.records.push(StepRecord {
            step: self.step,
            raw_error: new_error,
            smoothed_error: smoothed_now,
            error_rate: rate,
            targets: TargetDigest::of(&targets),
            beta,
            action: action.clone(),
        });
        self.actions.push(action.clone());
        self.step += 1;
        Ok(action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn reconstruction_error_examples() {
        assert_eq!(reconstruction_error(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(reconstruction_error(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(reconstruction_error(&[255.0], &[0.0]).unwrap(), 65025.0);
        assert!(reconstruction_error(&[1.0], &[1.0, 2.0]).is_err());
        assert!(reconstruction_error(&[], &[]).is_err());
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth(&[3.0; 6], 5), vec![3.0; 6]);
        assert_eq!(smooth(&[0.0, 10.0], 2), vec![0.0, 5.0]);
        assert_eq!(smooth(&[1.0, 2.0, 3.0, 4.0], 5), vec![1.0, 1.5, 2.0, 2.5]);
        assert!(smooth(&[], 5).is_empty());
    }

    #[test]
    fn smoothing_is_causal() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let mut b = a;
        b[5] = 100.0;
        assert_eq!(smooth(&a, 3)[..5], smooth(&b, 3)[..5]);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(error_rate(&[10.0, 12.0]).unwrap(), 2.0);
        assert_eq!(error_rate(&[4.0; 7]).unwrap(), 0.0);
        assert!(matches!(error_rate(&[1.0]), Err(Error::InsufficientData { needed: 2, got: 1 })));
        let ramp: Vec<f64> = (0..20).map(f64::from).collect();
        let s = smooth(&ramp, 5);
        assert!((error_rate(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observation_validation() {
        assert!(ErrorObservation::new(0, -1.0).is_err());
        assert!(ErrorObservation::new(0, f64::NAN).is_err());
        assert_eq!(ErrorObservation::new(3, 2.0).unwrap().e, 2.0);
    }

    #[test]
    fn begin_and_complete() {
        let st = begin_response(ResponderConfig::default(), &[20.0; 15]).unwrap();
        assert_eq!(st.step_index(), 0);
        assert!(st.actions().is_empty());
        assert!(!st.is_complete());
        assert!(matches!(
            begin_response(ResponderConfig::default(), &[20.0; 4]),
            Err(Error::InsufficientData { needed: 5, got: 4 })
        ));
        let bad = ResponderConfig { smoothing_window: 1, ..ResponderConfig::default() };
        assert!(begin_response(bad, &[20.0; 15]).is_err());
    }

    #[test]
    fn first_step_is_box_center() {
        let mut st = begin_response(ResponderConfig::default(), &[20.0; 15]).unwrap();
        assert_eq!(st.respond_step(20.0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(st.records()[0].beta, 0.07);
        assert_eq!(st.records()[0].error_rate, None);
    }

    #[test]
    fn random_first_action_is_reproducible() {
        let cfg = ResponderConfig { first_action: FirstAction::Random { seed: 9 }, ..ResponderConfig::default() };
        let mut a = begin_response(cfg.clone(), &[20.0; 15]).unwrap();
        let mut b = begin_response(cfg, &[20.0; 15]).unwrap();
        let x = a.respond_step(20.0).unwrap();
        assert_eq!(x, b.respond_step(20.0).unwrap());
        assert!(ActionBounds::unit(2).contains(&x));
    }

    #[test]
    fn episode_runs_to_completion() {
        let cfg = ResponderConfig { horizon: 6, ..ResponderConfig::default() };
        let mut st = begin_response(cfg, &[20.0; 15]).unwrap();
        for k in 0..6 {
            assert!(!st.is_complete());
            st.respond_step(20.0 + k as f64).unwrap();
            assert_eq!(st.actions().len(), k + 1);
            assert_eq!(st.rates().len(), k);
        }
        assert!(st.is_complete());
        assert_eq!(st.respond_step(1.0), Err(Error::EpisodeComplete));
    }
}
