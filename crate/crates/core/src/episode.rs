//! Deploy-detect-respond episodes on the simulated world.

use alloc::vec::Vec;

use rand::Rng;

use crate::detector::{calibrate, Calibration, CalibrationMethod, Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::responder::{begin_response, error_rate, smooth, ResponderConfig, ResponderState, StepRecord};
use crate::sim::{
    autopilot_action, noise_rng, obstacle_geometry, policy_rng, step_world, synthetic_error, ActionVector,
    ScenarioSpec, WorldState, DT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    BoGp,
    RandomResponse,
    NoAction,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::BoGp, Policy::RandomResponse, Policy::NoAction];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::BoGp => "bo_gp",
            Policy::RandomResponse => "random",
            Policy::NoAction => "no_action",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Detector with this upper error limit.
    Auto { threshold: f64 },
    /// Fires once the obstacle is within `distance` meters, center to center.
    Manual { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Nominal,
    Response,
    PostResponse,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Nominal => "nominal",
            Phase::Response => "response",
            Phase::PostResponse => "post",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub policy: Policy,
    pub trigger: Trigger,
    pub detector: DetectorConfig,
    pub responder: ResponderConfig,
    /// Minimum steps after the response window before the outcome is judged.
    /// The episode then runs on until the vehicle is at rest or past the obstacle.
    pub coast_steps: usize,
    /// Step budget for the nominal drive before any trigger.
    pub max_nominal_steps: usize,
    /// Return to monitoring after a response instead of stopping.
    pub retrigger: bool,
}

impl EpisodeConfig {
    pub fn new(policy: Policy, trigger: Trigger) -> Self {
        EpisodeConfig {
            policy,
            trigger,
            detector: DetectorConfig::default(),
            responder: ResponderConfig::default(),
            coast_steps: 60,
            max_nominal_steps: 2000,
            retrigger: false,
        }
    }
}

/// One simulation step as written to the per-run CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub t_sec: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub error: f64,
    pub smoothed: f64,
    pub rate: Option<f64>,
    pub a1: f64,
    pub a2: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub policy: Policy,
    pub run_index: u64,
    pub success: bool,
    pub collided: bool,
    pub off_road: bool,
    /// Step of the first trigger.
    pub trigger_step: Option<u64>,
    pub trigger_distance: Option<f64>,
    pub response_actions: Vec<ActionVector>,
    pub responder_log: Vec<StepRecord>,
    pub trace: Vec<TraceRow>,
}

impl RunRecord {
    /// Trace rows from the first trigger onwards.
    pub fn from_trigger(&self) -> &[TraceRow] {
        match self.trigger_step {
            Some(t) => &self.trace[t as usize..],
            None => &[],
        }
    }
}

enum Responder {
    Bo(ResponderState),
    Random,
    Autopilot,
}

pub fn run_episode(spec: &ScenarioSpec, cfg: &EpisodeConfig, run_index: u64) -> Result<RunRecord> {
    spec.validate()?;
    cfg.responder.validate()?;
    if cfg.responder.bounds.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.responder.bounds.dim() });
    }
    let mut det_cfg = cfg.detector;
    if let Trigger::Auto { threshold } = cfg.trigger {
        det_cfg.threshold = threshold;
    }
    let mut detector = Detector::new(det_cfg)?;
    let mut noise = noise_rng(spec.seed, run_index);
    let mut prng = policy_rng(spec.seed, run_index);
    let w_smooth = cfg.responder.smoothing_window;
    let horizon = cfg.responder.horizon;

    let mut world = WorldState::start(spec);
    let mut errors: Vec<f64> = Vec::new();
    let mut trace = Vec::new();
    let mut phase = Phase::Nominal;
    let mut phase_steps = 0usize;
    let mut nominal_total = 0usize;
    let mut responder = Responder::Autopilot;
    let mut rec = RunRecord {
        policy: cfg.policy,
        run_index,
        success: false,
        collided: false,
        off_road: false,
        trigger_step: None,
        trigger_distance: None,
        response_actions: Vec::new(),
        responder_log: Vec::new(),
        trace: Vec::new(),
    };

    loop {
        let e = synthetic_error(&world, spec, &mut noise);
        errors.push(e);
        // Window sums are independent, so the last w + 1 samples reproduce the
        // full-history smoothed values bit for bit.
        let tail = smooth(&errors[errors.len().saturating_sub(w_smooth + 1)..], w_smooth);
        let smoothed = *tail.last().expect("non-empty");
        let rate = error_rate(&tail).ok();

        if phase == Phase::Nominal {
            let detection = detector.push_and_check(e)?;
            let fired = match cfg.trigger {
                Trigger::Auto { .. } => detection.fired,
                Trigger::Manual { distance } => obstacle_geometry(&world, spec).is_some_and(|(d, _)| d <= distance),
            };
            nominal_total += 1;
            if fired && !world.collided && errors.len() > w_smooth {
                if rec.trigger_step.is_none() {
                    rec.trigger_step = Some(world.t);
                    rec.trigger_distance = obstacle_geometry(&world, spec).map(|(d, _)| d);
                }
                phase = Phase::Response;
                phase_steps = 0;
                responder = match cfg.policy {
                    Policy::BoGp => Responder::Bo(begin_response(cfg.responder.clone(), &errors[..errors.len() - 1])?),
                    Policy::RandomResponse => Responder::Random,
                    Policy::NoAction => Responder::Autopilot,
                };
            }
        }

        let action = if world.collided {
            ActionVector::NEUTRAL
        } else {
            match phase {
                Phase::Nominal => autopilot_action(&world, spec),
                Phase::Response => {
                    let a = match &mut responder {
                        Responder::Bo(state) => ActionVector::from_slice(&state.respond_step(e)?)?,
                        Responder::Random => ActionVector::new(prng.random(), prng.random()),
                        Responder::Autopilot => autopilot_action(&world, spec),
                    };
                    rec.response_actions.push(a);
                    a
                }
                Phase::PostResponse => match cfg.policy {
                    Policy::NoAction => autopilot_action(&world, spec),
                    _ => ActionVector::FULL_BRAKE,
                },
            }
        };
        if phase == Phase::Response && world.collided {
            rec.response_actions.push(action);
        }

        trace.push(TraceRow {
            step: world.t,
            t_sec: world.t as f64 * DT,
            x: world.x,
            y: world.y,
            heading: world.heading,
            speed: world.speed,
            error: e,
            smoothed,
            rate,
            a1: action.a1,
            a2: action.a2,
            phase,
        });

        // Advance the phase machine; a collision freezes the world.
        phase_steps += 1;
        match phase {
            Phase::Nominal => {
                if world.collided || nominal_total >= cfg.max_nominal_steps {
                    break;
                }
            }
            Phase::Response => {
                if phase_steps >= horizon {
                    if let Responder::Bo(state) = &responder {
                        rec.responder_log.extend_from_slice(state.records());
                    }
                    phase_steps = 0;
                    phase = if cfg.retrigger {
                        detector = Detector::new(det_cfg)?;
                        Phase::Nominal
                    } else {
                        Phase::PostResponse
                    };
                    if phase == Phase::Nominal && world.collided {
                        break;
                    }
                }
            }
            Phase::PostResponse => {
                let settled = world.speed <= 0.0 || cleared_obstacle(&world, spec);
                if world.collided || (phase_steps >= cfg.coast_steps && settled) || phase_steps >= cfg.max_nominal_steps {
                    break;
                }
            }
        }
        if !world.collided {
            world = step_world(&world, spec, action)?;
        } else {
            world.t += 1;
        }
    }

    rec.collided = world.collided;
    rec.off_road = world.off_road;
    rec.success = !world.collided && !world.off_road;
    rec.trace = trace;
    Ok(rec)
}

/// True once the vehicle is further along the road than the far edge of the obstacle.
fn cleared_obstacle(w: &WorldState, spec: &ScenarioSpec) -> bool {
    match spec.obstacle {
        Some(o) => spec.road.project(w.x, w.y).s > o.offset + o.half_width + spec.vehicle.radius,
        None => true,
    }
}

/// Errors from an autopilot drive of `steps` steps on `spec` (the obstacle is ignored if present).
pub fn collect_nominal_errors(spec: &ScenarioSpec, steps: usize, run_index: u64) -> Result<Vec<f64>> {
    let free = spec.without_obstacle();
    free.validate()?;
    let mut noise = noise_rng(free.seed, run_index);
    let mut w = WorldState::start(&free);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(synthetic_error(&w, &free, &mut noise));
        w = step_world(&w, &free, autopilot_action(&w, &free))?;
    }
    Ok(out)
}

/// Minimum length of a calibration drive.
pub const MIN_CALIBRATION_STEPS: usize = 1000;

/// Obstacle-free calibration drive followed by threshold calibration.
pub fn run_calibration(
    spec: &ScenarioSpec,
    steps: usize,
    rho: f64,
    method: CalibrationMethod,
) -> Result<(Calibration, Vec<f64>)> {
    if steps < MIN_CALIBRATION_STEPS {
        return Err(Error::InsufficientData { needed: MIN_CALIBRATION_STEPS, got: steps });
    }
    let errors = collect_nominal_errors(spec, steps, 0)?;
    Ok((calibrate(&errors, rho, method)?, errors))
}
