//! Planar vehicle world: a kinematic bicycle model on a straight or curved
//! road with one stationary disc obstacle, plus a synthetic observation
//! uncertainty signal that rises as the obstacle comes into close view.
//!
//! Frame: `x` forward at the start pose, `y` to the right, heading measured
//! clockwise from `+x`. Positive steering angles turn right.

use core::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Integration step in seconds.
pub const DT: f64 = 0.05;
/// Lane half-width; the road is two lanes either side of the centerline.
pub const LANE_HALF_WIDTH: f64 = 3.5;
/// Lateral offset beyond which the vehicle is off the road.
pub const OFF_ROAD_LIMIT: f64 = 2.0 * LANE_HALF_WIDTH;
/// Pure-pursuit lookahead distance in meters.
pub const LOOKAHEAD: f64 = 6.0;
/// Proportional gain of the autopilot speed hold.
pub const SPEED_GAIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVector {
    pub a1: f64,
    pub a2: f64,
}

impl ActionVector {
    /// Clamps both channels into `[0, 1]`; NaN maps to the neutral 0.5.
    pub fn new(a1: f64, a2: f64) -> Self {
        let c = |v: f64| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) };
        ActionVector { a1: c(a1), a2: c(a2) }
    }

    pub const NEUTRAL: ActionVector = ActionVector { a1: 0.5, a2: 0.5 };
    pub const FULL_BRAKE: ActionVector = ActionVector { a1: 0.0, a2: 0.5 };

    pub fn from_slice(a: &[f64]) -> Result<Self> {
        match a {
            [a1, a2] => Ok(Self::new(*a1, *a2)),
            _ => Err(Error::DimensionMismatch { expected: 2, got: a.len() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    pub drag: f64,
    pub max_steer: f64,
    pub radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.5,
            max_accel: 3.0,
            max_brake: 8.0,
            drag: 0.1,
            max_steer: 35.0f64.to_radians(),
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
}

pub fn decode_action(a: ActionVector, vehicle: &VehicleParams) -> Controls {
    let (throttle, brake) = if a.a1 < 0.5 { (0.0, 1.0 - 2.0 * a.a1) } else { (2.0 * a.a1 - 1.0, 0.0) };
    Controls { throttle, brake, steer: (2.0 * a.a2 - 1.0) * vehicle.max_steer }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Road {
    Straight,
    ArcLeft { radius: f64 },
    ArcRight { radius: f64 },
}

/// Position along the road and signed lateral offset (positive right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadCoord {
    pub s: f64,
    pub lateral: f64,
}

impl Road {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Road::Straight => Ok(()),
            Road::ArcLeft { radius } | Road::ArcRight { radius } if radius > 10.0 && radius.is_finite() => Ok(()),
            _ => Err(Error::InvalidArgument("arc radius must exceed 10 m")),
        }
    }

    /// Centerline point and tangent heading at arc length `s`.
    pub fn centerline(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Road::Straight => (s, 0.0, 0.0),
            Road::ArcRight { radius: r } => {
                let phi = s / r;
                (r * libm::sin(phi), r - r * libm::cos(phi), phi)
            }
            Road::ArcLeft { radius: r } => {
                let phi = s / r;
                (r * libm::sin(phi), -(r - r * libm::cos(phi)), -phi)
            }
        }
    }

    /// Offsets the centerline point at `s` by `lateral` meters to the right.
    pub fn point_at(&self, s: f64, lateral: f64) -> (f64, f64) {
        let (x, y, h) = self.centerline(s);
        (x - lateral * libm::sin(h), y + lateral * libm::cos(h))
    }

    pub fn project(&self, x: f64, y: f64) -> RoadCoord {
        match *self {
            Road::Straight => RoadCoord { s: x, lateral: y },
            Road::ArcRight { radius: r } => {
                let (dx, dy) = (x, r - y);
                RoadCoord { s: r * libm::atan2(dx, dy), lateral: r - libm::hypot(dx, dy) }
            }
            Road::ArcLeft { radius: r } => {
                let (dx, dy) = (x, y + r);
                RoadCoord { s: r * libm::atan2(dx, dy), lateral: libm::hypot(dx, dy) - r }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    /// Distance along the centerline from the start pose.
    pub offset: f64,
    pub lateral: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModelParams {
    pub e_base: f64,
    pub amplitude: f64,
    pub d_vis: f64,
    pub fov: f64,
    pub p_exp: f64,
    pub noise_sd: f64,
}

impl Default for ErrorModelParams {
    fn default() -> Self {
        ErrorModelParams { e_base: 20.0, amplitude: 40.0, d_vis: 40.0, fov: PI / 4.0, p_exp: 2.0, noise_sd: 0.5 }
    }
}

impl ErrorModelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.e_base, self.amplitude, self.d_vis, self.fov, self.p_exp]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
            && self.noise_sd >= 0.0
            && self.noise_sd.is_finite()
            && self.fov <= FRAC_PI_2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("error model parameters must be positive with fov <= pi/2"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub road: Road,
    /// `None` for the obstacle-free calibration drive.
    pub obstacle: Option<Obstacle>,
    pub approach_speed: f64,
    pub error_model: ErrorModelParams,
    pub vehicle: VehicleParams,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.road.validate()?;
        self.error_model.validate()?;
        if let Some(o) = self.obstacle {
            if !(o.offset > 0.0 && o.half_width >= 0.0 && o.lateral.is_finite()) {
                return Err(Error::InvalidArgument("obstacle needs offset > 0 and half_width >= 0"));
            }
        }
        if !(self.approach_speed >= 0.0 && self.approach_speed.is_finite()) {
            return Err(Error::InvalidArgument("approach speed must be non-negative"));
        }
        Ok(())
    }

    pub fn without_obstacle(&self) -> Self {
        ScenarioSpec { obstacle: None, ..*self }
    }

    pub fn obstacle_position(&self) -> Option<(f64, f64)> {
        self.obstacle.map(|o| self.road.point_at(o.offset, o.lateral))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub t: u64,
    pub collided: bool,
    pub off_road: bool,
}

impl WorldState {
    /// Start pose at the road origin moving at the approach speed.
    pub fn start(spec: &ScenarioSpec) -> Self {
        WorldState { x: 0.0, y: 0.0, heading: 0.0, speed: spec.approach_speed, t: 0, collided: false, off_road: false }
    }
}

/// Center-to-center distance and bearing (relative to heading, in `(-pi, pi]`).
pub fn obstacle_geometry(w: &WorldState, spec: &ScenarioSpec) -> Option<(f64, f64)> {
    let (ox, oy) = spec.obstacle_position()?;
    let (dx, dy) = (ox - w.x, oy - w.y);
    Some((libm::hypot(dx, dy), wrap_angle(libm::atan2(dy, dx) - w.heading)))
}

pub fn wrap_angle(a: f64) -> f64 {
    let r = libm::remainder(a, 2.0 * PI);
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

pub fn step_world(w: &WorldState, spec: &ScenarioSpec, a: ActionVector) -> Result<WorldState> {
    if w.collided {
        return Err(Error::TerminalState);
    }
    let v = &spec.vehicle;
    let c = decode_action(a, v);
    let dv = c.throttle * v.max_accel - c.brake * v.max_brake - v.drag * w.speed;
    let mut next = WorldState {
        x: w.x + w.speed * libm::cos(w.heading) * DT,
        y: w.y + w.speed * libm::sin(w.heading) * DT,
        heading: w.heading + w.speed / v.wheelbase * libm::tan(c.steer) * DT,
        speed: (w.speed + dv * DT).max(0.0),
        t: w.t + 1,
        collided: false,
        off_road: w.off_road,
    };
    if let (Some((d, _)), Some(o)) = (obstacle_geometry(&next, spec), spec.obstacle) {
        next.collided = d < v.radius + o.half_width;
    }
    next.off_road |= spec.road.project(next.x, next.y).lateral.abs() > OFF_ROAD_LIMIT;
    Ok(next)
}

/// Noise-free part of the error signal.
pub fn error_mean(w: &WorldState, spec: &ScenarioSpec) -> f64 {
    let m = &spec.error_model;
    let Some((d, bearing)) = obstacle_geometry(w, spec) else {
        return m.e_base;
    };
    if bearing.abs() > m.fov {
        return m.e_base;
    }
    let vis = libm::pow(libm::cos(bearing * FRAC_PI_2 / m.fov), 2.0);
    let closeness = (1.0 - d / m.d_vis).max(0.0);
    m.e_base + m.amplitude * vis * libm::pow(closeness, m.p_exp)
}

/// Error sample with Gaussian observation noise drawn from `rng`, clamped at 0.
pub fn synthetic_error<R: rand::Rng + ?Sized>(w: &WorldState, spec: &ScenarioSpec, rng: &mut R) -> f64 {
    let mean = error_mean(w, spec);
    let sd = spec.error_model.noise_sd;
    let eta = if sd > 0.0 { Normal::new(0.0, sd).map(|n| n.sample(rng)).unwrap_or(0.0) } else { 0.0 };
    (mean + eta).max(0.0)
}

/// Pure-pursuit lane keeping with a proportional speed hold. Ignores the obstacle.
pub fn autopilot_action(w: &WorldState, spec: &ScenarioSpec) -> ActionVector {
    let v = &spec.vehicle;
    let here = spec.road.project(w.x, w.y);
    let (tx, ty, _) = spec.road.centerline(here.s + LOOKAHEAD);
    let (dx, dy) = (tx - w.x, ty - w.y);
    let ld = libm::hypot(dx, dy).max(1e-9);
    let alpha = libm::atan2(dy, dx) - w.heading;
    let delta = libm::atan(2.0 * v.wheelbase * libm::sin(alpha) / ld).clamp(-v.max_steer, v.max_steer);
    ActionVector::new(0.5 + SPEED_GAIN * (spec.approach_speed - w.speed), 0.5 + 0.5 * delta / v.max_steer)
}

/// Generator for the observation noise of run `run_index`.
pub fn noise_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    stream_rng(seed, run_index, 0)
}

/// Generator for policy randomness of run `run_index`, independent of the noise.
pub fn policy_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    stream_rng(seed, run_index, 1)
}

fn stream_rng(seed: u64, run_index: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index.wrapping_mul(2).wrapping_add(lane));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(road: Road) -> ScenarioSpec {
        ScenarioSpec {
            road,
            obstacle: Some(Obstacle { offset: 25.0, lateral: 0.0, half_width: 1.0 }),
            approach_speed: 5.556,
            error_model: ErrorModelParams { noise_sd: 0.0, ..ErrorModelParams::default() },
            vehicle: VehicleParams::default(),
            seed: 0,
        }
    }

    #[test]
    fn decode_examples() {
        let v = VehicleParams::default();
        assert_eq!(decode_action(ActionVector::new(0.5, 0.5), &v), Controls { throttle: 0.0, brake: 0.0, steer: 0.0 });
        let c = decode_action(ActionVector::new(0.0, 1.0), &v);
        assert_eq!((c.throttle, c.brake), (0.0, 1.0));
        assert!((c.steer - v.max_steer).abs() < 1e-15);
        let c = decode_action(ActionVector::new(0.25, 0.25), &v);
        assert_eq!((c.throttle, c.brake), (0.0, 0.5));
        assert!((c.steer + v.max_steer / 2.0).abs() < 1e-15);
        let c = decode_action(ActionVector::new(1.0, 0.0), &v);
        assert_eq!((c.throttle, c.brake), (1.0, 0.0));
        assert_eq!(ActionVector::new(-3.0, 7.0), ActionVector { a1: 0.0, a2: 1.0 });
    }

    #[test]
    fn stationary_world_stays_put() {
        let s = spec(Road::Straight);
        let w = WorldState { speed: 0.0, ..WorldState::start(&s) };
        let n = step_world(&w, &s, ActionVector::NEUTRAL).unwrap();
        assert_eq!((n.x, n.y, n.heading, n.speed), (w.x, w.y, w.heading, 0.0));
    }

    #[test]
    fn full_brake_speed_update() {
        let s = spec(Road::Straight);
        let n = step_world(&WorldState::start(&s), &s, ActionVector::FULL_BRAKE).unwrap();
        assert!((n.speed - (5.556 - (8.0 + 0.5556) * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn autopilot_hits_obstacle_dead_ahead() {
        let s = spec(Road::Straight);
        let mut w = WorldState::start(&s);
        let mut steps = 0;
        while !w.collided {
            w = step_world(&w, &s, autopilot_action(&w, &s)).unwrap();
            steps += 1;
            assert!(steps < 200);
        }
        assert!(steps <= 95, "{steps}");
        assert!(matches!(step_world(&w, &s, ActionVector::NEUTRAL), Err(Error::TerminalState)));
    }

    #[test]
    fn error_examples() {
        let s = spec(Road::Straight);
        let m = s.error_model;
        let at = |x: f64, heading: f64| WorldState { x, heading, ..WorldState::start(&s) };
        assert_eq!(error_mean(&at(30.0, 0.0), &s), m.e_base);
        assert_eq!(error_mean(&at(0.0, PI), &s), m.e_base);
        assert!((error_mean(&at(25.0, 0.0), &s) - 60.0).abs() < 1e-12);
        assert!((error_mean(&at(5.0, 0.0), &s) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn autopilot_examples() {
        let s = spec(Road::Straight);
        let w = WorldState::start(&s);
        let a = autopilot_action(&w, &s);
        assert!((a.a1 - 0.5).abs() < 1e-12 && (a.a2 - 0.5).abs() < 1e-12);
        assert!(autopilot_action(&WorldState { speed: 3.0, ..w }, &s).a1 > 0.5);
        assert!(autopilot_action(&WorldState { y: -1.0, ..w }, &s).a2 > 0.5);
        assert!(autopilot_action(&WorldState { y: 1.0, ..w }, &s).a2 < 0.5);
    }

    #[test]
    fn arcs_project_consistently() {
        for road in [Road::ArcLeft { radius: 40.0 }, Road::ArcRight { radius: 40.0 }] {
            for s in [0.0, 5.0, 20.0, 50.0] {
                for lat in [-2.0, 0.0, 3.0] {
                    let (x, y) = road.point_at(s, lat);
                    let c = road.project(x, y);
                    assert!((c.s - s).abs() < 1e-9 && (c.lateral - lat).abs() < 1e-9, "{road:?} {s} {lat} {c:?}");
                }
            }
        }
        let (_, y, h) = Road::ArcRight { radius: 40.0 }.centerline(10.0);
        assert!(y > 0.0 && h > 0.0);
        let (_, y, h) = Road::ArcLeft { radius: 40.0 }.centerline(10.0);
        assert!(y < 0.0 && h < 0.0);
    }

    #[test]
    fn autopilot_follows_arcs() {
        for road in [Road::ArcLeft { radius: 30.0 }, Road::ArcRight { radius: 30.0 }] {
            let s = ScenarioSpec { obstacle: None, ..spec(road) };
            let mut w = WorldState::start(&s);
            for _ in 0..600 {
                w = step_world(&w, &s, autopilot_action(&w, &s)).unwrap();
            }
            assert!(!w.off_road);
            assert!(s.road.project(w.x, w.y).lateral.abs() < 1.0);
        }
    }

    #[test]
    fn streams_are_distinct() {
        use rand::Rng;
        let a: u64 = noise_rng(1, 0).random();
        let b: u64 = policy_rng(1, 0).random();
        let c: u64 = noise_rng(1, 1).random();
        assert!(a != b && a != c && b != c);
        let a2: u64 = noise_rng(1, 0).random();
        assert_eq!(a, a2);
    }
}
