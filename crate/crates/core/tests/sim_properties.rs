use std::f64::consts::PI;

use erbo_core::sim::{
    autopilot_action, error_mean, noise_rng, step_world, synthetic_error, ActionVector, ErrorModelParams, Obstacle,
    Road, ScenarioSpec, VehicleParams, WorldState,
};
use proptest::prelude::*;

fn scenario(road: Road, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        road,
        obstacle: Some(Obstacle { offset: 45.0, lateral: 0.0, half_width: 1.0 }),
        approach_speed: 5.556,
        error_model: ErrorModelParams { d_vis: 12.0, ..ErrorModelParams::default() },
        vehicle: VehicleParams::default(),
        seed,
    }
}

fn roads() -> [Road; 3] {
    [Road::Straight, Road::ArcLeft { radius: 40.0 }, Road::ArcRight { radius: 40.0 }]
}

fn drive(spec: &ScenarioSpec, run: u64, steps: usize) -> Vec<(WorldState, f64)> {
    let mut rng = noise_rng(spec.seed, run);
    let mut w = WorldState::start(spec);
    let mut out = Vec::new();
    for _ in 0..steps {
        let e = synthetic_error(&w, spec, &mut rng);
        out.push((w, e));
        if w.collided {
            break;
        }
        w = step_world(&w, spec, autopilot_action(&w, spec)).unwrap();
    }
    out
}

#[test]
fn autopilot_collides_on_every_preset() {
    for road in roads() {
        for speed in [5.556, 8.333] {
            let spec = ScenarioSpec { approach_speed: speed, ..scenario(road, 7) };
            let trace = drive(&spec, 0, 2000);
            assert!(trace.last().unwrap().0.collided, "{road:?} at {speed}");
        }
    }
}

#[test]
fn direct_hit_within_95_steps() {
    let spec = ScenarioSpec {
        obstacle: Some(Obstacle { offset: 25.0, lateral: 0.0, half_width: 1.0 }),
        ..scenario(Road::Straight, 0)
    };
    // independent integration of the straight-line speed dynamics
    let (mut x, mut v, mut steps) = (0.0f64, 5.556f64, 0);
    while 25.0 - x >= 2.0 {
        let throttle = (2.0 * (0.5 + 0.5 * (5.556 - v)) - 1.0).clamp(0.0, 1.0);
        x += v * 0.05;
        v += (3.0 * throttle - 0.1 * v) * 0.05;
        steps += 1;
    }
    let trace = drive(&spec, 0, 200);
    assert_eq!(trace.len() - 1, steps);
    assert!(steps <= 95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>(), run in 0u64..1000, r in 0usize..3) {
        let spec = scenario(roads()[r], seed);
        let a = drive(&spec, run, 300);
        let b = drive(&spec, run, 300);
        prop_assert_eq!(a.len(), b.len());
        for ((wa, ea), (wb, eb)) in a.iter().zip(&b) {
            prop_assert_eq!(wa, wb);
            prop_assert_eq!(ea.to_bits(), eb.to_bits());
        }
    }

    #[test]
    fn error_rises_as_the_obstacle_nears(d1 in 0.0f64..50.0, d2 in 0.0f64..50.0) {
        let spec = ScenarioSpec { error_model: ErrorModelParams { noise_sd: 0.0, ..ErrorModelParams::default() }, ..scenario(Road::Straight, 0) };
        let at = |d: f64| error_mean(&WorldState { x: 45.0 - d, ..WorldState::start(&spec) }, &spec);
        let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(at(near) >= at(far));
    }

    #[test]
    fn out_of_view_means_baseline(x in -20.0f64..40.0, y in -6.0f64..6.0, heading in -PI..PI) {
        let spec = scenario(Road::Straight, 0);
        let w = WorldState { x, y, heading, ..WorldState::start(&spec) };
        let bearing = ((-y).atan2(45.0 - x) - heading).rem_euclid(2.0 * PI);
        let bearing = if bearing > PI { bearing - 2.0 * PI } else { bearing };
        if bearing.abs() > spec.error_model.fov + 1e-9 {
            prop_assert_eq!(error_mean(&w, &spec), spec.error_model.e_base);
        }
    }

    #[test]
    fn coasting_or_braking_slows_to_rest(v0 in 0.1f64..10.0, a1 in 0.0f64..=0.5, a2 in 0.0f64..=1.0) {
        let spec = ScenarioSpec { obstacle: None, ..scenario(Road::Straight, 0) };
        let mut w = WorldState { speed: v0, ..WorldState::start(&spec) };
        for _ in 0..20_000 {
            let next = step_world(&w, &spec, ActionVector::new(a1, a2)).unwrap();
            if w.speed > 0.0 {
                prop_assert!(next.speed < w.speed);
            } else {
                prop_assert_eq!(next.speed, 0.0);
                break;
            }
            w = next;
        }
    }
}
