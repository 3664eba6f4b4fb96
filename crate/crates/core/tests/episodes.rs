use erbo_core::detector::CalibrationMethod;
use erbo_core::episode::{run_calibration, run_episode, EpisodeConfig, Phase, Policy, Trigger};
use erbo_core::sim::{ErrorModelParams, Obstacle, Road, ScenarioSpec, VehicleParams};
use erbo_core::Error;

fn preset(road: Road) -> ScenarioSpec {
    ScenarioSpec {
        road,
        obstacle: Some(Obstacle { offset: 45.0, lateral: 0.0, half_width: 1.0 }),
        approach_speed: 5.556,
        error_model: ErrorModelParams { d_vis: 12.0, ..ErrorModelParams::default() },
        vehicle: VehicleParams::default(),
        seed: 7,
    }
}

const ROADS: [Road; 3] = [Road::Straight, Road::ArcLeft { radius: 40.0 }, Road::ArcRight { radius: 40.0 }];

#[test]
fn bo_run_on_the_straight_road_is_well_formed() {
    let spec = preset(Road::Straight);
    let rec = run_episode(&spec, &EpisodeConfig::new(Policy::BoGp, Trigger::Auto { threshold: 24.5 }), 0).unwrap();
    let d = rec.trigger_distance.expect("detector fires");
    assert!(d > 2.0 && d < 12.0, "{d}");
    assert_eq!(rec.response_actions.len(), 30);
    assert_eq!(rec.responder_log.len(), 30);
    let phases: Vec<Phase> = rec.trace.iter().map(|r| r.phase).collect();
    let first = phases.iter().position(|p| *p == Phase::Response).unwrap();
    assert_eq!(first as u64, rec.trigger_step.unwrap());
    assert_eq!(phases.iter().filter(|p| **p == Phase::Response).count(), 30);
    assert!(phases[first + 30..].iter().all(|p| *p == Phase::PostResponse));
    assert!(rec.trace.windows(2).all(|w| w[1].step == w[0].step + 1));
    if rec.success {
        assert!(!rec.collided && !rec.off_road);
    }
}

#[test]
fn no_action_never_succeeds() {
    for road in ROADS {
        for trigger in [Trigger::Auto { threshold: 24.5 }, Trigger::Manual { distance: 12.0 }] {
            for run in 0..5 {
                let rec = run_episode(&preset(road), &EpisodeConfig::new(Policy::NoAction, trigger), run).unwrap();
                assert!(!rec.success && rec.collided, "{road:?} {trigger:?} {run}");
            }
        }
    }
}

#[test]
fn manual_trigger_shares_the_pre_trigger_prefix() {
    for road in ROADS {
        let spec = ScenarioSpec { approach_speed: 8.333, ..preset(road) };
        let runs: Vec<_> = Policy::ALL
            .iter()
            .map(|p| run_episode(&spec, &EpisodeConfig::new(*p, Trigger::Manual { distance: 12.0 }), 3).unwrap())
            .collect();
        let t = runs[0].trigger_step.unwrap();
        for r in &runs {
            assert_eq!(r.trigger_step, Some(t));
            let t = t as usize;
            assert_eq!(r.trace[..t], runs[0].trace[..t]);
            // the triggering observation is shared too; only the action differs
            assert_eq!(r.trace[t].error, runs[0].trace[t].error);
            assert_eq!((r.trace[t].x, r.trace[t].y), (runs[0].trace[t].x, runs[0].trace[t].y));
        }
    }
}

#[test]
fn episodes_replay_bit_for_bit() {
    for p in Policy::ALL {
        let cfg = EpisodeConfig::new(p, Trigger::Auto { threshold: 24.5 });
        let a = run_episode(&preset(Road::ArcRight { radius: 40.0 }), &cfg, 11).unwrap();
        let b = run_episode(&preset(Road::ArcRight { radius: 40.0 }), &cfg, 11).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.success, b.success);
    }
}

#[test]
fn calibration_examples() {
    let quiet = ScenarioSpec { error_model: ErrorModelParams { noise_sd: 0.0, ..preset(Road::Straight).error_model }, ..preset(Road::Straight) };
    assert!(matches!(run_calibration(&quiet, 1000, 0.995, CalibrationMethod::BurrFit), Err(Error::DegenerateData(_))));
    let (cal, errors) = run_calibration(&quiet, 1000, 0.995, CalibrationMethod::Empirical).unwrap();
    assert_eq!(cal.threshold, 20.0);
    assert!(errors.iter().all(|e| *e == 20.0));

    let spec = preset(Road::Straight);
    let (a, _) = run_calibration(&spec, 2000, 0.995, CalibrationMethod::Empirical).unwrap();
    let (b, _) = run_calibration(&spec, 2000, 0.995, CalibrationMethod::Empirical).unwrap();
    assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
    let m = spec.error_model;
    assert!(a.threshold > m.e_base && a.threshold < m.e_base + 4.0 * m.noise_sd, "{}", a.threshold);

    assert!(matches!(run_calibration(&spec, 999, 0.995, CalibrationMethod::Empirical), Err(Error::InsufficientData { .. })));
}
