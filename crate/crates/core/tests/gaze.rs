use gazedoc::gaze::{smooth, FilterConfig};
use gazedoc::geometry::angular_distance;
use gazedoc::{ButtonState, Error, GazePipeline, GazeSample, Phase, Vec3};
use proptest::prelude::*;

fn sample(t: f64, d: Option<Vec3>) -> GazeSample {
    GazeSample { t, origin: Vec3::ZERO, direction: d, buttons: ButtonState::default(), head: None, controller: None }
}

fn tilt(base: Vec3, ax: f64, ay: f64) -> Vec3 {
    Vec3::new(base.x + ax.to_radians().tan(), base.y + ay.to_radians().tan(), base.z).normalized().unwrap()
}

proptest! {
    #[test]
    fn smoothing_stays_inside_the_noise_cone(
        offsets in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..40),
        lambda in 0.01..1.0f64,
    ) {
        let truth = -Vec3::Z;
        let window: Vec<(f64, Vec3)> =
            offsets.iter().enumerate().map(|(i, &(a, b))| (i as f64 / 120.0, tilt(truth, a, b))).collect();
        let worst = window.iter().map(|&(_, d)| angular_distance(d, truth)).fold(0.0, f64::max);
        let s = smooth(&window, lambda).unwrap();
        prop_assert!(angular_distance(s, truth) <= worst + 1e-9);
    }

    #[test]
    fn lambda_one_is_the_mean(offsets in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..40)) {
        let window: Vec<(f64, Vec3)> =
            offsets.iter().enumerate().map(|(i, &(a, b))| (i as f64 * 0.01, tilt(-Vec3::Z, a, b))).collect();
        let sum = window.iter().fold(Vec3::ZERO, |acc, &(_, d)| acc + d);
        let mean = (sum / window.len() as f64).normalized().unwrap();
        let s = smooth(&window, 1.0).unwrap();
        prop_assert!((s - mean).norm() < 1e-9);
    }

    #[test]
    fn window_never_exceeds_its_span(steps in prop::collection::vec(0.001..0.05f64, 1..200)) {
        let cfg = FilterConfig::default();
        let mut p = GazePipeline::new(cfg);
        let mut t = 0.0;
        for dt in steps {
            t += dt;
            let est = p.step(&sample(t, Some(-Vec3::Z))).unwrap();
            prop_assert_eq!(est.phase, Phase::Fixation);
            prop_assert!(est.window.first().is_some_and(|&t0| t - t0 <= cfg.fixation_window_s));
            prop_assert_eq!(est.window.last().copied(), Some(t));
        }
    }
}

#[test]
fn saccade_then_new_fixation() {
    let mut p = GazePipeline::new(FilterConfig::default());
    let a = -Vec3::Z;
    let b = tilt(a, 10.0, 0.0);
    for k in 0..10 {
        assert_eq!(p.step(&sample(k as f64 / 120.0, Some(a))).unwrap().phase, Phase::Fixation);
    }
    let jump = p.step(&sample(10.0 / 120.0, Some(b))).unwrap();
    assert_eq!(jump.phase, Phase::Saccade);
    assert_eq!(jump.point, Some(b));
    let settle = p.step(&sample(11.0 / 120.0, Some(b))).unwrap();
    assert_eq!(settle.phase, Phase::Fixation);
    assert_eq!(settle.window, vec![11.0 / 120.0]);
    assert_eq!(settle.fixation_start_t, Some(11.0 / 120.0));
}

#[test]
fn invalid_samples_pass_through() {
    let mut p = GazePipeline::new(FilterConfig::default());
    let est = p.step(&sample(0.0, None)).unwrap();
    assert_eq!(est.phase, Phase::Invalid);
    assert!(est.point.is_none());
    assert!(matches!(p.step(&sample(0.0, None)), Err(Error::StreamOrder { .. })));
    assert!(matches!(p.step(&sample(-1.0, Some(-Vec3::Z))), Err(Error::StreamOrder { .. })));
}

#[test]
fn empty_window_is_an_error() {
    assert!(matches!(smooth(&[], 0.5), Err(Error::EmptyWindow)));
    assert!(matches!(smooth(&[(0.0, Vec3::X), (0.0, -Vec3::X)], 1.0), Err(Error::DegenerateWindow)));
}
