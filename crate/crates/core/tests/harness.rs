use std::path::PathBuf;

use gazedoc::geometry::{angular_distance, panel_point};
use gazedoc::reader::{generate, generate_trace, TraceBuilder};
use gazedoc::scenario::build_task_scenario;
use gazedoc::sim::{compare_modes, run};
use gazedoc::trace::{events_to_string, read_events};
use gazedoc::{EngineConfig, Error, EventKind, MetricsReport, Mode, ReaderModel, Scenario, Task, Vec3};
use serde_json::Map;

fn cfg(s: &Scenario, mode: Mode) -> EngineConfig {
    s.engine_config(mode, &Map::new()).unwrap()
}

#[test]
fn empty_trace_gives_nothing() {
    let s = build_task_scenario(Task::T1, 0);
    let out = run(&s, cfg(&s, Mode::Gaze), &[]).unwrap();
    assert!(out.events.is_empty());
    assert_eq!(out.metrics.sample_count, 0);
    assert_eq!(out.metrics.reading_time_s, 0.0);
    assert_eq!(out.metrics.lens_active_fraction, 0.0);
}

#[test]
fn paired_t1_reports() {
    let s = build_task_scenario(Task::T1, 2);
    let (gaze, base) = compare_modes(&s, &ReaderModel::default(), &EngineConfig::default()).unwrap();
    assert_eq!(gaze.mode, Mode::Gaze);
    assert_eq!(base.mode, Mode::Baseline);
    assert_eq!(gaze.document_order.len(), 5);
    assert_eq!(gaze.document_order, base.document_order);
    assert_eq!(gaze.snap_count, 5);
    assert!(base.selection_attempts >= 5);
    assert_eq!(base.lens_active_fraction, 0.0);
    assert_eq!(base.lens_active_s, 0.0);
    for m in [&gaze, &base] {
        let total: f64 = m.per_document_gaze_s.values().sum();
        assert!(total <= m.reading_time_s + 1e-9);
    }
}

#[test]
fn rereads_add_snaps() {
    let s = build_task_scenario(Task::T1, 5);
    let reader = ReaderModel { rereads: vec![1, 3], ..Default::default() };
    let c = cfg(&s, Mode::Gaze);
    let out = run(&s, c.clone(), &generate_trace(&s, &reader, &c).unwrap()).unwrap();
    assert_eq!(out.metrics.snap_count, 7);
}

#[test]
fn missing_reread_is_a_generation_error() {
    let s = build_task_scenario(Task::T2, 0);
    let reader = ReaderModel { rereads: vec![4], ..Default::default() };
    let err = generate_trace(&s, &reader, &cfg(&s, Mode::Gaze)).unwrap_err();
    assert!(matches!(err, Error::Generation(_)), "{err}");
}

#[test]
fn noisy_samples_mostly_within_two_sigma() {
    let s = build_task_scenario(Task::T2, 1);
    let reader = ReaderModel { noise_std_deg: 1.1, ..Default::default() };
    let g = generate(&s, &reader, &cfg(&s, Mode::Gaze)).unwrap();
    let (mut near, mut total) = (0usize, 0usize);
    for (sample, script) in g.samples.iter().zip(&g.script) {
        if let (true, Some(d)) = (script.fixation, sample.direction) {
            total += 1;
            near += (angular_distance(d, script.direction) <= 2.2) as usize;
        }
    }
    assert!(total > 1000);
    assert!(near as f64 / total as f64 >= 0.95, "{near}/{total}");
}

#[test]
fn two_second_strip_dwell_scrolls_four_sentences() {
    let s = build_task_scenario(Task::T3, 0);
    let c = cfg(&s, Mode::Gaze);
    let scene = s.build_scene().unwrap();
    let mut p = scene.panels[0].clone();
    p.strip_frac = c.scroll_button_strip_frac;
    let target = panel_point(&p.pose, &p.extent, (0.5, 1.0 - 0.5 * c.scroll_button_strip_frac));
    let trace = TraceBuilder::new(s.head_start.position, 120.0).look_at(target, 241).build();
    let out = run(&s, c, &trace).unwrap();
    let sentences: u32 = out
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Scroll { sentences, .. } => Some(sentences),
            _ => None,
        })
        .sum();
    assert_eq!(sentences, 4);
}

#[test]
fn lens_half_the_run() {
    let mut s = build_task_scenario(Task::T2, 0);
    s.documents[0].placement.radius_m = 0.4;
    s.documents[0].placement.angle_deg = 0.0;
    s.documents[0].placement.height_m = 0.0;
    let center = s.build_scene().unwrap().panels[0].pose.position;
    let trace = TraceBuilder::new(s.head_start.position, 120.0).look_at(center, 361).build();
    let m = run(&s, cfg(&s, Mode::Gaze), &trace).unwrap().metrics;
    assert_eq!(m.reading_time_s, 3.0);
    assert!((m.lens_active_fraction - 0.5).abs() < 1e-9, "{}", m.lens_active_fraction);
}

#[test]
fn generation_is_deterministic() {
    for task in Task::ALL {
        let s = build_task_scenario(task, 9);
        let c = cfg(&s, Mode::Gaze);
        let reader = ReaderModel { seed: 3, ..Default::default() };
        let a = run(&s, c.clone(), &generate_trace(&s, &reader, &c).unwrap()).unwrap();
        let b = run(&s, c.clone(), &generate_trace(&s, &reader, &c).unwrap()).unwrap();
        assert_eq!(events_to_string(&a.events), events_to_string(&b.events));
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Set GAZEDOC_BLESS=1 to rewrite the golden files.
#[test]
fn golden_t1() {
    for mode in [Mode::Gaze, Mode::Baseline] {
        let s = build_task_scenario(Task::T1, 1);
        let c = cfg(&s, mode);
        let trace = generate_trace(&s, &ReaderModel::default(), &c).unwrap();
        let out = run(&s, c, &trace).unwrap();
        let tag = serde_json::to_value(mode).unwrap();
        let events_path = fixture(&format!("t1-{}.events.jsonl", tag.as_str().unwrap()));
        let metrics_path = fixture(&format!("t1-{}.metrics.json", tag.as_str().unwrap()));
        if std::env::var_os("GAZEDOC_BLESS").is_some() {
            std::fs::create_dir_all(events_path.parent().unwrap()).unwrap();
            std::fs::write(&events_path, events_to_string(&out.events)).unwrap();
            std::fs::write(&metrics_path, serde_json::to_string_pretty(&out.metrics).unwrap() + "\n").unwrap();
        }
        let golden = read_events(std::io::BufReader::new(std::fs::File::open(&events_path).unwrap())).unwrap();
        assert_eq!(out.events, golden, "{mode:?} events drifted from {}", events_path.display());
        let metrics: MetricsReport = serde_json::from_str(&std::fs::read_to_string(&metrics_path).unwrap()).unwrap();
        assert_eq!(out.metrics, metrics);
    }
}

#[test]
fn origin_only_trace_keeps_head() {
    // a stream without head orientation still runs
    let s = build_task_scenario(Task::T1, 0);
    let trace = TraceBuilder::new(s.head_start.position, 90.0).look_at(s.head_start.position - Vec3::Z, 90).build();
    assert!(trace.iter().all(|x| x.head.is_none()));
    let out = run(&s, cfg(&s, Mode::Gaze), &trace).unwrap();
    assert_eq!(out.metrics.sample_count, 90);
}
