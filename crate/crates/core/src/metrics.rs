//! Per-run objective measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::document::Scene;
use crate::engine::{EventKind, InteractionEvent, Mode};
use crate::gaze::{FixationEstimate, GazeSample, Phase};

/// Gaze time a document needs before it counts as visited in `document_order`.
pub const VISIT_THRESHOLD_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: Mode,
    pub sample_count: usize,
    /// Last sample time minus first sample time.
    pub reading_time_s: f64,
    /// Fixation time whose topmost gazed panel was each document, by content id.
    pub per_document_gaze_s: BTreeMap<String, f64>,
    /// Documents in the order they first accumulated `VISIT_THRESHOLD_S` of gaze.
    pub document_order: Vec<String>,
    pub lens_active_s: f64,
    pub lens_active_fraction: f64,
    /// Gaze `scroll` plus `baseline_scroll` events.
    pub scroll_event_count: usize,
    /// Trigger presses (rising edges).
    pub selection_attempts: usize,
    pub snap_count: usize,
    pub event_counts: BTreeMap<String, usize>,
}

/// Builds a [`MetricsReport`] incrementally, one step at a time.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    mode: Mode,
    first_t: Option<f64>,
    last_t: Option<f64>,
    samples: usize,
    prev_trigger: bool,
    selection_attempts: usize,
    gaze: BTreeMap<String, f64>,
    order: Vec<String>,
    lens_since: Option<f64>,
    lens_s: f64,
    counts: BTreeMap<String, usize>,
}

impl MetricsAccumulator {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Default::default() }
    }

    /// Records one sample, picked against `scene` as it was before the step.
    pub fn observe_sample(&mut self, sample: &GazeSample, est: &FixationEstimate, scene: &Scene) {
        let dt = self.last_t.map_or(0.0, |prev| sample.t - prev);
        self.first_t.get_or_insert(sample.t);
        self.last_t = Some(sample.t);
        self.samples += 1;

        if sample.buttons.trigger_pressed && !self.prev_trigger {
            self.selection_attempts += 1;
        }
        self.prev_trigger = sample.buttons.trigger_pressed;

        if est.phase == Phase::Fixation && dt > 0.0 {
            let doc = est
                .ray()
                .and_then(|ray| scene.topmost_hit(&ray))
                .and_then(|(id, _)| scene.get(id))
                .filter(|p| p.is_document);
            if let Some(p) = doc {
                let total = self.gaze.entry(p.content_id.clone()).or_insert(0.0);
                *total += dt;
                if *total >= VISIT_THRESHOLD_S && !self.order.contains(&p.content_id) {
                    self.order.push(p.content_id.clone());
                }
            }
        }
    }

    pub fn observe_events(&mut self, events: &[InteractionEvent]) {
        for e in events {
            *self.counts.entry(e.kind.name().to_string()).or_insert(0) += 1;
            match e.kind {
                EventKind::LensOn { .. } => {
                    self.lens_since.get_or_insert(e.t);
                }
                EventKind::LensOff { .. } => {
                    if let Some(on) = self.lens_since.take() {
                        self.lens_s += e.t - on;
                    }
                }
                _ => {}
            }
        }
    }

    pub fn finish(&self) -> MetricsReport {
        let reading_time_s = match (self.first_t, self.last_t) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        let lens_active_s = self.lens_s
            + match (self.lens_since, self.last_t) {
                (Some(on), Some(end)) => end - on,
                _ => 0.0,
            };
        let count = |k: &str| self.counts.get(k).copied().unwrap_or(0);
        MetricsReport {
            mode: self.mode,
            sample_count: self.samples,
            reading_time_s,
            per_document_gaze_s: self.gaze.clone(),
            document_order: self.order.clone(),
            lens_active_s,
            lens_active_fraction: if reading_time_s > 0.0 {
                (lens_active_s / reading_time_s).clamp(0.0, 1.0)
            } else {
                0.0
            },
            scroll_event_count: count("scroll") + count("baseline_scroll"),
            selection_attempts: self.selection_attempts,
            snap_count: count("snap"),
            event_counts: self.counts.clone(),
        }
    }
}
