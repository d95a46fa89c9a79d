//! Synthetic reader: turns a reading intent (read every document in turn,
//! then any re-reads) into a 120 Hz gaze trace for one interaction mode.
//!
//! Generation is closed-loop. Every emitted sample is also fed to an internal
//! [`Runner`], and the reader waits on what the engine shows (the highlight,
//! the snapped panel, the scroll position) before moving on, the way a person
//! would. Waits time out with [`Error::Generation`].
//!
//! Noise model: each fixation gets a constant Gaussian angular offset, plus a
//! small independent jitter on every sample. The two are scaled so the total
//! RMS angular error equals `noise_std_deg`. Offsets are constant within a
//! fixation because the tracker error is a bias, not white noise; i.i.d.
//! noise of a degree at 120 Hz would read as a saccade on most samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::document::{PanelId, ScrollButton};
use crate::engine::{EngineConfig, Mode, SelectState};
use crate::error::{Error, Result};
use crate::gaze::{ButtonState, GazeSample};
use crate::geometry::{angular_distance, panel_point, Orientation, Pose, Ray, Vec3};
use crate::scenario::Scenario;
use crate::sim::Runner;

/// Per-sample jitter, degrees per axis.
pub const JITTER_DEG: f64 = 0.03;
/// Angular margin an aim point keeps from other panels and edges.
pub const AIM_MARGIN_DEG: f64 = 2.5;
/// A baseline reader pulls a document to this distance before reading.
pub const BASELINE_READ_DISTANCE_M: f64 = 0.8;
/// Hand position relative to the head, in the head's yaw frame.
const HAND_OFFSET: Vec3 = Vec3::new(0.2, -0.35, -0.25);
const OFF_TARGET_REFIX_S: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReaderModel {
    pub words_per_minute: f64,
    /// Characters covered per fixation; sets fixations per line.
    pub chars_per_fixation: usize,
    /// Peak angular speed of a saccade.
    pub saccade_speed_deg_s: f64,
    /// Total RMS angular gaze error; 0 or within the tracker band [0.5, 1.1].
    pub noise_std_deg: f64,
    /// Pause between recognizing a document and acting on it.
    pub decision_delay_s: f64,
    /// Documents (by index) re-read after the first pass, in order.
    pub rereads: Vec<usize>,
    /// Lines read on a re-read.
    pub reread_lines: usize,
    pub seed: u64,
}

impl Default for ReaderModel {
    fn default() -> Self {
        Self {
            words_per_minute: 200.0,
            chars_per_fixation: 8,
            saccade_speed_deg_s: 300.0,
            noise_std_deg: 0.8,
            decision_delay_s: 0.4,
            rereads: Vec::new(),
            reread_lines: 3,
            seed: 7,
        }
    }
}

impl ReaderModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.words_per_minute > 0.0) {
            return bad("words_per_minute must be > 0".into());
        }
        if self.chars_per_fixation == 0 {
            return bad("chars_per_fixation must be >= 1".into());
        }
        if !(self.saccade_speed_deg_s > 0.0) {
            return bad("saccade_speed_deg_s must be > 0".into());
        }
        if !(self.noise_std_deg == 0.0 || (0.5..=1.1).contains(&self.noise_std_deg)) {
            return bad(format!("noise_std_deg {} outside 0 or [0.5, 1.1]", self.noise_std_deg));
        }
        if !(self.decision_delay_s >= 0.0) {
            return bad("decision_delay_s must be >= 0".into());
        }
        Ok(())
    }

    /// Per-axis standard deviations (fixation offset, per-sample jitter).
    pub fn noise_sigmas(&self) -> (f64, f64) {
        if self.noise_std_deg == 0.0 {
            return (0.0, 0.0);
        }
        let per_axis = self.noise_std_deg / std::f64::consts::SQRT_2;
        ((per_axis * per_axis - JITTER_DEG * JITTER_DEG).max(0.0).sqrt(), JITTER_DEG)
    }
}

/// What the reader intended at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptPoint {
    /// Noise-free gaze direction.
    pub direction: Vec3,
    /// False during saccades.
    pub fixation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrace {
    pub samples: Vec<GazeSample>,
    /// Intended direction of each sample.
    pub script: Vec<ScriptPoint>,
}

/// Gaze trace for `scenario` under `cfg.mode`.
pub fn generate_trace(scenario: &Scenario, reader: &ReaderModel, cfg: &EngineConfig) -> Result<Vec<GazeSample>> {
    Ok(generate(scenario, reader, cfg)?.samples)
}

/// Like [`generate_trace`], also returning the noise-free script.
pub fn generate(scenario: &Scenario, reader: &ReaderModel, cfg: &EngineConfig) -> Result<GeneratedTrace> {
    reader.validate()?;
    let mut g = Gen::new(scenario, reader, cfg)?;
    g.settle(0.3)?;
    for i in 0..scenario.documents.len() {
        g.read(PanelId(i as u32), None)?;
    }
    for &i in &reader.rereads {
        if i >= scenario.documents.len() {
            return Err(Error::Generation(format!("re-read of missing document {i}")));
        }
        g.read(PanelId(i as u32), Some(reader.reread_lines))?;
    }
    g.settle(0.5)?;
    Ok(g.out)
}

struct Gen<'a> {
    reader: &'a ReaderModel,
    mode: Mode,
    lines_per_unit: f64,
    runner: Runner,
    rng: ChaCha8Rng,
    offset_dist: Option<Normal<f64>>,
    jitter_dist: Option<Normal<f64>>,
    rate: f64,
    k: u64,
    head_pos: Vec3,
    yaw: f64,
    gaze: Vec3,
    /// Current fixation offset (right, up), degrees.
    offset: (f64, f64),
    hand: Option<Ray>,
    out: GeneratedTrace,
}

/// `dir` turned by small angles `(a, b)` degrees to its right and up.
fn perturb(dir: Vec3, (a, b): (f64, f64)) -> Vec3 {
    let right = dir.cross(Vec3::Y).normalized().unwrap_or(Vec3::X);
    let up = right.cross(dir);
    (dir + right * a.to_radians().tan() + up * b.to_radians().tan()).normalized().unwrap_or(dir)
}

fn yaw_towards(from: Vec3, to: Vec3) -> f64 {
    let d = to - from;
    (-d.x).atan2(-d.z)
}

impl<'a> Gen<'a> {
    fn new(scenario: &Scenario, reader: &'a ReaderModel, cfg: &EngineConfig) -> Result<Self> {
        let runner = Runner::from_scenario(scenario, cfg.clone())?;
        let (so, sj) = reader.noise_sigmas();
        let normal = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).expect("finite sigma"));
        let head = scenario.head_start;
        Ok(Self {
            reader,
            mode: cfg.mode,
            lines_per_unit: cfg.baseline_lines_per_unit,
            runner,
            rng: ChaCha8Rng::seed_from_u64(reader.seed),
            offset_dist: normal(so),
            jitter_dist: normal(sj),
            rate: cfg.sample_rate_hz,
            k: 0,
            head_pos: head.position,
            yaw: yaw_towards(Vec3::ZERO, head.orientation.forward()),
            gaze: head.orientation.forward(),
            offset: (0.0, 0.0),
            hand: None,
            out: GeneratedTrace { samples: Vec::new(), script: Vec::new() },
        })
    }

    fn t(&self) -> f64 {
        self.k as f64 / self.rate
    }

    fn draw_offset(&mut self) -> (f64, f64) {
        match self.offset_dist {
            Some(d) => (d.sample(&mut self.rng), d.sample(&mut self.rng)),
            None => (0.0, 0.0),
        }
    }

    fn head_orientation(&self) -> Orientation {
        Orientation::from_yaw(self.yaw)
    }

    fn hand_origin(&self) -> Vec3 {
        self.head_pos + self.head_orientation().rotate(HAND_OFFSET)
    }

    fn emit(&mut self, buttons: ButtonState, fixation: bool, offset: (f64, f64)) -> Result<()> {
        let (mut a, mut b) = offset;
        if fixation {
            if let Some(j) = self.jitter_dist {
                a += j.sample(&mut self.rng);
                b += j.sample(&mut self.rng);
            }
        }
        let direction = if a == 0.0 && b == 0.0 { self.gaze } else { perturb(self.gaze, (a, b)) };
        let sample = GazeSample {
            t: self.t(),
            origin: self.head_pos,
            direction: Some(direction),
            buttons,
            head: Some(self.head_orientation()),
            controller: self.hand,
        };
        self.k += 1;
        self.runner.step(&sample)?;
        self.out.samples.push(sample);
        self.out.script.push(ScriptPoint { direction: self.gaze, fixation });
        Ok(())
    }

    fn hold(&mut self, buttons: ButtonState) -> Result<()> {
        self.emit(buttons, true, self.offset)
    }

    /// Moves the gaze to `point` at saccade speed, turning the head to `yaw`.
    fn saccade(&mut self, point: Vec3, yaw: Option<f64>) -> Result<()> {
        let target = (point - self.head_pos).normalized().ok_or_else(|| gen_err("saccade to the eye"))?;
        let next_offset = self.draw_offset();
        let angle = angular_distance(self.gaze, target);
        let n = (angle / (self.reader.saccade_speed_deg_s / self.rate)).ceil().max(1.0) as usize;
        let (g0, y0, o0) = (self.gaze, self.yaw, self.offset);
        let y1 = yaw.unwrap_or(y0);
        for i in 1..=n {
            let s = i as f64 / n as f64;
            self.gaze = g0.lerp(target, s).normalized().unwrap_or(target);
            self.yaw = y0 + (y1 - y0) * s;
            let o = (o0.0 + (next_offset.0 - o0.0) * s, o0.1 + (next_offset.1 - o0.1) * s);
            self.emit(ButtonState::default(), false, o)?;
        }
        self.gaze = target;
        self.yaw = y1;
        self.offset = next_offset;
        Ok(())
    }

    fn fixate(&mut self, seconds: f64) -> Result<()> {
        let n = (seconds * self.rate).round().max(1.0) as usize;
        for _ in 0..n {
            self.hold(ButtonState::default())?;
        }
        Ok(())
    }

    /// Holds the gaze until `done`, refixating after `OFF_TARGET_REFIX_S`
    /// spent without `on_target`.
    fn fixate_until(
        &mut self,
        timeout_s: f64,
        what: &str,
        done: impl Fn(&Runner) -> bool,
        on_target: impl Fn(&Runner) -> bool,
    ) -> Result<()> {
        let start = self.t();
        let mut off_since: Option<f64> = None;
        loop {
            self.hold(ButtonState::default())?;
            if done(&self.runner) {
                return Ok(());
            }
            let t = self.t();
            if on_target(&self.runner) {
                off_since = None;
            } else if t - *off_since.get_or_insert(t) >= OFF_TARGET_REFIX_S {
                self.offset = self.draw_offset();
                off_since = None;
            }
            if t - start > timeout_s {
                return Err(gen_err(&format!("{what}: not reached within {timeout_s} s (t = {t:.3})")));
            }
        }
    }

    fn settle(&mut self, seconds: f64) -> Result<()> {
        self.fixate(seconds)
    }

    fn panel_pose(&self, id: PanelId) -> Result<(Pose, crate::geometry::PanelExtent)> {
        let p = self.runner.engine().scene().get(id).ok_or_else(|| gen_err(&format!("no {id}")))?;
        Ok((p.pose, p.extent))
    }

    fn point_on(&self, id: PanelId, uv: (f64, f64)) -> Result<Vec3> {
        let (pose, extent) = self.panel_pose(id)?;
        Ok(panel_point(&pose, &extent, uv))
    }

    /// A point on `id` that picks `id` from `origin` even when the ray is off
    /// by up to `AIM_MARGIN_DEG`.
    fn aim(&self, id: PanelId, origin: Vec3, controller: bool) -> Result<Vec3> {
        let scene = self.runner.engine().scene();
        let picks = |dir: Vec3| {
            let ray = Ray { origin, direction: dir };
            let hit = if controller { scene.first_collision(&ray) } else { scene.topmost_hit(&ray) };
            hit.map(|(h, _)| h) == Some(id)
        };
        const US: [f64; 5] = [0.5, 0.35, 0.65, 0.2, 0.8];
        const VS: [f64; 3] = [0.5, 0.35, 0.65];
        let ring: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let a = i as f64 * std::f64::consts::FRAC_PI_4;
                (AIM_MARGIN_DEG * a.cos(), AIM_MARGIN_DEG * a.sin())
            })
            .collect();
        for v in VS {
            for u in US {
                let point = self.point_on(id, (u, v))?;
                let Some(dir) = (point - origin).normalized() else { continue };
                if picks(dir) && ring.iter().all(|&o| picks(perturb(dir, o))) {
                    return Ok(point);
                }
            }
        }
        Err(gen_err(&format!("no clear line of sight to {id}")))
    }

    fn read(&mut self, id: PanelId, limit: Option<usize>) -> Result<()> {
        match self.mode {
            Mode::Gaze => self.select_gaze(id)?,
            Mode::Baseline => self.select_baseline(id)?,
        }
        self.read_document(id, limit)
    }

    fn select_gaze(&mut self, id: PanelId) -> Result<()> {
        if self.runner.engine().select_state() == SelectState::Snapped(id) {
            return Ok(());
        }
        let point = self.aim(id, self.head_pos, false)?;
        let center = self.panel_pose(id)?.0.position;
        self.saccade(point, Some(yaw_towards(self.head_pos, center)))?;
        let highlighted = move |r: &Runner| r.engine().highlighted() == Some(id);
        self.fixate_until(3.0, "highlight", highlighted, highlighted)?;
        self.fixate(self.reader.decision_delay_s)?;
        self.hold(ButtonState { trigger_pressed: true, ..Default::default() })?;
        if self.runner.engine().select_state() != SelectState::Snapped(id) {
            return Err(gen_err(&format!("trigger did not snap {id}")));
        }
        Ok(())
    }

    fn select_baseline(&mut self, id: PanelId) -> Result<()> {
        if self.runner.engine().baseline_state().selected == Some(id) {
            return Ok(());
        }
        let center = self.panel_pose(id)?.0.position;
        let yaw = yaw_towards(self.head_pos, center);
        let prev_yaw = std::mem::replace(&mut self.yaw, yaw);
        let hand = self.hand_origin();
        let point = self.aim(id, hand, true);
        self.yaw = prev_yaw;
        let point = point?;
        self.saccade(point, Some(yaw))?;
        self.hand = Some(Ray::through(hand, point)?);
        self.fixate(self.reader.decision_delay_s)?;
        self.hold(ButtonState { trigger_pressed: true, ..Default::default() })?;
        if self.runner.engine().baseline_state().selected != Some(id) {
            return Err(gen_err(&format!("laser did not select {id}")));
        }

        // Pull the document closer along the laser.
        let pull = (center.distance(self.head_pos) - BASELINE_READ_DISTANCE_M).max(0.0);
        if pull > 0.0 {
            let grab = ButtonState { grab_pressed: true, ..Default::default() };
            let ray = self.hand.expect("set above");
            let n = (0.5 * self.rate).round().max(1.0) as usize;
            self.hold(grab)?;
            for i in 1..=n {
                let origin = ray.origin - ray.direction * (pull * i as f64 / n as f64);
                self.hand = Some(Ray { origin, direction: ray.direction });
                self.hold(grab)?;
            }
            self.hold(ButtonState::default())?;
        }
        Ok(())
    }

    fn read_document(&mut self, id: PanelId, limit: Option<usize>) -> Result<()> {
        let mut next = 0usize;
        loop {
            let (top, visible, total) = {
                let p = self.runner.engine().scene().get(id).ok_or_else(|| gen_err("panel vanished"))?;
                (p.scroll_line, p.layout.visible_lines, p.total_lines())
            };
            let end_all = limit.map_or(total, |l| l.min(total));
            let end = (top + visible).min(end_all);
            for line in next.max(top)..end {
                self.read_line(id, line - top)?;
            }
            next = end.max(next);
            if next >= end_all {
                return Ok(());
            }
            match self.mode {
                Mode::Gaze => self.scroll_gaze(id, next)?,
                Mode::Baseline => self.scroll_trackpad(id, next)?,
            }
        }
    }

    fn read_line(&mut self, id: PanelId, row: usize) -> Result<()> {
        let (len, words, v, cpl) = {
            let p = self.runner.engine().scene().get(id).ok_or_else(|| gen_err("panel vanished"))?;
            let line = &p.layout.lines[p.scroll_line + row];
            (
                line.text.chars().count(),
                line.text.split_whitespace().count(),
                p.row_center_v(row),
                p.layout.chars_per_line,
            )
        };
        let n_fix = len.div_ceil(self.reader.chars_per_fixation).max(1);
        let line_time = words as f64 * 60.0 / self.reader.words_per_minute;
        for k in 0..n_fix {
            let col = ((k as f64 + 0.5) * len as f64 / n_fix as f64) as usize;
            let u = (col as f64 + 0.5) / cpl.max(1) as f64;
            let point = self.point_on(id, (u, v))?;
            let before = self.k;
            self.saccade(point, None)?;
            let spent = (self.k - before) as f64 / self.rate;
            self.fixate((line_time / n_fix as f64 - spent).max(0.1))?;
        }
        Ok(())
    }

    /// Dwells on the bottom strip until the first unread line `next` is as
    /// high as sentence scrolling can put it.
    fn scroll_gaze(&mut self, id: PanelId, next: usize) -> Result<()> {
        let (target, v, stops) = {
            let p = self.runner.engine().scene().get(id).ok_or_else(|| gen_err("panel vanished"))?;
            let stops = p.layout.sentence_stops();
            let top = p.scroll_line;
            let mut target = stops.iter().rev().find(|&&s| s <= next).copied().unwrap_or(0);
            if target <= top {
                target = stops.iter().find(|&&s| s > top).copied().unwrap_or(usize::MAX);
            }
            (target.min(p.max_scroll()), p.strip_center_v(ScrollButton::Down), stops.len())
        };
        let point = self.point_on(id, (0.5, v))?;
        self.saccade(point, None)?;
        let timeout = 0.5 * (stops as f64 + 2.0) + 2.0;
        self.fixate_until(
            timeout,
            "scroll",
            move |r| r.engine().scene().get(id).is_some_and(|p| p.scroll_line >= target),
            |r| r.engine().scroll_dwell().is_some(),
        )
    }

    fn scroll_trackpad(&mut self, id: PanelId, next: usize) -> Result<()> {
        let dy = (1.0 / self.lines_per_unit).min(1.0);
        let scroll_line = |g: &Self| g.runner.engine().scene().get(id).map_or(0, |p| p.scroll_line);
        let target = self.runner.engine().scene().get(id).map_or(0, |p| next.min(p.max_scroll()));
        let mut guard = 0;
        while scroll_line(self) < target {
            self.hold(ButtonState { trackpad_dy: dy, ..Default::default() })?;
            guard += 1;
            if guard > 100_000 {
                return Err(gen_err("trackpad scroll did not reach its target"));
            }
        }
        Ok(())
    }
}

fn gen_err(m: &str) -> Error {
    Error::Generation(m.to_string())
}

/// Hand-scripted sample streams, for tests and fixtures.
///
/// Samples are spaced exactly `1 / rate_hz` apart starting at `t0`; the
/// timestamp of sample `k` is `t0 + k / rate_hz`.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    origin: Vec3,
    rate_hz: f64,
    t0: f64,
    head: Option<Orientation>,
    controller: Option<Ray>,
    samples: Vec<GazeSample>,
}

impl TraceBuilder {
    pub fn new(origin: Vec3, rate_hz: f64) -> Self {
        Self { origin, rate_hz, t0: 0.0, head: None, controller: None, samples: Vec::new() }
    }

    pub fn starting_at(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// Head orientation attached to subsequent samples.
    pub fn head(&mut self, head: Option<Orientation>) -> &mut Self {
        self.head = head;
        self
    }

    /// Controller ray attached to subsequent samples.
    pub fn controller(&mut self, ray: Option<Ray>) -> &mut Self {
        self.controller = ray;
        self
    }

    pub fn next_t(&self) -> f64 {
        self.t0 + self.samples.len() as f64 / self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, direction: Option<Vec3>, buttons: ButtonState) -> &mut Self {
        let sample = GazeSample {
            t: self.next_t(),
            origin: self.origin,
            direction: direction.and_then(Vec3::normalized),
            buttons,
            head: self.head,
            controller: self.controller,
        };
        self.samples.push(sample);
        self
    }

    /// `n` samples looking at world `point`.
    pub fn look_at(&mut self, point: Vec3, n: usize) -> &mut Self {
        self.look_with(point, n, ButtonState::default())
    }

    pub fn look_with(&mut self, point: Vec3, n: usize, buttons: ButtonState) -> &mut Self {
        for _ in 0..n {
            self.push(Some(point - self.origin), buttons);
        }
        self
    }

    /// `n` samples the tracker reported invalid.
    pub fn invalid(&mut self, n: usize) -> &mut Self {
        for _ in 0..n {
            self.push(None, ButtonState::default());
        }
        self
    }

    pub fn build(&self) -> Vec<GazeSample> {
        self.samples.clone()
    }
}
