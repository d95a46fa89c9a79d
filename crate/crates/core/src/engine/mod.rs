//! Interaction state machines.
//!
//! In gaze mode each step runs, in order: focus tracking, select-and-snap
//! (highlight, trigger snap, overlap cycling), the magnifier lens and the
//! scroll buttons. In baseline mode only the controller machine runs: ray
//! select, grab-follow and trackpad scrolling.
//!
//! Dwell timers tolerate tracker gaps (saccade or invalid samples) up to
//! `fixation_window_s`; during such a gap the last fixated target is held.

mod baseline;
mod lens;
mod scroll;
mod select;

use serde::{Deserialize, Serialize};

use crate::document::{DocumentPanel, PanelId, Scene, ScrollButton};
use crate::error::{Error, Result};
use crate::gaze::{ButtonState, FilterConfig, FixationEstimate, Phase};
use crate::geometry::{Hit, Pose, Ray};

pub use baseline::BaselineState;
pub use lens::{lens_region, LensState};
pub use scroll::ScrollDwell;
pub use select::{cycle_overlap, snap_pose, SelectState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Gaze select-and-snap, magnifier lens and gaze scroll.
    #[default]
    #[serde(rename = "vrdoc", alias = "gaze")]
    Gaze,
    /// Controller laser select, grab-follow and trackpad scroll.
    #[serde(rename = "baseline")]
    Baseline,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vrdoc" | "gaze" => Ok(Mode::Gaze),
            "baseline" => Ok(Mode::Baseline),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Every tunable threshold of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Head-to-panel distance of a snapped document. Kept below
    /// `lens_max_distance_m` so a snapped document can be magnified.
    pub snap_distance_m: f64,
    pub lens_max_distance_m: f64,
    pub lens_dwell_s: f64,
    pub lens_magnification: f64,
    pub lens_words_span: u32,
    pub lens_lines_span: u32,
    /// Minimum lens center motion, in uv, that produces a `LensMove`.
    pub lens_move_epsilon_uv: f64,
    pub scroll_dwell_s: f64,
    pub scroll_button_strip_frac: f64,
    pub saccade_velocity_deg_s: f64,
    pub fixation_window_s: f64,
    pub smoothing_lambda_per_s: f64,
    pub sample_rate_hz: f64,
    /// Gaze must stay off a highlighted panel this long before it is released.
    pub highlight_release_s: f64,
    /// Dwell on an overlapping stack that brings the next hidden panel forward.
    pub cycle_dwell_s: f64,
    /// Panels hit within this depth of the top panel count as one stack.
    pub stack_depth_m: f64,
    pub baseline_lines_per_unit: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gaze,
            snap_distance_m: 0.45,
            lens_max_distance_m: 0.5,
            lens_dwell_s: 1.5,
            lens_magnification: 1.5,
            lens_words_span: 4,
            lens_lines_span: 3,
            lens_move_epsilon_uv: 1e-3,
            scroll_dwell_s: 0.5,
            scroll_button_strip_frac: 0.08,
            saccade_velocity_deg_s: 30.0,
            fixation_window_s: 0.25,
            smoothing_lambda_per_s: 0.5,
            sample_rate_hz: 120.0,
            highlight_release_s: 0.1,
            cycle_dwell_s: 1.0,
            stack_depth_m: 0.05,
            baseline_lines_per_unit: 3.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("snap_distance_m", self.snap_distance_m),
            ("lens_max_distance_m", self.lens_max_distance_m),
            ("lens_dwell_s", self.lens_dwell_s),
            ("scroll_dwell_s", self.scroll_dwell_s),
            ("saccade_velocity_deg_s", self.saccade_velocity_deg_s),
            ("fixation_window_s", self.fixation_window_s),
            ("smoothing_lambda_per_s", self.smoothing_lambda_per_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("highlight_release_s", self.highlight_release_s),
            ("cycle_dwell_s", self.cycle_dwell_s),
            ("stack_depth_m", self.stack_depth_m),
            ("baseline_lines_per_unit", self.baseline_lines_per_unit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.lens_magnification > 1.0) {
            return Err(Error::Config("lens_magnification must be > 1".into()));
        }
        if !(0.0..0.5).contains(&self.scroll_button_strip_frac) {
            return Err(Error::Config("scroll_button_strip_frac must be in [0, 0.5)".into()));
        }
        if self.lens_words_span == 0 || self.lens_lines_span == 0 {
            return Err(Error::Config("lens spans must be >= 1".into()));
        }
        Ok(())
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            saccade_velocity_deg_s: self.saccade_velocity_deg_s,
            fixation_window_s: self.fixation_window_s,
            smoothing_lambda_per_s: self.smoothing_lambda_per_s,
        }
    }
}

/// Magnified sub-view of a panel, as supplied to renderers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensRegion {
    pub panel: PanelId,
    pub center_uv: (f64, f64),
    pub width_uv: f64,
    pub height_uv: f64,
    pub magnification: f64,
    /// Looks along the negative panel normal at the region center.
    pub camera_pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    HighlightOn {
        panel: PanelId,
    },
    HighlightOff {
        panel: PanelId,
    },
    Snap {
        panel: PanelId,
        pose: Pose,
    },
    /// A previously snapped panel returned to its original pose.
    Unsnap {
        panel: PanelId,
        pose: Pose,
    },
    CycleForeground {
        panel: PanelId,
        z_rank: i64,
    },
    LensOn {
        region: LensRegion,
    },
    LensMove {
        region: LensRegion,
    },
    LensOff {
        panel: PanelId,
    },
    Scroll {
        panel: PanelId,
        direction: ScrollButton,
        sentences: u32,
        top_line: usize,
    },
    BaselineSelect {
        panel: PanelId,
    },
    BaselineGrabStart {
        panel: PanelId,
    },
    BaselineGrabEnd {
        panel: PanelId,
        pose: Pose,
    },
    BaselineScroll {
        panel: PanelId,
        lines: i64,
        top_line: usize,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::HighlightOn { .. } => "highlight_on",
            EventKind::HighlightOff { .. } => "highlight_off",
            EventKind::Snap { .. } => "snap",
            EventKind::Unsnap { .. } => "unsnap",
            EventKind::CycleForeground { .. } => "cycle_foreground",
            EventKind::LensOn { .. } => "lens_on",
            EventKind::LensMove { .. } => "lens_move",
            EventKind::LensOff { .. } => "lens_off",
            EventKind::Scroll { .. } => "scroll",
            EventKind::BaselineSelect { .. } => "baseline_select",
            EventKind::BaselineGrabStart { .. } => "baseline_grab_start",
            EventKind::BaselineGrabEnd { .. } => "baseline_grab_end",
            EventKind::BaselineScroll { .. } => "baseline_scroll",
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(
            self,
            EventKind::BaselineSelect { .. }
                | EventKind::BaselineGrabStart { .. }
                | EventKind::BaselineGrabEnd { .. }
                | EventKind::BaselineScroll { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything the engine consumes for one time step.
#[derive(Debug, Clone)]
pub struct StepInput<'a> {
    pub t: f64,
    pub estimate: &'a FixationEstimate,
    pub head: Pose,
    pub buttons: ButtonState,
    /// Ray used by baseline mode; falls back to the raw gaze ray upstream.
    pub controller: Option<Ray>,
}

/// The document under the gaze, with the overlapping stack it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GazeFocus {
    pub panel: PanelId,
    pub hit: Hit,
    /// Document panels under the gaze near the top panel's depth, rank-descending.
    pub stack: Vec<PanelId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FocusStatus {
    /// Fixation this step.
    Fresh,
    /// Inside a tolerated saccade/invalid gap; the last focus is held.
    Held,
    /// No usable focus.
    Lost,
}

/// Fraction (0..1) of each pending dwell activation, for progress indicators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DwellProgress {
    pub lens: Option<f64>,
    pub scroll: Option<f64>,
    pub cycle: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    scene: Scene,
    head: Pose,
    last_t: Option<f64>,
    prev_buttons: ButtonState,
    focus: Option<GazeFocus>,
    focus_status: FocusStatus,
    gap_since: Option<f64>,
    select: select::SelectMachine,
    lens: lens::LensMachine,
    scroll: scroll::ScrollMachine,
    baseline: BaselineState,
}

impl Engine {
    pub fn new(mut scene: Scene, cfg: EngineConfig, head: Pose) -> Result<Self> {
        cfg.validate()?;
        for p in &mut scene.panels {
            p.highlighted = false;
            p.strip_frac = if cfg.mode == Mode::Gaze && p.is_document && p.is_scrollable() {
                cfg.scroll_button_strip_frac
            } else {
                0.0
            };
        }
        Ok(Self {
            cfg,
            scene,
            head,
            last_t: None,
            prev_buttons: ButtonState::default(),
            focus: None,
            focus_status: FocusStatus::Lost,
            gap_since: None,
            select: Default::default(),
            lens: Default::default(),
            scroll: Default::default(),
            baseline: Default::default(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn head(&self) -> &Pose {
        &self.head
    }

    pub fn select_state(&self) -> SelectState {
        self.select.state()
    }

    pub fn cycle_cursor(&self) -> usize {
        self.select.cycle_cursor()
    }

    pub fn lens_state(&self) -> &LensState {
        &self.lens.state
    }

    pub fn active_lens(&self) -> Option<&LensRegion> {
        match &self.lens.state {
            LensState::On { region } => Some(region),
            _ => None,
        }
    }

    pub fn scroll_dwell(&self) -> Option<&ScrollDwell> {
        self.scroll.dwell.as_ref()
    }

    pub fn baseline_state(&self) -> &BaselineState {
        &self.baseline
    }

    pub fn highlighted(&self) -> Option<PanelId> {
        self.select.highlighted
    }

    pub fn last_t(&self) -> Option<f64> {
        self.last_t
    }

    /// Progress of each pending dwell at time `t`.
    pub fn dwell_progress(&self, t: f64) -> DwellProgress {
        DwellProgress {
            lens: match &self.lens.state {
                LensState::Armed { since, .. } => Some(((t - since) / self.cfg.lens_dwell_s).clamp(0.0, 1.0)),
                _ => None,
            },
            scroll: self.scroll.dwell.as_ref().map(|d| {
                let owed = (t - d.start_t) / self.cfg.scroll_dwell_s;
                owed - owed.floor()
            }),
            cycle: self.select.cycle_progress(t, self.cfg.cycle_dwell_s),
        }
    }

    /// Advances the engine by one sample.
    pub fn step(&mut self, input: &StepInput<'_>) -> Result<Vec<InteractionEvent>> {
        if let Some(prev) = self.last_t {
            if !(input.t > prev) {
                return Err(Error::StreamOrder { prev, t: input.t });
            }
        }
        self.last_t = Some(input.t);
        self.head = input.head;

        let mut out = Vec::new();
        match self.cfg.mode {
            Mode::Gaze => {
                self.update_focus(input);
                let mut ctx = StepCtx { t: input.t, events: &mut out };
                let pressed = input.buttons.trigger_pressed && !self.prev_buttons.trigger_pressed;
                let toggled = input.buttons.lens_toggle_pressed && !self.prev_buttons.lens_toggle_pressed;
                self.select.update(
                    &mut ctx,
                    &mut self.scene,
                    &self.cfg,
                    &self.head,
                    self.focus.as_ref(),
                    self.focus_status,
                    pressed,
                );
                self.lens.update(
                    &mut ctx,
                    &self.scene,
                    &self.cfg,
                    &self.head,
                    self.focus.as_ref(),
                    self.focus_status,
                    toggled,
                );
                self.scroll.update(&mut ctx, &mut self.scene, &self.cfg, self.focus.as_ref(), self.focus_status);
            }
            Mode::Baseline => {
                let mut ctx = StepCtx { t: input.t, events: &mut out };
                self.baseline.update(
                    &mut ctx,
                    &mut self.scene,
                    &self.cfg,
                    input.controller.as_ref(),
                    &input.buttons,
                    &self.prev_buttons,
                );
            }
        }
        self.prev_buttons = input.buttons;
        Ok(out)
    }

    fn update_focus(&mut self, input: &StepInput<'_>) {
        let est = input.estimate;
        if est.phase == Phase::Fixation {
            self.gap_since = None;
            self.focus_status = FocusStatus::Fresh;
            self.focus = est.ray().and_then(|ray| focus_for(&self.scene, &ray, self.cfg.stack_depth_m));
            return;
        }
        let since = *self.gap_since.get_or_insert(input.t);
        if input.t - since <= self.cfg.fixation_window_s {
            self.focus_status = FocusStatus::Held;
        } else {
            self.focus_status = FocusStatus::Lost;
            self.focus = None;
        }
    }
}

/// Focus for a gaze ray: the topmost panel if it is a document.
pub(crate) fn focus_for(scene: &Scene, ray: &Ray, stack_depth_m: f64) -> Option<GazeFocus> {
    let hits = scene.hits(ray);
    let (top, hit) = *hits.first()?;
    if !scene.get(top).is_some_and(|p| p.is_document) {
        return None;
    }
    let stack = hits
        .iter()
        .filter(|(id, h)| {
            scene.get(*id).is_some_and(|p| p.is_document) && (h.distance - hit.distance).abs() <= stack_depth_m
        })
        .map(|(id, _)| *id)
        .collect();
    Some(GazeFocus { panel: top, hit, stack })
}

pub(crate) struct StepCtx<'a> {
    pub t: f64,
    pub events: &'a mut Vec<InteractionEvent>,
}

impl StepCtx<'_> {
    pub fn emit(&mut self, kind: EventKind) {
        self.events.push(InteractionEvent { t: self.t, kind });
    }
}

pub(crate) fn panel(scene: &Scene, id: PanelId) -> &DocumentPanel {
    scene.get(id).expect("engine only tracks panels of its own scene")
}
