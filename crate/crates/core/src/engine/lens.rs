//! Gaze-activated magnifier.
//!
//! The lens turns on after the gaze has rested on a nearby document (panel
//! center closer than `lens_max_distance_m` to the head) for `lens_dwell_s`,
//! then follows the smoothed gaze point. The scroll-button strips do not
//! count as reading the document. A lens toggle click switches the lens off
//! and keeps it off, or turns it back on at once when the gaze is on a
//! nearby document.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, EventKind, FocusStatus, GazeFocus, LensRegion, StepCtx};
use crate::document::{DocumentPanel, PanelId, Scene};
use crate::geometry::{panel_point, tol, Hit, Pose, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LensState {
    Off,
    Armed { panel: PanelId, since: f64 },
    On { region: LensRegion },
    ManuallyOff,
}

/// Region magnified around `gaze_uv`, sized from the panel's layout metrics.
///
/// Width covers `lens_words_span` average words, height `lens_lines_span`
/// text rows; the region is shifted to stay inside the panel. The camera sits
/// on the panel normal at the region center, at the viewer's distance
/// divided by the magnification, looking straight at the panel.
pub fn lens_region(panel: &DocumentPanel, gaze_uv: (f64, f64), viewer: Vec3, cfg: &EngineConfig) -> LensRegion {
    let layout = &panel.layout;
    let width_uv =
        (cfg.lens_words_span as f64 * layout.mean_word_chars / layout.chars_per_line.max(1) as f64).clamp(0.0, 1.0);
    let height_uv = (cfg.lens_lines_span as f64 * panel.text_pitch_v()).clamp(0.0, 1.0);
    let clamp_axis = |c: f64, size: f64| c.clamp(size * 0.5, 1.0 - size * 0.5);
    let center_uv = (clamp_axis(gaze_uv.0, width_uv), clamp_axis(gaze_uv.1, height_uv));

    let normal = panel.pose.normal();
    let view_distance = normal.dot(viewer - panel.pose.position).abs();
    let center = panel_point(&panel.pose, &panel.extent, center_uv);
    let camera_pose = Pose::new(center + normal * (view_distance / cfg.lens_magnification), panel.pose.orientation);
    LensRegion { panel: panel.id, center_uv, width_uv, height_uv, magnification: cfg.lens_magnification, camera_pose }
}

#[derive(Debug, Clone)]
pub(super) struct LensMachine {
    pub state: LensState,
}

impl Default for LensMachine {
    fn default() -> Self {
        Self { state: LensState::Off }
    }
}

impl LensMachine {
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        ctx: &mut StepCtx<'_>,
        scene: &Scene,
        cfg: &EngineConfig,
        head: &Pose,
        focus: Option<&GazeFocus>,
        status: FocusStatus,
        toggled: bool,
    ) {
        let t = ctx.t;
        let qualifying = match status {
            FocusStatus::Lost => None,
            _ => focus.and_then(|f| qualifies(scene, cfg, head, f)),
        };
        let region_for = |panel: &DocumentPanel, hit: &Hit| lens_region(panel, hit.uv, head.position, cfg);

        if toggled {
            self.state = match (&self.state, qualifying) {
                (LensState::On { region }, _) => {
                    ctx.emit(EventKind::LensOff { panel: region.panel });
                    LensState::ManuallyOff
                }
                (_, Some((panel, hit))) => {
                    let region = region_for(panel, &hit);
                    ctx.emit(EventKind::LensOn { region: region.clone() });
                    LensState::On { region }
                }
                (_, None) => LensState::Off,
            };
            return;
        }

        let fresh = status == FocusStatus::Fresh;
        let next = match (&self.state, qualifying) {
            (LensState::ManuallyOff, _) => return,
            (LensState::Off, Some((panel, _))) if fresh => LensState::Armed { panel: panel.id, since: t },
            (LensState::Off, _) => return,
            (LensState::Armed { panel: armed, since }, Some((panel, hit))) if panel.id == *armed => {
                if t - since >= cfg.lens_dwell_s - tol::TIME {
                    let region = region_for(panel, &hit);
                    ctx.emit(EventKind::LensOn { region: region.clone() });
                    LensState::On { region }
                } else {
                    return;
                }
            }
            (LensState::Armed { .. }, Some((panel, _))) if fresh => LensState::Armed { panel: panel.id, since: t },
            (LensState::Armed { .. }, _) => LensState::Off,
            (LensState::On { region }, Some((panel, hit))) if panel.id == region.panel => {
                if !fresh {
                    return;
                }
                let moved = region_for(panel, &hit);
                let du = moved.center_uv.0 - region.center_uv.0;
                let dv = moved.center_uv.1 - region.center_uv.1;
                let camera_shift = moved.camera_pose.position.distance(region.camera_pose.position);
                if du.hypot(dv) < cfg.lens_move_epsilon_uv
                    && camera_shift < 1e-3
                    && moved.camera_pose.orientation == region.camera_pose.orientation
                {
                    return;
                }
                ctx.emit(EventKind::LensMove { region: moved.clone() });
                LensState::On { region: moved }
            }
            (LensState::On { region }, other) => {
                ctx.emit(EventKind::LensOff { panel: region.panel });
                match other {
                    Some((panel, _)) if fresh => LensState::Armed { panel: panel.id, since: t },
                    _ => LensState::Off,
                }
            }
        };
        self.state = next;
    }
}

/// The focused panel and hit when the gaze is on a nearby document's text.
fn qualifies<'a>(
    scene: &'a Scene,
    cfg: &EngineConfig,
    head: &Pose,
    focus: &GazeFocus,
) -> Option<(&'a DocumentPanel, Hit)> {
    let panel = scene.get(focus.panel)?;
    if !panel.is_document || panel.button_at(focus.hit.uv).is_some() {
        return None;
    }
    if head.position.distance(panel.pose.position) >= cfg.lens_max_distance_m {
        return None;
    }
    Some((panel, focus.hit))
}
