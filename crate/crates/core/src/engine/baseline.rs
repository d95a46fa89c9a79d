//! Controller interaction set: laser select of the first colliding document,
//! grab-follow while the grab button is held, and trackpad line scrolling of
//! the selected document.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, EventKind, StepCtx};
use crate::document::{PanelId, Scene};
use crate::gaze::ButtonState;
use crate::geometry::{Orientation, Pose, Ray, Vec3};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineState {
    pub selected: Option<PanelId>,
    /// Grabbed panel and its pose relative to the controller.
    pub grab: Option<(PanelId, Pose)>,
    /// Fractional lines not yet scrolled.
    pub trackpad_accumulator: f64,
}

/// Controller pose implied by a pointing ray (world-up kept as up).
pub fn controller_pose(ray: &Ray) -> Pose {
    let orientation = Orientation::look_rotation(ray.direction, Vec3::Y).unwrap_or_default();
    Pose::new(ray.origin, orientation)
}

impl BaselineState {
    pub(super) fn update(
        &mut self,
        ctx: &mut StepCtx<'_>,
        scene: &mut Scene,
        cfg: &EngineConfig,
        controller: Option<&Ray>,
        buttons: &ButtonState,
        prev: &ButtonState,
    ) {
        let collided = controller
            .and_then(|ray| scene.first_collision(ray))
            .filter(|(id, _)| scene.get(*id).is_some_and(|p| p.is_document))
            .map(|(id, _)| id);

        if buttons.trigger_pressed && !prev.trigger_pressed {
            if let Some(id) = collided {
                self.select(id);
                ctx.emit(EventKind::BaselineSelect { panel: id });
            }
        }

        if buttons.grab_pressed && !prev.grab_pressed && self.grab.is_none() {
            if let (Some(id), Some(ray)) = (collided, controller) {
                let grip = controller_pose(ray).inverse().compose(&scene.get(id).expect("collided").pose);
                self.grab = Some((id, grip));
                self.select(id);
                ctx.emit(EventKind::BaselineGrabStart { panel: id });
            }
        }

        if let Some((id, grip)) = self.grab {
            if buttons.grab_pressed {
                if let (Some(ray), Some(p)) = (controller, scene.get_mut(id)) {
                    p.pose = controller_pose(ray).compose(&grip);
                }
            } else {
                self.grab = None;
                let pose = scene.get(id).map(|p| p.pose).unwrap_or_default();
                ctx.emit(EventKind::BaselineGrabEnd { panel: id, pose });
            }
        }

        let Some(id) = self.selected else {
            self.trackpad_accumulator = 0.0;
            return;
        };
        if buttons.trackpad_dy == 0.0 {
            return;
        }
        self.trackpad_accumulator += buttons.trackpad_dy.clamp(-1.0, 1.0) * cfg.baseline_lines_per_unit;
        let acc = self.trackpad_accumulator;
        let lines = (acc + 1e-9 * acc.signum()).trunc();
        if lines == 0.0 {
            return;
        }
        self.trackpad_accumulator -= lines;
        if let Some(p) = scene.get_mut(id) {
            let top_line = p.scroll_by_lines(lines as i64);
            ctx.emit(EventKind::BaselineScroll { panel: id, lines: lines as i64, top_line });
        }
    }

    fn select(&mut self, id: PanelId) {
        if self.selected != Some(id) {
            self.trackpad_accumulator = 0.0;
        }
        self.selected = Some(id);
    }
}
