//! Gaze select-and-snap: highlight the document under the gaze, snap it in
//! front of the head on a trigger click, and cycle hidden documents of an
//! overlapping stack to the front while the gaze lingers on it.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, EventKind, FocusStatus, GazeFocus, StepCtx};
use crate::document::{PanelId, Scene};
use crate::geometry::{tol, Orientation, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "panel", rename_all = "snake_case")]
pub enum SelectState {
    Idle,
    Focused(PanelId),
    Snapped(PanelId),
}

/// Upright, head-facing reading pose `snap_distance_m` ahead of the head.
///
/// Only the horizontal part of the head's forward axis is used, so pitch and
/// roll never tilt the panel. When the head looks straight up or down the
/// horizontal part of its up axis stands in for it.
pub fn snap_pose(head: &Pose, cfg: &EngineConfig) -> Pose {
    let f = head.orientation.forward();
    let mut h = f.horizontal();
    if h.norm() < 1e-6 {
        let up = head.orientation.up();
        h = if f.y < 0.0 { up.horizontal() } else { (-up).horizontal() };
    }
    let h = h.normalized().unwrap_or(-Vec3::Z);
    let orientation = Orientation::look_rotation(h, Vec3::Y).expect("horizontal unit vector");
    Pose::new(head.position + h * cfg.snap_distance_m, orientation)
}

/// Brings the next hidden panel of `stack` to the top.
///
/// `stack` is the stack as first seen (top panel first). Cycle `k` promotes
/// `stack[(k + 1) % n]`, so `n` cycles put every panel on top exactly once.
/// Returns the promoted panel and the advanced cursor.
pub fn cycle_overlap(scene: &mut Scene, stack: &[PanelId], cursor: usize) -> (PanelId, usize) {
    assert!(!stack.is_empty(), "cycle_overlap needs a non-empty stack");
    let promoted = stack[(cursor + 1) % stack.len()];
    scene.promote_to_top(promoted);
    (promoted, cursor + 1)
}

#[derive(Debug, Clone, Default)]
struct Cycle {
    stack: Vec<PanelId>,
    cursor: usize,
    since: f64,
}

#[derive(Debug, Clone, Default)]
pub(super) struct SelectMachine {
    pub highlighted: Option<PanelId>,
    off_since: Option<f64>,
    /// Snapped panel and the pose it came from.
    snapped: Option<(PanelId, Pose)>,
    cycle: Option<Cycle>,
}

impl SelectMachine {
    pub fn state(&self) -> SelectState {
        match self.highlighted {
            None => SelectState::Idle,
            Some(h) if self.snapped.is_some_and(|(s, _)| s == h) => SelectState::Snapped(h),
            Some(h) => SelectState::Focused(h),
        }
    }

    pub fn cycle_cursor(&self) -> usize {
        self.cycle.as_ref().map_or(0, |c| c.cursor)
    }

    pub fn cycle_progress(&self, t: f64, dwell: f64) -> Option<f64> {
        self.cycle.as_ref().map(|c| ((t - c.since) / dwell).clamp(0.0, 1.0))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        ctx: &mut StepCtx<'_>,
        scene: &mut Scene,
        cfg: &EngineConfig,
        head: &Pose,
        focus: Option<&GazeFocus>,
        status: FocusStatus,
        trigger_pressed: bool,
    ) {
        let t = ctx.t;
        let target = match status {
            FocusStatus::Lost => None,
            _ => focus.map(|f| f.panel),
        };

        if trigger_pressed {
            if let Some(h) = self.highlighted {
                self.snap(ctx, scene, cfg, head, h);
                if let Some(c) = &mut self.cycle {
                    c.since = t;
                }
            }
        }

        let mut changed = false;
        match self.highlighted {
            Some(h) if target == Some(h) => self.off_since = None,
            Some(_) => {
                let since = *self.off_since.get_or_insert(t);
                if t - since >= cfg.highlight_release_s - tol::TIME {
                    self.set_highlight(ctx, scene, target);
                    changed = true;
                }
            }
            None => {
                if target.is_some() {
                    self.set_highlight(ctx, scene, target);
                    changed = true;
                }
            }
        }

        match (status, focus) {
            (FocusStatus::Fresh, Some(f)) if f.stack.len() >= 2 => {
                let same = self.cycle.as_ref().is_some_and(|c| same_members(&c.stack, &f.stack));
                if !same {
                    self.cycle = Some(Cycle { stack: f.stack.clone(), cursor: 0, since: t });
                    return;
                }
                let cycle = self.cycle.as_mut().expect("checked above");
                if changed || self.highlighted != Some(f.panel) {
                    return;
                }
                if t - cycle.since >= cfg.cycle_dwell_s - tol::TIME {
                    let (promoted, cursor) = cycle_overlap(scene, &cycle.stack, cycle.cursor);
                    cycle.cursor = cursor;
                    cycle.since = t;
                    let z_rank = scene.get(promoted).map_or(0, |p| p.z_rank);
                    ctx.emit(EventKind::CycleForeground { panel: promoted, z_rank });
                    if self.highlighted != Some(promoted) {
                        self.set_highlight(ctx, scene, Some(promoted));
                    }
                }
            }
            (FocusStatus::Held, _) => {}
            _ => self.cycle = None,
        }
    }

    /// Moves the highlight to `to` as a single transfer.
    fn set_highlight(&mut self, ctx: &mut StepCtx<'_>, scene: &mut Scene, to: Option<PanelId>) {
        if let Some(old) = self.highlighted.take() {
            if let Some(p) = scene.get_mut(old) {
                p.highlighted = false;
            }
            ctx.emit(EventKind::HighlightOff { panel: old });
        }
        self.off_since = None;
        if let Some(new) = to {
            if let Some(p) = scene.get_mut(new) {
                p.highlighted = true;
            }
            ctx.emit(EventKind::HighlightOn { panel: new });
            self.highlighted = Some(new);
        }
    }

    fn snap(&mut self, ctx: &mut StepCtx<'_>, scene: &mut Scene, cfg: &EngineConfig, head: &Pose, id: PanelId) {
        let home = match self.snapped {
            Some((prev, home)) if prev == id => home,
            Some((prev, home)) => {
                if let Some(p) = scene.get_mut(prev) {
                    p.pose = home;
                }
                ctx.emit(EventKind::Unsnap { panel: prev, pose: home });
                super::panel(scene, id).pose
            }
            None => super::panel(scene, id).pose,
        };
        let pose = snap_pose(head, cfg);
        if let Some(p) = scene.get_mut(id) {
            p.pose = pose;
        }
        scene.promote_to_top(id);
        self.snapped = Some((id, home));
        ctx.emit(EventKind::Snap { panel: id, pose });
    }
}

fn same_members(a: &[PanelId], b: &[PanelId]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}
