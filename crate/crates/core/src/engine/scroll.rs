//! Gaze scroll buttons. A continuous dwell of `d` seconds on a strip owes
//! `floor(d / scroll_dwell_s)` sentences; each step pays out whatever is owed
//! and not yet emitted.

use serde::{Deserialize, Serialize};

use super::{EngineConfig, EventKind, FocusStatus, GazeFocus, StepCtx};
use crate::document::{PanelId, Scene, ScrollButton};
use crate::geometry::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrollDwell {
    pub panel: PanelId,
    pub button: ScrollButton,
    pub start_t: f64,
    pub sentences_emitted: u32,
}

#[derive(Debug, Clone, Default)]
pub(super) struct ScrollMachine {
    pub dwell: Option<ScrollDwell>,
}

impl ScrollMachine {
    pub fn update(
        &mut self,
        ctx: &mut StepCtx<'_>,
        scene: &mut Scene,
        cfg: &EngineConfig,
        focus: Option<&GazeFocus>,
        status: FocusStatus,
    ) {
        match status {
            FocusStatus::Lost => {
                self.dwell = None;
                return;
            }
            FocusStatus::Held => return,
            FocusStatus::Fresh => {}
        }
        let on_button = focus.and_then(|f| {
            let panel = scene.get(f.panel)?;
            panel.button_at(f.hit.uv).map(|b| (f.panel, b))
        });
        let Some((panel_id, button)) = on_button else {
            self.dwell = None;
            return;
        };
        let t = ctx.t;
        let dwell = match &mut self.dwell {
            Some(d) if d.panel == panel_id && d.button == button => d,
            slot => slot.insert(ScrollDwell { panel: panel_id, button, start_t: t, sentences_emitted: 0 }),
        };
        let owed = ((t - dwell.start_t) / cfg.scroll_dwell_s + tol::TIME).floor() as u32;
        if owed <= dwell.sentences_emitted {
            return;
        }
        let new = owed - dwell.sentences_emitted;
        dwell.sentences_emitted = owed;
        let Some(panel) = scene.get_mut(panel_id) else { return };
        let signed = match button {
            ScrollButton::Up => -(new as i64),
            ScrollButton::Down => new as i64,
        };
        let top_line = panel.scroll_by_sentences(signed);
        ctx.emit(EventKind::Scroll { panel: panel_id, direction: button, sentences: new, top_line });
    }
}
