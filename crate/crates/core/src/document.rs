//! Passage text, monospace greedy line layout, the scrolling view box and the
//! posed panels that make up a scene.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ray_panel_intersect, Hit, PanelExtent, Pose, Ray, Surface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Short,
    Long,
}

/// Passage text, pre-split into sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentContent {
    pub id: String,
    pub kind: DocumentKind,
    pub sentences: Vec<String>,
    pub word_count: usize,
}

impl DocumentContent {
    pub fn new(id: impl Into<String>, kind: DocumentKind, sentences: Vec<String>) -> Self {
        let word_count = sentences.iter().map(|s| s.split_whitespace().count()).sum();
        Self { id: id.into(), kind, sentences, word_count }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flat_map(|s| s.split_whitespace())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub chars_per_line: usize,
    pub visible_lines: usize,
    pub line_spacing: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { chars_per_line: 65, visible_lines: 9, line_spacing: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub text: String,
    /// Sentence of the first word on the line.
    pub sentence_index: usize,
    /// Index of the first word on the line, counted over the whole passage.
    pub first_word_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub lines: Vec<Line>,
    pub chars_per_line: usize,
    pub visible_lines: usize,
    pub line_spacing: f64,
    /// Line holding the first word of each sentence; `None` for empty sentences.
    pub sentence_lines: Vec<Option<usize>>,
    /// Mean token width in characters, counting one trailing space per token.
    pub mean_word_chars: f64,
}

impl Layout {
    pub fn empty(cfg: LayoutConfig) -> Self {
        Self {
            lines: Vec::new(),
            chars_per_line: cfg.chars_per_line,
            visible_lines: cfg.visible_lines,
            line_spacing: cfg.line_spacing,
            sentence_lines: Vec::new(),
            mean_word_chars: 0.0,
        }
    }

    pub fn total_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn max_scroll(&self) -> usize {
        self.lines.len().saturating_sub(self.visible_lines)
    }

    /// Distinct lines on which some sentence begins, ascending.
    pub fn sentence_stops(&self) -> Vec<usize> {
        let mut stops: Vec<usize> = self.sentence_lines.iter().flatten().copied().collect();
        stops.dedup();
        stops
    }
}

/// Greedy word wrap at `cfg.chars_per_line` characters.
///
/// Words flow across sentence boundaries and are never split; consecutive
/// words on a line are separated by one space.
pub fn layout_text(content: &DocumentContent, cfg: LayoutConfig) -> Result<Layout> {
    let width = cfg.chars_per_line;
    let mut layout = Layout::empty(cfg);
    let mut current = String::new();
    let mut current_len = 0usize;
    let mut line_sentence = 0usize;
    let mut line_first_word = 0usize;
    let mut word_index = 0usize;
    let mut chars_total = 0usize;

    for (si, sentence) in content.sentences.iter().enumerate() {
        let mut first_in_sentence = true;
        for word in sentence.split_whitespace() {
            let len = word.chars().count();
            if len > width {
                return Err(Error::WordTooLong { word: word.to_string(), len, width });
            }
            chars_total += len + 1;
            if current_len > 0 && current_len + 1 + len > width {
                layout.lines.push(Line {
                    text: std::mem::take(&mut current),
                    sentence_index: line_sentence,
                    first_word_index: line_first_word,
                });
                current_len = 0;
            }
            if current_len == 0 {
                line_sentence = si;
                line_first_word = word_index;
            } else {
                current.push(' ');
                current_len += 1;
            }
            current.push_str(word);
            current_len += len;
            if first_in_sentence {
                layout.sentence_lines.push(Some(layout.lines.len()));
                first_in_sentence = false;
            }
            word_index += 1;
        }
        if first_in_sentence {
            layout.sentence_lines.push(None);
        }
    }
    if current_len > 0 {
        layout.lines.push(Line { text: current, sentence_index: line_sentence, first_word_index: line_first_word });
    }
    if word_index > 0 {
        layout.mean_word_chars = chars_total as f64 / word_index as f64;
    }
    Ok(layout)
}

// ── Panels ──────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PanelId(pub u32);

impl fmt::Display for PanelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "panel{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrollButton {
    Up,
    Down,
}

/// A posed 2D text window in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentPanel {
    pub id: PanelId,
    pub content_id: String,
    pub pose: Pose,
    pub extent: PanelExtent,
    pub layout: Layout,
    pub scroll_line: usize,
    pub z_rank: i64,
    /// Only document-tagged objects take part in gaze selection.
    pub is_document: bool,
    pub highlighted: bool,
    /// Height of each scroll-button strip as a fraction of panel height;
    /// zero when the panel has no gaze-scroll buttons.
    pub strip_frac: f64,
}

impl Surface for DocumentPanel {
    fn pose(&self) -> &Pose {
        &self.pose
    }
    fn extent(&self) -> &PanelExtent {
        &self.extent
    }
    fn z_rank(&self) -> i64 {
        self.z_rank
    }
}

impl DocumentPanel {
    pub fn total_lines(&self) -> usize {
        self.layout.total_lines()
    }

    pub fn max_scroll(&self) -> usize {
        self.layout.max_scroll()
    }

    pub fn is_scrollable(&self) -> bool {
        self.max_scroll() > 0
    }

    /// Lines currently shown in the view box.
    pub fn visible_window(&self) -> &[Line] {
        let start = self.scroll_line.min(self.total_lines());
        let end = (start + self.layout.visible_lines).min(self.total_lines());
        &self.layout.lines[start..end]
    }

    /// Sets the top line, clamped to the valid range. Returns the new value.
    pub fn set_scroll_line(&mut self, line: usize) -> usize {
        self.scroll_line = line.min(self.max_scroll());
        self.scroll_line
    }

    pub fn scroll_by_lines(&mut self, n: i64) -> usize {
        let target = (self.scroll_line as i64 + n).max(0) as usize;
        self.set_scroll_line(target)
    }

    /// Moves the top of the view `n` sentence starts forward (positive) or
    /// backward (negative), clamped to the document.
    ///
    /// Scroll stops are the distinct lines on which a sentence begins. From a
    /// top line that sits between stops, the first backward step lands on the
    /// start of the current sentence.
    pub fn scroll_by_sentences(&mut self, n: i64) -> usize {
        if n == 0 {
            return self.scroll_line;
        }
        let stops = self.layout.sentence_stops();
        let top = self.scroll_line;
        let Some(cur) = stops.iter().rposition(|&l| l <= top) else {
            return self.scroll_line;
        };
        let target = if n > 0 {
            stops.get(cur + n as usize).copied().unwrap_or(usize::MAX)
        } else {
            let back = n.unsigned_abs() as usize;
            let back = if stops[cur] == top { back } else { back - 1 };
            stops[cur.saturating_sub(back)]
        };
        self.set_scroll_line(target)
    }

    pub fn text_pitch_v(&self) -> f64 {
        (1.0 - 2.0 * self.strip_frac) / self.layout.visible_lines.max(1) as f64
    }

    /// Scroll button under `v`, if any.
    pub fn button_at(&self, uv: (f64, f64)) -> Option<ScrollButton> {
        if self.strip_frac <= 0.0 {
            None
        } else if uv.1 < self.strip_frac {
            Some(ScrollButton::Up)
        } else if uv.1 > 1.0 - self.strip_frac {
            Some(ScrollButton::Down)
        } else {
            None
        }
    }

    /// Document line under `uv`, or `None` over a button strip or empty row.
    pub fn uv_to_line(&self, uv: (f64, f64)) -> Option<usize> {
        let v = uv.1;
        if !(0.0..=1.0).contains(&v) || self.button_at(uv).is_some() {
            return None;
        }
        let rows = self.layout.visible_lines.max(1);
        let row = (((v - self.strip_frac) / self.text_pitch_v()).floor().max(0.0) as usize).min(rows - 1);
        let line = self.scroll_line + row;
        (line < self.total_lines()).then_some(line)
    }

    /// Panel v coordinate of the middle of visible row `row`.
    pub fn row_center_v(&self, row: usize) -> f64 {
        self.strip_frac + (row as f64 + 0.5) * self.text_pitch_v()
    }

    /// Panel u coordinate of the middle of character column `col`.
    pub fn column_center_u(&self, col: usize) -> f64 {
        (col as f64 + 0.5) / self.layout.chars_per_line.max(1) as f64
    }

    pub fn strip_center_v(&self, button: ScrollButton) -> f64 {
        match button {
            ScrollButton::Up => self.strip_frac * 0.5,
            ScrollButton::Down => 1.0 - self.strip_frac * 0.5,
        }
    }
}

// ── Scene ───────────────────────────────────────────────────

/// The panels of one engine instance. z-ranks are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub panels: Vec<DocumentPanel>,
}

impl Scene {
    pub fn new(panels: Vec<DocumentPanel>) -> Result<Self> {
        let mut ranks: Vec<i64> = panels.iter().map(|p| p.z_rank).collect();
        ranks.sort_unstable();
        if ranks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Scenario("duplicate z_rank in scene".into()));
        }
        let mut ids: Vec<PanelId> = panels.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Scenario("duplicate panel id in scene".into()));
        }
        Ok(Self { panels })
    }

    pub fn get(&self, id: PanelId) -> Option<&DocumentPanel> {
        self.panels.iter().find(|p| p.id == id)
    }

    pub fn get_mut(&mut self, id: PanelId) -> Option<&mut DocumentPanel> {
        self.panels.iter_mut().find(|p| p.id == id)
    }

    pub fn max_rank(&self) -> i64 {
        self.panels.iter().map(|p| p.z_rank).max().unwrap_or(0)
    }

    /// Gives `id` a rank above every other panel. No-op if it is already on top.
    pub fn promote_to_top(&mut self, id: PanelId) {
        let top = self.max_rank();
        if let Some(p) = self.get_mut(id) {
            if p.z_rank != top {
                p.z_rank = top + 1;
            }
        }
    }

    /// Highest-ranked panel hit by `ray`.
    pub fn topmost_hit(&self, ray: &Ray) -> Option<(PanelId, Hit)> {
        crate::geometry::topmost_hit(ray, &self.panels).map(|(p, h)| (p.id, h))
    }

    /// Every panel hit by `ray`, highest rank first.
    pub fn hits(&self, ray: &Ray) -> Vec<(PanelId, Hit)> {
        let mut hits: Vec<(i64, PanelId, Hit)> = self
            .panels
            .iter()
            .filter_map(|p| ray_panel_intersect(ray, &p.pose, &p.extent).map(|h| (p.z_rank, p.id, h)))
            .collect();
        hits.sort_by_key(|h| std::cmp::Reverse(h.0));
        hits.into_iter().map(|(_, id, h)| (id, h)).collect()
    }

    /// Nearest panel along `ray`; ties broken by rank.
    pub fn first_collision(&self, ray: &Ray) -> Option<(PanelId, Hit)> {
        self.panels
            .iter()
            .filter_map(|p| ray_panel_intersect(ray, &p.pose, &p.extent).map(|h| (p, h)))
            .min_by(|(pa, ha), (pb, hb)| ha.distance.total_cmp(&hb.distance).then(pb.z_rank.cmp(&pa.z_rank)))
            .map(|(p, h)| (p.id, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn content(sentences: &[&str]) -> DocumentContent {
        DocumentContent::new("d", DocumentKind::Short, sentences.iter().map(|s| s.to_string()).collect())
    }

    fn panel_with(layout: Layout) -> DocumentPanel {
        DocumentPanel {
            id: PanelId(0),
            content_id: "d".into(),
            pose: Pose::default(),
            extent: PanelExtent::default(),
            layout,
            scroll_line: 0,
            z_rank: 1,
            is_document: true,
            highlighted: false,
            strip_frac: 0.0,
        }
    }

    /// Layout with `n` lines where each line is its own one-word sentence.
    fn numbered_lines(n: usize) -> Layout {
        let sentences: Vec<String> = (0..n).map(|i| "x".repeat(60 + i % 3)).collect();
        layout_text(&DocumentContent::new("d", DocumentKind::Long, sentences), LayoutConfig::default()).unwrap()
    }

    #[test]
    fn short_sentence_single_line() {
        let l = layout_text(&content(&["a b c"]), LayoutConfig::default()).unwrap();
        assert_eq!(l.lines.len(), 1);
        assert_eq!(l.lines[0].text, "a b c");
    }

    #[test]
    fn empty_content_no_lines() {
        let l = layout_text(&content(&[]), LayoutConfig::default()).unwrap();
        assert!(l.lines.is_empty());
        assert_eq!(l.max_scroll(), 0);
    }

    #[test]
    fn overlong_word_named() {
        let cfg = LayoutConfig { chars_per_line: 4, ..Default::default() };
        match layout_text(&content(&["ok toolong"]), cfg) {
            Err(Error::WordTooLong { word, .. }) => assert_eq!(word, "toolong"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrap_exact_width() {
        let cfg = LayoutConfig { chars_per_line: 5, ..Default::default() };
        let l = layout_text(&content(&["ab cd ef", "g"]), cfg).unwrap();
        let texts: Vec<&str> = l.lines.iter().map(|l| l.text.as_str()).collect();
        assert_eq!(texts, ["ab cd", "ef g"]);
        assert_eq!(l.lines[1].sentence_index, 0);
        assert_eq!(l.lines[1].first_word_index, 2);
        assert_eq!(l.sentence_lines, vec![Some(0), Some(1)]);
    }

    #[test]
    fn visible_window_bounds() {
        let mut p = panel_with(numbered_lines(9));
        assert_eq!(p.visible_window().len(), 9);
        let mut p40 = panel_with(numbered_lines(40));
        p40.set_scroll_line(31);
        assert_eq!(p40.visible_window(), &p40.layout.lines[31..40]);
        assert_eq!(p40.set_scroll_line(35), 31);
        p.set_scroll_line(3);
        assert_eq!(p.scroll_line, 0);
    }

    #[test]
    fn sentence_scroll_from_mid_sentence() {
        // width 10: sentence 3 spans lines 3..5, sentence 4 starts on line 6
        let cfg = LayoutConfig { chars_per_line: 10, visible_lines: 2, line_spacing: 1.2 };
        let c = content(&[
            "aaaaaaaaaa",
            "bbbbbbbbbb",
            "cccccccccc",
            "dddddddddd eeeeeeeeee ffffffffff",
            "gggggggggg",
            "hhhhhhhhhh",
            "iiiiiiiiii",
        ]);
        let layout = layout_text(&c, cfg).unwrap();
        assert_eq!(layout.sentence_lines[3], Some(3));
        assert_eq!(layout.sentence_lines[4], Some(6));
        let mut p = panel_with(layout);
        p.set_scroll_line(4);
        assert_eq!(p.scroll_by_sentences(1), 6);
        assert_eq!(p.scroll_by_sentences(0), 6);
        assert_eq!(p.scroll_by_sentences(-1), 3);
        p.set_scroll_line(4);
        assert_eq!(p.scroll_by_sentences(-1), 3);
        assert_eq!(p.scroll_by_sentences(100), p.max_scroll());
        assert_eq!(p.scroll_by_sentences(-100), 0);
    }

    #[test]
    fn uv_to_line_rows() {
        let mut p = panel_with(numbered_lines(20));
        assert_eq!(p.uv_to_line((0.5, 0.5)), Some(4));
        assert_eq!(p.uv_to_line((0.5, 1.0)), Some(8));
        assert_eq!(p.uv_to_line((0.5, 0.0)), Some(0));
        p.set_scroll_line(3);
        assert_eq!(p.uv_to_line((0.5, 0.5)), Some(7));
        p.strip_frac = 0.08;
        assert_eq!(p.uv_to_line((0.5, 0.03)), None);
        assert_eq!(p.uv_to_line((0.5, 0.97)), None);
        assert_eq!(p.button_at((0.5, 0.97)), Some(ScrollButton::Down));
        let short = panel_with(numbered_lines(3));
        assert_eq!(short.uv_to_line((0.5, 0.9)), None);
    }

    #[test]
    fn scene_rank_management() {
        let mut a = panel_with(numbered_lines(1));
        let mut b = a.clone();
        b.id = PanelId(1);
        assert!(Scene::new(vec![a.clone(), b.clone()]).is_err());
        b.z_rank = 2;
        a.z_rank = 1;
        let mut s = Scene::new(vec![a, b]).unwrap();
        s.promote_to_top(PanelId(0));
        assert_eq!(s.get(PanelId(0)).unwrap().z_rank, 3);
        s.promote_to_top(PanelId(0));
        assert_eq!(s.get(PanelId(0)).unwrap().z_rank, 3);
    }
}
