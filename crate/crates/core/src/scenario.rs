//! Task scenes: documents placed on a semicircle around the reader's start
//! position, with synthetic passages and engine config overrides.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::document::{layout_text, DocumentContent, DocumentKind, DocumentPanel, LayoutConfig, PanelId, Scene};
use crate::engine::{EngineConfig, Mode};
use crate::error::{Error, Result};
use crate::geometry::{Orientation, PanelExtent, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    T1,
    T2,
    T3,
    T4,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::T1, Task::T2, Task::T3, Task::T4];

    /// Document kinds the task places, before any shuffling.
    pub fn kinds(self) -> &'static [DocumentKind] {
        use DocumentKind::*;
        match self {
            Task::T1 => &[Short, Short, Short, Short, Short],
            Task::T2 => &[Short],
            Task::T3 => &[Long],
            Task::T4 => &[Short, Short, Long],
        }
    }

    fn radius_m(self) -> f64 {
        match self {
            Task::T1 | Task::T4 => 1.2,
            Task::T2 | Task::T3 => 1.0,
        }
    }

    fn angles_deg(self) -> &'static [f64] {
        match self {
            Task::T1 => &[-72.0, -36.0, 0.0, 36.0, 72.0],
            Task::T2 | Task::T3 => &[0.0],
            Task::T4 => &[-40.0, 0.0, 40.0],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().trim_start_matches('T') {
            "1" => Ok(Task::T1),
            "2" => Ok(Task::T2),
            "3" => Ok(Task::T3),
            "4" => Ok(Task::T4),
            _ => Err(Error::Scenario(format!("unknown task {s:?} (expected T1..T4)"))),
        }
    }
}

/// Where a document sits: on a circle around the head start position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub radius_m: f64,
    /// Clockwise from straight ahead, seen from above; positive is to the right.
    pub angle_deg: f64,
    /// Height offset from eye level.
    #[serde(default)]
    pub height_m: f64,
}

impl Placement {
    /// Panel pose facing the head at `head`.
    pub fn pose(&self, head: Vec3) -> Result<Pose> {
        let a = self.angle_deg.to_radians();
        let center = head + Vec3::new(a.sin(), 0.0, -a.cos()) * self.radius_m + Vec3::Y * self.height_m;
        let orientation = Orientation::look_rotation(center - head, Vec3::Y)?;
        Ok(Pose::new(center, orientation))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(flatten)]
    pub content: DocumentContent,
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub seed: u64,
    pub head_start: Pose,
    /// Walkable area centered on the head start, meters.
    #[serde(default = "default_tracking_area")]
    pub tracking_area_m: (f64, f64),
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub extent: PanelExtent,
    pub documents: Vec<ScenarioDocument>,
    /// Engine config fields to override; unknown keys are rejected.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub config: Map<String, Value>,
}

fn default_tracking_area() -> (f64, f64) {
    (1.5, 1.5)
}

/// Eye height of the default head start.
pub const EYE_HEIGHT_M: f64 = 1.6;

/// Scenario for one of the four task templates.
pub fn build_task_scenario(task: Task, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ task_salt(task));
    let layout = LayoutConfig::default();
    let mut kinds = task.kinds().to_vec();
    if task == Task::T4 {
        kinds.shuffle(&mut rng);
    }
    let mut short_n = 0;
    let mut long_n = 0;
    let documents = kinds
        .iter()
        .zip(task.angles_deg())
        .map(|(&kind, &angle_deg)| {
            let id = match kind {
                DocumentKind::Short => {
                    short_n += 1;
                    format!("{task}-short-{short_n}")
                }
                DocumentKind::Long => {
                    long_n += 1;
                    format!("{task}-long-{long_n}")
                }
            };
            ScenarioDocument {
                content: synthesize_passage(&mut rng, id, kind, layout),
                placement: Placement { radius_m: task.radius_m(), angle_deg, height_m: 0.0 },
            }
        })
        .collect();
    Scenario {
        name: format!("task-{}", task.to_string().to_lowercase()),
        task: Some(task),
        seed,
        head_start: Pose::new(Vec3::new(0.0, EYE_HEIGHT_M, 0.0), Orientation::IDENTITY),
        tracking_area_m: default_tracking_area(),
        layout,
        extent: PanelExtent::default(),
        documents,
        config: Map::new(),
    }
}

fn task_salt(task: Task) -> u64 {
    0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(task as u64 + 1)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.documents.is_empty() {
            return Err(Error::Scenario("no documents".into()));
        }
        if let Some(task) = self.task {
            let mut want = task.kinds().to_vec();
            let mut have: Vec<_> = self.documents.iter().map(|d| d.content.kind).collect();
            want.sort_by_key(|k| *k as u8);
            have.sort_by_key(|k| *k as u8);
            if want != have {
                return Err(Error::Scenario(format!("document kinds do not match task {task}")));
            }
        }
        let (ax, az) = self.tracking_area_m;
        if !(ax > 0.0 && az > 0.0) {
            return Err(Error::Scenario("tracking area must be positive".into()));
        }
        let reach = 0.5 * ax.hypot(az);
        for d in &self.documents {
            let r = d.placement.radius_m;
            if !(r > 0.0 && r <= reach + 3.0) || !d.placement.angle_deg.is_finite() {
                return Err(Error::Scenario(format!("document {} placed out of reach", d.content.id)));
            }
            let words = d.content.sentences.iter().map(|s| s.split_whitespace().count()).sum::<usize>();
            if words != d.content.word_count {
                return Err(Error::Scenario(format!("document {} word_count mismatch", d.content.id)));
            }
        }
        self.engine_config(Mode::Gaze, &Map::new()).map(|_| ())
    }

    /// Engine config: defaults, then scenario overrides, then `cli`
    /// overrides, then `mode`.
    pub fn engine_config(&self, mode: Mode, cli: &Map<String, Value>) -> Result<EngineConfig> {
        let mut cfg = apply_overrides(&EngineConfig::default(), &self.config)?;
        cfg = apply_overrides(&cfg, cli)?;
        cfg.mode = mode;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Laid-out panels; panel `i` holds document `i` with z-rank `i + 1`.
    pub fn build_scene(&self) -> Result<Scene> {
        let panels = self
            .documents
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(DocumentPanel {
                    id: PanelId(i as u32),
                    content_id: d.content.id.clone(),
                    pose: d.placement.pose(self.head_start.position)?,
                    extent: self.extent,
                    layout: layout_text(&d.content, self.layout)?,
                    scroll_line: 0,
                    z_rank: i as i64 + 1,
                    is_document: true,
                    highlighted: false,
                    strip_frac: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(panels)
    }
}

/// `base` with the fields named in `overrides` replaced.
pub fn apply_overrides(base: &EngineConfig, overrides: &Map<String, Value>) -> Result<EngineConfig> {
    if overrides.is_empty() {
        return Ok(base.clone());
    }
    let Value::Object(mut merged) = serde_json::to_value(base)? else { unreachable!("config serializes to an object") };
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            return Err(Error::Config(format!("unknown config key {k:?}")));
        }
        merged.insert(k.clone(), v.clone());
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Config(e.to_string()))
}

/// Parses a `key=value` override; the value is read as JSON when it parses,
/// otherwise as a string.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    let key = k.trim().to_string();
    if !serde_json::to_value(EngineConfig::default())?.as_object().is_some_and(|m| m.contains_key(&key)) {
        return Err(Error::Config(format!("unknown config key {key:?}")));
    }
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string()));
    Ok((key, value))
}

// ── Passage synthesis ───────────────────────────────────────

const VOCAB: &[&str] = &[
    "the", "a", "of", "and", "to", "in", "is", "was", "for", "on", "that", "with", "as", "it", "at", "by", "from",
    "they", "we", "this", "be", "are", "or", "had", "not", "but", "some", "what", "there", "can", "out", "other",
    "were", "all", "your", "when", "up", "use", "how", "said", "each", "she", "which", "their", "time", "will", "way",
    "about", "many", "then", "them", "would", "write", "like", "so", "these", "her", "long", "make", "thing", "see",
    "him", "two", "has", "look", "more", "day", "could", "go", "come", "did", "number", "sound", "most", "people",
    "my", "over", "know", "water", "than", "call", "first", "who", "may", "down", "side", "been", "now", "find", "any",
    "new", "work", "part", "take", "get", "place", "made", "live", "where", "after", "back", "little", "only", "round",
    "man", "year", "came", "show", "every", "good", "me", "give", "our", "under", "name", "very", "through", "just",
    "form", "great", "think", "say", "help", "low", "line", "turn", "cause", "much", "mean", "before", "move", "right",
    "boy", "old", "too", "same", "tell", "does", "set", "three", "want", "air", "well", "also", "play", "small", "end",
    "put", "home", "read", "hand", "port", "large", "spell", "add", "even", "land", "here", "must", "big", "high",
    "such", "follow", "act", "why", "ask", "men", "change", "went", "light", "kind", "off", "need", "house", "picture",
    "try", "us", "again", "animal", "point", "mother", "world", "near", "build", "self", "earth", "father", "head",
    "stand", "own", "page", "should", "country", "found", "answer", "school", "grow", "study", "still", "learn",
    "plant", "cover", "food", "sun", "four", "between", "state", "keep", "eye", "never", "last", "let", "thought",
    "city", "tree", "cross", "farm", "hard", "start", "might", "story", "saw", "far", "sea", "draw", "left", "late",
    "run", "while", "press", "close", "night", "real", "life", "few", "north",
];

fn target_words(kind: DocumentKind) -> std::ops::RangeInclusive<usize> {
    match kind {
        DocumentKind::Short => 96..=104,
        DocumentKind::Long => 480..=520,
    }
}

fn synth_sentences(rng: &mut ChaCha8Rng, words: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut left = words;
    while left > 0 {
        let mut n = rng.random_range(7..=15usize).min(left);
        if left - n < 4 {
            n = left;
        }
        let mut s: Vec<String> = (0..n).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect();
        if let Some(first) = s.first_mut() {
            let mut c = first.chars();
            *first = c.next().map(|h| h.to_uppercase().chain(c).collect()).unwrap_or_default();
        }
        if let Some(last) = s.last_mut() {
            last.push('.');
        }
        out.push(s.join(" "));
        left -= n;
    }
    out
}

/// Deterministic filler passage. Short passages always fit the view box.
pub fn synthesize_passage(
    rng: &mut ChaCha8Rng,
    id: String,
    kind: DocumentKind,
    layout: LayoutConfig,
) -> DocumentContent {
    let range = target_words(kind);
    for _ in 0..64 {
        let words = rng.random_range(range.clone());
        let doc = DocumentContent::new(id.clone(), kind, synth_sentences(rng, words));
        let fits = layout_text(&doc, layout).map(|l| l.total_lines() <= layout.visible_lines).unwrap_or(false);
        if kind == DocumentKind::Long || fits {
            return doc;
        }
    }
    // Fallback: trim words until it fits.
    let mut sentences = synth_sentences(rng, *range.start());
    loop {
        let doc = DocumentContent::new(id.clone(), kind, sentences.clone());
        if layout_text(&doc, layout).map(|l| l.total_lines() <= layout.visible_lines).unwrap_or(true) {
            return doc;
        }
        let last = sentences.last_mut().expect("non-empty");
        match last.rfind(' ') {
            Some(i) => {
                last.truncate(i);
                last.push('.');
            }
            None => {
                sentences.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_compositions() {
        for (task, shorts, longs) in [(Task::T1, 5, 0), (Task::T2, 1, 0), (Task::T3, 0, 1), (Task::T4, 2, 1)] {
            let s = build_task_scenario(task, 7);
            let count = |k| s.documents.iter().filter(|d| d.content.kind == k).count();
            assert_eq!((count(DocumentKind::Short), count(DocumentKind::Long)), (shorts, longs), "{task}");
            s.validate().unwrap();
        }
    }

    #[test]
    fn same_seed_same_json() {
        for task in Task::ALL {
            assert_eq!(build_task_scenario(task, 11).to_json(), build_task_scenario(task, 11).to_json());
        }
        assert_ne!(build_task_scenario(Task::T1, 1).to_json(), build_task_scenario(Task::T1, 2).to_json());
    }

    #[test]
    fn passages_have_expected_sizes() {
        for seed in 0..20 {
            let s = build_task_scenario(Task::T4, seed);
            let scene = s.build_scene().unwrap();
            for (d, p) in s.documents.iter().zip(&scene.panels) {
                match d.content.kind {
                    DocumentKind::Short => {
                        assert!((90..=110).contains(&d.content.word_count));
                        assert!(!p.is_scrollable());
                    }
                    DocumentKind::Long => {
                        assert!((470..=530).contains(&d.content.word_count));
                        assert!(p.is_scrollable());
                    }
                }
            }
        }
    }

    #[test]
    fn panels_on_semicircle_face_head() {
        let s = build_task_scenario(Task::T1, 3);
        let head = s.head_start.position;
        let scene = s.build_scene().unwrap();
        for p in &scene.panels {
            assert!((p.pose.position.distance(head) - 1.2).abs() < 1e-12);
            let to_head = (head - p.pose.position).normalized().unwrap();
            assert!((p.pose.normal() - to_head).norm() < 1e-9);
            assert!((p.pose.orientation.up() - Vec3::Y).norm() < 1e-9);
        }
        assert!(scene.panels[4].pose.position.x > 0.0);
    }

    #[test]
    fn override_precedence() {
        let mut s = build_task_scenario(Task::T2, 1);
        s.config.insert("lens_dwell_s".into(), Value::from(2.0));
        s.config.insert("scroll_dwell_s".into(), Value::from(0.7));
        let cli: Map<String, Value> = [parse_override("scroll_dwell_s=0.6").unwrap()].into_iter().collect();
        let cfg = s.engine_config(Mode::Baseline, &cli).unwrap();
        assert_eq!(cfg.lens_dwell_s, 2.0);
        assert_eq!(cfg.scroll_dwell_s, 0.6);
        assert_eq!(cfg.mode, Mode::Baseline);
    }

    #[test]
    fn unknown_override_rejected() {
        assert!(matches!(parse_override("lens_speed=3"), Err(Error::Config(_))));
        assert!(matches!(parse_override("no_equals"), Err(Error::Config(_))));
        let mut s = build_task_scenario(Task::T2, 1);
        s.config.insert("bogus".into(), Value::from(1));
        assert!(s.validate().is_err());
    }

    #[test]
    fn task_parse() {
        assert_eq!("t3".parse::<Task>().unwrap(), Task::T3);
        assert_eq!("4".parse::<Task>().unwrap(), Task::T4);
        assert!("T5".parse::<Task>().is_err());
    }

    #[test]
    fn scenario_json_roundtrip() {
        let s = build_task_scenario(Task::T4, 9);
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}
