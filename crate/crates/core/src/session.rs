//! Live sessions over a line-delimited JSON protocol (version 1).
//!
//! [`SessionManager::handle`] takes one client line and returns the server
//! messages it produces, in order. Transport is the caller's business.
//!
//! ```text
//! -> {"v":1,"kind":"create_session","seq":1,"task":"T2","mode":"vrdoc"}
//! <- {"v":1,"session_id":"s1","ack_seq":1,"kind":"session_created",...}
//! -> {"v":1,"kind":"sample","session_id":"s1","seq":2,"t":0.0,"ox":0,...}
//! <- {"v":1,"session_id":"s1","ack_seq":2,"kind":"events","events":[...]}
//! <- {"v":1,"session_id":"s1","ack_seq":2,"kind":"scene_delta",...}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::document::{PanelId, Scene};
use crate::engine::{DwellProgress, EngineConfig, InteractionEvent, LensRegion, Mode, SelectState};
use crate::error::Error;
use crate::gaze::{GazeSample, Phase};
use crate::geometry::Pose;
use crate::metrics::MetricsReport;
use crate::scenario::{build_task_scenario, Scenario, Task};
use crate::sim::Runner;
use crate::trace::TraceRecord;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub seq: u64,
    #[serde(flatten)]
    pub body: ClientBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientBody {
    /// Starts a session from a task template or an inline scenario.
    CreateSession {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<Task>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario: Option<Box<Scenario>>,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        mode: Mode,
        #[serde(default, skip_serializing_if = "Map::is_empty")]
        overrides: Map<String, Value>,
    },
    Sample(TraceRecord),
    /// Head pose for samples that carry no head orientation.
    SetHeadPose {
        pose: Pose,
    },
    /// Presses the lens toggle on the next sample.
    ToggleLens,
    EndSession,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub v: u32,
    pub session_id: Option<String>,
    /// Highest client seq processed for the session.
    pub ack_seq: Option<u64>,
    #[serde(flatten)]
    pub body: ServerBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerBody {
    SessionCreated { mode: Mode, config: EngineConfig, head: Pose, scene: Scene },
    Events { events: Vec<InteractionEvent> },
    SceneDelta(SceneDelta),
    Error { code: ErrorCode, message: String },
    SessionEnded { metrics: MetricsReport },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// The line is not a valid message.
    Parse,
    /// Unsupported `v`.
    Version,
    NoSession,
    /// Sample time not after the previous sample.
    BadStream,
    /// seq not above the last processed seq.
    BadSeq,
    /// Well-formed but unusable request (bad scenario, config, sample).
    BadRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelState {
    pub id: PanelId,
    pub pose: Pose,
    pub scroll_line: usize,
    pub z_rank: i64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeHit {
    pub panel: PanelId,
    pub uv: (f64, f64),
}

/// Session state after a message has been processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDelta {
    /// Time of the last processed sample.
    pub t: Option<f64>,
    pub phase: Option<Phase>,
    /// Topmost panel under the filtered gaze.
    pub gaze: Option<GazeHit>,
    pub panels: Vec<PanelState>,
    pub highlighted: Option<PanelId>,
    pub select_state: SelectState,
    pub lens: Option<LensRegion>,
    pub dwell: DwellProgress,
}

/// Everything needed to replay a finished session offline.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session_id: String,
    pub scenario: Scenario,
    pub config: EngineConfig,
    /// Samples as the engine saw them: pending lens toggles merged in and the
    /// head orientation filled in.
    pub samples: Vec<GazeSample>,
    pub events: Vec<InteractionEvent>,
}

struct Session {
    scenario: Scenario,
    config: EngineConfig,
    runner: Runner,
    last_seq: u64,
    pending_toggle: bool,
    samples: Vec<GazeSample>,
    events: Vec<InteractionEvent>,
}

/// Sessions of one connection. Sessions share nothing.
#[derive(Default)]
pub struct SessionManager {
    sessions: BTreeMap<String, Session>,
    next_id: u64,
    record: bool,
    finished: Vec<SessionRecord>,
}

fn msg(session_id: Option<String>, ack_seq: Option<u64>, body: ServerBody) -> ServerMessage {
    ServerMessage { v: PROTOCOL_VERSION, session_id, ack_seq, body }
}

fn error(
    session_id: Option<String>,
    ack_seq: Option<u64>,
    code: ErrorCode,
    message: impl Into<String>,
) -> ServerMessage {
    msg(session_id, ack_seq, ServerBody::Error { code, message: message.into() })
}

impl SessionManager {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps the effective sample stream and events of every session, to be
    /// collected with [`SessionManager::take_finished`] once it ends.
    pub fn with_recording(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Records of sessions ended since the last call.
    pub fn take_finished(&mut self) -> Vec<SessionRecord> {
        std::mem::take(&mut self.finished)
    }

    /// Drops every open session, as when the connection goes away. Recorded
    /// sessions become available from [`SessionManager::take_finished`].
    pub fn close_all(&mut self) {
        for (sid, s) in std::mem::take(&mut self.sessions) {
            if self.record {
                self.finished.push(SessionRecord {
                    session_id: sid,
                    scenario: s.scenario,
                    config: s.config,
                    samples: s.samples,
                    events: s.events,
                });
            }
        }
    }

    /// Processes one protocol line.
    pub fn handle(&mut self, line: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(line) {
            Ok(m) => self.handle_message(m),
            Err(e) => {
                let probe: Option<Value> = serde_json::from_str(line).ok();
                let field = |k: &str| probe.as_ref().and_then(|v| v.get(k).cloned());
                let sid = field("session_id").and_then(|v| v.as_str().map(str::to_string));
                let seq = field("seq").and_then(|v| v.as_u64());
                vec![error(sid, seq, ErrorCode::Parse, e.to_string())]
            }
        }
    }

    pub fn handle_message(&mut self, m: ClientMessage) -> Vec<ServerMessage> {
        if m.v != PROTOCOL_VERSION {
            return vec![error(m.session_id, Some(m.seq), ErrorCode::Version, format!("unsupported version {}", m.v))];
        }
        if let ClientBody::CreateSession { task, scenario, seed, mode, overrides } = m.body {
            return vec![self.create(m.seq, task, scenario, seed, mode, &overrides)];
        }
        let Some(sid) = m.session_id else {
            return vec![error(None, Some(m.seq), ErrorCode::NoSession, "missing session_id")];
        };
        let Some(session) = self.sessions.get_mut(&sid) else {
            return vec![error(Some(sid.clone()), Some(m.seq), ErrorCode::NoSession, format!("no session {sid:?}"))];
        };
        if m.seq <= session.last_seq {
            let text = format!("seq {} not above {}", m.seq, session.last_seq);
            return vec![error(Some(sid), Some(session.last_seq), ErrorCode::BadSeq, text)];
        }
        let seq = m.seq;
        let reply = |body| msg(Some(sid.clone()), Some(seq), body);
        match m.body {
            ClientBody::CreateSession { .. } => unreachable!("handled above"),
            ClientBody::Sample(record) => {
                let mut sample = match record.to_sample() {
                    Ok(s) => s,
                    Err(e) => {
                        return vec![error(
                            Some(sid.clone()),
                            Some(session.last_seq),
                            ErrorCode::BadRequest,
                            e.to_string(),
                        )]
                    }
                };
                sample.buttons.lens_toggle_pressed |= session.pending_toggle;
                sample.head = Some(sample.head.unwrap_or(session.runner.head().orientation));
                let step = match session.runner.step(&sample) {
                    Ok(step) => step,
                    Err(e @ Error::StreamOrder { .. }) => {
                        return vec![error(
                            Some(sid.clone()),
                            Some(session.last_seq),
                            ErrorCode::BadStream,
                            e.to_string(),
                        )]
                    }
                    Err(e) => {
                        return vec![error(
                            Some(sid.clone()),
                            Some(session.last_seq),
                            ErrorCode::BadRequest,
                            e.to_string(),
                        )]
                    }
                };
                session.last_seq = seq;
                session.pending_toggle = false;
                if self.record {
                    session.samples.push(sample);
                    session.events.extend(step.events.iter().cloned());
                }
                let mut out = Vec::with_capacity(2);
                if !step.events.is_empty() {
                    out.push(reply(ServerBody::Events { events: step.events }));
                }
                out.push(reply(ServerBody::SceneDelta(scene_delta(&session.runner))));
                out
            }
            ClientBody::SetHeadPose { pose } => {
                session.last_seq = seq;
                session.runner.set_head(pose);
                vec![reply(ServerBody::SceneDelta(scene_delta(&session.runner)))]
            }
            ClientBody::ToggleLens => {
                session.last_seq = seq;
                session.pending_toggle = true;
                vec![reply(ServerBody::SceneDelta(scene_delta(&session.runner)))]
            }
            ClientBody::EndSession => {
                let session = self.sessions.remove(&sid).expect("looked up above");
                let metrics = session.runner.metrics();
                if self.record {
                    self.finished.push(SessionRecord {
                        session_id: sid.clone(),
                        scenario: session.scenario,
                        config: session.config,
                        samples: session.samples,
                        events: session.events,
                    });
                }
                vec![reply(ServerBody::SessionEnded { metrics })]
            }
        }
    }

    fn create(
        &mut self,
        seq: u64,
        task: Option<Task>,
        scenario: Option<Box<Scenario>>,
        seed: u64,
        mode: Mode,
        overrides: &Map<String, Value>,
    ) -> ServerMessage {
        let scenario = match (task, scenario) {
            (_, Some(s)) => match s.validate() {
                Ok(()) => *s,
                Err(e) => return error(None, Some(seq), ErrorCode::BadRequest, e.to_string()),
            },
            (Some(task), None) => build_task_scenario(task, seed),
            (None, None) => {
                return error(None, Some(seq), ErrorCode::BadRequest, "create_session needs task or scenario")
            }
        };
        let built = scenario
            .engine_config(mode, overrides)
            .and_then(|cfg| Runner::from_scenario(&scenario, cfg.clone()).map(|r| (cfg, r)));
        let (config, runner) = match built {
            Ok(x) => x,
            Err(e) => return error(None, Some(seq), ErrorCode::BadRequest, e.to_string()),
        };
        self.next_id += 1;
        let sid = format!("s{}", self.next_id);
        let body = ServerBody::SessionCreated {
            mode,
            config: config.clone(),
            head: scenario.head_start,
            scene: runner.engine().scene().clone(),
        };
        self.sessions.insert(
            sid.clone(),
            Session {
                scenario,
                config,
                runner,
                last_seq: seq,
                pending_toggle: false,
                samples: Vec::new(),
                events: Vec::new(),
            },
        );
        msg(Some(sid), Some(seq), body)
    }
}

fn scene_delta(runner: &Runner) -> SceneDelta {
    let engine = runner.engine();
    let scene = engine.scene();
    let est = runner.last_estimate();
    let gaze = est
        .and_then(|e| e.ray())
        .and_then(|ray| scene.topmost_hit(&ray))
        .map(|(panel, hit)| GazeHit { panel, uv: hit.uv });
    SceneDelta {
        t: engine.last_t(),
        phase: est.map(|e| e.phase),
        gaze,
        panels: scene
            .panels
            .iter()
            .map(|p| PanelState {
                id: p.id,
                pose: p.pose,
                scroll_line: p.scroll_line,
                z_rank: p.z_rank,
                highlighted: p.highlighted,
            })
            .collect(),
        highlighted: engine.highlighted(),
        select_state: engine.select_state(),
        lens: engine.active_lens().cloned(),
        dwell: engine.last_t().map(|t| engine.dwell_progress(t)).unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: Value) -> String {
        v.to_string()
    }

    fn create(m: &mut SessionManager, task: &str) -> String {
        let out =
            m.handle(&line(serde_json::json!({"v":1,"kind":"create_session","seq":1,"task":task,"mode":"vrdoc"})));
        assert_eq!(out.len(), 1);
        assert!(matches!(out[0].body, ServerBody::SessionCreated { .. }), "{out:?}");
        out[0].session_id.clone().unwrap()
    }

    #[test]
    fn create_t2_has_one_panel() {
        let mut m = SessionManager::new();
        let out = m.handle(r#"{"v":1,"kind":"create_session","seq":1,"task":"T2"}"#);
        let ServerBody::SessionCreated { scene, mode, .. } = &out[0].body else { panic!("{out:?}") };
        assert_eq!(scene.panels.len(), 1);
        assert_eq!(*mode, Mode::Gaze);
        assert_eq!(out[0].ack_seq, Some(1));
    }

    #[test]
    fn errors_have_codes() {
        let mut m = SessionManager::new();
        let code = |out: Vec<ServerMessage>| match &out[0].body {
            ServerBody::Error { code, .. } => *code,
            other => panic!("{other:?}"),
        };
        assert_eq!(code(m.handle("{not json")), ErrorCode::Parse);
        assert_eq!(code(m.handle(r#"{"v":2,"kind":"toggle_lens","seq":1,"session_id":"s1"}"#)), ErrorCode::Version);
        assert_eq!(code(m.handle(r#"{"v":1,"kind":"end_session","seq":1,"session_id":"s9"}"#)), ErrorCode::NoSession);
        let sid = create(&mut m, "T2");
        let sample = |seq: u64, t: f64| {
            line(serde_json::json!({"v":1,"kind":"sample","session_id":sid,"seq":seq,"t":t,
                "ox":0.0,"oy":1.6,"oz":0.0,"dx":0.0,"dy":0.0,"dz":-1.0,"valid":true}))
        };
        assert!(matches!(m.handle(&sample(2, 0.5)).last().unwrap().body, ServerBody::SceneDelta(_)));
        assert_eq!(code(m.handle(&sample(3, 0.5))), ErrorCode::BadStream);
        assert_eq!(code(m.handle(&sample(3, 0.4))), ErrorCode::BadStream);
        assert_eq!(code(m.handle(&sample(2, 0.6))), ErrorCode::BadSeq);
        assert!(matches!(m.handle(&sample(4, 0.6)).last().unwrap().body, ServerBody::SceneDelta(_)));
        let bad = line(serde_json::json!({"v":1,"kind":"create_session","seq":1,"task":"T2","overrides":{"nope":1}}));
        assert_eq!(code(m.handle(&bad)), ErrorCode::BadRequest);
    }

    #[test]
    fn ended_session_is_gone() {
        let mut m = SessionManager::new();
        let sid = create(&mut m, "T1");
        let end = line(serde_json::json!({"v":1,"kind":"end_session","seq":2,"session_id":sid}));
        assert!(matches!(m.handle(&end)[0].body, ServerBody::SessionEnded { .. }));
        let again = line(serde_json::json!({"v":1,"kind":"toggle_lens","seq":3,"session_id":sid}));
        assert!(matches!(m.handle(&again)[0].body, ServerBody::Error { code: ErrorCode::NoSession, .. }));
    }

    #[test]
    fn dwell_at_close_range_turns_lens_on() {
        let mut scenario = build_task_scenario(Task::T2, 0);
        scenario.documents[0].placement.radius_m = 0.4;
        scenario.documents[0].placement.angle_deg = 0.0;
        scenario.documents[0].placement.height_m = 0.0;
        let mut m = SessionManager::new();
        let create = ClientMessage {
            v: 1,
            session_id: None,
            seq: 1,
            body: ClientBody::CreateSession {
                task: None,
                scenario: Some(Box::new(scenario)),
                seed: 0,
                mode: Mode::Gaze,
                overrides: Map::new(),
            },
        };
        let out = m.handle(&serde_json::to_string(&create).unwrap());
        let sid = out[0].session_id.clone().unwrap();
        let mut lens_on = Vec::new();
        for k in 0..181u64 {
            let rec = serde_json::json!({"v":1,"kind":"sample","session_id":sid,"seq":k + 2,"t":k as f64 / 120.0,
                "ox":0.0,"oy":1.6,"oz":0.0,"dx":0.0,"dy":0.0,"dz":-1.0,"valid":true});
            for reply in m.handle(&rec.to_string()) {
                assert_eq!(reply.ack_seq, Some(k + 2));
                if let ServerBody::Events { events } = reply.body {
                    lens_on.extend(events.into_iter().filter(|e| e.kind.name() == "lens_on").map(|e| e.t));
                }
            }
        }
        assert_eq!(lens_on, vec![1.5]);
    }

    #[test]
    fn live_events_match_offline_run() {
        let scenario = build_task_scenario(Task::T2, 3);
        let cfg = scenario.engine_config(Mode::Gaze, &Map::new()).unwrap();
        let trace = crate::reader::generate_trace(&scenario, &crate::reader::ReaderModel::default(), &cfg).unwrap();
        let offline = crate::sim::run(&scenario, cfg, &trace).unwrap();

        let mut m = SessionManager::new().with_recording(true);
        let out = m.handle(&line(serde_json::json!({"v":1,"kind":"create_session","seq":1,"task":"T2","seed":3})));
        let sid = out[0].session_id.clone().unwrap();
        let mut live = Vec::new();
        for (k, s) in trace.iter().enumerate() {
            let msg = ClientMessage {
                v: 1,
                session_id: Some(sid.clone()),
                seq: k as u64 + 2,
                body: ClientBody::Sample(TraceRecord::from(s)),
            };
            let replies = m.handle(&serde_json::to_string(&msg).unwrap());
            assert!(matches!(replies.last().unwrap().body, ServerBody::SceneDelta(_)));
            for r in replies {
                if let ServerBody::Events { events } = r.body {
                    live.extend(events);
                }
            }
        }
        let end = line(serde_json::json!({"v":1,"kind":"end_session","seq":trace.len() + 2,"session_id":sid}));
        let ServerBody::SessionEnded { metrics } = &m.handle(&end)[0].body else { panic!() };
        assert_eq!(live, offline.events);
        assert_eq!(*metrics, offline.metrics);

        let rec = m.take_finished().pop().unwrap();
        assert_eq!(rec.events, live);
        let again = crate::sim::run(&rec.scenario, rec.config, &rec.samples).unwrap();
        assert_eq!(again.events, live);
    }

    #[test]
    fn sessions_are_independent() {
        let mut m = SessionManager::new();
        let a = create(&mut m, "T1");
        let b = create(&mut m, "T3");
        assert_ne!(a, b);
        assert_eq!(m.session_count(), 2);
    }
}
