//! Deterministic run loop: samples go through the gaze pipeline and the
//! engine, events and metrics come out.

use serde::{Deserialize, Serialize};

use crate::document::Scene;
use crate::engine::{Engine, EngineConfig, InteractionEvent, Mode, StepInput};
use crate::error::Result;
use crate::gaze::{FixationEstimate, GazePipeline, GazeSample};
use crate::geometry::Pose;
use crate::metrics::{MetricsAccumulator, MetricsReport};
use crate::reader::{generate_trace, ReaderModel};
use crate::scenario::Scenario;

/// Pipeline plus engine for one sample stream.
///
/// A sample without head orientation keeps the last known one; its gaze
/// origin is taken as the head position. A sample without a controller ray
/// lends its raw gaze ray to baseline mode.
#[derive(Debug, Clone)]
pub struct Runner {
    pipeline: GazePipeline,
    engine: Engine,
    head: Pose,
    metrics: MetricsAccumulator,
    last_estimate: Option<FixationEstimate>,
}

/// One processed sample.
#[derive(Debug, Clone)]
pub struct RunStep {
    pub estimate: FixationEstimate,
    pub events: Vec<InteractionEvent>,
}

impl Runner {
    pub fn new(scene: Scene, cfg: EngineConfig, head: Pose) -> Result<Self> {
        let pipeline = GazePipeline::new(cfg.filter());
        let mode = cfg.mode;
        Ok(Self {
            pipeline,
            engine: Engine::new(scene, cfg, head)?,
            head,
            metrics: MetricsAccumulator::new(mode),
            last_estimate: None,
        })
    }

    pub fn from_scenario(scenario: &Scenario, cfg: EngineConfig) -> Result<Self> {
        Self::new(scenario.build_scene()?, cfg, scenario.head_start)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn head(&self) -> &Pose {
        &self.head
    }

    pub fn last_estimate(&self) -> Option<&FixationEstimate> {
        self.last_estimate.as_ref()
    }

    /// Head pose used for samples that carry no orientation.
    pub fn set_head(&mut self, head: Pose) {
        self.head = head;
    }

    pub fn step(&mut self, sample: &GazeSample) -> Result<RunStep> {
        let estimate = self.pipeline.step(sample)?;
        self.head = Pose::new(sample.origin, sample.head.unwrap_or(self.head.orientation));
        self.metrics.observe_sample(sample, &estimate, self.engine.scene());
        let events = self.engine.step(&StepInput {
            t: sample.t,
            estimate: &estimate,
            head: self.head,
            buttons: sample.buttons,
            controller: sample.controller.or_else(|| sample.ray()),
        })?;
        self.metrics.observe_events(&events);
        self.last_estimate = Some(estimate.clone());
        Ok(RunStep { estimate, events })
    }

    pub fn metrics(&self) -> MetricsReport {
        self.metrics.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub events: Vec<InteractionEvent>,
    pub metrics: MetricsReport,
}

/// Feeds `trace` through a fresh engine built from `scenario`.
pub fn run(scenario: &Scenario, cfg: EngineConfig, trace: &[GazeSample]) -> Result<RunOutput> {
    let mut runner = Runner::from_scenario(scenario, cfg)?;
    let mut events = Vec::new();
    for s in trace {
        events.extend(runner.step(s)?.events);
    }
    Ok(RunOutput { events, metrics: runner.metrics() })
}

/// Metrics of the same reader intent under both modes, gaze mode first.
pub fn compare_modes(
    scenario: &Scenario,
    reader: &ReaderModel,
    base: &EngineConfig,
) -> Result<(MetricsReport, MetricsReport)> {
    let report = |mode: Mode| -> Result<MetricsReport> {
        let cfg = EngineConfig { mode, ..base.clone() };
        let trace = generate_trace(scenario, reader, &cfg)?;
        Ok(run(scenario, cfg, &trace)?.metrics)
    };
    Ok((report(Mode::Gaze)?, report(Mode::Baseline)?))
}
