//! Benchmark fixtures.

use gazedoc::reader::generate_trace;
use gazedoc::scenario::build_task_scenario;
use gazedoc::{EngineConfig, GazeSample, Mode, ReaderModel, Scenario, Task};

/// Scenario, config and generated trace for one task.
pub struct Fixture {
    pub scenario: Scenario,
    pub config: EngineConfig,
    pub trace: Vec<GazeSample>,
}

pub fn fixture(task: Task, mode: Mode) -> Fixture {
    let scenario = build_task_scenario(task, 1);
    let config = scenario.engine_config(mode, &Default::default()).expect("default config");
    let trace = generate_trace(&scenario, &ReaderModel::default(), &config).expect("trace generation");
    Fixture { scenario, config, trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_has_samples() {
        let f = fixture(Task::T2, Mode::Gaze);
        assert!(f.trace.len() > 120);
    }
}
