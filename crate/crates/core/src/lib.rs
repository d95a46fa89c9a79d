//! Headless, deterministic gaze-interaction engine for reading documents
//! placed in a 3D scene.
//!
//! The crate is layered bottom-up:
//!
//! - [`geometry`]: vectors, poses, rays and ray/panel picking.
//! - [`gaze`]: saccade/fixation classification and fixation-window smoothing.
//! - [`document`]: passage text, greedy line layout, scrolling and panels.
//! - [`engine`]: the select-and-snap, magnifier, gaze-scroll and baseline
//!   state machines.
//! - [`trace`], [`scenario`], [`reader`], [`metrics`], [`sim`]: the simulation
//!   harness that builds task scenes, synthesizes reader traces and replays
//!   them through the engine.
//! - [`session`]: the line-delimited JSON session protocol used by live clients.
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod document;
pub mod engine;
pub mod error;
pub mod gaze;
pub mod geometry;
pub mod metrics;
pub mod reader;
pub mod scenario;
pub mod session;
pub mod sim;
pub mod trace;

pub use document::{DocumentContent, DocumentKind, DocumentPanel, Layout, LayoutConfig, PanelId, Scene};
pub use engine::{Engine, EngineConfig, EventKind, InteractionEvent, LensRegion, Mode};
pub use error::{Error, Result};
pub use gaze::{ButtonState, FixationEstimate, GazePipeline, GazeSample, Phase};
pub use geometry::{Hit, Orientation, PanelExtent, Pose, Ray, Vec3};
pub use metrics::MetricsReport;
pub use reader::ReaderModel;
pub use scenario::{Scenario, Task};
pub use sim::Runner;
