//! Gaze sample ingestion: velocity-threshold saccade detection and a
//! recency-weighted mean over the current fixation window.
//!
//! Each valid sample is compared with the previous valid sample; an angular
//! velocity above the threshold marks a saccade. Consecutive sub-threshold
//! samples form a fixation whose smoothed direction is the normalized
//! weighted sum of its window, with weight `λ^(t_last − t_i)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_distance, Orientation, Ray, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ButtonState {
    pub trigger_pressed: bool,
    pub grab_pressed: bool,
    /// Vertical trackpad motion for this sample, in [-1, 1]; positive scrolls
    /// toward the end of the document.
    pub trackpad_dy: f64,
    pub lens_toggle_pressed: bool,
}

/// One timestamped tracker sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Seconds; strictly increasing within a stream.
    pub t: f64,
    /// Eye/head position the gaze ray starts from.
    pub origin: Vec3,
    /// Unit gaze direction, `None` when the tracker reported the sample invalid.
    pub direction: Option<Vec3>,
    pub buttons: ButtonState,
    /// Head orientation, when the source reports one.
    pub head: Option<Orientation>,
    /// Hand controller ray, when the source reports one.
    pub controller: Option<Ray>,
}

impl GazeSample {
    pub fn valid(&self) -> bool {
        self.direction.is_some()
    }

    pub fn ray(&self) -> Option<Ray> {
        self.direction.map(|direction| Ray { origin: self.origin, direction })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Fixation,
    Saccade,
    Invalid,
}

/// Pipeline output for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationEstimate {
    pub t: f64,
    pub phase: Phase,
    pub origin: Vec3,
    /// Smoothed direction during a fixation, the raw direction during a
    /// saccade, `None` when invalid.
    pub point: Option<Vec3>,
    /// Timestamps contributing to `point` (fixation phase only).
    pub window: Vec<f64>,
    pub fixation_start_t: Option<f64>,
}

impl FixationEstimate {
    pub fn ray(&self) -> Option<Ray> {
        self.point.map(|direction| Ray { origin: self.origin, direction })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub saccade_velocity_deg_s: f64,
    pub fixation_window_s: f64,
    pub smoothing_lambda_per_s: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { saccade_velocity_deg_s: 30.0, fixation_window_s: 0.25, smoothing_lambda_per_s: 0.5 }
    }
}

/// Recency-weighted mean direction of a fixation window.
///
/// `window` holds `(t, unit direction)` pairs in ascending time order. Each
/// entry is weighted by `lambda^(t_last − t)`; `lambda = 1` gives the plain
/// arithmetic mean.
pub fn smooth(window: &[(f64, Vec3)], lambda_per_s: f64) -> Result<Vec3> {
    let t_last = window.last().ok_or(Error::EmptyWindow)?.0;
    let sum = window.iter().fold(Vec3::ZERO, |acc, &(t, d)| acc + d * lambda_per_s.powf(t_last - t));
    sum.normalized().ok_or(Error::DegenerateWindow)
}

/// Single-stream saccade/fixation filter.
#[derive(Debug, Clone)]
pub struct GazePipeline {
    cfg: FilterConfig,
    last_t: Option<f64>,
    last_valid: Option<(f64, Vec3)>,
    phase: Phase,
    window: VecDeque<(f64, Vec3)>,
    fixation_start: Option<f64>,
}

impl GazePipeline {
    pub fn new(cfg: FilterConfig) -> Self {
        Self {
            cfg,
            last_t: None,
            last_valid: None,
            phase: Phase::Invalid,
            window: VecDeque::new(),
            fixation_start: None,
        }
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    /// Phase of `sample` given the stream so far. Does not mutate state.
    pub fn classify(&self, sample: &GazeSample) -> Result<Phase> {
        if let Some(prev) = self.last_t {
            if !(sample.t > prev) {
                return Err(Error::StreamOrder { prev, t: sample.t });
            }
        }
        let Some(dir) = sample.direction else {
            return Ok(Phase::Invalid);
        };
        match self.last_valid {
            Some((t0, d0)) => {
                let velocity = angular_distance(d0, dir) / (sample.t - t0);
                if velocity > self.cfg.saccade_velocity_deg_s {
                    Ok(Phase::Saccade)
                } else {
                    Ok(Phase::Fixation)
                }
            }
            None => Ok(Phase::Fixation),
        }
    }

    /// Classifies `sample`, updates the fixation window and returns the estimate.
    pub fn step(&mut self, sample: &GazeSample) -> Result<FixationEstimate> {
        let phase = self.classify(sample)?;
        self.last_t = Some(sample.t);

        let mut est = FixationEstimate {
            t: sample.t,
            phase,
            origin: sample.origin,
            point: None,
            window: Vec::new(),
            fixation_start_t: None,
        };

        match (phase, sample.direction) {
            (Phase::Fixation, Some(dir)) => {
                if self.phase != Phase::Fixation {
                    self.window.clear();
                    self.fixation_start = Some(sample.t);
                }
                self.window.push_back((sample.t, dir));
                while let Some(&(t0, _)) = self.window.front() {
                    if sample.t - t0 > self.cfg.fixation_window_s {
                        self.window.pop_front();
                    } else {
                        break;
                    }
                }
                let contiguous = self.window.make_contiguous();
                est.point = Some(smooth(contiguous, self.cfg.smoothing_lambda_per_s)?);
                est.window = contiguous.iter().map(|&(t, _)| t).collect();
                est.fixation_start_t = self.fixation_start;
                self.last_valid = Some((sample.t, dir));
            }
            (Phase::Saccade, Some(dir)) => {
                self.window.clear();
                self.fixation_start = None;
                est.point = Some(dir);
                self.last_valid = Some((sample.t, dir));
            }
            _ => {
                self.window.clear();
                self.fixation_start = None;
            }
        }
        self.phase = phase;
        Ok(est)
    }
}
