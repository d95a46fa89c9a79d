//! Line-delimited JSON file formats: gaze traces and interaction event logs.
//!
//! A trace holds one sample per line:
//!
//! ```text
//! {"t":0.0,"ox":0.0,"oy":1.6,"oz":0.0,"dx":0.0,"dy":0.0,"dz":-1.0,"valid":true,
//!  "trigger":false,"grab":false,"trackpad_dy":0.0,"lens_toggle":false}
//! ```
//!
//! Optional head orientation (`hqw,hqx,hqy,hqz`) and controller ray
//! (`cox,coy,coz,cdx,cdy,cdz`) fields may follow.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::InteractionEvent;
use crate::error::{Error, Result};
use crate::gaze::{ButtonState, GazeSample};
use crate::geometry::{Orientation, Ray, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub ox: f64,
    pub oy: f64,
    pub oz: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub valid: bool,
    #[serde(default)]
    pub trigger: bool,
    #[serde(default)]
    pub grab: bool,
    #[serde(default)]
    pub trackpad_dy: f64,
    #[serde(default)]
    pub lens_toggle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hqw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hqx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hqy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hqz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cox: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdz: Option<f64>,
}

impl From<&GazeSample> for TraceRecord {
    fn from(s: &GazeSample) -> Self {
        let d = s.direction.unwrap_or(Vec3::ZERO);
        let c = s.controller;
        TraceRecord {
            t: s.t,
            ox: s.origin.x,
            oy: s.origin.y,
            oz: s.origin.z,
            dx: d.x,
            dy: d.y,
            dz: d.z,
            valid: s.direction.is_some(),
            trigger: s.buttons.trigger_pressed,
            grab: s.buttons.grab_pressed,
            trackpad_dy: s.buttons.trackpad_dy,
            lens_toggle: s.buttons.lens_toggle_pressed,
            hqw: s.head.map(|q| q.w),
            hqx: s.head.map(|q| q.x),
            hqy: s.head.map(|q| q.y),
            hqz: s.head.map(|q| q.z),
            cox: c.map(|r| r.origin.x),
            coy: c.map(|r| r.origin.y),
            coz: c.map(|r| r.origin.z),
            cdx: c.map(|r| r.direction.x),
            cdy: c.map(|r| r.direction.y),
            cdz: c.map(|r| r.direction.z),
        }
    }
}

impl TraceRecord {
    pub fn to_sample(&self) -> Result<GazeSample> {
        let bad = |m: &str| Error::Geometry(m.to_string());
        let direction = if self.valid {
            Some(
                unit_vec(Vec3::new(self.dx, self.dy, self.dz))
                    .ok_or_else(|| bad("valid sample with zero direction"))?,
            )
        } else {
            None
        };
        let head = match (self.hqw, self.hqx, self.hqy, self.hqz) {
            (Some(w), Some(x), Some(y), Some(z)) => {
                let raw = Orientation { w, x, y, z };
                Some(if (raw.norm() - 1.0).abs() <= KEEP { raw } else { Orientation::new(w, x, y, z)? })
            }
            (None, None, None, None) => None,
            _ => return Err(bad("incomplete head orientation fields")),
        };
        let controller = match (self.cox, self.coy, self.coz, self.cdx, self.cdy, self.cdz) {
            (Some(ox), Some(oy), Some(oz), Some(dx), Some(dy), Some(dz)) => {
                let direction = unit_vec(Vec3::new(dx, dy, dz)).ok_or_else(|| bad("zero controller direction"))?;
                Some(Ray { origin: Vec3::new(ox, oy, oz), direction })
            }
            (None, None, None, None, None, None) => None,
            _ => return Err(bad("incomplete controller ray fields")),
        };
        if !self.t.is_finite() {
            return Err(bad("non-finite timestamp"));
        }
        Ok(GazeSample {
            t: self.t,
            origin: Vec3::new(self.ox, self.oy, self.oz),
            direction,
            buttons: ButtonState {
                trigger_pressed: self.trigger,
                grab_pressed: self.grab,
                trackpad_dy: self.trackpad_dy,
                lens_toggle_pressed: self.lens_toggle,
            },
            head,
            controller,
        })
    }
}

/// Components already unit to this precision are kept bit-for-bit, so a
/// written trace reads back identical.
const KEEP: f64 = 1e-12;

fn unit_vec(v: Vec3) -> Option<Vec3> {
    if (v.norm() - 1.0).abs() <= KEEP {
        Some(v)
    } else {
        v.normalized()
    }
}

fn read_lines<T>(reader: impl BufRead, mut parse: impl FnMut(&str) -> Result<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

/// Parses a trace; errors name the 1-based line.
pub fn read_trace(reader: impl BufRead) -> Result<Vec<GazeSample>> {
    read_lines(reader, |line| serde_json::from_str::<TraceRecord>(line)?.to_sample())
}

pub fn write_trace(mut w: impl Write, samples: &[GazeSample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, &TraceRecord::from(s))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events(reader: impl BufRead) -> Result<Vec<InteractionEvent>> {
    read_lines(reader, |line| Ok(serde_json::from_str(line)?))
}

pub fn write_events(mut w: impl Write, events: &[InteractionEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Serialized event log, as written by [`write_events`].
pub fn events_to_string(events: &[InteractionEvent]) -> String {
    let mut buf = Vec::new();
    write_events(&mut buf, events).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_record_parses() {
        let line = r#"{"t":0.5,"ox":0,"oy":1.6,"oz":0,"dx":0,"dy":0,"dz":-2,"valid":true}"#;
        let s = read_trace(line.as_bytes()).unwrap();
        assert_eq!(s[0].direction, Some(Vec3::new(0.0, 0.0, -1.0)));
        assert!(s[0].head.is_none() && s[0].controller.is_none());
    }

    #[test]
    fn invalid_sample_has_no_ray() {
        let line = r#"{"t":0.5,"ox":0,"oy":0,"oz":0,"dx":0,"dy":0,"dz":0,"valid":false}"#;
        assert!(read_trace(line.as_bytes()).unwrap()[0].ray().is_none());
    }

    #[test]
    fn malformed_line_reported() {
        let text = "{\"t\":0,\"ox\":0,\"oy\":0,\"oz\":0,\"dx\":0,\"dy\":0,\"dz\":-1,\"valid\":true}\n\n{oops}\n";
        match read_trace(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn record_roundtrip_with_optionals() {
        let s = GazeSample {
            t: 1.25,
            origin: Vec3::new(0.0, 1.6, 0.0),
            direction: Some(Vec3::new(0.0, 0.0, -1.0)),
            buttons: ButtonState {
                trigger_pressed: true,
                grab_pressed: false,
                trackpad_dy: 0.25,
                lens_toggle_pressed: true,
            },
            head: Some(Orientation::from_yaw(0.3)),
            controller: Some(Ray::new(Vec3::new(0.1, 1.2, -0.2), Vec3::new(0.0, 0.0, -1.0)).unwrap()),
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, std::slice::from_ref(&s)).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back[0], s);
    }
}
