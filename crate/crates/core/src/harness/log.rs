//! Sensor log CSV format.
//!
//! ```text
//! # cylinder: AIR37
//! # valve: valve1
//! # piston_units: m
//! # scenario: ident-03
//! t,cmd,p,piston,src_p
//! 0,0.5,101325,0.0375,161325
//! ...
//! ```
//!
//! Pressures are absolute pascals, time in seconds, sampling uniform.
//! Leading `# key: value` lines carry metadata and are optional.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ExogenousTrajectory;

pub const HEADER: [&str; 5] = ["t", "cmd", "p", "piston", "src_p"];

/// Largest tolerated deviation of any sample interval from the mean (s).
pub const DT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PistonUnits {
    /// SI position in meters (or radians for rotary actuators).
    #[default]
    Meters,
    /// Raw sensor counts.
    Sensor,
}

impl PistonUnits {
    fn as_str(&self) -> &'static str {
        match self {
            PistonUnits::Meters => "m",
            PistonUnits::Sensor => "sensor",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub cylinder: Option<String>,
    pub valve: Option<String>,
    pub piston_units: PistonUnits,
    pub scenario: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorLog {
    pub dt: f64,
    pub t: Vec<f64>,
    pub cmd: Vec<f64>,
    /// Chamber pressure (Pa absolute).
    pub p: Vec<f64>,
    pub piston: Vec<f64>,
    /// Supply pressure (Pa absolute).
    pub src_p: Vec<f64>,
    pub meta: LogMeta,
}

impl SensorLog {
    /// Builds a log sampled every `dt` from `t0`.
    pub fn new(
        t0: f64,
        dt: f64,
        cmd: Vec<f64>,
        p: Vec<f64>,
        piston: Vec<f64>,
        src_p: Vec<f64>,
        meta: LogMeta,
    ) -> Result<Self> {
        let t = (0..cmd.len()).map(|k| t0 + k as f64 * dt).collect();
        let log = SensorLog { dt, t, cmd, p, piston, src_p, meta };
        log.validate()?;
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len().saturating_sub(1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 {
            return Err(Error::InvalidInput("log needs at least two samples".into()));
        }
        if [self.cmd.len(), self.p.len(), self.piston.len(), self.src_p.len()].iter().any(|&l| l != n) {
            return Err(Error::InvalidInput("log columns differ in length".into()));
        }
        for (name, col) in [
            ("t", &self.t),
            ("cmd", &self.cmd),
            ("p", &self.p),
            ("piston", &self.piston),
            ("src_p", &self.src_p),
        ] {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite {name} at sample {i}")));
            }
        }
        if let Some(i) = self.p.iter().chain(&self.src_p).position(|&v| v <= 0.0) {
            return Err(Error::InvalidInput(format!("non-positive absolute pressure at value {i}")));
        }
        check_uniform(&self.t, self.dt).map_err(|(i, msg)| Error::InvalidInput(format!("sample {i}: {msg}")))
    }

    /// Exogenous inputs of the log for a rollout.
    pub fn trajectory(&self) -> Result<ExogenousTrajectory> {
        ExogenousTrajectory::from_samples(self.dt, self.cmd.clone(), self.piston.clone(), self.src_p.clone())
    }

    /// Samples `range` as a new log.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SensorLog {
        SensorLog {
            dt: self.dt,
            t: self.t[range.clone()].to_vec(),
            cmd: self.cmd[range.clone()].to_vec(),
            p: self.p[range.clone()].to_vec(),
            piston: self.piston[range.clone()].to_vec(),
            src_p: self.src_p[range].to_vec(),
            meta: self.meta.clone(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.len() * 64);
        if let Some(c) = &self.meta.cylinder {
            let _ = writeln!(out, "# cylinder: {c}");
        }
        if let Some(v) = &self.meta.valve {
            let _ = writeln!(out, "# valve: {v}");
        }
        let _ = writeln!(out, "# piston_units: {}", self.meta.piston_units.as_str());
        if let Some(s) = &self.meta.scenario {
            let _ = writeln!(out, "# scenario: {s}");
        }
        out.push_str(&HEADER.join(","));
        out.push('\n');
        for k in 0..self.len() {
            // `{}` prints the shortest representation that parses back exactly.
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.t[k], self.cmd[k], self.p[k], self.piston[k], self.src_p[k]
            );
        }
        out
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse { path: origin.to_string(), line, message };
        let mut meta = LogMeta::default();
        let mut header_line = 0u64;
        for (i, line) in text.lines().enumerate() {
            let Some(rest) = line.strip_prefix('#') else {
                header_line = i as u64 + 1;
                break;
            };
            if let Some((key, value)) = rest.split_once(':') {
                let value = value.trim().to_string();
                match key.trim() {
                    "cylinder" => meta.cylinder = Some(value),
                    "valve" => meta.valve = Some(value),
                    "scenario" => meta.scenario = Some(value),
                    "piston_units" => {
                        meta.piston_units = match value.as_str() {
                            "m" => PistonUnits::Meters,
                            "sensor" => PistonUnits::Sensor,
                            other => return Err(parse_err(i as u64 + 1, format!("unknown piston_units {other:?}"))),
                        }
                    }
                    _ => {}
                }
            }
        }
        if header_line == 0 {
            return Err(parse_err(1, "missing header".into()));
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| parse_err(header_line, e.to_string()))?.clone();
        let mut idx = [0usize; 5];
        for (slot, name) in idx.iter_mut().zip(HEADER) {
            *slot = headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| parse_err(header_line, format!("missing column {name:?}")))?;
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = line.saturating_sub(header_line);
            for (c, &i) in idx.iter().enumerate() {
                let field = rec
                    .get(i)
                    .ok_or_else(|| parse_err(line, format!("row {row}: missing field {}", HEADER[c])))?;
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("row {row}: cannot parse {} = {field:?}", HEADER[c])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("row {row}: non-finite {} = {field}", HEADER[c])));
                }
                cols[c].push(v);
            }
        }
        let [t, cmd, p, piston, src_p] = cols;
        if t.len() < 2 {
            return Err(parse_err(header_line, "log needs at least two rows".into()));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        check_uniform(&t, dt).map_err(|(i, msg)| parse_err(header_line + 1 + i as u64, format!("row {}: {msg}", i + 1)))?;
        if let Some(i) = p.iter().position(|&v| v <= 0.0) {
            return Err(parse_err(header_line + 1 + i as u64, format!("row {}: non-positive pressure", i + 1)));
        }
        if let Some(i) = src_p.iter().position(|&v| v <= 0.0) {
            return Err(parse_err(header_line + 1 + i as u64, format!("row {}: non-positive supply", i + 1)));
        }
        Ok(SensorLog { dt, t, cmd, p, piston, src_p, meta })
    }
}

/// Returns the index of the first interval that deviates from `dt`.
fn check_uniform(t: &[f64], dt: f64) -> std::result::Result<(), (usize, String)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err((0, format!("time must increase, got dt = {dt}")));
    }
    for (i, w) in t.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - dt).abs() > DT_TOLERANCE {
            return Err((i + 1, format!("nonuniform sampling: interval {d:e} s vs mean {dt:e} s")));
        }
    }
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<SensorLog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    SensorLog::from_csv_str(&text, &path.display().to_string())
}

pub fn write_log(log: &SensorLog, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, log.to_csv_string())?;
    Ok(())
}
