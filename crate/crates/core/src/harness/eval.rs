//! Short-horizon prediction scoring.
//!
//! The log is cut into windows; each window is predicted from its first
//! measured pressure using the logged command, piston position and supply
//! pressure, and scored by the RMSE against the measured pressure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuator::{deadzone, GompertzCurve, ValveModel};
use crate::error::{Error, Result};
use crate::harness::log::SensorLog;
use crate::model::PneumaticModel;
use crate::sim::{rollout, SimSettings};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub window_s: f64,
    /// Fraction of a window shared with the next one, in `[0, 1)`.
    pub overlap: f64,
    /// Pressure span used as the percent denominator instead of the
    /// measured max − min (Pa).
    pub fixed_range_pa: Option<f64>,
    pub sim: SimSettings,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { window_s: 2.0, overlap: 0.0, fixed_range_pa: None, sim: SimSettings::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean of the per-window RMSE (Pa).
    pub rmse_pa: f64,
    pub percent_of_range: f64,
    /// Windows scored.
    pub windows: usize,
    pub window_s: f64,
    pub range_pa: f64,
    pub window_rmse_pa: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<WindowFailure>,
}

/// Window start indices and the window length in samples (inclusive of
/// both ends, so a window spans exactly `window_s`).
fn windows(n: usize, dt: f64, config: &EvalConfig) -> Result<(Vec<usize>, usize)> {
    if !(config.window_s > 0.0 && config.window_s.is_finite()) {
        return Err(Error::InvalidInput(format!("window length must be positive, got {}", config.window_s)));
    }
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::InvalidInput(format!("overlap must lie in [0, 1), got {}", config.overlap)));
    }
    let steps = (config.window_s / dt).round() as usize;
    if steps == 0 || steps >= n {
        return Err(Error::Precondition(format!(
            "log of {:.6} s is not longer than one {} s window",
            dt * n.saturating_sub(1) as f64,
            config.window_s
        )));
    }
    let stride = ((steps as f64 * (1.0 - config.overlap)).round() as usize).max(1);
    let starts = (0..).map(|i| i * stride).take_while(|s| s + steps < n).collect();
    Ok((starts, steps + 1))
}

/// Scores `model` on `log` over windows of `config.window_s`.
pub fn evaluate_predictions(log: &SensorLog, model: &PneumaticModel, config: &EvalConfig) -> Result<EvalReport> {
    evaluate_logs(std::slice::from_ref(log), model, config)
}

/// Scores `model` on several logs at once. Windows from all logs are
/// pooled, and the range spans the pressures of every log.
pub fn evaluate_logs(logs: &[SensorLog], model: &PneumaticModel, config: &EvalConfig) -> Result<EvalReport> {
    if logs.is_empty() {
        return Err(Error::InvalidInput("no logs to evaluate".into()));
    }
    model.validate()?;
    let mut jobs = Vec::new();
    let mut trajectories = Vec::with_capacity(logs.len());
    for (li, log) in logs.iter().enumerate() {
        log.validate()?;
        let (starts, len) = windows(log.len(), log.dt, config)?;
        trajectories.push(log.trajectory()?);
        jobs.extend(starts.into_iter().map(|s| (li, s, len)));
    }
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(li, s, len)| {
            let w = trajectories[li].slice(s..s + len);
            let measured = &logs[li].p[s..s + len];
            let pred = rollout(measured[0], &w, model, &config.sim)?;
            let ss: f64 = pred.pressure.iter().zip(measured).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((ss / len as f64).sqrt())
        })
        .collect();

    let mut window_rmse_pa = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => window_rmse_pa.push(v),
            Err(e) if e.is_numeric() => {
                log::warn!("window {i} failed: {e}");
                failures.push(WindowFailure { window: i, error: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    if window_rmse_pa.is_empty() {
        return Err(Error::Integration {
            time: 0.0,
            sample: None,
            reason: format!("all {} windows failed", failures.len()),
        });
    }
    let range_pa = match config.fixed_range_pa {
        Some(r) => r,
        None => {
            let (lo, hi) = logs.iter().flat_map(|l| &l.p).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
            hi - lo
        }
    };
    if !(range_pa > 0.0 && range_pa.is_finite()) {
        return Err(Error::InvalidInput(format!("pressure range must be positive, got {range_pa}")));
    }
    let rmse_pa = window_rmse_pa.iter().sum::<f64>() / window_rmse_pa.len() as f64;
    Ok(EvalReport {
        rmse_pa,
        percent_of_range: 100.0 * rmse_pa / range_pa,
        windows: window_rmse_pa.len(),
        window_s: config.window_s,
        range_pa,
        window_rmse_pa,
        failures,
    })
}

/// RMS difference of the inlet and exhaust area curves of `id` from
/// `truth`, each relative to the largest true area of that port. Commands
/// within `exclude` of the true deadzone center are skipped.
pub fn area_rms_error(truth: &ValveModel, id: &ValveModel, exclude: f64) -> (f64, f64) {
    let dz = deadzone(truth, 0.05);
    let n = 1000;
    let grid: Vec<f64> = (0..=n)
        .map(|i| truth.cmd_min + (truth.cmd_max - truth.cmd_min) * i as f64 / n as f64)
        .filter(|c| (c - dz.center).abs() > exclude)
        .collect();
    let err = |t: &GompertzCurve, i: &GompertzCurve| {
        let max = grid.iter().map(|&c| t.area(c)).fold(0.0, f64::max);
        let ss: f64 = grid.iter().map(|&c| (t.area(c) - i.area(c)).powi(2)).sum();
        (ss / grid.len() as f64).sqrt() / max
    };
    (err(&truth.inlet, &id.inlet), err(&truth.exhaust, &id.exhaust))
}
