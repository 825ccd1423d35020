//! Seeded synthetic sensor logs from a known model.
//!
//! The identification campaign locks the piston at a set of readings and
//! steps the command through shuffled levels. The validation campaign
//! draws a fresh command every few milliseconds while the piston sweeps
//! between random positions.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::ATMOSPHERIC_PA;
use crate::harness::log::{LogMeta, PistonUnits, SensorLog};
use crate::model::PneumaticModel;
use crate::sim::{rollout, ExogenousTrajectory, SimSettings, SubstepSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Excitation {
    /// Number of locked piston positions.
    pub n_volumes: usize,
    pub cmd_levels: Vec<f64>,
    /// Passes through the shuffled levels per position.
    pub repeats: usize,
    pub step_hold_s: f64,
    pub sample_rate_hz: f64,
    /// Locked positions as fractions of the stroke.
    pub reading_span: (f64, f64),
    pub validation_logs: usize,
    /// Length of each validation log (s).
    pub window_s: f64,
    pub validation_rate_hz: f64,
    pub validation_cmd_period_s: f64,
    pub validation_cmd_range: (f64, f64),
    /// Piston travel per sweep, as fractions of the stroke.
    pub validation_piston_span: (f64, f64),
    /// Duration range of one piston sweep (s).
    pub validation_move_s: (f64, f64),
    /// Stroke used when the truth model names no cylinder.
    pub stroke: Option<f64>,
}

impl Default for Excitation {
    fn default() -> Self {
        Excitation {
            n_volumes: 5,
            cmd_levels: (0..=20).map(|i| -5.0 + 0.5 * i as f64).collect(),
            repeats: 2,
            step_hold_s: 0.05,
            sample_rate_hz: 32_000.0,
            reading_span: (0.25, 1.0),
            validation_logs: 2,
            window_s: 10.0,
            validation_rate_hz: 1_000.0,
            validation_cmd_period_s: 0.005,
            validation_cmd_range: (-5.0, 5.0),
            validation_piston_span: (0.1, 1.0),
            validation_move_s: (0.1, 0.4),
            stroke: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Noise {
    /// Chamber pressure sensor noise (Pa).
    pub p_sigma: f64,
    /// Supply pressure sensor noise (Pa).
    pub src_sigma: f64,
    /// Amplitude of the slow supply fluctuation (Pa).
    pub src_drift: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Noise { p_sigma: 300.0, src_sigma: 300.0, src_drift: 500.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub excitation: Excitation,
    pub noise: Noise,
    /// Nominal supply pressure (Pa absolute).
    pub supply: f64,
    pub ambient: f64,
    pub identification: bool,
    pub validation: bool,
    pub substep: SubstepSettings,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            excitation: Excitation::default(),
            noise: Noise::default(),
            supply: ATMOSPHERIC_PA + 60_000.0,
            ambient: ATMOSPHERIC_PA,
            identification: true,
            validation: true,
            substep: SubstepSettings::default().refined(4.0),
        }
    }
}

enum Scenario {
    Identification { reading: f64 },
    Validation,
}

/// Simulates `truth` under the configured campaigns and returns labeled
/// logs, identification logs first.
pub fn generate_synthetic(truth: &PneumaticModel, config: &SynthConfig, seed: u64) -> Result<Vec<SensorLog>> {
    truth.validate()?;
    let ex = &config.excitation;
    let stroke = truth
        .cylinder
        .as_ref()
        .map(|c| c.stroke)
        .or(ex.stroke)
        .ok_or_else(|| Error::InvalidInput("stroke unknown: truth names no cylinder and excitation.stroke is unset".into()))?;
    let mut scenarios = Vec::new();
    if config.identification {
        if ex.cmd_levels.is_empty() || ex.n_volumes == 0 || ex.repeats == 0 {
            return Err(Error::InvalidInput("identification campaign needs volumes, levels and repeats".into()));
        }
        let (lo, hi) = ex.reading_span;
        for i in 0..ex.n_volumes {
            let f = if ex.n_volumes == 1 { hi } else { lo + (hi - lo) * i as f64 / (ex.n_volumes - 1) as f64 };
            scenarios.push((format!("ident-{i:02}"), Scenario::Identification { reading: f * stroke }));
        }
    }
    if config.validation {
        for i in 0..ex.validation_logs {
            scenarios.push((format!("valid-{i:02}"), Scenario::Validation));
        }
    }
    scenarios
        .par_iter()
        .enumerate()
        .map(|(stream, (name, sc))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            simulate_scenario(truth, config, stroke, name, sc, &mut rng)
        })
        .collect()
}

fn simulate_scenario(
    truth: &PneumaticModel,
    config: &SynthConfig,
    stroke: f64,
    name: &str,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<SensorLog> {
    let ex = &config.excitation;
    let (dt, cmd, piston) = match scenario {
        Scenario::Identification { reading } => {
            let dt = 1.0 / ex.sample_rate_hz;
            let hold = (ex.step_hold_s / dt).round().max(1.0) as usize;
            let mut cmd = Vec::with_capacity(hold * ex.cmd_levels.len() * ex.repeats);
            for _ in 0..ex.repeats {
                let mut levels = ex.cmd_levels.clone();
                levels.shuffle(rng);
                for l in levels {
                    cmd.extend(std::iter::repeat_n(l, hold));
                }
            }
            let n = cmd.len();
            (dt, cmd, vec![*reading; n])
        }
        Scenario::Validation => {
            let dt = 1.0 / ex.validation_rate_hz;
            let n = (ex.window_s / dt).round() as usize + 1;
            let period = (ex.validation_cmd_period_s / dt).round().max(1.0) as usize;
            let (clo, chi) = ex.validation_cmd_range;
            let mut cmd = Vec::with_capacity(n);
            while cmd.len() < n {
                let c = if chi > clo { rng.random_range(clo..chi) } else { clo };
                cmd.extend(std::iter::repeat_n(c, period));
            }
            cmd.truncate(n);
            (dt, cmd, piston_sweeps(n, dt, stroke, ex, rng))
        }
    };
    let n = cmd.len();
    let supply = supply_profile(n, dt, config, rng);
    let traj = ExogenousTrajectory::from_samples(dt, cmd, piston, supply)?;
    let settings = SimSettings { ambient: config.ambient, substep: config.substep };
    let p0 = match scenario {
        Scenario::Identification { .. } => config.ambient,
        Scenario::Validation => 0.5 * (config.ambient + config.supply),
    };
    let clean = rollout(p0, &traj, truth, &settings).map_err(|e| match e {
        Error::Integration { time, sample, reason } => {
            Error::Integration { time, sample, reason: format!("scenario {name}: {reason}") }
        }
        other => other,
    })?;

    let p_noise = normal(config.noise.p_sigma)?;
    let s_noise = normal(config.noise.src_sigma)?;
    let p: Vec<f64> = clean.pressure.iter().map(|&p| (p + sample(&p_noise, rng)).max(1.0)).collect();
    let src_p: Vec<f64> = traj.supply.iter().map(|&s| (s + sample(&s_noise, rng)).max(1.0)).collect();
    let meta = LogMeta {
        cylinder: truth.cylinder.as_ref().map(|c| c.name.clone()),
        valve: Some(truth.valve.name.clone()),
        piston_units: PistonUnits::Meters,
        scenario: Some(name.to_string()),
    };
    SensorLog::new(0.0, dt, traj.cmd, p, traj.piston, src_p, meta)
}

fn normal(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sigma)
        .map(Some)
        .map_err(|e| Error::InvalidInput(format!("noise sigma {sigma}: {e}")))
}

fn sample(d: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> f64 {
    d.as_ref().map_or(0.0, |d| d.sample(rng))
}

/// Nominal supply plus two slow sinusoids with random periods and phases.
fn supply_profile(n: usize, dt: f64, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let amp = config.noise.src_drift;
    let waves: Vec<(f64, f64)> =
        (0..2).map(|_| (rng.random_range(0.3..1.0), rng.random_range(0.0..2.0 * PI))).collect();
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let drift: f64 = waves.iter().map(|(f, ph)| (2.0 * PI * f * t + ph).sin()).sum::<f64>();
            config.supply + 0.5 * amp * drift
        })
        .collect()
}

/// Raised-cosine moves between random positions, back to back.
fn piston_sweeps(n: usize, dt: f64, stroke: f64, ex: &Excitation, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = ex.validation_piston_span;
    let (mlo, mhi) = ex.validation_move_s;
    let mut out = Vec::with_capacity(n);
    let mut from = rng.random_range(lo..=hi) * stroke;
    while out.len() < n {
        let to = rng.random_range(lo..=hi) * stroke;
        let dur = if mhi > mlo { rng.random_range(mlo..mhi) } else { mlo };
        let steps = (dur / dt).round().max(2.0) as usize;
        for k in 0..steps {
            let u = k as f64 / steps as f64;
            out.push(from + (to - from) * 0.5 * (1.0 - (PI * u).cos()));
        }
        from = to;
    }
    out.truncate(n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::{air37, valve1};
    use crate::gas::GasConstants;

    fn truth() -> PneumaticModel {
        PneumaticModel::from_parts(GasConstants::default(), valve1(), air37())
    }

    fn small() -> SynthConfig {
        SynthConfig {
            excitation: Excitation {
                n_volumes: 2,
                repeats: 1,
                step_hold_s: 0.01,
                validation_logs: 1,
                window_s: 1.0,
                ..Excitation::default()
            },
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_logs() {
        let a = generate_synthetic(&truth(), &small(), 7).unwrap();
        let b = generate_synthetic(&truth(), &small(), 7).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&truth(), &small(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_matches_raw_simulation() {
        let mut cfg = small();
        cfg.noise = Noise { p_sigma: 0.0, src_sigma: 0.0, src_drift: 0.0 };
        let logs = generate_synthetic(&truth(), &cfg, 3).unwrap();
        let settings = SimSettings { ambient: cfg.ambient, substep: cfg.substep };
        for log in &logs {
            let traj = log.trajectory().unwrap();
            let sim = rollout(log.p[0], &traj, &truth(), &settings).unwrap();
            assert_eq!(sim.pressure, log.p);
        }
    }

    #[test]
    fn levels_are_visited_uniformly() {
        let mut cfg = small();
        cfg.validation = false;
        cfg.excitation.n_volumes = 3;
        cfg.excitation.repeats = 4;
        let logs = generate_synthetic(&truth(), &cfg, 11).unwrap();
        let levels = &cfg.excitation.cmd_levels;
        let mut counts = vec![0usize; levels.len()];
        for log in &logs {
            for c in &log.cmd {
                counts[levels.iter().position(|l| l == c).unwrap()] += 1;
            }
        }
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        for c in counts {
            assert!((c as f64 - mean).abs() <= 0.02 * mean);
        }
    }

    #[test]
    fn validation_piston_stays_in_span() {
        let mut cfg = small();
        cfg.identification = false;
        let logs = generate_synthetic(&truth(), &cfg, 5).unwrap();
        let stroke = air37().stroke;
        assert_eq!(logs.len(), 1);
        assert!(logs[0].piston.iter().all(|&s| s >= 0.1 * stroke - 1e-12 && s <= stroke + 1e-12));
        assert_eq!(logs[0].meta.scenario.as_deref(), Some("valid-00"));
    }
}
