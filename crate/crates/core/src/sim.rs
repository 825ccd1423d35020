//! Fixed-step RK4 integration of the chamber pressure ODE with automatic
//! substepping, and rollouts over sampled input trajectories.
//!
//! Between two samples, command and supply pressure are interpolated
//! linearly and the volume follows the cubic Hermite curve through the two
//! (volume, volume rate) pairs, so the volume rate seen by the ODE is the
//! exact derivative of the volume it sees.

use serde::{Deserialize, Serialize};

use crate::actuator::{CylinderModel, ValveModel, VolumeMap, VolumeSource};
use crate::error::{Error, Result};
use crate::gas::{self, GasConstants, ATMOSPHERIC_PA};
use crate::model::PneumaticModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubstepSettings {
    /// Largest predicted |Δp| per substep as a fraction of p.
    pub max_rel_dp: f64,
    /// Absolute substep cap (s).
    pub max_substep: f64,
    /// Substep cap at the reference volume; scales linearly with volume.
    pub small_volume_cap: f64,
    /// Reference volume for `small_volume_cap` (m³).
    pub small_volume_ref: f64,
    pub min_substep: f64,
}

impl Default for SubstepSettings {
    fn default() -> Self {
        SubstepSettings {
            max_rel_dp: 0.005,
            max_substep: 1e-4,
            small_volume_cap: 1e-6,
            small_volume_ref: 1e-7,
            min_substep: 1e-10,
        }
    }
}

impl SubstepSettings {
    /// Divides every step limit by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        SubstepSettings {
            max_rel_dp: self.max_rel_dp / factor,
            max_substep: self.max_substep / factor,
            small_volume_cap: self.small_volume_cap / factor,
            small_volume_ref: self.small_volume_ref,
            min_substep: self.min_substep / factor,
        }
    }

    fn cap_for_volume(&self, v: f64) -> f64 {
        let scaled = self.small_volume_cap * (v / self.small_volume_ref).max(1.0);
        scaled.min(self.max_substep)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    /// Exhaust and leak sink pressure (Pa absolute).
    pub ambient: f64,
    pub substep: SubstepSettings,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { ambient: ATMOSPHERIC_PA, substep: SubstepSettings::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChamberState {
    /// Pa absolute.
    pub p: f64,
    pub t: f64,
}

/// Inputs at one sample instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChamberInputs {
    pub cmd: f64,
    pub v: f64,
    pub v_dot: f64,
    /// Supply pressure (Pa absolute).
    pub supply: f64,
}

/// Right-hand side of the pressure ODE for one chamber.
#[derive(Clone, Debug)]
pub struct ChamberDynamics<'a> {
    pub gas: &'a GasConstants,
    pub valve: &'a ValveModel,
    pub leak_area: f64,
    /// Valve command seen by this chamber is `cmd_sign · cmd`.
    pub cmd_sign: f64,
    pub volume_floor: f64,
}

impl<'a> ChamberDynamics<'a> {
    pub fn new(gas: &'a GasConstants, valve: &'a ValveModel, leak_area: f64, volume_floor: f64) -> Self {
        ChamberDynamics { gas, valve, leak_area, cmd_sign: 1.0, volume_floor }
    }

    #[inline]
    fn rate(&self, p: f64, cmd: f64, v: f64, v_dot: f64, supply: f64, ambient: f64) -> f64 {
        let (a_in, a_ex) = self.valve.areas_unchecked(self.cmd_sign * cmd);
        let m = gas::mass_flow_unchecked(a_in, a_ex + self.leak_area, supply, p, ambient, self.gas);
        gas::pressure_rate_unchecked(p, v, v_dot, m, self.gas)
    }
}

/// Counters accumulated while stepping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub substeps: u64,
    pub rejected: u64,
}

struct Interval<'a> {
    from: &'a ChamberInputs,
    to: &'a ChamberInputs,
    dt: f64,
}

impl Interval<'_> {
    /// (cmd, v, v_dot, supply) at offset `s` into the interval.
    #[inline]
    fn at(&self, s: f64, floor: f64) -> (f64, f64, f64, f64) {
        let tau = (s / self.dt).clamp(0.0, 1.0);
        let (a, b) = (self.from, self.to);
        let cmd = a.cmd + (b.cmd - a.cmd) * tau;
        let supply = a.supply + (b.supply - a.supply) * tau;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let h = self.dt;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * a.v
            + (t3 - 2.0 * t2 + tau) * h * a.v_dot
            + (-2.0 * t3 + 3.0 * t2) * b.v
            + (t3 - t2) * h * b.v_dot;
        let v_dot = ((6.0 * t2 - 6.0 * tau) * (a.v - b.v)) / h
            + (3.0 * t2 - 4.0 * tau + 1.0) * a.v_dot
            + (3.0 * t2 - 2.0 * tau) * b.v_dot;
        if v < floor {
            (cmd, floor, 0.0, supply)
        } else {
            (cmd, v, v_dot, supply)
        }
    }
}

/// Advances the chamber pressure across one sample interval of length `dt`,
/// from inputs `from` at `state.t` to inputs `to` at `state.t + dt`.
pub fn step(
    state: ChamberState,
    from: &ChamberInputs,
    to: &ChamberInputs,
    dt: f64,
    dynamics: &ChamberDynamics<'_>,
    settings: &SimSettings,
) -> Result<(ChamberState, StepStats)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(from.v > 0.0 && to.v > 0.0) {
        return Err(Error::Precondition(format!("volumes must be positive, got {} and {}", from.v, to.v)));
    }
    if !(state.p > 0.0 && state.p.is_finite()) {
        return Err(Error::Precondition(format!("pressure must be positive and finite, got {}", state.p)));
    }
    let interval = Interval { from, to, dt };
    let sub = &settings.substep;
    let ambient = settings.ambient;
    let floor = dynamics.volume_floor;
    let rhs = |s: f64, p: f64| {
        let (cmd, v, v_dot, supply) = interval.at(s, floor);
        dynamics.rate(p, cmd, v, v_dot, supply, ambient)
    };

    let mut stats = StepStats::default();
    let mut s = 0.0;
    let mut p = state.p;
    while s < dt {
        let k1 = rhs(s, p);
        let (_, v, _, _) = interval.at(s, floor);
        let mut h = (dt - s).min(sub.cap_for_volume(v));
        if k1 != 0.0 {
            h = h.min(sub.max_rel_dp * p / k1.abs());
        }
        h = h.max(sub.min_substep).min(dt - s);
        loop {
            let k2 = rhs(s + 0.5 * h, p + 0.5 * h * k1);
            let k3 = rhs(s + 0.5 * h, p + 0.5 * h * k2);
            let k4 = rhs(s + h, p + h * k3);
            let next = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if next.is_finite() && next > 0.0 {
                p = next;
                break;
            }
            stats.rejected += 1;
            if h <= sub.min_substep {
                return Err(Error::Integration {
                    time: state.t + s,
                    sample: None,
                    reason: format!("pressure became {next} with substep {h:.3e} s"),
                });
            }
            h = (0.5 * h).max(sub.min_substep);
        }
        stats.substeps += 1;
        // Land exactly on the interval end.
        s = if dt - (s + h) <= 1e-12 * dt { dt } else { s + h };
    }
    Ok((ChamberState { p, t: state.t + dt }, stats))
}

/// Uniformly sampled exogenous inputs of a rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct ExogenousTrajectory {
    pub dt: f64,
    pub cmd: Vec<f64>,
    /// Position readings in the volume map's units.
    pub piston: Vec<f64>,
    pub piston_rate: Vec<f64>,
    /// Supply pressure (Pa absolute).
    pub supply: Vec<f64>,
}

impl ExogenousTrajectory {
    /// Builds a trajectory, estimating the piston rate by central
    /// differences (one-sided at the ends).
    pub fn from_samples(dt: f64, cmd: Vec<f64>, piston: Vec<f64>, supply: Vec<f64>) -> Result<Self> {
        let piston_rate = finite_difference(&piston, dt);
        let traj = ExogenousTrajectory { dt, cmd, piston, piston_rate, supply };
        traj.validate()?;
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.cmd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cmd.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        let n = self.cmd.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty trajectory".into()));
        }
        if self.piston.len() != n || self.piston_rate.len() != n || self.supply.len() != n {
            return Err(Error::InvalidInput("trajectory series differ in length".into()));
        }
        let all = self.cmd.iter().chain(&self.piston).chain(&self.piston_rate).chain(&self.supply);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("trajectory contains non-finite values".into()));
        }
        if self.supply.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidInput("supply pressure must be positive".into()));
        }
        Ok(())
    }

    /// Samples `range` as a new trajectory.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ExogenousTrajectory {
        ExogenousTrajectory {
            dt: self.dt,
            cmd: self.cmd[range.clone()].to_vec(),
            piston: self.piston[range.clone()].to_vec(),
            piston_rate: self.piston_rate[range.clone()].to_vec(),
            supply: self.supply[range].to_vec(),
        }
    }
}

/// Central differences with one-sided ends.
pub fn finite_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (x[1] - x[0]) / dt
                } else if i == n - 1 {
                    (x[n - 1] - x[n - 2]) / dt
                } else {
                    (x[i + 1] - x[i - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutResult {
    pub pressure: Vec<f64>,
    /// Samples whose volume was clamped to the floor.
    pub clamped_samples: usize,
    pub stats: StepStats,
}

fn rollout_chamber(
    initial_p: f64,
    traj: &ExogenousTrajectory,
    dynamics: &ChamberDynamics<'_>,
    volume: &VolumeMap,
    settings: &SimSettings,
) -> Result<RolloutResult> {
    traj.validate()?;
    if !(initial_p > 0.0 && initial_p.is_finite()) {
        return Err(Error::Precondition(format!("initial pressure must be positive, got {initial_p}")));
    }
    let mut clamped = 0;
    let inputs: Vec<ChamberInputs> = (0..traj.len())
        .map(|k| {
            let vs = volume.volume(traj.piston[k], traj.piston_rate[k]);
            clamped += vs.clamped as usize;
            ChamberInputs { cmd: traj.cmd[k], v: vs.v, v_dot: vs.v_dot, supply: traj.supply[k] }
        })
        .collect();
    let mut pressure = Vec::with_capacity(traj.len());
    let mut state = ChamberState { p: initial_p, t: 0.0 };
    let mut stats = StepStats::default();
    pressure.push(initial_p);
    for k in 1..inputs.len() {
        let (next, st) =
            step(state, &inputs[k - 1], &inputs[k], traj.dt, dynamics, settings).map_err(|e| e.with_sample(k))?;
        stats.substeps += st.substeps;
        stats.rejected += st.rejected;
        state = next;
        pressure.push(state.p);
    }
    Ok(RolloutResult { pressure, clamped_samples: clamped, stats })
}

/// Predicts the chamber pressure at every sample of `traj`, starting from
/// the measured pressure `initial_p` at the first sample.
pub fn rollout(
    initial_p: f64,
    traj: &ExogenousTrajectory,
    model: &PneumaticModel,
    settings: &SimSettings,
) -> Result<RolloutResult> {
    let floor = model.volume_map.floor();
    let dynamics = ChamberDynamics::new(&model.gas, &model.valve, model.leak_area, floor);
    rollout_chamber(initial_p, traj, &dynamics, &model.volume_map, settings)
}

/// Which chamber a positive command fills.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortConvention {
    #[default]
    PositiveFillsA,
    PositiveFillsB,
}

/// Double-acting cylinder on one 5/3 valve. Chamber A grows with the
/// position reading, chamber B shrinks; the valve ports of B are mirrored in
/// command so that one command fills one chamber while venting the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualChamberModel {
    pub gas: GasConstants,
    pub valve: ValveModel,
    pub chamber_a: VolumeMap,
    pub chamber_b: VolumeMap,
    pub leak_a: f64,
    pub leak_b: f64,
    #[serde(default)]
    pub convention: PortConvention,
}

impl DualChamberModel {
    /// Both chambers share the cylinder's dead volume and leak.
    pub fn from_cylinder(gas: GasConstants, valve: ValveModel, cyl: &CylinderModel) -> Self {
        DualChamberModel {
            gas,
            valve,
            chamber_a: cyl.volume_map(),
            chamber_b: VolumeMap { v0: cyl.dead_volume + cyl.bore_area * cyl.stroke, slope: -cyl.bore_area },
            leak_a: cyl.leak_area,
            leak_b: cyl.leak_area,
            convention: PortConvention::PositiveFillsA,
        }
    }

    fn signs(&self) -> (f64, f64) {
        match self.convention {
            PortConvention::PositiveFillsA => (1.0, -1.0),
            PortConvention::PositiveFillsB => (-1.0, 1.0),
        }
    }

    /// Single-chamber dynamics of chamber A or B.
    pub fn chamber(&self, b: bool) -> ChamberDynamics<'_> {
        let (sa, sb) = self.signs();
        let (sign, leak, map) = if b {
            (sb, self.leak_b, &self.chamber_b)
        } else {
            (sa, self.leak_a, &self.chamber_a)
        };
        ChamberDynamics { cmd_sign: sign, ..ChamberDynamics::new(&self.gas, &self.valve, leak, map.floor()) }
    }
}

/// Rolls out both chambers of a double-acting cylinder under one command.
pub fn dual_chamber_rollout(
    initial: (f64, f64),
    traj: &ExogenousTrajectory,
    model: &DualChamberModel,
    settings: &SimSettings,
) -> Result<(RolloutResult, RolloutResult)> {
    let a = rollout_chamber(initial.0, traj, &model.chamber(false), &model.chamber_a, settings)?;
    let b = rollout_chamber(initial.1, traj, &model.chamber(true), &model.chamber_b, settings)?;
    Ok((a, b))
}
