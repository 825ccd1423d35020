//! Steady-state valve flow table in standard liters per minute.

use serde::{Deserialize, Serialize};

use crate::actuator::ValveModel;
use crate::error::{Error, Result};
use crate::gas::{flux_z, GasConstants};

/// Standard air density (kg/m³) used to express mass flow as volume flow.
pub const STANDARD_AIR_DENSITY: f64 = 1.204;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub cmd: f64,
    /// Through-flow of the port the command opens, positive into the
    /// actuator line (l/min).
    pub flow_lpm: f64,
    /// Supply to line through the inlet area (l/min).
    pub inlet_lpm: f64,
    /// Line to exhaust through the exhaust area with the line at supply
    /// pressure, as a negative flow (l/min).
    pub exhaust_lpm: f64,
}

/// Converts a mass flow (kg/s) to standard liters per minute.
pub fn kg_per_s_to_lpm(m: f64) -> f64 {
    m / STANDARD_AIR_DENSITY * 60_000.0
}

/// Flow through a valve with no chamber attached, driven by `supply`
/// against `ambient`. Nonnegative commands report the inlet path, negative
/// commands the exhaust path.
pub fn export_flow_curve(
    valve: &ValveModel,
    g: &GasConstants,
    supply: f64,
    ambient: f64,
    cmd_grid: &[f64],
) -> Result<Vec<FlowPoint>> {
    valve.validate()?;
    let z = flux_z(supply, ambient, g)?;
    cmd_grid
        .iter()
        .map(|&cmd| {
            if !(cmd >= valve.cmd_min && cmd <= valve.cmd_max) {
                return Err(Error::Precondition(format!(
                    "command {cmd} outside the valve range [{}, {}]",
                    valve.cmd_min, valve.cmd_max
                )));
            }
            let inlet_lpm = kg_per_s_to_lpm(valve.inlet.area(cmd) * z);
            let exhaust_lpm = -kg_per_s_to_lpm(valve.exhaust.area(cmd) * z);
            let flow_lpm = if cmd >= 0.0 { inlet_lpm } else { exhaust_lpm };
            Ok(FlowPoint { cmd, flow_lpm, inlet_lpm, exhaust_lpm })
        })
        .collect()
}

/// Evenly spaced grid over `[lo, hi]` with `n` points.
pub fn cmd_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV text with header `cmd,flow_lpm,inlet_lpm,exhaust_lpm`.
pub fn flow_table_csv(points: &[FlowPoint]) -> String {
    let mut s = String::from("cmd,flow_lpm,inlet_lpm,exhaust_lpm\n");
    for p in points {
        s.push_str(&format!("{},{},{},{}\n", p.cmd, p.flow_lpm, p.inlet_lpm, p.exhaust_lpm));
    }
    s
}
