//! Valve and cylinder models: command to port area, piston position to
//! chamber volume, and the published hardware presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Sigmoid area curve `offset + a·exp(-b·exp(-c·(cmd + d)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GompertzCurve {
    /// Area floor (m²), the leakage of a closed port.
    pub offset: f64,
    /// Opening span (m²).
    pub a: f64,
    pub b: f64,
    /// Steepness per command unit. Positive for inlet ports.
    pub c: f64,
    /// Command shift.
    pub d: f64,
}

impl GompertzCurve {
    pub fn flat(area: f64) -> Self {
        GompertzCurve { offset: area, a: 0.0, b: 1.0, c: 1.0, d: 0.0 }
    }

    #[inline]
    pub fn area(&self, cmd: f64) -> f64 {
        self.offset + self.a * (-self.b * (-self.c * (cmd + self.d)).exp()).exp()
    }

    /// Opening above the floor as a fraction of the span, in `[0, 1]`.
    pub fn opening(&self, cmd: f64) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            (-self.b * (-self.c * (cmd + self.d)).exp()).exp()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("offset", self.offset), ("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            ensure_finite(n, v)?;
        }
        if self.offset < 0.0 || self.a < 0.0 || self.b <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "gompertz curve needs offset >= 0, a >= 0, b > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Port area as a function of command.
pub fn gompertz_area(curve: &GompertzCurve, cmd: f64) -> Result<f64> {
    ensure_finite("cmd", cmd)?;
    Ok(curve.area(cmd))
}

/// Proportional 5/3 valve seen from one chamber: an inlet port from the
/// supply and an exhaust port to ambient, both driven by one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValveModel {
    pub name: String,
    pub inlet: GompertzCurve,
    pub exhaust: GompertzCurve,
    #[serde(default = "default_cmd_min")]
    pub cmd_min: f64,
    #[serde(default = "default_cmd_max")]
    pub cmd_max: f64,
}

fn default_cmd_min() -> f64 {
    -5.0
}

fn default_cmd_max() -> f64 {
    5.0
}

impl ValveModel {
    pub fn new(name: impl Into<String>, inlet: GompertzCurve, exhaust: GompertzCurve) -> Self {
        ValveModel {
            name: name.into(),
            inlet,
            exhaust,
            cmd_min: default_cmd_min(),
            cmd_max: default_cmd_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.inlet.validate()?;
        self.exhaust.validate()?;
        if !(self.cmd_min < self.cmd_max) {
            return Err(Error::InvalidInput(format!(
                "valve {}: cmd_min {} must be below cmd_max {}",
                self.name, self.cmd_min, self.cmd_max
            )));
        }
        Ok(())
    }

    pub fn clamp_cmd(&self, cmd: f64) -> f64 {
        cmd.clamp(self.cmd_min, self.cmd_max)
    }

    /// (inlet, exhaust) areas without range checks.
    #[inline]
    pub(crate) fn areas_unchecked(&self, cmd: f64) -> (f64, f64) {
        let cmd = self.clamp_cmd(cmd);
        (self.inlet.area(cmd), self.exhaust.area(cmd))
    }

    /// The same valve with every area scaled by `k`.
    pub fn scaled(&self, k: f64) -> ValveModel {
        let mut v = self.clone();
        for c in [&mut v.inlet, &mut v.exhaust] {
            c.offset *= k;
            c.a *= k;
        }
        v
    }
}

/// Inlet and exhaust port areas for a command. Commands outside the valve
/// range are clamped with a warning.
pub fn valve_areas(valve: &ValveModel, cmd: f64) -> Result<(f64, f64)> {
    ensure_finite("cmd", cmd)?;
    if cmd < valve.cmd_min || cmd > valve.cmd_max {
        log::warn!(
            "command {cmd} outside valve {} range [{}, {}], clamped",
            valve.name,
            valve.cmd_min,
            valve.cmd_max
        );
    }
    Ok(valve.areas_unchecked(cmd))
}

/// Command interval where neither port opens by more than a fraction of its
/// span. `width` is zero when the two openings overlap; `center` is then the
/// command where the summed opening is smallest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deadzone {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub width: f64,
}

pub fn deadzone(valve: &ValveModel, fraction: f64) -> Deadzone {
    const N: usize = 20_001;
    let step = (valve.cmd_max - valve.cmd_min) / (N - 1) as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..N {
        let cmd = valve.cmd_min + step * i as f64;
        let oi = valve.inlet.opening(cmd);
        let oe = valve.exhaust.opening(cmd);
        if oi <= fraction && oe <= fraction {
            lo = lo.min(cmd);
            hi = hi.max(cmd);
        }
        if oi + oe < best.0 {
            best = (oi + oe, cmd);
        }
    }
    if lo <= hi {
        Deadzone { lo, hi, center: 0.5 * (lo + hi), width: hi - lo }
    } else {
        Deadzone { lo: best.1, hi: best.1, center: best.1, width: 0.0 }
    }
}

/// Linear map from a position reading to chamber volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMap {
    /// Volume at reading 0 (m³), which holds the dead volume.
    pub v0: f64,
    /// m³ per reading unit.
    pub slope: f64,
}

/// Chamber volume and its rate at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeSample {
    pub v: f64,
    pub v_dot: f64,
    /// The raw volume fell below the floor and was clamped.
    pub clamped: bool,
}

/// Anything that turns a position reading into a chamber volume.
pub trait VolumeSource {
    fn raw_volume(&self, s: f64, s_dot: f64) -> (f64, f64);

    /// Smallest volume ever returned by [`VolumeSource::volume`].
    fn floor(&self) -> f64;

    fn volume(&self, s: f64, s_dot: f64) -> VolumeSample {
        let (v, v_dot) = self.raw_volume(s, s_dot);
        let floor = self.floor();
        if v < floor {
            VolumeSample { v: floor, v_dot: 0.0, clamped: true }
        } else {
            VolumeSample { v, v_dot, clamped: false }
        }
    }
}

impl VolumeMap {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("v0", self.v0)?;
        ensure_finite("slope", self.slope)?;
        if self.v0 <= 0.0 {
            return Err(Error::InvalidInput(format!("volume map intercept must be positive, got {}", self.v0)));
        }
        Ok(())
    }

    pub fn at(&self, s: f64) -> f64 {
        self.v0 + self.slope * s
    }
}

impl VolumeSource for VolumeMap {
    fn raw_volume(&self, s: f64, s_dot: f64) -> (f64, f64) {
        (self.v0 + self.slope * s, self.slope * s_dot)
    }

    /// 1% of the intercept.
    fn floor(&self) -> f64 {
        0.01 * self.v0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderModel {
    pub name: String,
    /// Swept volume per unit of piston position (m³/m, or m³/rad for rotary
    /// actuators).
    pub bore_area: f64,
    pub stroke: f64,
    pub dead_volume: f64,
    /// Equivalent orifice area of the piston seal leak (m²).
    pub leak_area: f64,
    /// Chamber volume at full stroke (m³).
    pub total_volume: f64,
}

impl CylinderModel {
    /// Builds a cylinder whose volume at full stroke equals `total_volume`.
    ///
    /// The dead volume is `total - nominal_bore_area·stroke`, floored at 5%
    /// of the total; the effective bore area then absorbs the floor so that
    /// `volume(stroke) == total_volume`.
    pub fn from_total(
        name: impl Into<String>,
        total_volume: f64,
        stroke: f64,
        nominal_bore_area: Option<f64>,
        leak_area: f64,
    ) -> Self {
        let swept = nominal_bore_area.map_or(total_volume, |a| a * stroke);
        let dead_volume = (total_volume - swept).max(0.05 * total_volume);
        CylinderModel {
            name: name.into(),
            bore_area: (total_volume - dead_volume) / stroke,
            stroke,
            dead_volume,
            leak_area,
            total_volume,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("bore_area", self.bore_area),
            ("stroke", self.stroke),
            ("dead_volume", self.dead_volume),
            ("leak_area", self.leak_area),
            ("total_volume", self.total_volume),
        ] {
            ensure_finite(n, v)?;
        }
        if self.bore_area <= 0.0 || self.stroke <= 0.0 || self.dead_volume <= 0.0 || self.leak_area < 0.0 {
            return Err(Error::InvalidInput(format!("cylinder {} has nonphysical geometry", self.name)));
        }
        Ok(())
    }

    pub fn volume_map(&self) -> VolumeMap {
        VolumeMap { v0: self.dead_volume, slope: self.bore_area }
    }
}

impl VolumeSource for CylinderModel {
    fn raw_volume(&self, s: f64, s_dot: f64) -> (f64, f64) {
        (self.dead_volume + self.bore_area * s, self.bore_area * s_dot)
    }

    /// 1% of the dead volume.
    fn floor(&self) -> f64 {
        0.01 * self.dead_volume
    }
}

/// Volume and volume rate at position `s` moving at `s_dot`, clamped to the
/// source's floor.
pub fn cylinder_volume<S: VolumeSource + ?Sized>(source: &S, s: f64, s_dot: f64) -> Result<VolumeSample> {
    ensure_finite("s", s)?;
    ensure_finite("s_dot", s_dot)?;
    let out = source.volume(s, s_dot);
    if out.clamped {
        log::debug!("volume at reading {s} below floor, clamped to {}", out.v);
    }
    Ok(out)
}

/// Orifice diameter of the AIRPEL piston leak.
pub const AIRPEL_LEAK_DIAMETER: f64 = 1.9665e-4;

pub fn airpel_leak_area() -> f64 {
    PI * AIRPEL_LEAK_DIAMETER * AIRPEL_LEAK_DIAMETER / 4.0
}

fn circle_area(diameter: f64) -> f64 {
    PI * diameter * diameter / 4.0
}

pub fn air37() -> CylinderModel {
    CylinderModel::from_total("AIR37", 2.3856e-6, 0.0375, Some(circle_area(9e-3)), airpel_leak_area())
}

pub fn air200() -> CylinderModel {
    CylinderModel::from_total("AIR200", 1.2723e-5, 0.2, Some(circle_area(9e-3)), airpel_leak_area())
}

pub fn smc() -> CylinderModel {
    CylinderModel::from_total("SMC", 2.0106e-5, 0.025, Some(circle_area(32e-3)), 0.0)
}

/// Rotary actuator; position is the shaft angle in radians over 180°.
pub fn prn() -> CylinderModel {
    CylinderModel::from_total("PRN", 3.50e-6, PI, None, 0.0)
}

pub fn valve1() -> ValveModel {
    ValveModel::new(
        "valve1",
        GompertzCurve { offset: 2.9274e-08, a: 5.501e-07, b: 3.539, c: 1.564, d: 0.12 },
        GompertzCurve { offset: 2.6076e-08, a: 6.079e-07, b: 3.149, c: -1.365, d: -0.1 },
    )
}

pub fn valve2() -> ValveModel {
    ValveModel::new(
        "valve2",
        GompertzCurve { offset: 2.627e-08, a: 8.731e-07, b: 4.029, c: 0.929, d: -0.1505 },
        GompertzCurve { offset: 2.964e-08, a: 8.659e-07, b: 3.942, c: -0.9816, d: 0.1584 },
    )
}

/// The four characterized cylinders and the two characterized valves.
pub fn presets() -> (Vec<CylinderModel>, Vec<ValveModel>) {
    (vec![air37(), air200(), smc(), prn()], vec![valve1(), valve2()])
}

pub fn find_cylinder(name: &str) -> Option<CylinderModel> {
    presets().0.into_iter().find(|c| c.name.eq_ignore_ascii_case(name))
}

pub fn find_valve(name: &str) -> Option<ValveModel> {
    presets().1.into_iter().find(|v| v.name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn valve1_inlet_examples() {
        let c = valve1().inlet;
        assert_relative_eq!(gompertz_area(&c, 5.0).unwrap(), 5.78726298101e-7, max_relative = 1e-10);
        assert_relative_eq!(gompertz_area(&c, -5.0).unwrap(), 2.9274e-8, max_relative = 1e-12);
        let flat = GompertzCurve { a: 0.0, ..c };
        for cmd in [-5.0, -0.3, 0.0, 2.0, 5.0] {
            assert_eq!(flat.area(cmd), c.offset);
        }
        assert!(gompertz_area(&c, f64::NAN).is_err());
    }

    #[test]
    fn valve_area_examples() {
        let v = valve1();
        let (ac, aa) = valve_areas(&v, 0.0).unwrap();
        assert_relative_eq!(ac, 5.85478343442e-8, max_relative = 1e-10);
        assert_relative_eq!(aa, 6.50464198224e-8, max_relative = 1e-10);
        let (ac, aa) = valve_areas(&v, 5.0).unwrap();
        assert_relative_eq!(ac, 5.78726298101e-7, max_relative = 1e-10);
        assert_relative_eq!(aa, 2.6076e-8, max_relative = 1e-10);
        // Out of range commands clamp.
        assert_eq!(valve_areas(&v, 9.0).unwrap(), valve_areas(&v, 5.0).unwrap());
    }

    #[test]
    fn mirrored_valve_is_symmetric() {
        let inlet = valve1().inlet;
        let exhaust = GompertzCurve { c: -inlet.c, d: -inlet.d, ..inlet };
        let v = ValveModel::new("mirror", inlet, exhaust);
        for i in 0..=100 {
            let cmd = -5.0 + 0.1 * i as f64;
            let (ac, _) = valve_areas(&v, cmd).unwrap();
            let (_, aa) = valve_areas(&v, -cmd).unwrap();
            assert_eq!(ac, aa);
        }
    }

    #[test]
    fn preset_valves_follow_sign_pattern_and_leak() {
        for v in presets().1 {
            v.validate().unwrap();
            assert!(v.inlet.c > 0.0 && v.exhaust.c < 0.0);
            let (ac, aa) = v.areas_unchecked(0.0);
            assert!(ac > 0.0 && aa > 0.0);
        }
    }

    #[test]
    fn presets_match_published_values() {
        let (cyls, valves) = presets();
        assert_eq!(cyls.len(), 4);
        assert_eq!(valves.len(), 2);
        let totals: Vec<f64> = cyls.iter().map(|c| c.total_volume).collect();
        assert_eq!(totals, vec![2.3856e-06, 1.2723e-05, 2.0106e-05, 3.50e-06]);
        for c in &cyls {
            c.validate().unwrap();
            let v = cylinder_volume(c, c.stroke, 0.0).unwrap().v;
            assert_relative_eq!(v, c.total_volume, max_relative = 1e-12);
        }
        assert_relative_eq!(air37().leak_area, 3.037230712783408e-8, max_relative = 1e-12);
        assert_eq!(air200().leak_area, air37().leak_area);
        assert_eq!(smc().leak_area, 0.0);
        assert_eq!(prn().leak_area, 0.0);
    }

    #[test]
    fn preset_parameters_reserialize_as_printed() {
        let json = serde_json::to_string(&valve1()).unwrap();
        for lit in ["2.9274e-8", "5.501e-7", "3.539", "1.564", "0.12", "2.6076e-8", "6.079e-7", "3.149", "-1.365", "-0.1"] {
            assert!(json.contains(lit), "{lit} missing from {json}");
        }
        let json = serde_json::to_string(&valve2()).unwrap();
        for lit in ["2.627e-8", "8.731e-7", "4.029", "0.929", "-0.1505", "2.964e-8", "8.659e-7", "3.942", "-0.9816", "0.1584"] {
            assert!(json.contains(lit), "{lit} missing from {json}");
        }
        let json = serde_json::to_string(&presets().0).unwrap();
        let back: Vec<CylinderModel> = serde_json::from_str(&json).unwrap();
        let printed: Vec<String> = back.iter().map(|c| format!("{:e}", c.total_volume)).collect();
        assert_eq!(printed, ["2.3856e-6", "1.2723e-5", "2.0106e-5", "3.5e-6"]);
    }

    #[test]
    fn cylinder_volume_examples() {
        let c = air37();
        let at0 = cylinder_volume(&c, 0.0, 0.0).unwrap();
        assert_eq!(at0.v, c.dead_volume);
        assert_eq!(at0.v_dot, 0.0);
        assert_relative_eq!(cylinder_volume(&c, c.stroke, 0.0).unwrap().v, 2.3856e-6, max_relative = 1e-12);
        let below = cylinder_volume(&c, -1.0, 0.3).unwrap();
        assert!(below.clamped);
        assert_eq!(below.v, 0.01 * c.dead_volume);
        assert_eq!(below.v_dot, 0.0);
    }

    #[test]
    fn deadzone_of_valve1_sits_near_zero() {
        let dz = deadzone(&valve1(), 0.05);
        assert!(dz.center.abs() < 0.2, "{dz:?}");
        let dz2 = deadzone(&valve2(), 0.05);
        assert!(dz2.width > 0.0, "{dz2:?}");
    }

    proptest! {
        #[test]
        fn gompertz_bounded(offset in 0.0f64..1e-6, a in 0.0f64..1e-6, b in 0.01f64..10.0, c in -5.0f64..5.0, d in -1.0f64..1.0, cmd in -5.0f64..5.0) {
            let curve = GompertzCurve { offset, a, b, c, d };
            let area = curve.area(cmd);
            prop_assert!(area >= offset && area <= offset + a * (1.0 + 1e-15));
        }

        #[test]
        fn gompertz_monotone(b in 0.1f64..10.0, c in 0.05f64..5.0, d in -1.0f64..1.0) {
            let up = GompertzCurve { offset: 1e-8, a: 5e-7, b, c, d };
            let down = GompertzCurve { c: -c, ..up };
            let mut prev_up = f64::NEG_INFINITY;
            let mut prev_down = f64::INFINITY;
            for i in 0..=500 {
                let cmd = -5.0 + 0.02 * i as f64;
                prop_assert!(up.area(cmd) >= prev_up);
                prop_assert!(down.area(cmd) <= prev_down);
                prev_up = up.area(cmd);
                prev_down = down.area(cmd);
            }
        }

        #[test]
        fn volume_is_linear(s in 0.0f64..0.2) {
            let c = air200();
            let dv = cylinder_volume(&c, s, 0.0).unwrap().v - cylinder_volume(&c, 0.0, 0.0).unwrap().v;
            prop_assert!((dv - c.bore_area * s).abs() <= 1e-12 * c.total_volume);
        }
    }
}
