//! Complete chamber model and its JSON file format.
//!
//! ```json
//! {
//!   "gas": { "molar_mass": 0.029, "temperature": 293.0, ... },
//!   "valve": { "name": "valve1", "inlet": {...}, "exhaust": {...}, "cmd_min": -5.0, "cmd_max": 5.0 },
//!   "cylinder": { "name": "AIR37", "bore_area": ..., ... } | null,
//!   "volume_map": { "v0": ..., "slope": ... },
//!   "leak_area": 3.037e-8
//! }
//! ```
//!
//! The simulator uses `volume_map`; `cylinder` documents the hardware the
//! map came from and may be null for identified models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuator::{CylinderModel, ValveModel, VolumeMap};
use crate::error::{ensure_finite, Error, Result};
use crate::gas::GasConstants;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PneumaticModel {
    pub gas: GasConstants,
    pub valve: ValveModel,
    pub cylinder: Option<CylinderModel>,
    pub volume_map: VolumeMap,
    pub leak_area: f64,
}

impl PneumaticModel {
    /// Model of a preset cylinder driven by a preset valve. Position readings
    /// are in the cylinder's own units.
    pub fn from_parts(gas: GasConstants, valve: ValveModel, cylinder: CylinderModel) -> Self {
        PneumaticModel {
            gas,
            valve,
            volume_map: cylinder.volume_map(),
            leak_area: cylinder.leak_area,
            cylinder: Some(cylinder),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.valve.validate()?;
        self.volume_map.validate()?;
        if let Some(c) = &self.cylinder {
            c.validate()?;
        }
        ensure_finite("leak_area", self.leak_area)?;
        if self.leak_area < 0.0 {
            return Err(Error::InvalidInput(format!("leak_area must be nonnegative, got {}", self.leak_area)));
        }
        Ok(())
    }

    pub fn with_leak(mut self, leak_area: f64) -> Self {
        self.leak_area = leak_area;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: PneumaticModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
