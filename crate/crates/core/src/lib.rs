//! Pneumatic chamber modeling and identification.
//!
//! The crate covers the thin-port orifice flow model with chamber leakage,
//! valve and cylinder parameterizations, RK4 simulation of the chamber
//! pressure, gray-box identification of valve areas, chamber volume and
//! leak from sensor logs, and short-horizon prediction scoring.

pub mod actuator;
pub mod error;
pub mod gas;
pub mod harness;
pub mod lm;
pub mod model;
pub mod sim;
pub mod sysid;

pub use actuator::{CylinderModel, GompertzCurve, ValveModel, VolumeMap};
pub use error::{Error, Result};
pub use harness::{LogMeta, SensorLog};
pub use gas::{GasConstants, RawGas, ATMOSPHERIC_PA};
pub use model::PneumaticModel;
pub use sim::{ExogenousTrajectory, SimSettings, SubstepSettings};
