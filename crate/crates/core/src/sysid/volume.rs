//! Linear map from position reading to chamber volume.

use serde::{Deserialize, Serialize};

use crate::actuator::VolumeMap;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMapFit {
    pub map: VolumeMap,
    pub r_squared: f64,
    pub points: usize,
    pub warnings: Vec<String>,
}

/// Coefficient of determination below which the fit is reported as poor.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Ordinary least-squares line through `(reading, volume)` points.
pub fn fit_volume_map(points: &[(f64, f64)]) -> Result<VolumeMapFit> {
    if points.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidInput("volume points must be finite".into()));
    }
    let n = points.len() as f64;
    let distinct = {
        let mut s: Vec<f64> = points.iter().map(|p| p.0).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s.len()
    };
    if distinct < 2 {
        return Err(Error::InvalidInput(format!(
            "volume map needs at least 2 distinct readings, got {distinct}"
        )));
    }
    let ms = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - ms).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - ms) * (p.1 - mv)).sum();
    let slope = sxy / sxx;
    let v0 = mv - slope * ms;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mv).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - v0 - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let mut warnings = Vec::new();
    if r_squared < MIN_R_SQUARED {
        let msg = format!("volume map is poorly linear, R² = {r_squared:.4}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(VolumeMapFit { map: VolumeMap { v0, slope }, r_squared, points: points.len(), warnings })
}
