//! End-to-end identification from fixed-volume step-command logs.
//!
//! Pressure data alone determine the inlet and exhaust areas only relative
//! to the chamber volume, and the exhaust area only together with the leak.
//! Two anchors close the gap: one known volume at one reading, and the
//! closed-port exhaust area of the valve. Both default to the presets named
//! in the log metadata.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuator::{deadzone, find_cylinder, find_valve, ValveModel, VolumeMap, VolumeSource};
use crate::error::{Error, Result};
use crate::gas::{self, derive_constants, GasConstants, RawGas, ATMOSPHERIC_PA};
use crate::harness::log::{PistonUnits, SensorLog};
use crate::lm::LmSettings;
use crate::model::PneumaticModel;
use crate::sysid::curve::{fit_area_curve_weighted, AreaCurveFit, AreaSample, Port};
use crate::sysid::filter::{estimate_pressure_rate, lowpass_zero_phase};
use crate::sysid::segment::{fit_segment, Segment, SegmentFit, SegmentPriors, MIN_SEGMENT_SAMPLES};
use crate::sysid::volume::fit_volume_map;

/// A reading whose chamber volume is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeAnchor {
    pub reading: f64,
    /// m³
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyConfig {
    /// Low-pass cutoff applied before differentiating pressure (Hz).
    pub cutoff_hz: f64,
    /// Low-pass cutoff for the supply pressure, a slow signal (Hz).
    pub supply_cutoff_hz: f64,
    /// Samples dropped at both ends of every segment (s). Defaults to
    /// `2 / cutoff_hz`, long enough for the filter to forget the step.
    pub edge_trim_s: Option<f64>,
    pub min_segment_samples: usize,
    /// Samples closer than this to the supply or exhaust pressure are left
    /// out of the segment fits (Pa).
    pub port_margin_pa: f64,
    /// Readings closer than this belong to the same fixed volume.
    pub reading_tolerance: f64,
    pub min_volumes: usize,
    pub min_cmd_levels: usize,
    /// Exhaust sink pressure (Pa absolute).
    pub ambient: f64,
    pub gas: RawGas,
    pub optimizer: LmSettings,
    /// Weight of the volume and leak priors in the segment fits.
    pub prior_weight: f64,
    /// Weight of deadzone samples in the area-curve fits.
    pub deadzone_weight: f64,
    /// Opening fraction below which a port counts as closed.
    pub deadzone_fraction: f64,
    /// Smallest admissible segment volume (m³). Defaults to 0.1% of the
    /// prior volume.
    pub volume_floor: Option<f64>,
    /// Relative standard deviation above which a segment is set aside.
    pub max_rel_std: f64,
    pub volume_anchor: Option<VolumeAnchor>,
    /// Area of the fully closed exhaust port (m²).
    pub exhaust_floor: Option<f64>,
    /// Command range of the identified valve.
    pub cmd_range: Option<(f64, f64)>,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            cutoff_hz: 200.0,
            supply_cutoff_hz: 20.0,
            edge_trim_s: None,
            min_segment_samples: MIN_SEGMENT_SAMPLES,
            port_margin_pa: 1000.0,
            reading_tolerance: 1e-6,
            min_volumes: 4,
            min_cmd_levels: 8,
            ambient: ATMOSPHERIC_PA,
            gas: RawGas::default(),
            optimizer: LmSettings::default(),
            prior_weight: 1e-3,
            deadzone_weight: 0.1,
            deadzone_fraction: 0.05,
            volume_floor: None,
            max_rel_std: 0.5,
            volume_anchor: None,
            exhaust_floor: None,
            cmd_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostic {
    pub stage: String,
    pub samples: usize,
    /// Stage-specific fit residual; units given in `unit`.
    pub residual: f64,
    pub unit: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stages: Vec<StageDiagnostic>,
    pub warnings: Vec<String>,
    pub relative_volumes: Vec<(f64, f64)>,
    pub area_samples: Vec<AreaSample>,
}

impl Diagnostics {
    fn stage(&mut self, stage: &str, samples: usize, residual: f64, unit: &str) {
        self.stages.push(StageDiagnostic {
            stage: stage.into(),
            samples,
            residual: if residual.is_finite() { residual } else { -1.0 },
            unit: unit.into(),
        });
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedModel {
    pub valve: ValveModel,
    pub volume_map: VolumeMap,
    pub leak_area: f64,
    pub diagnostics: Diagnostics,
}

impl IdentifiedModel {
    pub fn to_model(&self, gas: GasConstants) -> PneumaticModel {
        PneumaticModel {
            gas,
            valve: self.valve.clone(),
            cylinder: None,
            volume_map: self.volume_map,
            leak_area: self.leak_area,
        }
    }
}

/// Splits logs into fixed-volume, fixed-command segments with consistently
/// filtered pressure rate and flux regressors.
pub fn extract_segments(logs: &[SensorLog], config: &IdentifyConfig, g: &GasConstants) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for (li, log) in logs.iter().enumerate() {
        log.validate()?;
        let p_dot = match estimate_pressure_rate(log, config.cutoff_hz) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("log {li} skipped: {e}");
                continue;
            }
        };
        let supply = lowpass_zero_phase(&log.src_p, log.dt, config.supply_cutoff_hz)?;
        // Flux regressors from the same filtered pressure the rate comes from.
        let pf = lowpass_zero_phase(&log.p, log.dt, config.cutoff_hz)?;
        let f_in: Vec<f64> = supply.iter().zip(&pf).map(|(&s, &p)| gas::signed_flow(s, p, g)).collect::<Result<_>>()?;
        let f_out: Vec<f64> = pf.iter().map(|&p| gas::signed_flow(p, config.ambient, g)).collect::<Result<_>>()?;
        let trim_s = config.edge_trim_s.unwrap_or(2.0 / config.cutoff_hz);
        let trim = (trim_s / log.dt).ceil() as usize;

        let n = log.len();
        let mut start = 0;
        let mut found = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && log.cmd[end] == log.cmd[start]
                && (log.piston[end] - log.piston[start]).abs() <= config.reading_tolerance
            {
                end += 1;
            }
            let (a, b) = (start + trim, end.saturating_sub(trim));
            if b > a && b - a >= config.min_segment_samples.max(MIN_SEGMENT_SAMPLES) {
                let reading = log.piston[a..b].iter().sum::<f64>() / (b - a) as f64;
                // Near either port pressure the square-root flux is dominated by
                // measurement noise.
                let keep: Vec<usize> = (a..b)
                    .filter(|&i| {
                        (supply[i] - pf[i]).abs() >= config.port_margin_pa
                            && (pf[i] - config.ambient).abs() >= config.port_margin_pa
                    })
                    .collect();
                if keep.len() >= config.min_segment_samples.max(MIN_SEGMENT_SAMPLES) {
                    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
                    let seg = Segment::new(
                        reading,
                        log.cmd[start],
                        pick(&log.t),
                        pick(&log.p),
                        pick(&p_dot),
                        pick(&log.src_p),
                    )?
                    .with_regressors(pick(&f_in), pick(&f_out))?;
                    out.push(seg);
                    found += 1;
                }
            }
            start = end;
        }
        if found == 0 {
            log::info!("log {li} has no fixed-volume segments");
        }
    }
    // Order-independent processing.
    out.sort_by(|a, b| {
        a.reading
            .total_cmp(&b.reading)
            .then(a.cmd.total_cmp(&b.cmd))
            .then(a.t[0].total_cmp(&b.t[0]))
            .then(a.p[0].total_cmp(&b.p[0]))
    });
    Ok(out)
}

/// Groups sorted readings into clusters no wider than `tol` between
/// neighbours. Returns the cluster index per segment and the cluster means.
fn cluster_readings(readings: &[f64], tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..readings.len()).collect();
    order.sort_by(|&a, &b| readings[a].total_cmp(&readings[b]));
    let mut idx = vec![0; readings.len()];
    let mut sums: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &i in &order {
        if sums.is_empty() || readings[i] - last > tol {
            sums.push((0.0, 0));
        }
        let c = sums.len() - 1;
        sums[c].0 += readings[i];
        sums[c].1 += 1;
        idx[i] = c;
        last = readings[i];
    }
    (idx, sums.into_iter().map(|(s, n)| s / n as f64).collect())
}

fn check_coverage(cmds: &[f64], clusters: &[usize], means: &[f64], config: &IdentifyConfig) -> Result<()> {
    let mut levels: Vec<f64> = cmds.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if means.len() >= config.min_volumes && levels.len() >= config.min_cmd_levels {
        return Ok(());
    }
    let mut present = vec![vec![false; levels.len()]; means.len()];
    for (c, &k) in cmds.iter().zip(clusters) {
        let l = levels.iter().position(|x| x == c).expect("level listed");
        present[k][l] = true;
    }
    let missing: Vec<String> = present
        .iter()
        .enumerate()
        .flat_map(|(k, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, p)| !**p)
                .map(move |(l, _)| (k, l))
                .collect::<Vec<_>>()
        })
        .map(|(k, l)| format!("(reading {:.6e}, cmd {})", means[k], levels[l]))
        .collect();
    Err(Error::Coverage(format!(
        "found {} fixed volumes (need {}) and {} command levels (need {}); missing cells: [{}]",
        means.len(),
        config.min_volumes,
        levels.len(),
        config.min_cmd_levels,
        if missing.is_empty() { "none within the observed grid".to_string() } else { missing.join(", ") }
    )))
}

/// Weighted two-way decomposition `ln x = level effect − ln v(cluster)`
/// over inlet and exhaust ratios. Returns per-level log areas (inlet,
/// exhaust) and per-cluster log volumes, relative to the first cluster.
#[allow(clippy::type_complexity)]
fn decompose(
    fits: &[&SegmentFit],
    level_of: &[usize],
    cluster_of: &[usize],
    n_levels: usize,
    n_clusters: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    // Unknowns: inlet levels, exhaust levels, clusters 1.. (cluster 0 fixed).
    let dim = 2 * n_levels + n_clusters - 1;
    let mut ata = DMatrix::<f64>::zeros(dim, dim);
    let mut atb = DVector::<f64>::zeros(dim);
    let mut add = |level_col: usize, cluster: usize, y: f64, w: f64| {
        let mut cols = vec![(level_col, 1.0)];
        if cluster > 0 {
            cols.push((2 * n_levels + cluster - 1, -1.0));
        }
        for &(i, ai) in &cols {
            atb[i] += w * ai * y;
            for &(j, aj) in &cols {
                ata[(i, j)] += w * ai * aj;
            }
        }
    };
    for (k, f) in fits.iter().enumerate() {
        let wc = 1.0 / f.rel_std_inlet.max(1e-6).powi(2);
        let we = 1.0 / f.rel_std_exhaust.max(1e-6).powi(2);
        add(level_of[k], cluster_of[k], f.inlet_ratio().ln(), wc);
        add(n_levels + level_of[k], cluster_of[k], f.exhaust_ratio().ln(), we);
    }
    let sol = ata
        .clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .or_else(|| ata.lu().solve(&atb))
        .ok_or_else(|| Error::Coverage("fixed volumes are not linked by shared command levels".into()))?;
    let inlet = (0..n_levels).map(|l| sol[l]).collect();
    let exhaust = (0..n_levels).map(|l| sol[n_levels + l]).collect();
    let mut vols = vec![0.0];
    vols.extend((1..n_clusters).map(|c| sol[2 * n_levels + c - 1]));
    Ok((inlet, exhaust, vols))
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn fit_all(segments: &[Segment], priors: &[SegmentPriors], g: &GasConstants, config: &IdentifyConfig) -> Vec<Result<SegmentFit>> {
    segments
        .par_iter()
        .zip(priors.par_iter())
        .map(|(s, p)| fit_segment(s, g, config.ambient, p, &config.optimizer))
        .collect()
}

/// Identifies valve area curves, the volume map and the chamber leak from
/// fixed-volume step-command logs.
pub fn identify(logs: &[SensorLog], config: &IdentifyConfig) -> Result<IdentifiedModel> {
    let g = derive_constants(&config.gas)?;
    let mut diag = Diagnostics::default();
    if logs.is_empty() {
        return Err(Error::Coverage("no logs given".into()));
    }
    let cylinder = logs.iter().find_map(|l| l.meta.cylinder.as_deref().and_then(find_cylinder));
    let meters = logs.iter().all(|l| l.meta.piston_units == PistonUnits::Meters);
    let preset_valve = logs.iter().find_map(|l| l.meta.valve.as_deref().and_then(find_valve));

    let anchor = match (config.volume_anchor, &cylinder) {
        (Some(a), _) => a,
        (None, Some(c)) if meters => VolumeAnchor { reading: c.stroke, volume: c.total_volume },
        _ => {
            return Err(Error::Precondition(
                "pressure data fix volumes only up to scale; set volume_anchor or name a preset cylinder in the log metadata"
                    .into(),
            ))
        }
    };
    if !(anchor.volume > 0.0 && anchor.volume.is_finite() && anchor.reading.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid volume anchor {anchor:?}")));
    }
    let exhaust_floor = match (config.exhaust_floor, &preset_valve) {
        (Some(f), _) => f,
        (None, Some(v)) => v.exhaust.offset,
        (None, None) => {
            diag.warn("no exhaust floor known; the whole closed-port exhaust area is attributed to the leak".into());
            0.0
        }
    };

    let segments = extract_segments(logs, config, &g)?;
    let samples: usize = segments.iter().map(|s| s.len()).sum();
    diag.stage("segmentation", segments.len(), samples as f64, "samples");
    let readings: Vec<f64> = segments.iter().map(|s| s.reading).collect();
    let (cluster_of, cluster_means) = cluster_readings(&readings, config.reading_tolerance);
    let cmds: Vec<f64> = segments.iter().map(|s| s.cmd).collect();
    check_coverage(&cmds, &cluster_of, &cluster_means, config)?;

    let volume_guess = |s: f64| match &cylinder {
        Some(c) if meters => c.volume_map().at(s).max(0.05 * anchor.volume),
        _ => anchor.volume,
    };
    let priors_for = |v: f64, leak: f64| SegmentPriors {
        volume: v,
        leak,
        weight: config.prior_weight,
        volume_floor: config.volume_floor.unwrap_or(1e-3 * v).min(0.5 * v),
    };

    // Pass 1: identifiable ratios only.
    let priors: Vec<SegmentPriors> = segments.iter().map(|s| priors_for(volume_guess(s.reading), 0.0)).collect();
    let pass1 = fit_all(&segments, &priors, &g, config);
    let mut usable = Vec::new();
    let mut failed = 0;
    for (k, r) in pass1.into_iter().enumerate() {
        match r {
            Ok(f) if f.rel_std_inlet <= config.max_rel_std && f.rel_std_exhaust <= config.max_rel_std => {
                usable.push((k, f))
            }
            Ok(_) => {}
            Err(e) if e.is_numeric() => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed > 0 {
        diag.warn(format!("{failed} segment fits did not converge and were set aside"));
    }
    let slow = usable.iter().filter(|(_, f)| !f.converged).count();
    if slow > 0 {
        log::info!("{slow} segment fits stopped at the iteration limit; their best iterates are used");
    }
    let set_aside = segments.len() - usable.len() - failed;
    if set_aside > 0 {
        log::info!("{set_aside} low-information segments set aside");
    }
    diag.stage(
        "segment_fit",
        usable.len(),
        median(usable.iter().map(|(_, f)| f.residual).collect()),
        "Pa/s",
    );

    let mut levels: Vec<f64> = usable.iter().map(|(_, f)| f.cmd).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let used_clusters: Vec<usize> = {
        let mut c: Vec<usize> = usable.iter().map(|(k, _)| cluster_of[*k]).collect();
        c.sort();
        c.dedup();
        c
    };
    if used_clusters.len() < 2 || levels.len() < config.min_cmd_levels.min(6) {
        return Err(Error::Coverage(format!(
            "only {} fixed volumes and {} command levels carry enough information",
            used_clusters.len(),
            levels.len()
        )));
    }
    let fits: Vec<&SegmentFit> = usable.iter().map(|(_, f)| f).collect();
    let level_of: Vec<usize> =
        fits.iter().map(|f| levels.iter().position(|&l| l == f.cmd).expect("level listed")).collect();
    let local_cluster: Vec<usize> = usable
        .iter()
        .map(|(k, _)| used_clusters.iter().position(|&c| c == cluster_of[*k]).expect("cluster listed"))
        .collect();
    let (_, log_exhaust, log_vol) = decompose(&fits, &level_of, &local_cluster, levels.len(), used_clusters.len())?;

    // Volume map up to scale, then anchored.
    let rel_points: Vec<(f64, f64)> =
        used_clusters.iter().zip(&log_vol).map(|(&c, lv)| (cluster_means[c], lv.exp())).collect();
    let vfit = fit_volume_map(&rel_points)?;
    diag.warnings.extend(vfit.warnings.iter().cloned());
    let at_anchor = vfit.map.at(anchor.reading);
    if !(at_anchor > 0.0) {
        return Err(Error::Precondition(format!(
            "relative volume map is not positive at the anchor reading {}",
            anchor.reading
        )));
    }
    let k = anchor.volume / at_anchor;
    let volume_map = VolumeMap { v0: k * vfit.map.v0, slope: k * vfit.map.slope };
    if volume_map.validate().is_err() {
        diag.warn(format!("identified volume map {volume_map:?} has a nonpositive intercept"));
    }
    diag.relative_volumes = rel_points.iter().map(|&(s, v)| (s, k * v)).collect();
    diag.stage("volume_map", rel_points.len(), 1.0 - vfit.r_squared, "1 - R^2");
    let v_at = |s: f64| volume_map.at(s).max(volume_map.floor());

    // Leak from the levels where the exhaust port is shut.
    let exhaust_area: Vec<f64> = log_exhaust.iter().map(|l| k * l.exp()).collect();
    let (lowest, min_exhaust) =
        exhaust_area.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, a)| if a < b.1 { (i, a) } else { b });
    // The exhaust closes with rising command, so every level above the
    // smallest opening is shut as well.
    let mut closed = Vec::new();
    for l in (0..levels.len()).rev() {
        if l >= lowest || exhaust_area[l] <= 1.05 * min_exhaust {
            closed.push(l);
        } else {
            break;
        }
    }
    let leak_samples: Vec<f64> = fits
        .iter()
        .zip(&level_of)
        .filter(|(_, l)| closed.contains(l))
        .map(|(f, _)| f.exhaust_ratio() * v_at(f.reading) - exhaust_floor)
        .collect();
    let leak_median = median(leak_samples.clone());
    let mad = median(leak_samples.iter().map(|x| (x - leak_median).abs()).collect());
    // Standard error of a median under normal scatter.
    let se = 1.2533 * 1.4826 * mad / (leak_samples.len() as f64).sqrt();
    let leak_area = if !(leak_median > 3.0 * se) {
        if leak_median.is_finite() && leak_median > 0.0 {
            log::info!("leak estimate {leak_median:e} m² is within noise, set to zero");
        }
        0.0
    } else {
        leak_median
    };
    diag.stage("leak", leak_samples.len(), se, "m^2");

    // Pass 2: absolute areas with the volume map and pooled leak as priors.
    let usable_segments: Vec<Segment> = usable.iter().map(|(k, _)| segments[*k].clone()).collect();
    let priors: Vec<SegmentPriors> = usable_segments.iter().map(|s| priors_for(v_at(s.reading), leak_area)).collect();
    let mut area_samples = Vec::new();
    for r in fit_all(&usable_segments, &priors, &g, config) {
        match r {
            Ok(f) => area_samples.push(AreaSample { cmd: f.cmd, a_c: f.a_c, a_a: f.a_a, residual: f.residual }),
            Err(e) if e.is_numeric() => diag.warn(format!("second-pass segment fit failed: {e}")),
            Err(e) => return Err(e),
        }
    }

    let (cmd_min, cmd_max) = config
        .cmd_range
        .or_else(|| preset_valve.as_ref().map(|v| (v.cmd_min, v.cmd_max)))
        .unwrap_or((-5.0, 5.0));
    let unweighted = vec![1.0; area_samples.len()];
    let inlet0 = fit_area_curve_weighted(&area_samples, &unweighted, Port::Inlet, &config.optimizer)?;
    let exhaust0 = fit_area_curve_weighted(&area_samples, &unweighted, Port::Exhaust, &config.optimizer)?;
    let mut valve = ValveModel { name: "identified".into(), inlet: inlet0.curve, exhaust: exhaust0.curve, cmd_min, cmd_max };
    let dz = deadzone(&valve, config.deadzone_fraction);
    let weights: Vec<f64> = area_samples
        .iter()
        .map(|s| if s.cmd >= dz.lo && s.cmd <= dz.hi && dz.width > 0.0 { config.deadzone_weight } else { 1.0 })
        .collect();
    let (inlet, exhaust): (AreaCurveFit, AreaCurveFit) = if weights.iter().any(|&w| w != 1.0) {
        (
            fit_area_curve_weighted(&area_samples, &weights, Port::Inlet, &config.optimizer)?,
            fit_area_curve_weighted(&area_samples, &weights, Port::Exhaust, &config.optimizer)?,
        )
    } else {
        (inlet0, exhaust0)
    };
    diag.warnings.extend(inlet.warnings.iter().cloned());
    diag.warnings.extend(exhaust.warnings.iter().cloned());
    diag.stage("inlet_curve", inlet.samples, inlet.rms, "m^2");
    diag.stage("exhaust_curve", exhaust.samples, exhaust.rms, "m^2");
    valve.inlet = inlet.curve;
    valve.exhaust = exhaust.curve;
    valve.validate()?;
    diag.area_samples = area_samples;

    Ok(IdentifiedModel { valve, volume_map, leak_area, diagnostics: diag })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readings_cluster_by_gap() {
        let (idx, means) = cluster_readings(&[0.3, 0.1, 0.1000001, 0.2, 0.3], 1e-3);
        assert_eq!(means.len(), 3);
        assert_eq!(idx, vec![2, 0, 0, 1, 2]);
    }

    #[test]
    fn coverage_error_lists_missing_cells() {
        let cfg = IdentifyConfig::default();
        let err = check_coverage(&[0.0, 1.0, 0.0], &[0, 0, 1], &[0.01, 0.02], &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2 fixed volumes"), "{msg}");
        assert!(msg.contains("cmd 1"), "{msg}");
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
