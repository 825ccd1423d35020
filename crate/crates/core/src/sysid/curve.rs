//! Gompertz fits of port area against command.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::actuator::GompertzCurve;
use crate::error::{Error, Result};
use crate::lm::{self, LeastSquaresProblem, LmSettings};

/// Per-segment area estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaSample {
    pub cmd: f64,
    /// Inlet area (m²).
    pub a_c: f64,
    /// Exhaust area without the chamber leak (m²).
    pub a_a: f64,
    /// Pressure-rate residual of the segment fit (Pa/s RMS).
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Inlet,
    Exhaust,
}

impl Port {
    fn area(&self, s: &AreaSample) -> f64 {
        match self {
            Port::Inlet => s.a_c,
            Port::Exhaust => s.a_a,
        }
    }

    fn sign(&self) -> f64 {
        match self {
            Port::Inlet => 1.0,
            Port::Exhaust => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaCurveFit {
    pub curve: GompertzCurve,
    /// Unweighted RMS of `curve(cmd) − area` over the samples (m²).
    pub rms: f64,
    pub samples: usize,
    pub warnings: Vec<String>,
}

/// Fewest samples accepted by [`fit_area_curve`].
pub const MIN_CURVE_SAMPLES: usize = 6;

struct CurveProblem<'a> {
    cmd: &'a [f64],
    area: &'a [f64],
    weight: &'a [f64],
    scale: f64,
    sign: f64,
}

impl CurveProblem<'_> {
    fn curve(&self, x: &DVector<f64>) -> GompertzCurve {
        GompertzCurve {
            offset: self.scale * x[0] * x[0],
            a: self.scale * x[1] * x[1],
            b: x[2] * x[2],
            c: self.sign * x[3] * x[3],
            d: x[4],
        }
    }

    fn pack(&self, c: &GompertzCurve) -> DVector<f64> {
        DVector::from_vec(vec![
            (c.offset / self.scale).max(0.0).sqrt(),
            (c.a / self.scale).max(0.0).sqrt(),
            c.b.max(0.0).sqrt(),
            c.c.abs().sqrt(),
            c.d,
        ])
    }
}

impl LeastSquaresProblem for CurveProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let c = self.curve(x);
        let r = DVector::from_iterator(
            self.cmd.len(),
            (0..self.cmd.len()).map(|i| self.weight[i].sqrt() * (c.area(self.cmd[i]) - self.area[i]) / self.scale),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }
}

/// Fits `offset + a·exp(−b·exp(−c·(cmd + d)))` to one port's area samples.
pub fn fit_area_curve(samples: &[AreaSample], port: Port) -> Result<AreaCurveFit> {
    fit_area_curve_weighted(samples, &vec![1.0; samples.len()], port, &LmSettings::default())
}

/// Weighted variant of [`fit_area_curve`].
pub fn fit_area_curve_weighted(
    samples: &[AreaSample],
    weights: &[f64],
    port: Port,
    settings: &LmSettings,
) -> Result<AreaCurveFit> {
    if samples.len() < MIN_CURVE_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "area curve needs at least {MIN_CURVE_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if weights.len() != samples.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidInput("area curve weights must be positive, one per sample".into()));
    }
    let cmd: Vec<f64> = samples.iter().map(|s| s.cmd).collect();
    let area: Vec<f64> = samples.iter().map(|s| port.area(s)).collect();
    if cmd.iter().chain(&area).any(|v| !v.is_finite()) || area.iter().any(|&a| a < 0.0) {
        return Err(Error::InvalidInput("area samples must be finite and nonnegative".into()));
    }
    let (lo, hi) = cmd.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| (l.min(c), h.max(c)));
    if !(hi > lo) {
        return Err(Error::InvalidInput("area samples must span more than one command".into()));
    }

    let levels = level_means(&cmd, &area);
    let min = levels.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let max = levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    if max - min <= 1e-9 * max.abs().max(f64::MIN_POSITIVE) {
        let floor = area.iter().copied().fold(f64::INFINITY, f64::min);
        let msg = format!("{port:?} area samples are flat at {floor:e} m², fitted a constant");
        log::warn!("{msg}");
        warnings.push(msg);
        let curve = GompertzCurve::flat(floor);
        return Ok(AreaCurveFit { rms: rms(&curve, &cmd, &area), curve, samples: samples.len(), warnings });
    }

    let problem = CurveProblem { cmd: &cmd, area: &area, weight: weights, scale: max, sign: port.sign() };
    let init = initial_curve(&levels, min, max, port.sign());
    let report = match lm::minimize(&problem, problem.pack(&init), settings) {
        Ok(r) => r,
        Err(Error::NonConvergence { best, best_cost, iterations }) => {
            let msg = format!("{port:?} curve fit stopped after {iterations} iterations at cost {best_cost:e}");
            log::warn!("{msg}");
            warnings.push(msg);
            lm::LmReport {
                x: DVector::from_vec(best),
                cost: best_cost,
                initial_cost: f64::NAN,
                residual_count: cmd.len(),
                iterations,
                termination: lm::Termination::Step,
            }
        }
        Err(e) => return Err(e),
    };
    let curve = problem.curve(&report.x);
    Ok(AreaCurveFit { rms: rms(&curve, &cmd, &area), curve, samples: samples.len(), warnings })
}

fn rms(curve: &GompertzCurve, cmd: &[f64], area: &[f64]) -> f64 {
    let ss: f64 = cmd.iter().zip(area).map(|(&c, &a)| (curve.area(c) - a).powi(2)).sum();
    (ss / cmd.len() as f64).sqrt()
}

/// Mean area per distinct command, sorted by command.
fn level_means(cmd: &[f64], area: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = cmd.iter().copied().zip(area.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for (c, a) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == c => {
                last.1 += a;
                last.2 += 1;
            }
            _ => out.push((c, a, 1)),
        }
    }
    out.into_iter().map(|(c, a, n)| (c, a / n as f64)).collect()
}

/// Offset at the minimum, span to the maximum, `b = 3`, and `c`, `d` placed
/// so that the 10% and 90% openings fall on the interpolated crossings.
fn initial_curve(levels: &[(f64, f64)], min: f64, max: f64, sign: f64) -> GompertzCurve {
    let frac = |f: f64| min + f * (max - min);
    let x10 = crossing(levels, frac(0.1), sign);
    let x90 = crossing(levels, frac(0.9), sign);
    let b = 3.0;
    // With b = 3 the openings 0.1 and 0.9 sit at c·(x + d) = ln(3/ln 10)
    // and ln(3/ln(1/0.9)).
    let lo = (b / std::f64::consts::LN_10).ln();
    let hi = (b / (1.0 / 0.9_f64).ln()).ln();
    let span = (x90 - x10).abs().max(1e-3);
    let c = sign * (hi - lo) / span;
    let d = lo / c - x10;
    GompertzCurve { offset: min, a: max - min, b, c, d }
}

/// Command where the level curve first crosses `target` walking in the
/// opening direction, linearly interpolated.
fn crossing(levels: &[(f64, f64)], target: f64, sign: f64) -> f64 {
    let ordered: Vec<(f64, f64)> =
        if sign > 0.0 { levels.to_vec() } else { levels.iter().rev().copied().collect() };
    for w in ordered.windows(2) {
        let ((c0, a0), (c1, a1)) = (w[0], w[1]);
        if a0 < target && a1 >= target {
            return c0 + (target - a0) / (a1 - a0) * (c1 - c0);
        }
    }
    ordered.iter().find(|l| l.1 >= target).map_or(0.0, |l| l.0)
}
