//! Fixed-volume, fixed-command data segments and the per-segment fit of
//! inlet area, exhaust area, leak area and chamber volume.
//!
//! Within a segment the pressure rate is
//! `ṗ = (n·Rs·T / v)·(a_c·f(P_c, p) − (a_a + a_l)·f(p, P_r))`,
//! which depends on the areas and the volume only through the ratios
//! `a_c/v` and `(a_a + a_l)/v`. The remaining two directions are pinned by
//! weak priors on `v` and `a_l`.

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{self, GasConstants};
use crate::lm::{self, LeastSquaresProblem, LmSettings};

/// Fewest samples accepted in a segment.
pub const MIN_SEGMENT_SAMPLES: usize = 50;

/// Area unit of the squared parameterization (m²).
const AREA_SCALE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// Position reading while the piston is locked.
    pub reading: f64,
    pub cmd: f64,
    pub t: Vec<f64>,
    /// Measured chamber pressure (Pa absolute).
    pub p: Vec<f64>,
    /// Measured pressure rate (Pa/s).
    pub p_dot: Vec<f64>,
    /// Supply pressure (Pa absolute).
    pub supply: Vec<f64>,
    regressors: Option<(Vec<f64>, Vec<f64>)>,
}

impl Segment {
    pub fn new(reading: f64, cmd: f64, t: Vec<f64>, p: Vec<f64>, p_dot: Vec<f64>, supply: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < MIN_SEGMENT_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "segment has {n} samples, at least {MIN_SEGMENT_SAMPLES} are needed"
            )));
        }
        if p.len() != n || p_dot.len() != n || supply.len() != n {
            return Err(Error::InvalidInput("segment series differ in length".into()));
        }
        if !reading.is_finite() || !cmd.is_finite() {
            return Err(Error::InvalidInput("segment reading and command must be finite".into()));
        }
        let all = t.iter().chain(&p).chain(&p_dot).chain(&supply);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("segment contains non-finite samples".into()));
        }
        if p.iter().chain(&supply).any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput("segment pressures must be positive".into()));
        }
        Ok(Segment { reading, cmd, t, p, p_dot, supply, regressors: None })
    }

    /// Replaces the flux regressors `f(P_c, p)` and `f(p, P_r)` that are
    /// otherwise evaluated from `p` and `supply`. Used to pass regressors
    /// that went through the same filter as `p_dot`.
    pub fn with_regressors(mut self, flux_in: Vec<f64>, flux_out: Vec<f64>) -> Result<Self> {
        let n = self.len();
        if flux_in.len() != n || flux_out.len() != n {
            return Err(Error::InvalidInput("regressor length differs from the segment".into()));
        }
        if flux_in.iter().chain(&flux_out).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("regressors contain non-finite values".into()));
        }
        self.regressors = Some((flux_in, flux_out));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn fluxes(&self, ambient: f64, g: &GasConstants) -> (Vec<f64>, Vec<f64>) {
        match &self.regressors {
            Some((fi, fo)) => (fi.clone(), fo.clone()),
            None => (
                self.supply.iter().zip(&self.p).map(|(&s, &p)| gas::signed_unchecked(s, p, g)).collect(),
                self.p.iter().map(|&p| gas::signed_unchecked(p, ambient, g)).collect(),
            ),
        }
    }
}

/// Priors that resolve the directions the data cannot see.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPriors {
    /// Expected chamber volume (m³).
    pub volume: f64,
    /// Expected leak area (m²).
    pub leak: f64,
    /// Regularization weight relative to the data term.
    pub weight: f64,
    /// Smallest admissible volume (m³).
    pub volume_floor: f64,
}

impl SegmentPriors {
    pub fn new(volume: f64, leak: f64) -> Self {
        SegmentPriors { volume, leak, weight: 1e-3, volume_floor: 1e-3 * volume }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.volume > 0.0
            && self.volume.is_finite()
            && self.leak >= 0.0
            && self.leak.is_finite()
            && self.weight > 0.0
            && self.weight.is_finite()
            && self.volume_floor >= 0.0
            && self.volume_floor < self.volume;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid segment priors {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub reading: f64,
    pub cmd: f64,
    pub a_c: f64,
    pub a_a: f64,
    pub a_l: f64,
    pub v: f64,
    /// RMS of the pressure-rate residual (Pa/s).
    pub residual: f64,
    /// RMS of the pressure-rate residual at the initial guess (Pa/s).
    pub initial_residual: f64,
    /// False when the optimizer stopped at its iteration limit.
    pub converged: bool,
    /// Objective including the priors, final and at the initial guess.
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub samples: usize,
    /// Relative standard deviation of `a_c/v` and `(a_a + a_l)/v`.
    pub rel_std_inlet: f64,
    pub rel_std_exhaust: f64,
    /// False when the segment carries too little information to separate
    /// the inlet from the exhaust side.
    pub identifiable: bool,
}

impl SegmentFit {
    /// `a_c / v`.
    pub fn inlet_ratio(&self) -> f64 {
        self.a_c / self.v
    }

    /// `(a_a + a_l) / v`.
    pub fn exhaust_ratio(&self) -> f64 {
        (self.a_a + self.a_l) / self.v
    }
}

struct SegmentProblem<'a> {
    p_dot: &'a [f64],
    /// `n·Rs·T·f(P_c, p)` and `n·Rs·T·f(p, P_r)`.
    k_in: Vec<f64>,
    k_out: Vec<f64>,
    scale: f64,
    priors: SegmentPriors,
    reg: f64,
    leak_scale: f64,
}

impl SegmentProblem<'_> {
    fn unpack(&self, x: &DVector<f64>) -> [f64; 4] {
        [
            AREA_SCALE * x[0] * x[0],
            AREA_SCALE * x[1] * x[1],
            AREA_SCALE * x[2] * x[2],
            self.priors.volume_floor + self.priors.volume * x[3] * x[3],
        ]
    }

    fn pack(&self, a_c: f64, a_a: f64, a_l: f64, v: f64) -> DVector<f64> {
        let u = |a: f64| (a / AREA_SCALE).max(1e-8).sqrt();
        let w = ((v - self.priors.volume_floor) / self.priors.volume).max(1e-8).sqrt();
        DVector::from_vec(vec![u(a_c), u(a_a), u(a_l), w])
    }

    fn data_rms(&self, params: [f64; 4]) -> f64 {
        let [a_c, a_a, a_l, v] = params;
        let ss: f64 = (0..self.p_dot.len())
            .map(|k| {
                let r = self.p_dot[k] - (a_c * self.k_in[k] - (a_a + a_l) * self.k_out[k]) / v;
                r * r
            })
            .sum();
        (ss / self.p_dot.len() as f64).sqrt()
    }
}

impl LeastSquaresProblem for SegmentProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let [a_c, a_a, a_l, v] = self.unpack(x);
        let n = self.p_dot.len();
        let mut r = DVector::zeros(n + 2);
        let inv = 1.0 / (v * self.scale);
        for k in 0..n {
            r[k] = self.p_dot[k] / self.scale - (a_c * self.k_in[k] - (a_a + a_l) * self.k_out[k]) * inv;
        }
        r[n] = self.reg * (v - self.priors.volume) / self.priors.volume;
        r[n + 1] = self.reg * (a_l - self.priors.leak) / self.leak_scale;
        Some(r)
    }
}

/// Nonnegative least squares for `y ≈ x_c·k_in − x_e·k_out`.
fn ratio_guess(y: &[f64], k_in: &[f64], k_out: &[f64]) -> (f64, f64) {
    let g = gram(k_in, k_out);
    let b = Vector2::new(
        y.iter().zip(k_in).map(|(y, a)| y * a).sum::<f64>(),
        -y.iter().zip(k_out).map(|(y, a)| y * a).sum::<f64>(),
    );
    let sse = |x: Vector2<f64>| -> f64 { (x.transpose() * g * x)[0] - 2.0 * x.dot(&b) };
    let mut best = (Vector2::zeros(), 0.0);
    let mut consider = |x: Vector2<f64>| {
        if x[0] >= 0.0 && x[1] >= 0.0 && x.iter().all(|v| v.is_finite()) {
            let s = sse(x);
            if s < best.1 {
                best = (x, s);
            }
        }
    };
    if let Some(inv) = g.try_inverse() {
        consider(inv * b);
    }
    if g[(0, 0)] > 0.0 {
        consider(Vector2::new(b[0] / g[(0, 0)], 0.0));
    }
    if g[(1, 1)] > 0.0 {
        consider(Vector2::new(0.0, b[1] / g[(1, 1)]));
    }
    (best.0[0], best.0[1])
}

/// Gram matrix of the regressor pair `(k_in, −k_out)`.
fn gram(k_in: &[f64], k_out: &[f64]) -> Matrix2<f64> {
    let mut g = Matrix2::zeros();
    for (a, b) in k_in.iter().zip(k_out) {
        g[(0, 0)] += a * a;
        g[(0, 1)] -= a * b;
        g[(1, 1)] += b * b;
    }
    g[(1, 0)] = g[(0, 1)];
    g
}

/// Relative standard deviations of the two identifiable ratios given the
/// residual level `sigma`. Infinite when the information matrix is singular.
fn ratio_uncertainty(k_in: &[f64], k_out: &[f64], x: (f64, f64), sigma: f64) -> (f64, f64) {
    let g = gram(k_in, k_out);
    let tr = g.trace();
    let det = g.determinant();
    if !(tr > 0.0) || det <= 1e-12 * tr * tr {
        return (f64::INFINITY, f64::INFINITY);
    }
    let cov = g.try_inverse().map(|m| m * sigma * sigma);
    let Some(cov) = cov else { return (f64::INFINITY, f64::INFINITY) };
    let rel = |var: f64, val: f64| if val > 0.0 { var.max(0.0).sqrt() / val } else { f64::INFINITY };
    (rel(cov[(0, 0)], x.0), rel(cov[(1, 1)], x.1))
}

/// Identifiability threshold on the relative standard deviation of the
/// two ratios.
pub const MAX_REL_STD: f64 = 0.5;

/// Bound-constrained least-squares fit of inlet, exhaust and leak areas and
/// the chamber volume to one segment.
pub fn fit_segment(
    seg: &Segment,
    g: &GasConstants,
    ambient: f64,
    priors: &SegmentPriors,
    settings: &LmSettings,
) -> Result<SegmentFit> {
    priors.validate()?;
    if !(ambient > 0.0 && ambient.is_finite()) {
        return Err(Error::InvalidInput(format!("ambient pressure must be positive, got {ambient}")));
    }
    let n = seg.len();
    let k = g.polytropic_index * g.rs_t();
    let (f_in, f_out) = seg.fluxes(ambient, g);
    let k_in: Vec<f64> = f_in.iter().map(|f| k * f).collect();
    let k_out: Vec<f64> = f_out.iter().map(|f| k * f).collect();
    let rms_rate = (seg.p_dot.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
    let scale = if rms_rate > 0.0 { rms_rate } else { 1.0 };
    let problem = SegmentProblem {
        p_dot: &seg.p_dot,
        k_in,
        k_out,
        scale,
        priors: *priors,
        reg: (priors.weight * n as f64).sqrt(),
        leak_scale: priors.leak.max(1e-9),
    };

    let (x_c, x_e) = ratio_guess(&seg.p_dot, &problem.k_in, &problem.k_out);
    let v0 = priors.volume;
    let out0 = x_e * v0;
    let a_l0 = priors.leak.min(out0);
    let x0 = problem.pack(x_c * v0, out0 - a_l0, a_l0, v0);
    let initial_residual = problem.data_rms(problem.unpack(&x0));

    let initial_cost = problem.residuals(&x0).map_or(f64::INFINITY, |r| 0.5 * r.norm_squared());
    // Parameters pinned at a bound converge slowly under the squared
    // parameterization; the best iterate is kept and flagged.
    let (x, cost, iterations, converged) = match lm::minimize(&problem, x0, settings) {
        Ok(r) => (r.x, r.cost, r.iterations, true),
        Err(Error::NonConvergence { iterations, best_cost, best }) if best_cost.is_finite() => {
            (DVector::from_vec(best), best_cost, iterations, false)
        }
        Err(e) => return Err(e),
    };
    let params = problem.unpack(&x);
    let [a_c, a_a, a_l, v] = params;
    let residual = problem.data_rms(params);
    let sigma = residual.max(1e-9 * rms_rate).max(f64::MIN_POSITIVE);
    let ratios = (a_c / v, (a_a + a_l) / v);
    let (rel_std_inlet, rel_std_exhaust) = ratio_uncertainty(&problem.k_in, &problem.k_out, ratios, sigma);
    let identifiable = rel_std_inlet <= MAX_REL_STD && rel_std_exhaust <= MAX_REL_STD;
    Ok(SegmentFit {
        reading: seg.reading,
        cmd: seg.cmd,
        a_c,
        a_a,
        a_l,
        v,
        residual,
        initial_residual,
        cost,
        initial_cost,
        iterations,
        converged,
        samples: n,
        rel_std_inlet,
        rel_std_exhaust,
        identifiable,
    })
}
