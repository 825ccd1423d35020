//! Compressible flow through a thin orifice and the chamber pressure rate.
//!
//! All pressures are absolute pascals. The mass flux functions return
//! kg/(s·m²); multiply by a port area to get a mass flow.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Standard atmospheric pressure, used as the default exhaust sink.
pub const ATMOSPHERIC_PA: f64 = 101_325.0;

/// Raw physical inputs from which the flow coefficients are derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawGas {
    /// kg/mol
    pub molar_mass: f64,
    /// K
    pub temperature: f64,
    /// Pa·m³/(mol·K)
    pub gas_constant: f64,
    pub discharge_coefficient: f64,
    pub compressibility: f64,
    /// Specific heat ratio κ.
    pub kappa: f64,
    /// Polytropic index n of the chamber process. Defaults to `kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polytropic_index: Option<f64>,
}

impl Default for RawGas {
    /// Air at room temperature.
    fn default() -> Self {
        RawGas {
            molar_mass: 0.029,
            temperature: 293.0,
            gas_constant: 8.31,
            discharge_coefficient: 0.72,
            compressibility: 0.99,
            kappa: 1.4,
            polytropic_index: None,
        }
    }
}

/// Physical constants of the thin-port model together with the derived
/// subsonic (`alpha`) and choked (`beta`) flow coefficients and the
/// critical pressure ratio (`theta`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GasRepr", into = "GasRepr")]
pub struct GasConstants {
    pub molar_mass: f64,
    pub temperature: f64,
    pub gas_constant: f64,
    pub discharge_coefficient: f64,
    pub compressibility: f64,
    pub kappa: f64,
    pub polytropic_index: f64,
    pub specific_gas_constant: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

#[derive(Serialize, Deserialize)]
struct GasRepr {
    molar_mass: f64,
    temperature: f64,
    gas_constant: f64,
    discharge_coefficient: f64,
    compressibility: f64,
    kappa: f64,
    polytropic_index: f64,
    // Derived values are written for readability and recomputed on load.
    #[serde(default)]
    specific_gas_constant: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
}

impl TryFrom<GasRepr> for GasConstants {
    type Error = Error;

    fn try_from(r: GasRepr) -> Result<Self> {
        let g = derive_constants(&RawGas {
            molar_mass: r.molar_mass,
            temperature: r.temperature,
            gas_constant: r.gas_constant,
            discharge_coefficient: r.discharge_coefficient,
            compressibility: r.compressibility,
            kappa: r.kappa,
            polytropic_index: Some(r.polytropic_index),
        })?;
        for (name, stored, derived) in [
            ("specific_gas_constant", r.specific_gas_constant, g.specific_gas_constant),
            ("alpha", r.alpha, g.alpha),
            ("beta", r.beta, g.beta),
            ("theta", r.theta, g.theta),
        ] {
            if let Some(s) = stored {
                if ((s - derived) / derived).abs() > 1e-12 {
                    return Err(Error::InvalidConstants(format!(
                        "stored {name} = {s} disagrees with derived {derived}"
                    )));
                }
            }
        }
        Ok(g)
    }
}

impl From<GasConstants> for GasRepr {
    fn from(g: GasConstants) -> Self {
        GasRepr {
            molar_mass: g.molar_mass,
            temperature: g.temperature,
            gas_constant: g.gas_constant,
            discharge_coefficient: g.discharge_coefficient,
            compressibility: g.compressibility,
            kappa: g.kappa,
            polytropic_index: g.polytropic_index,
            specific_gas_constant: Some(g.specific_gas_constant),
            alpha: Some(g.alpha),
            beta: Some(g.beta),
            theta: Some(g.theta),
        }
    }
}

impl Default for GasConstants {
    fn default() -> Self {
        derive_constants(&RawGas::default()).expect("default air constants are valid")
    }
}

impl GasConstants {
    pub fn raw(&self) -> RawGas {
        RawGas {
            molar_mass: self.molar_mass,
            temperature: self.temperature,
            gas_constant: self.gas_constant,
            discharge_coefficient: self.discharge_coefficient,
            compressibility: self.compressibility,
            kappa: self.kappa,
            polytropic_index: Some(self.polytropic_index),
        }
    }

    /// `Rs·T`, the factor converting mass flow to pressure-volume rate.
    pub fn rs_t(&self) -> f64 {
        self.specific_gas_constant * self.temperature
    }
}

/// Evaluates the flow coefficients from the raw physical constants.
pub fn derive_constants(raw: &RawGas) -> Result<GasConstants> {
    let n = raw.polytropic_index.unwrap_or(raw.kappa);
    for (name, v) in [
        ("molar_mass", raw.molar_mass),
        ("temperature", raw.temperature),
        ("gas_constant", raw.gas_constant),
        ("discharge_coefficient", raw.discharge_coefficient),
        ("compressibility", raw.compressibility),
        ("kappa", raw.kappa),
        ("polytropic_index", n),
    ] {
        if !(v.is_finite() && v.is_normal() && v > 0.0) {
            return Err(Error::InvalidConstants(format!("{name} must be finite and positive, got {v}")));
        }
    }
    let k = raw.kappa;
    if k <= 1.0 {
        return Err(Error::InvalidConstants(format!("kappa must exceed 1, got {k}")));
    }
    let zrt = raw.compressibility * raw.gas_constant * raw.temperature;
    let c = raw.discharge_coefficient;
    let m = raw.molar_mass;
    let alpha = c * (2.0 * m / zrt * k / (k - 1.0)).sqrt();
    let beta = c * (k * m / zrt * (2.0 / (k + 1.0)).powf((k + 1.0) / (k - 1.0))).sqrt();
    let theta = ((k + 1.0) / 2.0).powf(k / (k - 1.0));
    Ok(GasConstants {
        molar_mass: m,
        temperature: raw.temperature,
        gas_constant: raw.gas_constant,
        discharge_coefficient: c,
        compressibility: raw.compressibility,
        kappa: k,
        polytropic_index: n,
        specific_gas_constant: raw.gas_constant / m,
        alpha,
        beta,
        theta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowRegime {
    Subsonic,
    Choked,
}

/// Flow regime for upstream pressure `p_u` and downstream `p_d`, oriented so
/// the larger pressure is treated as upstream.
pub fn regime(p_u: f64, p_d: f64, g: &GasConstants) -> FlowRegime {
    let (hi, lo) = if p_u >= p_d { (p_u, p_d) } else { (p_d, p_u) };
    if hi / lo > g.theta {
        FlowRegime::Choked
    } else {
        FlowRegime::Subsonic
    }
}

/// Unsigned mass flux for `p_u >= p_d > 0`. No argument checks.
#[inline]
pub(crate) fn flux_unchecked(p_u: f64, p_d: f64, g: &GasConstants) -> f64 {
    if p_u / p_d > g.theta {
        g.beta * p_u
    } else {
        let r = p_d / p_u;
        let k = g.kappa;
        let rad = r.powf(2.0 / k) - r.powf((k + 1.0) / k);
        g.alpha * p_u * rad.max(0.0).sqrt()
    }
}

/// Signed mass flux, positive from `p_u` towards `p_d`. No argument checks.
#[inline]
pub(crate) fn signed_unchecked(p_u: f64, p_d: f64, g: &GasConstants) -> f64 {
    if p_u >= p_d {
        flux_unchecked(p_u, p_d, g)
    } else {
        -flux_unchecked(p_d, p_u, g)
    }
}

/// Mass flux per unit area through a thin port from `p_u` to `p_d`.
///
/// Only defined on the ordered pair `p_u >= p_d > 0`; use [`signed_flow`]
/// when the direction is not known.
pub fn flux_z(p_u: f64, p_d: f64, g: &GasConstants) -> Result<f64> {
    check_pressure("p_u", p_u)?;
    check_pressure("p_d", p_d)?;
    if p_u < p_d {
        return Err(Error::Precondition(format!(
            "flux_z needs p_u >= p_d, got p_u = {p_u}, p_d = {p_d}"
        )));
    }
    Ok(flux_unchecked(p_u, p_d, g))
}

/// Bidirectional mass flux per unit area. Reverse flow swaps the roles of
/// the two pressures, so `signed_flow(a, b) == -signed_flow(b, a)` exactly.
pub fn signed_flow(p_u: f64, p_d: f64, g: &GasConstants) -> Result<f64> {
    check_pressure("p_u", p_u)?;
    check_pressure("p_d", p_d)?;
    Ok(signed_unchecked(p_u, p_d, g))
}

/// Net mass flow into a chamber at pressure `p` fed from `supply` through
/// the inlet area, vented to `ambient` through the exhaust area and leaking
/// to `ambient` through `a_leak`.
pub fn chamber_mass_flow(
    a_inlet: f64,
    a_exhaust: f64,
    a_leak: f64,
    supply: f64,
    p: f64,
    ambient: f64,
    g: &GasConstants,
) -> Result<f64> {
    for (name, a) in [("a_inlet", a_inlet), ("a_exhaust", a_exhaust), ("a_leak", a_leak)] {
        ensure_finite(name, a)?;
        if a < 0.0 {
            return Err(Error::InvalidInput(format!("{name} must be nonnegative, got {a}")));
        }
    }
    check_pressure("supply", supply)?;
    check_pressure("p", p)?;
    check_pressure("ambient", ambient)?;
    Ok(mass_flow_unchecked(a_inlet, a_exhaust + a_leak, supply, p, ambient, g))
}

#[inline]
pub(crate) fn mass_flow_unchecked(
    a_inlet: f64,
    a_out: f64,
    supply: f64,
    p: f64,
    ambient: f64,
    g: &GasConstants,
) -> f64 {
    let mut m = 0.0;
    if a_inlet != 0.0 {
        m += a_inlet * signed_unchecked(supply, p, g);
    }
    if a_out != 0.0 {
        m -= a_out * signed_unchecked(p, ambient, g);
    }
    m
}

/// Rate of change of chamber pressure for mass inflow `m_dot` and volume
/// change `v_dot`.
pub fn pressure_rate(p: f64, v: f64, v_dot: f64, m_dot: f64, g: &GasConstants) -> Result<f64> {
    ensure_finite("p", p)?;
    ensure_finite("v", v)?;
    ensure_finite("v_dot", v_dot)?;
    ensure_finite("m_dot", m_dot)?;
    if v <= 0.0 {
        return Err(Error::Precondition(format!("chamber volume must be positive, got {v}")));
    }
    Ok(pressure_rate_unchecked(p, v, v_dot, m_dot, g))
}

#[inline]
pub(crate) fn pressure_rate_unchecked(p: f64, v: f64, v_dot: f64, m_dot: f64, g: &GasConstants) -> f64 {
    g.polytropic_index / v * (g.rs_t() * m_dot - p * v_dot)
}

fn check_pressure(name: &str, p: f64) -> Result<()> {
    ensure_finite(name, p)?;
    if p <= 0.0 {
        return Err(Error::InvalidInput(format!("{name} must be a positive absolute pressure, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ATM: f64 = ATMOSPHERIC_PA;

    fn air() -> GasConstants {
        GasConstants::default()
    }

    #[test]
    fn derived_constants_match_hand_evaluation() {
        let g = air();
        // Frozen from a 40-digit evaluation of the closed forms.
        assert_relative_eq!(g.theta, 1.892929158737854, max_relative = 1e-12);
        assert_relative_eq!(g.alpha, 6.607369526475501e-3, max_relative = 1e-12);
        assert_relative_eq!(g.beta, 1.710014746951368e-3, max_relative = 1e-12);
        assert_relative_eq!(g.specific_gas_constant, 8.31 / 0.029, max_relative = 1e-15);
        assert_eq!(g.polytropic_index, g.kappa);
        assert!(g.theta > 1.0 && g.alpha > 0.0 && g.beta > 0.0);
    }

    #[test]
    fn discharge_coefficient_scales_linearly() {
        let base = air();
        let doubled = derive_constants(&RawGas {
            discharge_coefficient: 1.44,
            ..RawGas::default()
        })
        .unwrap();
        assert_relative_eq!(doubled.alpha, 2.0 * base.alpha, max_relative = 1e-15);
        assert_relative_eq!(doubled.beta, 2.0 * base.beta, max_relative = 1e-15);
        assert_eq!(doubled.theta, base.theta);
    }

    #[test]
    fn rejects_bad_constants() {
        for raw in [
            RawGas { molar_mass: 0.0, ..RawGas::default() },
            RawGas { temperature: -1.0, ..RawGas::default() },
            RawGas { kappa: 1.0, ..RawGas::default() },
            RawGas { gas_constant: f64::NAN, ..RawGas::default() },
            RawGas { compressibility: f64::INFINITY, ..RawGas::default() },
            RawGas { discharge_coefficient: 1e-310, ..RawGas::default() },
        ] {
            assert!(matches!(derive_constants(&raw), Err(Error::InvalidConstants(_))));
        }
    }

    #[test]
    fn json_recomputes_and_checks_derived_fields() {
        let g = air();
        let s = serde_json::to_string(&g).unwrap();
        let back: GasConstants = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let tampered = s.replace(&format!("\"alpha\":{}", g.alpha), "\"alpha\":0.007");
        assert!(serde_json::from_str::<GasConstants>(&tampered).is_err());
    }

    #[test]
    fn flux_examples() {
        let g = air();
        assert_eq!(flux_z(ATM, ATM, &g).unwrap(), 0.0);
        assert_relative_eq!(flux_z(3.0 * ATM, ATM, &g).unwrap(), 519.8017327045420, max_relative = 1e-12);
        assert_eq!(regime(3.0 * ATM, ATM, &g), FlowRegime::Choked);
        let at_theta = flux_z(g.theta * ATM, ATM, &g).unwrap();
        assert_relative_eq!(at_theta, g.beta * g.theta * ATM, max_relative = 1e-9);
        assert!(matches!(flux_z(ATM, 2.0 * ATM, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn signed_flow_examples() {
        let g = air();
        assert_eq!(signed_flow(ATM, ATM, &g).unwrap(), 0.0);
        assert_relative_eq!(signed_flow(ATM, 3.0 * ATM, &g).unwrap(), -519.8017327045420, max_relative = 1e-12);
        assert!(signed_flow(f64::NAN, ATM, &g).is_err());
        assert!(signed_flow(ATM, f64::INFINITY, &g).is_err());
    }

    #[test]
    fn signed_flow_sweep_is_monotone_in_downstream_pressure() {
        let g = air();
        let pu = 3.0e5;
        let mut prev = f64::INFINITY;
        for i in 0..=4000 {
            let pd = pu * (0.5 + 1.5 * i as f64 / 4000.0);
            let f = signed_flow(pu, pd, &g).unwrap();
            assert!(f <= prev, "not monotone at p_d = {pd}");
            prev = f;
        }
    }

    #[test]
    fn chamber_mass_flow_examples() {
        let g = air();
        assert_eq!(chamber_mass_flow(0.0, 0.0, 0.0, 161_325.0, 120_000.0, ATM, &g).unwrap(), 0.0);
        let m = chamber_mass_flow(1e-7, 0.0, 0.0, 161_325.0, ATM, ATM, &g).unwrap();
        assert_relative_eq!(m, 2.697248180463813e-5, max_relative = 1e-12);
        // Leak with no pressure difference contributes nothing.
        let with_leak = chamber_mass_flow(1e-7, 0.0, 3e-8, 161_325.0, ATM, ATM, &g).unwrap();
        assert_eq!(with_leak, m);
        assert!(chamber_mass_flow(-1e-9, 0.0, 0.0, 2e5, ATM, ATM, &g).is_err());
    }

    #[test]
    fn pressure_rate_examples() {
        let g = air();
        assert_eq!(pressure_rate(1e5, 1e-5, 0.0, 0.0, &g).unwrap(), 0.0);
        assert_relative_eq!(pressure_rate(1e5, 1e-5, -1e-4, 0.0, &g).unwrap(), 1.4e6, max_relative = 1e-12);
        assert!(matches!(pressure_rate(1e5, 0.0, 0.0, 0.0, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn tiny_chamber_responds_on_microsecond_scale() {
        // 0.1 cm³ chamber vented through a wide-open exhaust port.
        let g = air();
        let p = 161_325.0;
        let m = chamber_mass_flow(0.0, 6.3e-7, 0.0, p, p, ATM, &g).unwrap();
        let rate = pressure_rate(p, 1e-7, 0.0, m, &g).unwrap();
        let tau = p / rate.abs();
        assert!(tau > 1e-6 && tau < 1e-2, "tau = {tau}");
    }

    #[test]
    fn critical_ratio_continuity_grid() {
        let g = air();
        for i in 0..50 {
            let pd = 2e4 + (6e5 - 2e4) * i as f64 / 49.0;
            let sub = flux_z(g.theta * pd, pd, &g).unwrap();
            let choked = g.beta * g.theta * pd;
            assert!(((sub - choked) / choked).abs() <= 1e-9);
        }
    }

    proptest! {
        #[test]
        fn antisymmetric_and_zero_at_equilibrium(a in 1e3f64..1e7, b in 1e3f64..1e7) {
            let g = air();
            prop_assert_eq!(signed_flow(a, b, &g).unwrap(), -signed_flow(b, a, &g).unwrap());
            prop_assert_eq!(signed_flow(a, a, &g).unwrap(), 0.0);
        }

        #[test]
        fn flux_is_homogeneous(pd in 1e4f64..1e6, ratio in 1.0f64..4.0, s in 0.1f64..10.0) {
            let g = air();
            let pu = pd * ratio;
            let base = flux_z(pu, pd, &g).unwrap();
            let scaled = flux_z(s * pu, s * pd, &g).unwrap();
            prop_assert!((scaled - s * base).abs() <= 1e-9 * (s * base).max(1e-12));
        }

        #[test]
        fn pressure_rate_is_linear(p in 5e4f64..6e5, v in 1e-7f64..1e-4, m1 in -1e-3f64..1e-3, m2 in -1e-3f64..1e-3, vd in -1e-3f64..1e-3) {
            let g = air();
            let sum = pressure_rate(p, v, vd, m1 + m2, &g).unwrap();
            let parts = pressure_rate(p, v, vd, m1, &g).unwrap() + pressure_rate(p, v, 0.0, m2, &g).unwrap();
            prop_assert!((sum - parts).abs() <= 1e-9 * sum.abs().max(parts.abs()).max(1.0));
        }
    }
}
