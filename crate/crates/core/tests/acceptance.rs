//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pneusid::actuator::{air200, air37, valve1, GompertzCurve, ValveModel, VolumeMap};
use pneusid::gas::{flux_z, signed_flow};
use pneusid::harness::flow::export_flow_curve;
use pneusid::harness::{area_rms_error, evaluate_predictions, generate_synthetic, EvalConfig, Excitation, Noise, SynthConfig};
use pneusid::sim::rollout;
use pneusid::sysid::{identify, IdentifiedModel, IdentifyConfig};
use pneusid::{ExogenousTrajectory, GasConstants, PneumaticModel, SensorLog, SimSettings, ATMOSPHERIC_PA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUPPLY: f64 = ATMOSPHERIC_PA + 60_000.0;
/// Supply minus ambient, the pressure span the valve can reach.
const SPAN: f64 = 60_000.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn truth() -> PneumaticModel {
    PneumaticModel::from_parts(GasConstants::default(), valve1(), air37())
}

fn quiet() -> Noise {
    Noise { p_sigma: 0.0, src_sigma: 0.0, src_drift: 0.0 }
}

fn validation_logs(truth: &PneumaticModel, noise: Noise, cmd_range: (f64, f64), seed: u64) -> Vec<SensorLog> {
    let cfg = SynthConfig {
        identification: false,
        noise,
        excitation: Excitation { validation_cmd_range: cmd_range, ..Excitation::default() },
        ..SynthConfig::default()
    };
    generate_synthetic(truth, &cfg, seed).expect("validation logs")
}

/// Mean percent-of-range over `logs`.
fn percent(logs: &[SensorLog], model: &PneumaticModel, fixed_range_pa: Option<f64>) -> f64 {
    let cfg = EvalConfig { fixed_range_pa, ..EvalConfig::default() };
    let sum: f64 = logs
        .iter()
        .map(|l| evaluate_predictions(l, model, &cfg).expect("evaluation").percent_of_range)
        .sum();
    sum / logs.len() as f64
}

/// Identification campaign shared by the round-trip and model-use checks.
fn identified() -> &'static (IdentifiedModel, Duration) {
    static CELL: OnceLock<(IdentifiedModel, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let cfg = SynthConfig { validation: false, noise: Noise::default(), ..SynthConfig::default() };
        let logs = generate_synthetic(&truth(), &cfg, 2024).expect("campaign");
        let id = identify(&logs, &IdentifyConfig { cutoff_hz: 3000.0, ..IdentifyConfig::default() }).expect("identify");
        (id, start.elapsed())
    })
}

fn ac1() -> Outcome {
    let g = GasConstants::default();
    let worst = (0..50)
        .map(|i| {
            let p_d = 2e4 + (6e5 - 2e4) * i as f64 / 49.0;
            let expected = g.beta * g.theta * p_d;
            (flux_z(g.theta * p_d, p_d, &g).unwrap() - expected).abs() / expected
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-9, format!("max relative jump {worst:.3e}"))
}

fn ac2() -> Outcome {
    let g = GasConstants::default();
    let grid: Vec<f64> = (0..100).map(|i| 2e4 + (6e5 - 2e4) * i as f64 / 99.0).collect();
    let mut bad = 0;
    for &a in &grid {
        for &b in &grid {
            let ab = signed_flow(a, b, &g).unwrap();
            let ba = signed_flow(b, a, &g).unwrap();
            if ab.to_bits() != (-ba).to_bits() && !(ab == 0.0 && ba == 0.0) {
                bad += 1;
            }
        }
        if signed_flow(a, a, &g).unwrap() != 0.0 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} violations on a 100x100 grid"))
}

/// Largest relative drift of p·vⁿ in a sealed chamber whose volume swings
/// 3:1 sinusoidally for 2 s.
fn adiabatic_drift(settings: &SimSettings) -> f64 {
    let g = GasConstants::default();
    let v_min = 2.3856e-6;
    let sealed = ValveModel::new("sealed", GompertzCurve::flat(0.0), GompertzCurve::flat(0.0));
    let model = PneumaticModel {
        gas: g,
        valve: sealed,
        cylinder: None,
        volume_map: VolumeMap { v0: v_min, slope: 2.0 * v_min },
        leak_area: 0.0,
    };
    let dt = 1e-3;
    let n = 2001;
    let piston: Vec<f64> =
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * 2.0 * i as f64 * dt).cos()).collect();
    let traj = ExogenousTrajectory::from_samples(dt, vec![0.0; n], piston.clone(), vec![SUPPLY; n]).unwrap();
    let p0 = 1.2e5;
    let out = rollout(p0, &traj, &model, settings).unwrap();
    let inv = |p: f64, s: f64| p * model.volume_map.at(s).powf(g.polytropic_index);
    let i0 = inv(p0, piston[0]);
    out.pressure.iter().zip(&piston).map(|(&p, &s)| (inv(p, s) / i0 - 1.0).abs()).fold(0.0, f64::max)
}

fn ac3() -> Outcome {
    let default = adiabatic_drift(&SimSettings::default());
    let base = SimSettings::default();
    let fine = adiabatic_drift(&SimSettings { substep: base.substep.refined(2.0), ..base });
    outcome(
        default <= 1e-4 && fine <= 1e-5,
        format!("drift {default:.3e} default, {fine:.3e} with halved substeps"),
    )
}

fn ac4() -> Outcome {
    let mut model = truth();
    model.volume_map = VolumeMap { v0: 1e-7, slope: 0.0 };
    model.cylinder = None;
    // One command per 5 ms control period.
    let dt = 5e-3;
    let n = 401;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cmd: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 5.0 } else { -5.0 }).collect();
    let traj = ExogenousTrajectory::from_samples(dt, cmd, vec![0.0; n], vec![SUPPLY; n]).unwrap();
    match rollout(ATMOSPHERIC_PA, &traj, &model, &SimSettings::default()) {
        Ok(out) => {
            let ok = out.pressure.iter().all(|p| p.is_finite() && *p > 0.0);
            let (lo, hi) = out.pressure.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &p| (l.min(p), h.max(p)));
            outcome(ok, format!("pressure in [{lo:.0}, {hi:.0}] Pa, {} substeps", out.stats.substeps))
        }
        Err(e) => outcome(false, format!("rollout failed: {e}")),
    }
}

fn ac5() -> Outcome {
    let truth = truth();
    let (id, elapsed) = identified();
    let (inlet, exhaust) = area_rms_error(&truth.valve, &id.valve, 0.3);
    let slope = (id.volume_map.slope / truth.volume_map.slope - 1.0).abs();
    let leak = (id.leak_area / truth.leak_area - 1.0).abs();
    outcome(
        inlet <= 0.03 && exhaust <= 0.03 && slope <= 0.01 && leak <= 0.10 && *elapsed < Duration::from_secs(120),
        format!(
            "areas {:.2}% / {:.2}% RMS, slope {:.3}%, leak {:.2}%, {:.1} s",
            100.0 * inlet,
            100.0 * exhaust,
            100.0 * slope,
            100.0 * leak,
            elapsed.as_secs_f64()
        ),
    )
}

fn ac6() -> Outcome {
    let model = identified().0.to_model(GasConstants::default());
    let logs = validation_logs(&truth(), Noise::default(), (-5.0, 5.0), 6);
    let aware = percent(&logs, &model, None);
    let blind = percent(&logs, &model.clone().with_leak(0.0), None);
    let reduction = 1.0 - aware / blind;
    outcome(
        reduction >= 0.25,
        format!("{aware:.3}% with leak, {blind:.3}% without, {:.0}% lower", 100.0 * reduction),
    )
}

fn ac7() -> Outcome {
    let mut errors = Vec::new();
    for cyl in [air37(), air200()] {
        let truth = PneumaticModel::from_parts(GasConstants::default(), valve1(), cyl);
        let mut mismatched = truth.clone();
        mismatched.valve = mismatched.valve.scaled(1.1);
        mismatched.leak_area *= 1.1;
        let logs = validation_logs(&truth, quiet(), (-5.0, 5.0), 7);
        errors.push(percent(&logs, &mismatched, Some(SPAN)));
    }
    outcome(
        errors[1] > errors[0],
        format!("areas +10%: AIR37 {:.3}%, AIR200 {:.3}% of the supply span", errors[0], errors[1]),
    )
}

fn ac8() -> Outcome {
    let model = identified().0.to_model(GasConstants::default());
    let truth = truth();
    let narrow = percent(&validation_logs(&truth, Noise::default(), (-0.1, 0.1), 8), &model, Some(SPAN));
    let wide = percent(&validation_logs(&truth, Noise::default(), (-3.0, 3.0), 8), &model, Some(SPAN));
    outcome(narrow > wide, format!("cmd in [-0.1, 0.1] {narrow:.3}%, in [-3, 3] {wide:.3}%"))
}

fn ac9() -> Outcome {
    let truth = truth();
    let logs = validation_logs(&truth, quiet(), (-5.0, 5.0), 9);
    let p = percent(&logs, &truth, None);
    outcome(p <= 0.05, format!("{p:.2e}% of range"))
}

fn ac10() -> Outcome {
    let pts = export_flow_curve(&valve1(), &GasConstants::default(), SUPPLY, ATMOSPHERIC_PA, &[0.0]).unwrap();
    let q = pts[0].flow_lpm;
    outcome((1.0 / 3.0..=3.0).contains(&q), format!("{q:.3} l/min at zero command"))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome, Duration); 10] = [
        ("critical-ratio continuity", ac1, Duration::from_secs(1)),
        ("antisymmetry and equilibrium", ac2, Duration::from_secs(1)),
        ("adiabatic invariant", ac3, Duration::from_secs(5)),
        ("small-volume stability", ac4, Duration::from_secs(30)),
        ("identification round trip", ac5, Duration::from_secs(120)),
        ("leak-modeling benefit", ac6, Duration::from_secs(60)),
        ("volume effect", ac7, Duration::from_secs(60)),
        ("deadzone effect", ac8, Duration::from_secs(60)),
        ("self-consistency ceiling", ac9, Duration::from_secs(30)),
        ("flow-curve sanity", ac10, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} AC-{}: {name}: {} ({:.2} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
