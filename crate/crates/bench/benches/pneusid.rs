use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pneusid::actuator::{air37, valve1};
use pneusid::gas::{flux_z, signed_flow};
use pneusid::harness::{generate_synthetic, Excitation, Noise, SynthConfig};
use pneusid::lm::LmSettings;
use pneusid::sim::rollout;
use pneusid::sysid::pipeline::extract_segments;
use pneusid::sysid::{fit_segment, IdentifyConfig, SegmentPriors};
use pneusid::{ExogenousTrajectory, GasConstants, PneumaticModel, SimSettings, ATMOSPHERIC_PA};

const SUPPLY: f64 = ATMOSPHERIC_PA + 60_000.0;

fn flux(c: &mut Criterion) {
    let g = GasConstants::default();
    c.bench_function("flux_z subsonic", |b| b.iter(|| flux_z(black_box(SUPPLY), black_box(ATMOSPHERIC_PA), &g)));
    c.bench_function("signed_flow reverse", |b| b.iter(|| signed_flow(black_box(ATMOSPHERIC_PA), black_box(SUPPLY), &g)));
}

fn simulate(c: &mut Criterion) {
    let model = PneumaticModel::from_parts(GasConstants::default(), valve1(), air37());
    let n = 2001;
    let cmd: Vec<f64> = (0..n).map(|i| if (i / 50) % 2 == 0 { 5.0 } else { -5.0 }).collect();
    let piston: Vec<f64> = (0..n).map(|i| 0.0375 * (0.5 + 0.4 * (i as f64 * 1e-3 * 6.0).sin())).collect();
    let traj = ExogenousTrajectory::from_samples(1e-3, cmd, piston, vec![SUPPLY; n]).unwrap();
    let settings = SimSettings::default();
    c.bench_function("rollout 2 s at 1 kHz", |b| b.iter(|| rollout(ATMOSPHERIC_PA, black_box(&traj), &model, &settings)));
}

fn identify_segment(c: &mut Criterion) {
    let truth = PneumaticModel::from_parts(GasConstants::default(), valve1(), air37());
    let cfg = SynthConfig {
        excitation: Excitation { n_volumes: 1, repeats: 1, ..Excitation::default() },
        noise: Noise::default(),
        validation: false,
        ..SynthConfig::default()
    };
    let logs = generate_synthetic(&truth, &cfg, 1).unwrap();
    let id_cfg = IdentifyConfig { cutoff_hz: 3000.0, ..IdentifyConfig::default() };
    let g = GasConstants::default();
    let segments = extract_segments(&logs, &id_cfg, &g).unwrap();
    let seg = segments.iter().max_by_key(|s| s.len()).unwrap();
    let priors = SegmentPriors::new(truth.volume_map.at(seg.reading), truth.leak_area);
    let settings = LmSettings::default();
    c.bench_function("fit_segment", |b| b.iter(|| fit_segment(black_box(seg), &g, ATMOSPHERIC_PA, &priors, &settings)));
}

criterion_group!(benches, flux, simulate, identify_segment);
criterion_main!(benches);
