//! Zero-phase low-pass filtering and numerical differentiation of pressure
//! logs.

use crate::error::{Error, Result};
use crate::harness::log::SensorLog;
use crate::sim::finite_difference;

/// Second-order Butterworth low-pass section (bilinear transform).
#[derive(Clone, Copy, Debug)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn butterworth_lowpass(cutoff_hz: f64, sample_hz: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff_hz / sample_hz).tan();
        let q = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + q * k + k * k);
        let b0 = k * k * norm;
        Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - q * k + k * k) * norm],
        }
    }

    /// Direct form II transposed, state initialized to the steady state of
    /// a constant input `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let mut z2 = (b2 - a2) * x0;
        let mut z1 = (b1 - a1) * x0 + z2;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

/// Samples of padding on each side, also the minimum series length.
pub fn warmup_len(cutoff_hz: f64, sample_hz: f64) -> usize {
    ((3.0 * sample_hz / cutoff_hz).ceil() as usize).max(9)
}

/// Forward-backward Butterworth low-pass with odd reflection padding.
/// Linear signals pass through unchanged.
pub fn lowpass_zero_phase(x: &[f64], dt: f64, cutoff_hz: f64) -> Result<Vec<f64>> {
    let fs = 1.0 / dt;
    if !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * fs) {
        return Err(Error::InvalidInput(format!(
            "cutoff {cutoff_hz} Hz must lie below the Nyquist frequency {} Hz",
            0.5 * fs
        )));
    }
    let pad = warmup_len(cutoff_hz, fs);
    let n = x.len();
    if n <= pad {
        return Err(Error::InvalidInput(format!(
            "series of {n} samples is shorter than the filter warm-up of {} samples",
            pad + 1
        )));
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let f = Biquad::butterworth_lowpass(cutoff_hz, fs);
    f.run(&mut ext);
    ext.reverse();
    f.run(&mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Pressure rate from a log: zero-phase low-pass then central differences,
/// one-sided at the ends. Output length equals the log length.
pub fn estimate_pressure_rate(log: &SensorLog, cutoff_hz: f64) -> Result<Vec<f64>> {
    let smooth = lowpass_zero_phase(&log.p, log.dt, cutoff_hz)?;
    Ok(finite_difference(&smooth, log.dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::LogMeta;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn log_of(p: Vec<f64>, dt: f64) -> SensorLog {
        let n = p.len();
        SensorLog::new(0.0, dt, vec![0.0; n], p, vec![0.0; n], vec![1.6e5; n], LogMeta::default()).unwrap()
    }

    #[test]
    fn constant_pressure_has_zero_rate() {
        let log = log_of(vec![123_456.0; 5000], 1.0 / 32_000.0);
        let rate = estimate_pressure_rate(&log, 200.0).unwrap();
        assert_eq!(rate.len(), 5000);
        assert!(rate.iter().all(|r| r.abs() < 1.0));
    }

    #[test]
    fn ramp_rate_recovered() {
        let dt = 1.0 / 32_000.0;
        let r = 2.5e5;
        let p: Vec<f64> = (0..8000).map(|k| 1.1e5 + r * k as f64 * dt).collect();
        let rate = estimate_pressure_rate(&log_of(p, dt), 200.0).unwrap();
        for &d in &rate[500..7500] {
            assert!((d - r).abs() <= 1e-3 * r, "{d}");
        }
    }

    #[test]
    fn noisy_ramp_rate_recovered() {
        // Slope typical of a small chamber charging through a half-open port.
        let dt = 1.0 / 32_000.0;
        let r = 1e6;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 100.0).unwrap();
        let p: Vec<f64> = (0..32_000).map(|k| 1.1e5 + r * k as f64 * dt + noise.sample(&mut rng)).collect();
        let rate = estimate_pressure_rate(&log_of(p, dt), 200.0).unwrap();
        let inner = &rate[1000..31_000];
        let rms = (inner.iter().map(|d| (d - r).powi(2)).sum::<f64>() / inner.len() as f64).sqrt();
        assert!(rms <= 0.02 * r, "rms {rms}");
    }

    #[test]
    fn short_series_and_bad_cutoff_rejected() {
        let dt = 1.0 / 32_000.0;
        assert!(lowpass_zero_phase(&[1.0; 100], dt, 200.0).is_err());
        assert!(lowpass_zero_phase(&[1.0; 10_000], dt, 20_000.0).is_err());
    }

    #[test]
    fn attenuates_high_frequency() {
        let dt = 1.0 / 32_000.0;
        let x: Vec<f64> = (0..32_000).map(|k| (2.0 * std::f64::consts::PI * 4000.0 * k as f64 * dt).sin()).collect();
        let y = lowpass_zero_phase(&x, dt, 200.0).unwrap();
        assert!(y[1000..31_000].iter().all(|v| v.abs() < 1e-3));
    }
}
