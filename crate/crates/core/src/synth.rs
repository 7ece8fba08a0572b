//! Seeded synthetic recordings: a smooth 2-D latent velocity drives
//! cosine-tuned Poisson channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{SpikeStream, Trajectory, DEFAULT_BIN_MS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub channels: usize,
    pub duration_steps: usize,
    /// Expected spikes per bin for a unit-strength tuning response.
    pub rate_scale: f64,
    /// Low-pass coefficient in `(0, 1]`; smaller is smoother.
    pub smoothness: f64,
    pub seed: u64,
    pub bin_ms: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            channels: 96,
            duration_steps: 2000,
            rate_scale: 0.5,
            smoothness: 0.05,
            seed: 0,
            bin_ms: DEFAULT_BIN_MS,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::InvalidConfig(
                "synthetic data needs >= 1 channel".into(),
            ));
        }
        if !(self.rate_scale >= 0.0 && self.rate_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rate_scale must be >= 0, got {}",
                self.rate_scale
            )));
        }
        if !(self.smoothness > 0.0 && self.smoothness <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothness must be in (0, 1], got {}",
                self.smoothness
            )));
        }
        if !(self.bin_ms > 0.0 && self.bin_ms.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bin_ms must be > 0, got {}",
                self.bin_ms
            )));
        }
        Ok(())
    }
}

/// Preferred direction, baseline and gain of one channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tuning {
    pub direction: f64,
    pub baseline: f64,
    pub gain: f64,
}

impl Tuning {
    /// Rectified response, before `rate_scale`.
    pub fn response(&self, v: [f64; 2]) -> f64 {
        let drive =
            self.baseline + self.gain * (self.direction.cos() * v[0] + self.direction.sin() * v[1]);
        drive.max(0.0)
    }
}

/// Latent velocity: white noise filtered twice by a first-order low-pass,
/// then standardized per dimension.
pub fn latent_velocity(steps: usize, smoothness: f64, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut v = Vec::with_capacity(steps);
    let (mut a, mut b) = ([0.0f64; 2], [0.0f64; 2]);
    for _ in 0..steps {
        for d in 0..2 {
            let x: f64 = normal.sample(rng);
            a[d] += smoothness * (x - a[d]);
            b[d] += smoothness * (a[d] - b[d]);
        }
        v.push(b);
    }
    for d in 0..2 {
        let n = steps.max(1) as f64;
        let mean = v.iter().map(|s| s[d]).sum::<f64>() / n;
        let std = (v.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for s in &mut v {
            s[d] = if std > 0.0 { (s[d] - mean) / std } else { 0.0 };
        }
    }
    v
}

/// Deterministic given the spec. The latent and the tuning curves depend
/// only on the seed, never on `rate_scale`.
pub fn gen_synth(spec: &SynthSpec) -> Result<(SpikeStream, Trajectory<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let latent = latent_velocity(spec.duration_steps, spec.smoothness, &mut rng);
    let tuning: Vec<Tuning> = (0..spec.channels)
        .map(|_| Tuning {
            direction: rng.random_range(0.0..std::f64::consts::TAU),
            baseline: rng.random_range(0.0..0.5),
            gain: rng.random_range(0.5..1.5),
        })
        .collect();

    let mut counts_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    counts_rng.set_stream(1);
    let mut data = Vec::with_capacity(spec.channels * spec.duration_steps);
    for v in &latent {
        for t in &tuning {
            let rate = spec.rate_scale * t.response(*v);
            let count = if rate > 0.0 {
                Poisson::new(rate)
                    .expect("positive finite rate")
                    .sample(&mut counts_rng)
            } else {
                0.0
            };
            data.push(count.min(u8::MAX as f64) as u8);
        }
    }
    let spikes = SpikeStream::from_time_major(spec.channels, data, spec.bin_ms)?;
    Ok((spikes, Trajectory::new(0.0, spec.bin_ms, latent)))
}
