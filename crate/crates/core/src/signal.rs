//! Two-source array scenes.
//!
//! A persistent BPSK interferer and a BPSK signal of interest (switched on at
//! a fixed onset) impinge on a half-wavelength uniform linear array, plus
//! circular white Gaussian noise. The received matrix is then passed through
//! an element-wise `tanh` compression to model amplifier saturation.
//!
//! Randomness is drawn from ChaCha8 with one stream per component (see
//! [`RngStream`]) so that, for a fixed seed, switching the SOI off leaves the
//! interferer and noise realizations untouched.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, SnapshotMatrix};

/// Generation parameters for one scene.
/// Missing fields take their setup (a) defaults when deserializing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub num_antennas: usize,
    pub num_samples: usize,
    pub window_k: usize,
    /// First sample index (0-based) at which the SOI is present.
    pub onset: usize,
    pub dir_interferer: f64,
    pub dir_soi: f64,
    pub inr_db: f64,
    pub snr_db: f64,
    pub noise_variance: f64,
    pub samples_per_symbol: usize,
    /// Residual carrier left on both sources, in cycles per sample. The
    /// carrier phase sets how a sample's energy splits between I and Q and
    /// therefore how hard each sample is clipped.
    pub carrier_cycles_per_sample: f64,
    /// Nonlinearity drive in `tanh(αx)/α`.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    /// Setup (a): four elements, 2000 samples, 40 dB INR, 15 dB SNR.
    fn default() -> Self {
        Self {
            num_antennas: 4,
            num_samples: 2000,
            window_k: 48,
            onset: 1000,
            dir_interferer: -0.5,
            dir_soi: 0.5,
            inr_db: 40.0,
            snr_db: 15.0,
            noise_variance: 1.0,
            samples_per_symbol: 2,
            carrier_cycles_per_sample: DEFAULT_CARRIER_CYCLES,
            alpha: DEFAULT_ALPHA_SETUP_A,
            seed: 1,
        }
    }
}

/// Residual carrier used by both setups unless overridden.
pub const DEFAULT_CARRIER_CYCLES: f64 = 0.13;
/// Drive used for setup (a) unless overridden.
pub const DEFAULT_ALPHA_SETUP_A: f64 = 0.05;
/// Drive used for setup (b) unless overridden.
pub const DEFAULT_ALPHA_SETUP_B: f64 = 0.04;

impl SceneConfig {
    /// Setup (b): 57 dB INR, 37 dB SNR, otherwise as setup (a).
    pub fn setup_b() -> Self {
        Self {
            inr_db: 57.0,
            snr_db: 37.0,
            alpha: DEFAULT_ALPHA_SETUP_B,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_antennas < 2 {
            return fail(format!("num_antennas must be >= 2 (got {})", self.num_antennas));
        }
        if self.window_k == 0 {
            return fail("window_k must be > 0".into());
        }
        if self.window_k > self.onset {
            return fail(format!(
                "window_k <= onset violated ({} > {})",
                self.window_k, self.onset
            ));
        }
        if self.onset >= self.num_samples {
            return fail(format!(
                "onset < num_samples violated ({} >= {})",
                self.onset, self.num_samples
            ));
        }
        for (name, u) in [("dir_interferer", self.dir_interferer), ("dir_soi", self.dir_soi)] {
            if !(-1.0..=1.0).contains(&u) {
                return fail(format!("{name} must lie in [-1, 1] (got {u})"));
            }
        }
        if self.dir_interferer == self.dir_soi {
            return fail("dir_interferer must differ from dir_soi".into());
        }
        if self.inr_db.is_nan() || self.snr_db.is_nan() {
            return fail("inr_db and snr_db must be numbers".into());
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return fail(format!("noise_variance must be > 0 (got {})", self.noise_variance));
        }
        if self.samples_per_symbol == 0 {
            return fail("samples_per_symbol must be >= 1".into());
        }
        if !self.carrier_cycles_per_sample.is_finite() {
            return fail("carrier_cycles_per_sample must be finite".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be > 0 (got {})", self.alpha));
        }
        Ok(())
    }

    /// Amplitude giving a per-element power of `10^(db/10) · σ²`.
    fn gain(&self, db: f64) -> f64 {
        (self.noise_variance * 10f64.powf(db / 10.0)).sqrt()
    }

    pub fn interferer_gain(&self) -> f64 {
        self.gain(self.inr_db)
    }

    pub fn soi_gain(&self) -> f64 {
        self.gain(self.snr_db)
    }
}

/// Array response to a plane wave from direction `u` (sine of the angle
/// off broadside), half-wavelength spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn steering_vector(u: f64, num_antennas: usize) -> SteeringVector {
    SteeringVector(
        (0..num_antennas)
            .map(|m| Complex64::from_polar(1.0, PI * m as f64 * u))
            .collect(),
    )
}

/// Independent ChaCha streams carved out of one scene seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngStream {
    InterfererBits = 0,
    SoiBits = 1,
    Noise = 2,
}

pub fn stream_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Rectangular-pulse BPSK at unit power: one equiprobable bit per symbol,
/// `true → +1`, `false → −1`, held for `samples_per_symbol` samples.
pub fn gen_bpsk<R: RngCore + ?Sized>(
    num_samples: usize,
    samples_per_symbol: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let sps = samples_per_symbol.max(1);
    let mut out = Vec::with_capacity(num_samples);
    while out.len() < num_samples {
        let level = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let n = sps.min(num_samples - out.len());
        out.extend(std::iter::repeat_n(Complex64::new(level, 0.0), n));
    }
    out
}

/// Element-wise `tanh(α·x)/α` on the in-phase and quadrature parts.
pub fn apply_nonlinearity(z: &SnapshotMatrix, alpha: f64) -> SnapshotMatrix {
    z.map(|v| Complex64::new(compress(v.re, alpha), compress(v.im, alpha)))
}

#[inline]
pub fn compress(x: f64, alpha: f64) -> f64 {
    (alpha * x).tanh() / alpha
}

/// `exp(i·2π·ν·t)`, with the phase reduced modulo one cycle first so that
/// long streams keep full precision.
fn carrier_phasor(cycles_per_sample: f64, t: usize) -> Complex64 {
    let turns = (cycles_per_sample * t as f64).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * PI * turns)
}

/// A synthesized scene: the ideal received matrix and its compressed copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub z_linear: SnapshotMatrix,
    pub z_nonlinear: SnapshotMatrix,
    pub soi_active_mask: Vec<bool>,
    pub config: SceneConfig,
}

pub fn synthesize_scene(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let m = config.num_antennas;
    let l = config.num_samples;

    let x1 = steering_vector(config.dir_interferer, m);
    let x2 = steering_vector(config.dir_soi, m);
    let g1 = config.interferer_gain();
    let g2 = config.soi_gain();

    let a1 = gen_bpsk(
        l,
        config.samples_per_symbol,
        &mut stream_rng(config.seed, RngStream::InterfererBits),
    );
    let a2 = gen_bpsk(
        l,
        config.samples_per_symbol,
        &mut stream_rng(config.seed, RngStream::SoiBits),
    );

    let mut noise_rng = stream_rng(config.seed, RngStream::Noise);
    let sigma = (config.noise_variance / 2.0).sqrt();
    let mut z = ComplexMatrix::zeros(m, l);
    // column-major draw order keeps noise for sample t independent of L
    for t in 0..l {
        let active = t >= config.onset;
        let carrier = carrier_phasor(config.carrier_cycles_per_sample, t);
        for i in 0..m {
            let re: f64 = StandardNormal.sample(&mut noise_rng);
            let im: f64 = StandardNormal.sample(&mut noise_rng);
            let mut s = x1.0[i] * a1[t] * g1;
            if active {
                s += x2.0[i] * a2[t] * g2;
            }
            z[(i, t)] = s * carrier + Complex64::new(sigma * re, sigma * im);
        }
    }

    let z_nonlinear = apply_nonlinearity(&z, config.alpha);
    Ok(Scene {
        z_linear: z,
        z_nonlinear,
        soi_active_mask: (0..l).map(|t| t >= config.onset).collect(),
        config: config.clone(),
    })
}
