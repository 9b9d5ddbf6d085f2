//! Scene synthesis checked by Monte-Carlo power estimates and by
//! regenerating scenes with components switched off.

use nlglrt::numerics::ComplexMatrix;
use nlglrt::signal::{
    apply_nonlinearity, compress, gen_bpsk, steering_vector, stream_rng, synthesize_scene, RngStream,
    SceneConfig,
};
use nlglrt::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_power(z: &ComplexMatrix) -> f64 {
    z.frobenius_norm_sqr() / (z.rows() * z.cols()) as f64
}

#[test]
fn bpsk_has_unit_power() {
    let s = gen_bpsk(100_000, 2, &mut stream_rng(5, RngStream::SoiBits));
    let p: f64 = s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64;
    assert!((p - 1.0).abs() <= 0.01);
    // equiprobable: the mean level is near zero
    let mean: f64 = s.iter().map(|v| v.re).sum::<f64>() / s.len() as f64;
    assert!(mean.abs() < 0.02, "mean level {mean}");
}

#[test]
fn noise_only_scene_has_configured_variance() {
    for variance in [1.0, 2.5] {
        let cfg = SceneConfig {
            inr_db: f64::NEG_INFINITY,
            snr_db: f64::NEG_INFINITY,
            noise_variance: variance,
            ..SceneConfig::default()
        };
        assert_eq!(cfg.interferer_gain(), 0.0);
        let scene = synthesize_scene(&cfg).unwrap();
        let p = mean_power(&scene.z_linear);
        assert!((p / variance - 1.0).abs() < 0.05, "variance {p} vs {variance}");
    }
}

#[test]
fn interferer_power_matches_inr() {
    for inr_db in [20.0, 40.0, 57.0] {
        let with = SceneConfig {
            inr_db,
            snr_db: f64::NEG_INFINITY,
            ..SceneConfig::default()
        };
        let z = synthesize_scene(&with).unwrap().z_linear;
        let noise = synthesize_scene(&SceneConfig {
            inr_db: f64::NEG_INFINITY,
            ..with.clone()
        })
        .unwrap()
        .z_linear;
        // identical noise draws, so the difference is the interferer alone
        let interferer = ComplexMatrix::from_fn(z.rows(), z.cols(), |i, j| z[(i, j)] - noise[(i, j)]);
        let measured_db = 10.0 * (mean_power(&interferer) / with.noise_variance).log10();
        assert!((measured_db - inr_db).abs() <= 0.5, "{measured_db} dB vs {inr_db} dB");
    }
}

#[test]
fn scene_is_deterministic_and_seed_sensitive() {
    let cfg = SceneConfig::default();
    let a = synthesize_scene(&cfg).unwrap();
    let b = synthesize_scene(&cfg).unwrap();
    assert_eq!(a, b);
    let c = synthesize_scene(&cfg.with_seed(cfg.seed + 1)).unwrap();
    assert_ne!(a.z_linear, c.z_linear);
}

#[test]
fn soi_is_absent_before_onset() {
    let cfg = SceneConfig::default();
    let with_soi = synthesize_scene(&cfg).unwrap();
    let without = synthesize_scene(&SceneConfig {
        snr_db: f64::NEG_INFINITY,
        ..cfg.clone()
    })
    .unwrap();
    for t in 0..cfg.num_samples {
        let same = with_soi.z_linear.column(t) == without.z_linear.column(t);
        assert_eq!(same, t < cfg.onset, "column {t}");
    }
    assert_eq!(
        with_soi.soi_active_mask.iter().filter(|&&a| a).count(),
        cfg.num_samples - cfg.onset
    );
}

#[test]
fn nonlinear_matrix_is_compressed_linear_matrix() {
    let scene = synthesize_scene(&SceneConfig::default()).unwrap();
    assert_eq!(scene.z_nonlinear, apply_nonlinearity(&scene.z_linear, scene.config.alpha));
    assert_eq!(scene.z_nonlinear.rows(), scene.z_linear.rows());
    assert_eq!(scene.z_nonlinear.cols(), scene.z_linear.cols());
}

#[test]
fn tiny_drive_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = ComplexMatrix::from_fn(4, 200, |_, _| {
        Complex64::from_polar(rng.random_range(0.0..10.0), rng.random_range(0.0..std::f64::consts::TAU))
    });
    let out = apply_nonlinearity(&z, 1e-6);
    for (a, b) in z.as_slice().iter().zip(out.as_slice()) {
        assert!((a - b).norm() <= 1e-6 * a.norm().max(1e-300));
    }
}

#[test]
fn strong_drive_saturates_both_components() {
    let z = ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(5.0, 5.0));
    let v = apply_nonlinearity(&z, 100.0)[(0, 0)];
    assert!(v.re.abs() <= 0.01 && v.im.abs() <= 0.01);
    assert!(v.re > 0.0 && v.im > 0.0);
}

#[test]
fn carrier_does_not_change_linear_covariance() {
    let base = SceneConfig::default();
    let with = synthesize_scene(&base).unwrap();
    let without = synthesize_scene(&SceneConfig {
        carrier_cycles_per_sample: 0.0,
        ..base
    })
    .unwrap();
    // a common phase per column leaves every outer product z·zᴴ of the
    // signal part unchanged; noise is drawn identically
    let r1 = nlglrt::numerics::gram(&with.z_linear.column_range(0, 500));
    let r0 = nlglrt::numerics::gram(&without.z_linear.column_range(0, 500));
    let rel = r1.max_abs_diff(&r0) / r0[(0, 0)].re;
    assert!(rel < 0.05, "relative covariance change {rel}");
}

proptest! {
    #[test]
    fn steering_entries_are_unit_modulus(u in -1.0f64..=1.0, m in 1usize..16) {
        let x = steering_vector(u, m);
        prop_assert_eq!(x.len(), m);
        for z in x.entries() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compression_never_exceeds_input_or_ceiling(x in -1e4f64..1e4, alpha in 1e-4f64..10.0) {
        let y = compress(x, alpha);
        prop_assert!(y.abs() <= x.abs() * (1.0 + 1e-12));
        prop_assert!(y.abs() <= (1.0 / alpha) * (1.0 + 1e-12));
        prop_assert!(y * x >= 0.0);
    }

    #[test]
    fn bpsk_stays_on_constellation(n in 1usize..300, sps in 1usize..6, seed in any::<u64>()) {
        let s = gen_bpsk(n, sps, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(s.len(), n);
        for chunk in s.chunks(sps) {
            prop_assert!(chunk.iter().all(|&v| v == chunk[0]));
            prop_assert!(chunk[0] == Complex64::new(1.0, 0.0) || chunk[0] == Complex64::new(-1.0, 0.0));
        }
    }
}
