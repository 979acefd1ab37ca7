use std::io::Cursor;

use proptest::prelude::*;
use truckmotion_core::filters::FilterConfig;
use truckmotion_core::ingest::{live_ingest, parse_log, resample, LogFormat, PositionSample};
use truckmotion_core::kinematics::{process_chain, ChainConfig, KinematicFrame};

fn increasing_samples() -> impl Strategy<Value = Vec<PositionSample>> {
    prop::collection::vec((0.001f64..0.2, -5e4f64..5e4, -5e4f64..5e4, 0.0f64..3000.0), 2..120).prop_map(|rows| {
        let mut t = 0.0;
        rows.into_iter()
            .map(|(dt, x, y, z)| {
                t += dt;
                PositionSample::new(t, x, y, z)
            })
            .collect()
    })
}

/// Smooth planar path: a sum of slow sinusoids per axis.
fn smooth_path() -> impl Strategy<Value = Vec<PositionSample>> {
    (
        prop::collection::vec((50.0f64..2000.0, 0.02f64..0.4, 0.0f64..std::f64::consts::TAU), 1..4),
        prop::collection::vec((50.0f64..2000.0, 0.02f64..0.4, 0.0f64..std::f64::consts::TAU), 1..4),
    )
        .prop_map(|(xs, ys)| {
            let eval = |terms: &[(f64, f64, f64)], t: f64| {
                terms
                    .iter()
                    .map(|(a, f, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                    .sum::<f64>()
            };
            (0..800)
                .map(|k| {
                    let t = k as f64 * 0.02;
                    PositionSample::new(t, eval(&xs, t), eval(&ys, t), 1500.0)
                })
                .collect()
        })
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

fn assert_close(a: &[KinematicFrame], b: &[KinematicFrame], speed_rel: f64, accel_rel: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.len(), b.len());
    let speed_scale = max_abs(a.iter().map(|f| f.speed)).max(1.0);
    let accel_scale = max_abs(a.iter().map(|f| f.accel)).max(1.0);
    for (fa, fb) in a.iter().zip(b) {
        prop_assert!((fa.speed - fb.speed).abs() <= speed_rel * speed_scale, "{} vs {}", fa.speed, fb.speed);
        prop_assert!((fa.accel - fb.accel).abs() <= accel_rel * accel_scale, "{} vs {}", fa.accel, fb.accel);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batch_and_stream_ingest_agree(samples in increasing_samples()) {
        let text: String = samples.iter().map(|s| s.to_json_line() + "\n").collect();
        let batch = parse_log(text.as_bytes(), LogFormat::Jsonl).unwrap();
        let mut seen = Vec::new();
        let session = live_ingest(Cursor::new(text.as_bytes()), |s| seen.push(s.clone())).unwrap();
        let snapshot = session.snapshot();
        prop_assert_eq!(&batch, snapshot.as_ref());
        prop_assert_eq!(&batch, &seen);
        prop_assert_eq!(batch, samples);
    }

    #[test]
    fn resample_is_idempotent(samples in increasing_samples(), rate in 5.0f64..100.0) {
        let once = resample(&samples, rate, f64::INFINITY).unwrap();
        prop_assume!(once.len() >= 2);
        let twice = resample(&once.to_samples("default"), rate, f64::INFINITY).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn resampled_linear_motion_stays_on_line(
        v in (-3000.0f64..3000.0, -3000.0f64..3000.0),
        start in (-1e4f64..1e4, -1e4f64..1e4),
        times in increasing_samples(),
        rate in 5.0f64..100.0,
    ) {
        let samples: Vec<_> = times
            .iter()
            .map(|s| PositionSample::new(s.t, start.0 + v.0 * s.t, start.1 + v.1 * s.t, 0.0))
            .collect();
        let series = resample(&samples, rate, f64::INFINITY).unwrap();
        let (x, y) = (series.channel("x").unwrap(), series.channel("y").unwrap());
        for k in 0..series.len() {
            let t = series.time(k);
            prop_assert!((x[k] - (start.0 + v.0 * t)).abs() <= 1e-9 * (1.0 + start.0.abs() + (v.0 * t).abs()) * 16.0);
            prop_assert!((y[k] - (start.1 + v.1 * t)).abs() <= 1e-9 * (1.0 + start.1.abs() + (v.1 * t).abs()) * 16.0);
        }
    }

    #[test]
    fn chain_ignores_translation(path in smooth_path(), dx in -1e5f64..1e5, dy in -1e5f64..1e5) {
        let cfg = ChainConfig::default().with_rate(50.0);
        let base = process_chain(&path, &cfg).unwrap();
        let moved: Vec<_> = path.iter().map(|s| PositionSample::new(s.t, s.x + dx, s.y + dy, s.z)).collect();
        let shifted = process_chain(&moved, &cfg).unwrap();
        assert_close(&base, &shifted, 1e-9, 1e-9)?;
    }

    #[test]
    fn chain_speed_ignores_rotation(path in smooth_path(), angle in 0.0f64..std::f64::consts::TAU) {
        let (s, c) = angle.sin_cos();
        for filter in [FilterConfig::butterworth(), FilterConfig::fir(), FilterConfig::savgol()] {
            let cfg = ChainConfig::uniform(filter).with_rate(50.0);
            let base = process_chain(&path, &cfg).unwrap();
            let rotated: Vec<_> = path
                .iter()
                .map(|p| PositionSample::new(p.t, c * p.x - s * p.y, s * p.x + c * p.y, p.z))
                .collect();
            let turned = process_chain(&rotated, &cfg).unwrap();
            assert_close(&base, &turned, 1e-6, 1e-6)?;
        }
    }
}

#[test]
fn half_rate_playback_halves_speed() {
    let ramp = |stretch: f64| -> Vec<PositionSample> {
        (0..1500)
            .map(|k| {
                let t = k as f64 * 0.01 * stretch;
                PositionSample::new(t, 800.0 * t / stretch, -600.0 * t / stretch, 0.0)
            })
            .collect()
    };
    let cfg = ChainConfig::default();
    let fast = process_chain(&ramp(1.0), &cfg).unwrap();
    let slow = process_chain(&ramp(2.0), &cfg).unwrap();
    // interior frames at the same path position, away from padding transients
    for k in 500..1000 {
        let a = fast[k].speed;
        let b = slow[2 * k].speed;
        assert!((a - 1000.0).abs() < 1e-3, "{a}");
        assert!((b - 500.0).abs() < 1e-3, "{b}");
    }
}
