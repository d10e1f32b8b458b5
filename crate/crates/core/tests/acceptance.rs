//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use radar_gesture::cnn::gradcheck;
use radar_gesture::cnn::{train, Example, InitScheme, NetworkSpec, Profile, StopReason, Tensor, TrainConfig};
use radar_gesture::pipeline::{
    build_dataset, run_experiment, spectral_centroid, split, sweep_distance, sweep_scale, DatasetConfig, SweepConfig,
    SweepRow,
};
use radar_gesture::signal_synth::{
    complex_channels, generate_trajectory, simulate_baseband, AmplitudeModel, GestureClass, GestureParams,
    RadarGeometry, Trajectory, DEFAULT_SAMPLE_RATE, SPEED_OF_LIGHT,
};
use radar_gesture::tfa::{
    cwt, dft_oracle, relative_error, stft, Framing, StftConfig, WaveletSpec, WindowKind, WindowSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn tone(freq: f64, fs: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * freq * i as f64 / fs)).collect()
}

fn noise_signal(n: usize, seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn unshift(col: &[Complex64]) -> Vec<Complex64> {
    let half = col.len() / 2;
    (0..col.len()).map(|k| col[(k + half) % col.len()]).collect()
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        for e in [
            gradcheck::check_conv(seed).unwrap(),
            gradcheck::check_pool_relu(seed).unwrap(),
            gradcheck::check_fc_softmax(seed).unwrap(),
            gradcheck::check_composite(seed).unwrap(),
        ] {
            worst = worst.max(e);
        }
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-4 && t < Duration::from_secs(30),
        format!("worst relative error {worst:.2e} over 10 seeds x 4 checks, {:.1} s", t.as_secs_f64()),
    )
}

fn transforms() -> Outcome {
    let start = Instant::now();
    let fs = 600.0;

    let x = noise_signal(128, 11);
    let single = StftConfig::new(WindowSpec::new(WindowKind::Rectangular, 128), 128).with_framing(Framing::Aligned);
    let m = stft(&x, fs, &single).unwrap();
    let dft_err = relative_error(&unshift(&m.column(0)), &dft_oracle(&x));

    let x = noise_signal(640, 12);
    let blocks = StftConfig::new(WindowSpec::new(WindowKind::Rectangular, 64), 64).with_framing(Framing::Aligned);
    let m = stft(&x, fs, &blocks).unwrap();
    let lhs: f64 = m.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / 64.0;
    let rhs: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let parseval_err = ((lhs - rhs) / rhs).abs();

    let x = tone(25.0, fs, 600);
    let m = stft(&x, fs, &StftConfig::new(WindowSpec::new(WindowKind::Hann, 128), 16)).unwrap();
    let bin = fs / 128.0;
    let stft_ok = m.ridge().iter().all(|&r| (m.freq_axis[r] - 25.0).abs() <= bin);

    let spec = WaveletSpec::geometric(6.0, fs, 5.0, 80.0, 32).unwrap();
    let c = cwt(&x, fs, &spec).unwrap();
    let nearest = (0..c.n_freq)
        .min_by(|&i, &j| (c.freq_axis[i] - 25.0).abs().total_cmp(&(c.freq_axis[j] - 25.0).abs()))
        .unwrap();
    let ridge = c.ridge();
    let cwt_ok = ridge[150..450].iter().all(|&r| r.abs_diff(nearest) <= 1);

    let t = start.elapsed();
    outcome(
        dft_err < 1e-9 && parseval_err < 1e-9 && stft_ok && cwt_ok && t < Duration::from_secs(10),
        format!(
            "dft {dft_err:.1e}, parseval {parseval_err:.1e}, stft tone {}, cwt ridge {}, {:.2} s",
            if stft_ok { "ok" } else { "off" },
            if cwt_ok { "ok" } else { "off" },
            t.as_secs_f64()
        ),
    )
}

fn doppler() -> Outcome {
    let geometry = RadarGeometry::default();
    let fs = DEFAULT_SAMPLE_RATE;
    let v = 0.5;
    let n = 1200;
    // straight up, far enough that both legs recede at nearly v
    let points = (0..n).map(|i| [0.0, 0.0, 2.0 + v * i as f64 / fs]).collect();
    let traj = Trajectory::from_points(fs, points).unwrap();
    let sig = simulate_baseband(&traj, &geometry, AmplitudeModel::Unit, None).unwrap();
    let rx = &complex_channels(&sig).rx[0];
    let cfg = StftConfig::new(WindowSpec::new(WindowKind::Rectangular, n), n)
        .with_n_fft(1 << 15)
        .with_framing(Framing::Aligned);
    let m = stft(rx, fs, &cfg).unwrap();
    let peak_row = m.ridge()[0];
    let peak = m.freq_axis[peak_row];
    let expected = 2.0 * v * geometry.carrier_hz / SPEED_OF_LIGHT;
    let peak_ok = peak < 0.0 && (peak.abs() - expected).abs() <= 0.5;

    let mut circle = Vec::new();
    let mut square = Vec::new();
    for seed in 0..20u64 {
        for (class, out) in [(GestureClass::Circle, &mut circle), (GestureClass::Square, &mut square)] {
            let mut p = GestureParams::new(class, 0.2, 0.2, seed);
            p.speed_jitter = 0.15;
            p.pose_jitter = 0.5;
            let traj = generate_trajectory(&p, &geometry, fs).unwrap();
            let sig = simulate_baseband(&traj, &geometry, AmplitudeModel::InverseR2, None).unwrap();
            out.push(spectral_centroid(&complex_channels(&sig).rx[0], fs).unwrap());
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[9] + v[10]) / 2.0
    };
    let (mc, ms) = (median(&mut circle), median(&mut square));
    outcome(
        peak_ok && ms > 1.5 * mc,
        format!(
            "recession peak {peak:.2} Hz (expected -{expected:.2}); median centroid square {ms:.1} Hz vs circle {mc:.1} Hz (ratio {:.2})",
            ms / mc
        ),
    )
}

fn classification() -> Outcome {
    let start = Instant::now();
    let cfg = DatasetConfig {
        per_class: 125,
        distances: vec![0.2],
        scales: vec![0.2],
        snr_db: 10.0,
        range_scaled_snr: false,
        dims: [64, 64],
        seed: 2024,
        ..DatasetConfig::default()
    };
    let ds = build_dataset(&cfg).unwrap();
    let sp = split(&ds.labels(), 0.8, 2024).unwrap();
    let train_cfg = TrainConfig { max_epochs: 15, seed: 2024, init: InitScheme::FanIn, ..TrainConfig::default() };
    let res = run_experiment(&ds, &sp, Profile::Desk, &train_cfg, None).unwrap();
    let t = start.elapsed();
    outcome(
        res.test_accuracy >= 0.90 && sp.train.len() == 400 && sp.test.len() == 100 && t <= Duration::from_secs(600),
        format!(
            "test accuracy {:.3} on {} test samples (best epoch {} of {}), {:.0} s",
            res.test_accuracy,
            sp.test.len(),
            res.best_epoch,
            res.epochs_run,
            t.as_secs_f64()
        ),
    )
}

fn sweep_base() -> SweepConfig {
    SweepConfig {
        dataset: DatasetConfig {
            per_class: 40,
            distances: vec![0.2],
            scales: vec![0.2],
            snr_db: 28.0,
            range_scaled_snr: true,
            dims: [32, 32],
            ..DatasetConfig::default()
        },
        train: TrainConfig { max_epochs: 30, init: InitScheme::FanIn, ..TrainConfig::default() },
        profile: Profile::Desk,
        train_fraction: 0.8,
    }
}

fn describe(rows: &[SweepRow]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "{} m: epochs {:.1}+-{:.1}, acc {:.3}+-{:.3}",
                r.value, r.epochs_mean, r.epochs_std, r.accuracy_mean, r.accuracy_std
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn distance_sweep() -> Outcome {
    let rows = sweep_distance(&sweep_base(), &[0.1, 0.5], &[0, 1, 2, 3, 4]).unwrap();
    let (near, far) = (&rows[0], &rows[1]);
    outcome(
        far.epochs_mean >= near.epochs_mean && (far.accuracy_mean - near.accuracy_mean).abs() <= 0.08,
        describe(&rows),
    )
}

fn scale_sweep() -> Outcome {
    let rows = sweep_scale(&sweep_base(), &[0.2, 0.5], &[0, 1, 2, 3, 4]).unwrap();
    outcome((rows[0].accuracy_mean - rows[1].accuracy_mean).abs() <= 0.05, describe(&rows))
}

fn lr_schedule() -> Outcome {
    let spec = NetworkSpec {
        layers: vec![
            radar_gesture::cnn::LayerSpec::Flatten,
            radar_gesture::cnn::LayerSpec::FullyConnected { inputs: 2, outputs: 4 },
            radar_gesture::cnn::LayerSpec::Softmax,
        ],
        input_shape: [1, 1, 2],
        n_classes: 4,
    };
    let data: Vec<Example> = (0..16)
        .map(|i| Example {
            input: Tensor::new(vec![1, 1, 2], vec![(i % 4) as f64, (i / 4) as f64]).unwrap(),
            label: i % 4,
        })
        .collect();
    let cfg = TrainConfig {
        plateau_patience: 1,
        plateau_min_delta: f64::INFINITY,
        stop_at_zero_val_error: false,
        ..TrainConfig::default()
    };
    let report = train(&spec, &data, &data, &cfg).unwrap();
    let lrs: Vec<f64> = report.history.iter().map(|m| m.lr).collect();
    let want = [0.01, 0.001, 0.0001, 0.00001];
    let matches = lrs.len() == want.len() && lrs.iter().zip(want).all(|(a, b)| (a / b - 1.0).abs() < 1e-12);
    outcome(
        matches && report.stop_reason == StopReason::LrFloor,
        format!("lr trace {lrs:?}, stop {:?}", report.stop_reason),
    )
}

fn cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_radar-gesture")).args(args).output().unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let data = dir.path().join(format!("{name}-data"));
        let out = dir.path().join(format!("{name}-run"));
        let (data_s, out_s) = (data.to_str().unwrap(), out.to_str().unwrap());
        cli(&["synth", "--per-class", "6", "--dims", "24x24", "--seed", "5", "--out", data_s]);
        cli(&["train", "--data", data_s, "--epochs", "3", "--train-seed", "5", "--out", out_s]);
        (data, out)
    };
    let (d1, r1) = run("a");
    let (d2, r2) = run("b");
    let same = |a: &Path, b: &Path| std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
    let blob = same(&d1.join("samples.f32"), &d2.join("samples.f32"));
    let manifest = same(&d1.join("manifest.json"), &d2.join("manifest.json"));
    let metrics = same(&r1.join("metrics.csv"), &r2.join("metrics.csv"));
    outcome(
        blob && manifest && metrics,
        format!("dataset blob identical: {blob}, manifest identical: {manifest}, metrics identical: {metrics}"),
    )
}

fn main() {
    // the suite is sized for four worker threads
    rayon::ThreadPoolBuilder::new().num_threads(4).build_global().ok();
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("gradient checks", gradients),
        ("transform oracles", transforms),
        ("doppler physics", doppler),
        ("classification", classification),
        ("distance sweep", distance_sweep),
        ("scale sweep", scale_sweep),
        ("learning-rate schedule", lr_schedule),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {} {:<24} {}  [{:.1} s] {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
