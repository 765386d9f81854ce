//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.
//!
//! `cargo test --release --test acceptance` (or `-- 3 8` to pick criteria).

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use skyrc::analysis::*;
use skyrc::backend::{BackendConfig, GridSpec, MicromagneticConfig};
use skyrc::encoding::*;
use skyrc::harness::{h_const_grid, run_reservoir, RunOptions, SubsectionSpec};
use skyrc::matrix::Matrix;
use skyrc::pipeline::*;
use skyrc::readout::*;
use skyrc::rng::StreamKey;
use skyrc::texture::*;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn data_root() -> std::path::PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(Into::into)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn mnist() -> Vec<MnistImage> {
    let (images, labels) = mnist_test_paths(&data_root());
    load_mnist(&images, &labels).expect("MNIST test set")
}

// 1 ----------------------------------------------------------------------

/// Plain gradient descent on `‖Xw − L‖² + λ‖w‖²`, written without the
/// library's linear algebra.
fn descend(x: &[Vec<f64>], l: &[Vec<f64>], lambda: f64) -> (Vec<Vec<f64>>, f64) {
    let (k, f, c) = (x.len(), x[0].len(), l[0].len());
    let mut g = vec![vec![0.0; f]; f];
    let mut b = vec![vec![0.0; c]; f];
    for r in 0..k {
        for i in 0..f {
            for j in 0..f {
                g[i][j] += x[r][i] * x[r][j];
            }
            for j in 0..c {
                b[i][j] += x[r][i] * l[r][j];
            }
        }
    }
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += lambda;
    }
    // Largest eigenvalue by power iteration, then step 1 / λ_max.
    let mut v = vec![1.0; f];
    let mut top = 0.0;
    for _ in 0..500 {
        let gv: Vec<f64> = g.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        top = gv.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = gv.iter().map(|a| a / top).collect();
    }
    let step = 1.0 / (1.01 * top);
    let mut w = vec![vec![0.0; c]; f];
    let mut norm = f64::INFINITY;
    for _ in 0..2_000_000 {
        let grad: Vec<Vec<f64>> = (0..f)
            .map(|i| (0..c).map(|j| (0..f).map(|m| g[i][m] * w[m][j]).sum::<f64>() - b[i][j]).collect())
            .collect();
        norm = 2.0 * grad.iter().flatten().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-12 {
            break;
        }
        for i in 0..f {
            for j in 0..c {
                w[i][j] -= step * grad[i][j];
            }
        }
    }
    (w, norm)
}

fn readout_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for n in 0..20 {
        let (k, f, c) = if n == 0 { (200, 50, 10) } else { (rng.random_range(60..=200), rng.random_range(1..=50), rng.random_range(1..=10)) };
        let lambda = if n % 2 == 0 { 0.0 } else { rng.random_range(1e-3..1.0) };
        let scale = 1.0 / (k as f64).sqrt();
        let x: Vec<Vec<f64>> =
            (0..k).map(|_| (0..f).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let l: Vec<Vec<f64>> = (0..k).map(|_| (0..c).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let (oracle, grad) = descend(&x, &l, lambda);
        worst_grad = worst_grad.max(grad);
        let xm = Matrix::from_rows(&x).unwrap();
        let lm = Matrix::from_rows(&l).unwrap();
        let fit = fit_readout(&xm, &lm, Ridge::Absolute(lambda)).map_err(|e| e.to_string())?;
        let om = Matrix::from_rows(&oracle).unwrap();
        worst = worst.max(fit.w.max_abs_diff(&om) / om.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let (g, rhs) = normal_equation_residual(&xm, &lm, &fit).unwrap();
        worst_residual = worst_residual.max(g / rhs);
    }
    check(
        worst < 1e-6 && worst_residual < 1e-8 && worst_grad < 1e-12,
        format!("max rel diff vs descent {worst:.1e}, max residual gradient {worst_residual:.1e}, oracle gradient {worst_grad:.1e}"),
    )
}

// 2 ----------------------------------------------------------------------

fn mnist_pipeline() -> Outcome {
    let images = mnist();
    let pool = &images[..2500];
    let specs = mnist_specs(&presets::surrogate_mnist());
    let features = mnist_features(pool, &specs, &MnistEncoding::default(), &RunOptions { seed: 1, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let labels: Vec<u8> = pool.iter().map(|i| i.label).collect();
    let split = SplitSpec { train_n: 2000, test_n: 500, repeats: 5, seed: 1 };
    let report = evaluate_mnist(&features, &labels, 10, split, Ridge::default()).map_err(|e| e.to_string())?;
    let control = evaluate_mnist(&features, &shuffled_labels(&labels, 1), 10, split, Ridge::default()).map_err(|e| e.to_string())?;
    check(
        report.accuracy >= 0.80 && (control.accuracy - 0.10).abs() <= 0.03,
        format!(
            "accuracy {:.3} ± {:.3} (physical device {:.3}), shuffled control {:.3}",
            report.accuracy, report.accuracy_std, report.device_reference_accuracy, control.accuracy
        ),
    )
}

// 3 ----------------------------------------------------------------------

fn waveform_pipeline() -> Outcome {
    let specs = h_const_grid(8, H_CONST_BAND.0, H_CONST_BAND.1, &presets::surrogate_waveform());
    let out = run_waveform(&specs, &WaveformSpec::default(), WAVEFORM_SAMPLE_RATE, &RunOptions { seed: 1, ..Default::default() }, Ridge::default())
        .map_err(|e| e.to_string())?;
    let half = out.report.train_samples;
    let x = out.run.features.values.select_rows(&(0..half).collect::<Vec<_>>());
    let (labels, _) = waveform_targets(&out.waveform, WAVEFORM_SAMPLE_RATE).unwrap();
    let l = Matrix::from_vec(half, 1, labels[..half].to_vec()).unwrap();
    let (g, rhs) = normal_equation_residual(&x, &l, &out.weights).unwrap();
    check(
        out.report.test_segment_accuracy >= 0.95 && g < 1e-8 * rhs,
        format!(
            "test per-segment {:.3}, per-sample {:.3}, residual gradient {:.1e}",
            out.report.test_segment_accuracy,
            out.report.test_sample_accuracy,
            g / rhs
        ),
    )
}

// 4 ----------------------------------------------------------------------

fn feature_shapes() -> Outcome {
    let specs = h_const_grid(41, H_CONST_BAND.0, H_CONST_BAND.1, &presets::surrogate_waveform());
    let w = generate_waveform(&WaveformSpec::default()).unwrap();
    let run = run_reservoir(&specs, &w.protocol, WAVEFORM_SAMPLE_RATE, &RunOptions::default()).map_err(|e| e.to_string())?;
    let wave = run.features.voltages().shape();
    let digit = &mnist()[0];
    let specs = mnist_specs(&presets::surrogate_mnist());
    let run = mnist_digit_run(digit, 0, &specs, &MnistEncoding::default(), &RunOptions::default()).map_err(|e| e.to_string())?;
    let per_digit = run.features.values.shape();
    let flat = run.features.flatten().len();
    check(
        wave == (5000, 41) && per_digit == (176, 9) && flat == 1584,
        format!("waveform {}x{}, digit {}x{}, flattened {flat}", wave.0, wave.1, per_digit.0, per_digit.1),
    )
}

// 5 ----------------------------------------------------------------------

fn preprocessing() -> Outcome {
    let images = mnist();
    let mut bad = 0;
    for im in &images {
        let p = preprocess_mnist(im, MNIST_DRIVE_FREQUENCY, 1.0).unwrap();
        if p.len() != 8800 || (p.duration() - 2.2).abs() > 1e-12 || (p.rate() - 4000.0).abs() > 1e-9 {
            bad += 1;
        }
    }
    let base = preprocess_mnist(&images[0], MNIST_DRIVE_FREQUENCY, 1.0).unwrap();
    let linear = [0.5, 0.25, 2.0].iter().all(|&c| {
        let p = preprocess_mnist(&images[0].scaled(c), MNIST_DRIVE_FREQUENCY, 1.0).unwrap();
        p.values().iter().zip(base.values()).all(|(a, b)| *a == c * b)
    });
    let layout = MnistLayout::default();
    let mut block = vec![0.0; layout.pixels()];
    block[123] = 1.0;
    let single = preprocess_mnist(&uncrop(&block, 0, &layout).unwrap(), MNIST_DRIVE_FREQUENCY, 64.0).unwrap();
    let window = 123 * 20..124 * 20;
    let local = single.values().iter().enumerate().all(|(j, &v)| {
        if window.contains(&j) {
            v == 64.0 * sin_turn(j - window.start, 20)
        } else {
            v == 0.0
        }
    });
    check(
        bad == 0 && linear && local,
        format!("{} protocols with wrong shape of {}, linear {linear}, local {local}", bad, images.len()),
    )
}

// 6 ----------------------------------------------------------------------

fn physics_suite() -> Outcome {
    let mut failures = Vec::new();
    let p = MaterialParams { dmi_d: 0.45, anisotropy_k: 0.3, field_scale: 0.01, damping_alpha: 0.3, temperature: 0.0, dt: 0.01, ..Default::default() };

    // Field vs central differences of the energy along both tangent
    // directions of every spin (rotations keep the spins unit length).
    let lat = seed_texture::<f64>(&Texture::Random { seed: 5 }, 8, 8).unwrap();
    let analytic = effective_field(&lat, &p, 17.0);
    let mut worst: f64 = 0.0;
    let eps = 1e-5;
    for y in 0..lat.ny() {
        for x in 0..lat.nx() {
            let m = lat.spin(x, y);
            let helper = if m.z.abs() < 0.9 { Vec3::new(0.0, 0.0, 1.0) } else { Vec3::new(1.0, 0.0, 0.0) };
            let t1 = m.cross(helper).normalized();
            let t2 = m.cross(t1);
            let h = analytic[lat.index(x, y)];
            for t in [t1, t2] {
                let energy = |angle: f64| {
                    let mut l = lat.clone();
                    l.set_spin(x, y, m * angle.cos() + t * angle.sin());
                    total_energy(&l, &p, 17.0)
                };
                let numeric = -(energy(eps) - energy(-eps)) / (2.0 * eps);
                worst = worst.max((numeric - h.dot(t)).abs() / h.norm().max(1.0));
            }
        }
    }
    if worst > 1e-6 {
        failures.push(format!("gradient rel err {worst:.1e}"));
    }

    // T = 0 energy never increases.
    let mut lat = seed_texture::<f64>(&Texture::Random { seed: 4 }, 24, 24).unwrap();
    let mut integ = LlgIntegrator::new(lat.len());
    let mut rng = StreamKey::default().rng();
    let mut e = total_energy(&lat, &p, 5.0);
    let mut rises = 0;
    for _ in 0..500 {
        integ.step(&mut lat, &p, 5.0, &mut rng).unwrap();
        let e2 = total_energy(&lat, &p, 5.0);
        rises += usize::from(e2 > e + 1e-12 * e.abs());
        e = e2;
    }
    if rises > 0 {
        failures.push(format!("{rises} energy increases at T = 0"));
    }

    // Aligned uniform state is a fixed point.
    let mut lat = seed_texture::<f64>(&Texture::UniformUp, 16, 16).unwrap().with_boundary(Boundary::Periodic);
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        let before = lat.clone();
        integ = LlgIntegrator::new(lat.len());
        integ.step(&mut lat, &p, 20.0, &mut rng).unwrap();
        for (a, b) in lat.spins().iter().zip(before.spins()) {
            drift = drift.max((*a - *b).norm());
        }
    }
    if drift >= 1e-10 {
        failures.push(format!("uniform drift {drift:.1e}/step"));
    }

    // Macrospin precession and damping.
    let q = MaterialParams { dmi_d: 0.0, anisotropy_k: 0.0, field_scale: 0.02, damping_alpha: 0.2, temperature: 0.0, dt: 0.01, ..Default::default() };
    let (h_oe, theta0, phi0) = (40.0, 1.1f64, 0.3f64);
    let h = q.field_scale * h_oe;
    let mut lat = SpinLattice::uniform(8, 8, 1.0, Vec3::new(theta0.sin() * phi0.cos(), theta0.sin() * phi0.sin(), theta0.cos())).unwrap();
    let mut integ = LlgIntegrator::new(lat.len());
    let mut macro_err: f64 = 0.0;
    for step in 1..=500 {
        integ.step(&mut lat, &q, h_oe, &mut rng).unwrap();
        let t = step as f64 * q.dt;
        let theta = 2.0 * ((theta0 / 2.0).tan() * (-q.damping_alpha * h * t).exp()).atan();
        let phi = phi0 + h * t;
        let expect = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        macro_err = macro_err.max((lat.spins()[0] - expect).norm());
    }
    if macro_err > 1e-4 {
        failures.push(format!("macrospin err {macro_err:.1e}"));
    }

    // Seeded skyrmion charge.
    let sk = seed_texture::<f64>(&Texture::Skyrmion(SkyrmionSeed::new(32.0, 32.0, 6.0)), 64, 64).unwrap();
    let charge = topological_charge(&sk);
    if (charge + 1.0).abs() > 1e-2 {
        failures.push(format!("Q = {charge}"));
    }

    // Seven small disks and one large block.
    let mut spins = vec![Vec3::up(); 64 * 64];
    for &(cx, cy) in &[(6, 6), (16, 6), (26, 6), (6, 16), (16, 16), (26, 16), (6, 26)] {
        for y in 0..64i64 {
            for x in 0..64i64 {
                if (x - cx).pow(2) + (y - cy).pow(2) <= 4 {
                    spins[(y * 64 + x) as usize] = -Vec3::up();
                }
            }
        }
    }
    for y in 34..64 {
        for x in 40..60 {
            spins[y * 64 + x] = -Vec3::up();
        }
    }
    let disks = SpinLattice::from_spins(64, 64, 0.625, spins).unwrap();
    let count = count_skyrmions(&disks, 0.0, SKYRMION_MAX_AREA_UM2).skyrmion_count;
    if count != 7 {
        failures.push(format!("counted {count} of 7"));
    }

    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("grad {worst:.1e}, drift {drift:.1e}, macrospin {macro_err:.1e}, Q {charge:.4}, count {count}")
        } else {
            failures.join("; ")
        },
    )
}

// 7 ----------------------------------------------------------------------

const PROBE_H_CONST: f64 = 1.12;
const PROBE_AMPLITUDE: f64 = 24.0;

fn memory() -> Outcome {
    let a = presets::device("A").unwrap();
    let spec = ProbeSpec { tail: 0.2, seed: 1, ..Default::default() };
    let m = memory_probe(&a, PROBE_H_CONST, PROBE_AMPLITUDE, &spec).map_err(|e| e.to_string())?;
    check(
        m.signal_to_noise() > 5.0,
        format!("divergence {:.4} vs noise floor {:.4} ({:.1}x)", m.divergence, m.noise_floor, m.signal_to_noise()),
    )
}

fn nonlinearity() -> Outcome {
    let a = presets::device("A").unwrap();
    let spec = ProbeSpec { tail: 0.2, seed: 1, ..Default::default() };
    let n = nonlinearity_probe(&a, PROBE_H_CONST, &[12.0, 24.0, 36.0, 48.0, 60.0], 2.5, &spec).map_err(|e| e.to_string())?;
    check(
        n.nonlinear,
        format!("relative residual {:.1}% of linear fit, sign change {}", 100.0 * n.relative_residual, n.sign_change),
    )
}

fn fading() -> Outcome {
    let a = presets::device("A").unwrap();
    let spec = ProbeSpec { tail: 10.0, seed: 1, ..Default::default() };
    let f = fading_probe(&a, PROBE_H_CONST, PROBE_AMPLITUDE, 25, &spec).map_err(|e| e.to_string())?;
    check(
        f.horizon.is_some() && a.params.temperature > 0.0,
        format!("T = {}, horizon {:?} s (peak deviation {:.3})", a.params.temperature, f.horizon, f.peak_deviation),
    )
}

fn regime_rank(device: &MicromagneticConfig, seed: u64) -> Result<usize, String> {
    let specs = h_const_grid(6, H_CONST_BAND.0, H_CONST_BAND.1, device);
    let w = WaveformSpec { segments: SegmentPlan::Random { count: 20 }, ..Default::default() };
    let w = generate_waveform(&w).map_err(|e| e.to_string())?;
    let run = run_reservoir(&specs, &w.protocol, WAVEFORM_SAMPLE_RATE, &RunOptions { seed, ..Default::default() })
        .map_err(|e| e.to_string())?;
    Ok(dimensionality_report(&run.features.voltages(), DEFAULT_SV_THRESHOLD).map_err(|e| e.to_string())?.effective_rank)
}

fn dimensionality() -> Outcome {
    let (sky, ferro) = (presets::device("A").unwrap(), presets::ferro_device());
    let mut pairs = Vec::new();
    for seed in 1..=3 {
        pairs.push((regime_rank(&sky, seed)?, regime_rank(&ferro, seed)?));
    }
    check(
        pairs.iter().all(|(s, f)| s >= f),
        format!("effective rank (skyrmion, ferro) per seed {pairs:?} at {DEFAULT_SV_THRESHOLD} threshold"),
    )
}

fn correlation() -> Outcome {
    let spec = SweepSpec {
        devices: presets::DEVICE_DMI.iter().map(|(n, _)| (n.to_string(), presets::device(n).unwrap())).collect(),
        amplitudes: vec![24.0, 48.0],
        waveform: WaveformSpec::default(),
        subsections: 6,
        h_const_band: H_CONST_BAND,
        sv_threshold: DEFAULT_SV_THRESHOLD,
    };
    let report = device_sweep(&spec, &RunOptions { seed: 1, ..Default::default() }, Ridge::default()).map_err(|e| e.to_string())?;
    let points: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{}@{}:{:.1}/{:.2}", p.device, p.amplitude, p.mean_count, p.report.test_segment_accuracy))
        .collect();
    let r = report.correlation;
    check(
        r.is_some_and(|r| r > 0.0) && report.points.len() >= 8,
        format!("r = {r:?} (physical devices {}) over [{}] (count/accuracy)", report.device_reference_correlation, points.join(" ")),
    )
}

// 8 ----------------------------------------------------------------------

fn determinism() -> Outcome {
    let w = generate_waveform(&WaveformSpec { segments: SegmentPlan::Random { count: 10 }, ..Default::default() }).unwrap();
    let sur = BackendConfig::Surrogate(presets::surrogate_waveform());
    let mut film = MicromagneticConfig { grid: GridSpec { nx: 24, ny: 24, ..Default::default() }, equilibration_steps: 500, time_map: 10.0, ..Default::default() };
    film.params.temperature = 0.01;
    let mm = BackendConfig::Micromagnetic(film);
    let specs: Vec<SubsectionSpec> = h_const_grid(3, -1.0, 1.0, &sur).into_iter().chain(
        h_const_grid(3, -1.0, 1.0, &mm).into_iter().map(|s| SubsectionSpec { id: format!("M{}", s.id), ..s }),
    ).collect();
    let run = |workers| {
        let opts = RunOptions { seed: 7, workers, snapshot_interval: Some(0.5), ..Default::default() };
        let out = run_reservoir(&specs, &w.protocol, WAVEFORM_SAMPLE_RATE, &opts).unwrap();
        let (labels, segments) = waveform_targets(&w, WAVEFORM_SAMPLE_RATE).unwrap();
        let report = evaluate_waveform(&out.features.values, &labels, &segments, Ridge::default()).unwrap().0;
        (out.features, out.snapshots, report)
    };
    let (a, b, c) = (run(1), run(4), run(1));
    let bits = |m: &Matrix<f64>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let same_run = bits(&a.0.values) == bits(&b.0.values) && a.1 == b.1 && a.2 == b.2 && bits(&a.0.values) == bits(&c.0.values);

    let images = &mnist()[..12];
    let specs = mnist_specs(&presets::surrogate_mnist());
    let feats = |workers| mnist_features(images, &specs, &MnistEncoding::default(), &RunOptions { seed: 3, workers, ..Default::default() }).unwrap();
    let same_mnist = bits(&feats(1)) == bits(&feats(3));
    check(same_run && same_mnist, format!("waveform run bit-identical over 1/4/1 workers: {same_run}; MNIST features over 1/3: {same_mnist}"))
}

fn main() {
    let criteria = [
        Criterion { id: "1", title: "readout exactness", budget: Duration::from_secs(10), run: readout_exactness },
        Criterion { id: "2", title: "MNIST desk pipeline", budget: Duration::from_secs(600), run: mnist_pipeline },
        Criterion { id: "3", title: "waveform desk pipeline", budget: Duration::from_secs(120), run: waveform_pipeline },
        Criterion { id: "4", title: "feature shapes", budget: Duration::MAX, run: feature_shapes },
        Criterion { id: "5", title: "preprocessing fidelity", budget: Duration::MAX, run: preprocessing },
        Criterion { id: "6", title: "physics unit suite", budget: Duration::from_secs(60), run: physics_suite },
        Criterion { id: "7a", title: "memory", budget: Duration::MAX, run: memory },
        Criterion { id: "7b", title: "nonlinearity", budget: Duration::MAX, run: nonlinearity },
        Criterion { id: "7c", title: "fading", budget: Duration::MAX, run: fading },
        Criterion { id: "7d", title: "dimensionality", budget: Duration::MAX, run: dimensionality },
        Criterion { id: "7e", title: "count/accuracy correlation", budget: Duration::MAX, run: correlation },
        Criterion { id: "8", title: "determinism", budget: Duration::MAX, run: determinism },
    ];
    let picked: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: &str| picked.is_empty() || picked.iter().any(|p| id.starts_with(p.as_str()));
    let mut failed = 0;
    let mut physics_total = Duration::ZERO;
    for c in criteria.iter().filter(|c| selected(c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        if c.id.starts_with('7') {
            physics_total += took;
        }
        let over = took > c.budget;
        let (tag, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {:.0} s budget", c.budget.as_secs_f64())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        failed += usize::from(tag == "FAIL");
        println!("criterion {:<3} {tag} {:<28} {detail} [{:.1} s]", c.id, c.title, took.as_secs_f64());
    }
    if selected("7") {
        let ok = physics_total <= Duration::from_secs(30 * 60);
        failed += usize::from(!ok);
        println!("criterion 7   {} micromagnetic budget        {:.1} of 1800 s", if ok { "PASS" } else { "FAIL" }, physics_total.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} failing");
        std::process::exit(1);
    }
}
