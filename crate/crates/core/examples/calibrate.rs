//! Waveform accuracy of one film configuration, for calibration.
//!
//! cargo run --release --example calibrate -- [key=value ...]
//! keys: device, field_scale, time_map, k, subsections, segments, amplitude, seed, out

use std::collections::HashMap;

use skyrc::analysis::pearson;
use skyrc::backend::BackendConfig;
use skyrc::encoding::{SegmentPlan, WaveformSpec};
use skyrc::harness::{h_const_grid, RunOptions};
use skyrc::pipeline::{presets, run_waveform, H_CONST_BAND, WAVEFORM_SAMPLE_RATE};
use skyrc::readout::Ridge;

fn main() {
    let kv: HashMap<String, String> = std::env::args()
        .skip(1)
        .filter_map(|a| a.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let num = |k: &str, d: f64| kv.get(k).map_or(d, |v| v.parse().expect("numeric value"));
    let mut film = presets::device(kv.get("device").map_or("A", String::as_str)).expect("device A..D");
    film.params.field_scale = num("field_scale", film.params.field_scale);
    film.params.anisotropy_k = num("k", film.params.anisotropy_k);
    film.time_map = num("time_map", film.time_map);
    film.params.dt = film.params.max_stable_dt(0.0);
    let specs = h_const_grid(num("subsections", 6.0) as usize, H_CONST_BAND.0, H_CONST_BAND.1, &BackendConfig::Micromagnetic(film));
    let spec = WaveformSpec {
        segments: SegmentPlan::Random { count: num("segments", 20.0) as usize },
        amplitude: num("amplitude", 24.0),
        seed: num("seed", 1.0) as u64,
        ..Default::default()
    };
    let t = std::time::Instant::now();
    let o = run_waveform(&specs, &spec, WAVEFORM_SAMPLE_RATE, &RunOptions::default(), Ridge::default()).unwrap();
    if let Some(dir) = kv.get("out") {
        std::fs::create_dir_all(dir).unwrap();
        o.run.features.write_csv(&std::path::Path::new(dir).join("features.csv")).unwrap();
        o.waveform.protocol.write_csv(&std::path::Path::new(dir).join("protocol.csv")).unwrap();
    }
    let v = o.run.features.voltages();
    let mut min_r = 1.0f64;
    for i in 0..v.cols() {
        for j in i + 1..v.cols() {
            min_r = min_r.min(pearson(&v.column(i), &v.column(j)).unwrap_or(1.0));
        }
    }
    let h: Vec<f64> = (0..v.rows()).map(|k| o.waveform.protocol.values()[k * o.waveform.protocol.len() / v.rows()]).collect();
    let drive_r = pearson(&v.column(0), &h).unwrap_or(0.0);
    println!(
        "seg {:.3} sample {:.3} (train {:.3}) | min column r {:.3}, r(V0, h) {:.3} [{:.0} s]",
        o.report.test_segment_accuracy,
        o.report.test_sample_accuracy,
        o.report.train_sample_accuracy,
        min_r,
        drive_r,
        t.elapsed().as_secs_f64()
    );
}
