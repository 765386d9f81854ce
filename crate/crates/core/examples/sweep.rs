//! Device sweep at desk scale: prints one line per (device, amplitude).
//!
//! cargo run --release --example sweep -- [subsections] [amplitudes...]

use skyrc::encoding::WaveformSpec;
use skyrc::harness::RunOptions;
use skyrc::pipeline::{device_sweep, presets, SweepSpec, H_CONST_BAND};
use skyrc::readout::Ridge;

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let subsections = args.first().map_or(6, |&n| n as usize);
    let amplitudes = if args.len() > 1 { args[1..].to_vec() } else { vec![24.0, 48.0] };
    let spec = SweepSpec {
        devices: presets::DEVICE_DMI.iter().map(|(n, _)| (n.to_string(), presets::device(n).unwrap())).collect(),
        amplitudes,
        waveform: WaveformSpec::default(),
        subsections,
        h_const_band: H_CONST_BAND,
        sv_threshold: 0.01,
    };
    let t = std::time::Instant::now();
    let report = device_sweep(&spec, &RunOptions { seed: 1, ..Default::default() }, Ridge::default()).unwrap();
    for p in &report.points {
        println!(
            "{} D={} A={:>4}: n_sk {:6.2} seg {:.3} sample {:.3} rank {}",
            p.device, p.dmi_d, p.amplitude, p.mean_count, p.report.test_segment_accuracy, p.report.test_sample_accuracy, p.dimensionality.effective_rank
        );
    }
    println!("r(segment) {:?} r(sample) {:?}  [{:.0} s]", report.correlation, report.sample_correlation, t.elapsed().as_secs_f64());
}
