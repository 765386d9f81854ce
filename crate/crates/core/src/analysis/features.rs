//! Feature-matrix statistics: effective dimensionality, baseline drift and
//! correlation.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default singular-value cut, as a fraction of the largest.
pub const DEFAULT_SV_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionalityReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub effective_rank: usize,
}

/// Column-centres `features` (K × N) and counts singular values above
/// `threshold * σ_1`.
pub fn dimensionality_report(features: &Matrix<f64>, threshold: f64) -> Result<DimensionalityReport> {
    let (k, n) = features.shape();
    if k <= n {
        return Err(Error::DegenerateInput(format!("need more samples than columns, got {k}x{n}")));
    }
    if !features.is_finite() {
        return Err(Error::DegenerateInput("features contain NaN or Inf".into()));
    }
    let mut centred = DMatrix::from_row_slice(k, n, features.as_slice());
    for mut col in centred.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let mut singular_values: Vec<f64> = centred.singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let top = singular_values[0];
    let effective_rank = if top > 0.0 { singular_values.iter().filter(|&&s| s > threshold * top).count() } else { 0 };
    Ok(DimensionalityReport { singular_values, threshold, effective_rank })
}

/// Writes `V_i_vs_V_j.csv` for every column pair `i < j` (1-based names).
pub fn write_pair_tables(features: &Matrix<f64>, dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = features.cols();
    let mut written = 0;
    for i in 0..n {
        for j in i + 1..n {
            let mut text = format!("V_{},V_{}\n", i + 1, j + 1);
            for r in 0..features.rows() {
                text.push_str(&format!("{},{}\n", features[(r, i)], features[(r, j)]));
            }
            let path = dir.join(format!("V_{}_vs_V_{}.csv", i + 1, j + 1));
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written += 1;
        }
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Baseline slope per second divided by the oscillation amplitude.
    pub normalized_slopes: Vec<f64>,
    /// Baseline slope, volts per second.
    pub slopes: Vec<f64>,
    /// `√2 · rms(column - baseline)`.
    pub amplitudes: Vec<f64>,
}

impl DriftReport {
    pub fn median_abs_slope(&self) -> f64 {
        let mut v: Vec<f64> = self.normalized_slopes.iter().map(|s| s.abs()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Per-column drift of the moving-average baseline. `window` (samples)
/// should span one drive period; only fully covered centred windows enter
/// the fit.
pub fn drift_probe(features: &Matrix<f64>, sample_times: &[f64], window: usize) -> Result<DriftReport> {
    let k = features.rows();
    if k < 100 {
        return Err(Error::DegenerateInput(format!("drift needs >= 100 samples, got {k}")));
    }
    if sample_times.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: sample_times.len() });
    }
    let w = window.clamp(1, k / 2);
    let mut report = DriftReport { normalized_slopes: vec![], slopes: vec![], amplitudes: vec![] };
    for j in 0..features.cols() {
        let col = features.column(j);
        let mut prefix = vec![0.0; k + 1];
        for i in 0..k {
            prefix[i + 1] = prefix[i] + col[i];
        }
        let centres: Vec<usize> = (0..=k - w).collect();
        let baseline: Vec<f64> = centres.iter().map(|&s| (prefix[s + w] - prefix[s]) / w as f64).collect();
        let times: Vec<f64> = centres
            .iter()
            .map(|&s| 0.5 * (sample_times[s] + sample_times[s + w - 1]))
            .collect();
        let slope = ls_slope(&times, &baseline);
        // Residual oscillation around the (linear) baseline trend.
        let intercept = baseline.iter().sum::<f64>() / baseline.len() as f64
            - slope * times.iter().sum::<f64>() / times.len() as f64;
        let ms = col
            .iter()
            .zip(sample_times)
            .map(|(v, t)| (v - intercept - slope * t).powi(2))
            .sum::<f64>()
            / k as f64;
        let amplitude = (2.0 * ms).sqrt();
        report.slopes.push(slope);
        report.amplitudes.push(amplitude);
        report.normalized_slopes.push(if amplitude > 0.0 { slope / amplitude } else { 0.0 });
    }
    Ok(report)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::DegenerateInput(format!("need >= 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("a coordinate has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson r over `(⟨n_sk⟩, accuracy)` pairs.
pub fn count_accuracy_correlation(runs: &[(f64, f64)]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = runs.iter().copied().unzip();
    pearson(&x, &y)
}
