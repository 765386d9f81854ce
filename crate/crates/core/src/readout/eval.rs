use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{binarize_waveform, classify_digit, fit_readout, predict_series, ReadoutWeights, Ridge};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{aux_rng, StreamKey};

/// Physical-device MNIST accuracy, kept in reports for comparison only.
pub const DEVICE_MNIST_ACCURACY: f64 = 0.947;

const SPLIT_STREAM: u32 = 0x5350_4c54;
const SHUFFLE_PURPOSE: u32 = 0x5348_5546;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_n: usize,
    pub test_n: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self, available: usize) -> Result<()> {
        if self.train_n == 0 || self.test_n == 0 || self.repeats == 0 {
            return Err(Error::Split("train_n, test_n and repeats must be positive".into()));
        }
        if self.train_n + self.test_n > available {
            return Err(Error::Split(format!(
                "train {} + test {} exceeds the {available} available digits",
                self.train_n, self.test_n
            )));
        }
        Ok(())
    }

    /// Disjoint `(train, test)` index sets for one repeat.
    pub fn indices(&self, available: usize, repeat: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        self.validate(available)?;
        let mut idx: Vec<usize> = (0..available).collect();
        idx.shuffle(&mut StreamKey::new(self.seed, SPLIT_STREAM, repeat as u32).rng());
        let test = idx[self.train_n..self.train_n + self.test_n].to_vec();
        idx.truncate(self.train_n);
        Ok((idx, test))
    }
}

/// `N × classes` one-hot targets.
pub fn one_hot(labels: &[u8], classes: usize) -> Matrix<f64> {
    Matrix::from_fn(labels.len(), classes, |i, j| if labels[i] as usize == j { 1.0 } else { 0.0 })
}

/// Seeded permutation of `labels`, for chance-level controls.
pub fn shuffled_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut aux_rng(seed, SHUFFLE_PURPOSE));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Sample standard deviation over repeats (0 for a single repeat).
    pub accuracy_std: f64,
    pub per_repeat: Vec<f64>,
    /// Rows: true class. Columns: predicted class. Summed over repeats.
    pub confusion: Vec<Vec<u64>>,
    pub ridge: Ridge,
    /// Resolved λ per repeat.
    pub ridge_lambdas: Vec<f64>,
    pub split: SplitSpec,
    pub device_reference_accuracy: f64,
}

impl EvalReport {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn write_confusion_csv(&self, path: &Path) -> Result<()> {
        let c = self.confusion.len();
        let mut out = format!("true\\pred,{}\n", (0..c).map(|j| j.to_string()).collect::<Vec<_>>().join(","));
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", row.iter().map(u64::to_string).collect::<Vec<_>>().join(",")));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fits and scores `classes`-way argmax classification on seeded splits.
/// `features` holds one flattened digit per row.
pub fn evaluate_mnist(
    features: &Matrix<f64>,
    labels: &[u8],
    classes: usize,
    split: SplitSpec,
    ridge: Ridge,
) -> Result<EvalReport> {
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: features.rows(), got: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::InvalidParams(format!("label {bad} outside 0..{classes}")));
    }
    split.validate(labels.len())?;

    let repeats: Vec<(f64, Vec<Vec<u64>>, f64)> = (0..split.repeats)
        .into_par_iter()
        .map(|r| {
            let (train, test) = split.indices(labels.len(), r)?;
            let x = features.select_rows(&train);
            let l = one_hot(&train.iter().map(|&i| labels[i]).collect::<Vec<_>>(), classes);
            let w = fit_readout(&x, &l, ridge)?;
            let mut confusion = vec![vec![0u64; classes]; classes];
            for &i in &test {
                let (pred, _) = classify_digit(&w, features.row(i))?;
                confusion[labels[i] as usize][pred] += 1;
            }
            let correct: u64 = (0..classes).map(|c| confusion[c][c]).sum();
            Ok((correct as f64 / test.len() as f64, confusion, w.ridge_lambda))
        })
        .collect::<Result<_>>()?;

    let mut confusion = vec![vec![0u64; classes]; classes];
    for (_, c, _) in &repeats {
        for (row, add) in confusion.iter_mut().zip(c) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let per_repeat: Vec<f64> = repeats.iter().map(|r| r.0).collect();
    let (accuracy, accuracy_std) = mean_std(&per_repeat);
    Ok(EvalReport {
        accuracy,
        accuracy_std,
        per_repeat,
        confusion,
        ridge,
        ridge_lambdas: repeats.iter().map(|r| r.2).collect(),
        split,
        device_reference_accuracy: DEVICE_MNIST_ACCURACY,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformReport {
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_sample_accuracy: f64,
    pub test_sample_accuracy: f64,
    pub train_segment_accuracy: f64,
    pub test_segment_accuracy: f64,
    pub ridge: Ridge,
    pub ridge_lambda: f64,
}

/// Fraction of segments whose samples are more than half correct.
/// `segments[k]` is the segment of sample `k`.
pub fn segment_accuracy(predicted: &[f64], labels: &[f64], segments: &[usize]) -> f64 {
    let mut tally: Vec<(usize, usize, usize)> = Vec::new();
    for ((&p, &l), &s) in predicted.iter().zip(labels).zip(segments) {
        match tally.last_mut() {
            Some(t) if t.0 == s => {
                t.1 += usize::from(p == l);
                t.2 += 1;
            }
            _ => tally.push((s, usize::from(p == l), 1)),
        }
    }
    if tally.is_empty() {
        return 0.0;
    }
    tally.iter().filter(|t| 2 * t.1 > t.2).count() as f64 / tally.len() as f64
}

fn sample_accuracy(predicted: &[f64], labels: &[f64]) -> f64 {
    predicted.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len().max(1) as f64
}

/// Trains on the first half of the samples and tests on the second.
/// Labels are ±1; `segments` gives each sample's segment index.
pub fn evaluate_waveform(
    features: &Matrix<f64>,
    labels: &[f64],
    segments: &[usize],
    ridge: Ridge,
) -> Result<(WaveformReport, ReadoutWeights<f64>)> {
    let k = features.rows();
    if labels.len() != k || segments.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: labels.len().min(segments.len()) });
    }
    if k < 2 {
        return Err(Error::Split("need at least two samples".into()));
    }
    let half = k / 2;
    let train: Vec<usize> = (0..half).collect();
    let target = Matrix::from_vec(half, 1, labels[..half].to_vec())?;
    let w = fit_readout(&features.select_rows(&train), &target, ridge)?;
    let y = predict_series(&w, features)?;
    let pred = binarize_waveform(y.as_slice());
    let report = WaveformReport {
        train_samples: half,
        test_samples: k - half,
        train_sample_accuracy: sample_accuracy(&pred[..half], &labels[..half]),
        test_sample_accuracy: sample_accuracy(&pred[half..], &labels[half..]),
        train_segment_accuracy: segment_accuracy(&pred[..half], &labels[..half], &segments[..half]),
        test_segment_accuracy: segment_accuracy(&pred[half..], &labels[half..], &segments[half..]),
        ridge,
        ridge_lambda: w.ridge_lambda,
    };
    Ok((report, w))
}
