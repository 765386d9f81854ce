//! Linear readout: ridge-regularised least squares on reservoir features,
//! waveform binarisation and digit classification.

mod eval;
mod solve;

pub use eval::{
    evaluate_mnist, evaluate_waveform, one_hot, segment_accuracy, shuffled_labels, EvalReport, SplitSpec,
    WaveformReport, DEVICE_MNIST_ACCURACY,
};
pub use solve::{cholesky, cholesky_solve, cross_moment, gram};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Ridge strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ridge {
    /// λ as given.
    Absolute(f64),
    /// λ = factor · tr(XᵀX) / F.
    TraceScaled(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::TraceScaled(1e-6)
    }
}

impl Ridge {
    pub fn validate(&self) -> Result<()> {
        let v = match self {
            Ridge::Absolute(v) | Ridge::TraceScaled(v) => *v,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParams(format!("ridge_lambda must be finite and >= 0, got {v}")));
        }
        Ok(())
    }

    pub fn resolve<T: Scalar>(&self, gram: &Matrix<T>) -> T {
        match *self {
            Ridge::Absolute(v) => T::lit(v),
            Ridge::TraceScaled(v) => {
                let f = gram.rows().max(1);
                let trace = (0..gram.rows()).map(|i| gram[(i, i)]).sum::<T>();
                T::lit(v) * trace / T::from_usize_lossy(f)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights<T> {
    /// F × C.
    pub w: Matrix<T>,
    /// Resolved λ used in the fit.
    pub ridge_lambda: T,
    pub manifest_hash: Option<String>,
}

impl<T: Scalar> ReadoutWeights<T> {
    pub fn features(&self) -> usize {
        self.w.rows()
    }

    pub fn outputs(&self) -> usize {
        self.w.cols()
    }
}

/// Solves `(XᵀX + λI) w = XᵀL`.
pub fn fit_readout<T: Scalar>(x: &Matrix<T>, labels: &Matrix<T>, ridge: Ridge) -> Result<ReadoutWeights<T>> {
    ridge.validate()?;
    if x.rows() == 0 || x.rows() != labels.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: labels.rows() });
    }
    if !x.is_finite() || !labels.is_finite() {
        return Err(Error::DegenerateInput("features or labels contain NaN or Inf".into()));
    }
    let mut a = gram(x);
    let lambda = ridge.resolve(&a);
    for i in 0..a.rows() {
        a[(i, i)] += lambda;
    }
    let mut w = cross_moment(x, labels)?;
    cholesky(&mut a)?;
    cholesky_solve(&a, &mut w);
    Ok(ReadoutWeights { w, ridge_lambda: lambda, manifest_hash: None })
}

/// `y = X w`.
pub fn predict_series<T: Scalar>(weights: &ReadoutWeights<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.cols() != weights.features() {
        return Err(Error::DimensionMismatch { expected: weights.features(), got: x.cols() });
    }
    x.matmul(&weights.w)
}

/// `‖2Xᵀ(Xw − L) + 2λw‖` and `‖XᵀL‖` (Frobenius).
pub fn normal_equation_residual<T: Scalar>(x: &Matrix<T>, labels: &Matrix<T>, weights: &ReadoutWeights<T>) -> Result<(T, T)> {
    let two = T::lit(2.0);
    let resid = x.matmul(&weights.w)?;
    let diff = Matrix::from_fn(resid.rows(), resid.cols(), |i, j| resid[(i, j)] - labels[(i, j)]);
    let g = cross_moment(x, &diff)?;
    let grad = Matrix::from_fn(g.rows(), g.cols(), |i, j| two * g[(i, j)] + two * weights.ridge_lambda * weights.w[(i, j)]);
    Ok((grad.frobenius_norm(), cross_moment(x, labels)?.frobenius_norm()))
}

/// `sign(y)` with `sign(0) = +1`.
pub fn binarize_waveform<T: Scalar>(y: &[T]) -> Vec<T> {
    y.iter().map(|&v| if v >= T::zero() { T::one() } else { -T::one() }).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Predicted digit and its score vector for one flattened feature row.
pub fn classify_digit<T: Scalar>(weights: &ReadoutWeights<T>, features: &[T]) -> Result<(usize, Vec<T>)> {
    if features.len() != weights.features() {
        return Err(Error::DimensionMismatch { expected: weights.features(), got: features.len() });
    }
    let mut scores = vec![T::zero(); weights.outputs()];
    for (f, &x) in features.iter().enumerate() {
        for (s, &w) in scores.iter_mut().zip(weights.w.row(f)) {
            *s += x * w;
        }
    }
    Ok((argmax(&scores), scores))
}

#[derive(Serialize, Deserialize)]
struct WeightsHeader {
    features: usize,
    outputs: usize,
    ridge_lambda: f64,
    manifest_hash: Option<String>,
}

const WEIGHTS_TAG: &str = "# skyrc-weights 1 ";

impl ReadoutWeights<f64> {
    /// CSV: one tagged JSON header line, then one row per feature.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = WeightsHeader {
            features: self.features(),
            outputs: self.outputs(),
            ridge_lambda: self.ridge_lambda,
            manifest_hash: self.manifest_hash.clone(),
        };
        let mut text = format!("{WEIGHTS_TAG}{}\n", serde_json::to_string(&header).expect("header serializes"));
        for f in 0..self.features() {
            let row: Vec<String> = self.w.row(f).iter().map(f64::to_string).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let first = lines.next().unwrap_or_default();
        let json = first.strip_prefix(WEIGHTS_TAG).ok_or_else(|| Error::format(path, "missing weights header"))?;
        let h: WeightsHeader = serde_json::from_str(json).map_err(|e| Error::format(path, e.to_string()))?;
        let mut data = Vec::with_capacity(h.features * h.outputs);
        for (n, line) in lines.enumerate() {
            for v in line.split(',') {
                data.push(v.parse::<f64>().map_err(|e| Error::format(path, format!("row {}: {e}", n + 1)))?);
            }
        }
        let w = Matrix::from_vec(h.features, h.outputs, data).map_err(|_| Error::format(path, "weight count mismatch"))?;
        Ok(Self { w, ridge_lambda: h.ridge_lambda, manifest_hash: h.manifest_hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_reproduces_labels() {
        let x = Matrix::<f64>::identity(4);
        let l = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 0.0], vec![3.0, 1.0], vec![-1.0, 7.0]]).unwrap();
        let w = fit_readout(&x, &l, Ridge::Absolute(0.0)).unwrap();
        assert_eq!(w.w, l);
        assert_eq!(predict_series(&w, &x).unwrap(), l);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 0.3], vec![2.0, 2.0, -1.0], vec![0.5, 0.5, 2.0], vec![1.5, 1.5, 0.0]]).unwrap();
        let l = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(fit_readout(&x, &l, Ridge::Absolute(0.0)), Err(Error::SingularSystem { .. })));
        assert!(fit_readout(&x, &l, Ridge::Absolute(1e-3)).is_ok());
        assert!(fit_readout(&x, &l, Ridge::Absolute(-1.0)).is_err());
    }

    #[test]
    fn zero_weights_and_bilinearity() {
        let x = Matrix::from_fn(6, 3, |i, j| (i as f64 - j as f64 * 0.7).sin());
        let zero = ReadoutWeights { w: Matrix::zeros(3, 2), ridge_lambda: 0.0, manifest_hash: None };
        assert_eq!(predict_series(&zero, &x).unwrap(), Matrix::zeros(6, 2));
        let w = ReadoutWeights { w: Matrix::from_fn(3, 1, |i, _| i as f64 + 0.5), ridge_lambda: 0.0, manifest_hash: None };
        let y = predict_series(&w, &x).unwrap();
        let y2 = predict_series(&ReadoutWeights { w: w.w.scale(0.25), ..w.clone() }, &x.scale(4.0)).unwrap();
        assert_eq!(y, y2);
        assert!(predict_series(&w, &Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn binarize_ties_up() {
        assert_eq!(binarize_waveform(&[0.3, -0.2]), vec![1.0, -1.0]);
        assert_eq!(binarize_waveform(&[0.0f32]), vec![1.0f32]);
    }

    #[test]
    fn classify_ties_to_smallest() {
        let mut w = Matrix::zeros(10, 10);
        for i in 0..10 {
            w[(i, i)] = 1.0;
        }
        let weights = ReadoutWeights { w, ridge_lambda: 0.0, manifest_hash: None };
        let mut x = vec![0.0; 10];
        x[5] = 2.0;
        assert_eq!(classify_digit(&weights, &x).unwrap().0, 5);
        x[5] = 0.0;
        x[2] = 1.0;
        x[7] = 1.0;
        assert_eq!(classify_digit(&weights, &x).unwrap().0, 2);
        assert!(classify_digit(&weights, &[0.0; 3]).is_err());
    }

    #[test]
    fn trace_scaled_ridge() {
        let g = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(Ridge::TraceScaled(0.5).resolve(&g), 1.5);
        assert_eq!(Ridge::Absolute(0.1).resolve(&g), 0.1);
    }

    #[test]
    fn weights_csv_round_trip() {
        let w = ReadoutWeights {
            w: Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 / 7.0 - 0.3),
            ridge_lambda: 1.25e-7,
            manifest_hash: Some("abc".into()),
        };
        let dir = std::env::temp_dir().join(format!("skyrc-w-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("w.csv");
        w.write_csv(&p).unwrap();
        assert_eq!(ReadoutWeights::read_csv(&p).unwrap(), w);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
