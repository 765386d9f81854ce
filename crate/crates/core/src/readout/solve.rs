//! Symmetric positive-definite solves for the normal equations.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Upper triangle of `XᵀX` accumulated from row outer products; the lower
/// triangle is mirrored at the end.
pub fn gram<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let f = x.cols();
    let mut g = Matrix::zeros(f, f);
    let data = g.as_mut_slice();
    for i in 0..x.rows() {
        let row = x.row(i);
        for a in 0..f {
            let ra = row[a];
            if ra == T::zero() {
                continue;
            }
            let dst = &mut data[a * f + a..(a + 1) * f];
            for (d, &rb) in dst.iter_mut().zip(&row[a..]) {
                *d += ra * rb;
            }
        }
    }
    for a in 0..f {
        for b in 0..a {
            data[a * f + b] = data[b * f + a];
        }
    }
    g
}

/// `Xᵀ L`.
pub fn cross_moment<T: Scalar>(x: &Matrix<T>, l: &Matrix<T>) -> Result<Matrix<T>> {
    if x.rows() != l.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: l.rows() });
    }
    let (f, c) = (x.cols(), l.cols());
    let mut out = Matrix::zeros(f, c);
    for i in 0..x.rows() {
        let lr = l.row(i);
        for (a, &xa) in x.row(i).iter().enumerate() {
            if xa == T::zero() {
                continue;
            }
            for (o, &lb) in out.row_mut(a).iter_mut().zip(lr) {
                *o += xa * lb;
            }
        }
    }
    Ok(out)
}

/// In-place lower Cholesky factor of a symmetric matrix. A pivot at or below
/// `eps · 64 · max(n, 16) · max_diag` is reported as [`Error::SingularSystem`].
pub fn cholesky<T: Scalar>(a: &mut Matrix<T>) -> Result<()> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "cholesky needs a square matrix");
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
    let tol = T::epsilon() * T::lit(64.0) * T::from_usize_lossy(n.max(16)) * max_diag;
    let data = a.as_mut_slice();
    for j in 0..n {
        let row_j = &mut data[j * n..(j + 1) * n];
        // Row j, columns < j, already holds L[j][..j].
        let mut d = row_j[j];
        for &v in &row_j[..j] {
            d -= v * v;
        }
        if !(d > tol) {
            return Err(Error::SingularSystem { column: j, pivot: d.as_f64() });
        }
        let ljj = d.sqrt();
        row_j[j] = ljj;
        // L[i][j] for i > j.
        for i in j + 1..n {
            let (lo, hi) = data.split_at_mut(i * n);
            let row_j = &lo[j * n..j * n + j];
            let row_i = &mut hi[..n];
            let mut s = row_i[j];
            for (a, b) in row_i[..j].iter().zip(row_j) {
                s -= *a * *b;
            }
            row_i[j] = s / ljj;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            data[i * n + j] = T::zero();
        }
    }
    Ok(())
}

/// Solves `L Lᵀ X = B` for every column of `b`, in place.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &mut Matrix<T>) {
    let n = l.rows();
    let c = b.cols();
    for col in 0..c {
        for i in 0..n {
            let mut s = b[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
}
