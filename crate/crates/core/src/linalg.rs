//! Small dense-matrix container and symmetric eigensolvers.
//!
//! The eigensolvers are self-contained ports of the classic EISPACK-style
//! routines: Householder reduction to tridiagonal form (`tred2`) and the
//! implicit-shift QL iteration with eigenvector accumulation (`tql2`).
//! Problem sizes in this crate are desk-scale (a few hundred rows for the
//! quadrature matrices, a few thousand for tensor-product Hamiltonians),
//! so no blocking or external LAPACK is warranted.

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// y = A x with a fixed summation order (row-wise accumulation).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// max_ij |A_ij - B_ij|
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// max_ij |(A^T A - I)_ij|, the unitarity defect of a square matrix.
    pub fn orthogonality_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let gram = self.transpose().matmul(self);
        let mut defect: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        defect
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const MAX_QL_SWEEPS: usize = 50;

/// Eigenvalues (ascending) and optional eigenvectors of a symmetric
/// tridiagonal matrix given by its diagonal and subdiagonal.
///
/// Implicit-shift QL iteration; column `k` of the returned matrix is the
/// eigenvector of the `k`-th eigenvalue. Off-diagonal entries are considered
/// negligible once below machine precision relative to their neighbouring
/// diagonal entries, which keeps them far inside the 1e-14 * ||X|| budget.
pub fn symmetric_tridiagonal_eigen(
    diagonal: &[f64],
    off_diagonal: &[f64],
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Mat>)> {
    let n = diagonal.len();
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if off_diagonal.len() != n.saturating_sub(1) {
        return Err(Error::ShapeMismatch {
            expected: n - 1,
            got: off_diagonal.len(),
        });
    }
    let mut d = diagonal.to_vec();
    // e[i] couples rows i and i+1; e[n-1] is a spare slot used by the sweep.
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off_diagonal);
    let mut z = if want_vectors {
        Some(Mat::identity(n))
    } else {
        None
    };

    ql_implicit_shift(&mut d, &mut e, z.as_mut())?;

    // Ascending eigenvalue order, columns permuted alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|zm| {
        let mut out = Mat::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                out[(r, new_col)] = zm[(r, old_col)];
            }
        }
        out
    });
    Ok((sorted, vectors))
}

fn ql_implicit_shift(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Mat>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::numeric(format!(
                    "QL iteration did not converge for eigenvalue {l} after {MAX_QL_SWEEPS} sweeps \
                     (residual off-diagonal {:.3e})",
                    e[l].abs()
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflowed = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // deflate without finishing the sweep
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[(k, i + 1)];
                        zm[(k, i + 1)] = s * zm[(k, i)] + c * f;
                        zm[(k, i)] = c * zm[(k, i)] - s * f;
                    }
                }
            }
            if underflowed {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues (ascending) and eigenvectors of a dense symmetric matrix,
/// by Householder tridiagonalization followed by QL iteration.
pub fn symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    if a.rows() != a.cols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let n = a.rows();
    let mut q = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut q, &mut d, &mut e);
    // shift subdiagonal to the e[i] ~ (i, i+1) convention
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    ql_implicit_shift(&mut d, &mut e, Some(&mut q))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = q[(r, old_col)];
        }
    }
    Ok((values, vectors))
}

/// Householder reduction of a symmetric matrix to tridiagonal form with
/// accumulation of the orthogonal transform in `a`.
fn tred2(a: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = a.rows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[(j, i)] = a[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let delta = f * e[k] + g * a[(i, k)];
                        a[(j, k)] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[(i, k)] * a[(k, j)];
                }
                for k in 0..i {
                    let delta = g * a[(k, i)];
                    a[(k, j)] -= delta;
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_2x2_analytic() {
        // [[0, 1/2], [1/2, 0]] has eigenvalues -1/2, 1/2
        let (vals, vecs) = symmetric_tridiagonal_eigen(&[0.0, 0.0], &[0.5], true).unwrap();
        assert!((vals[0] + 0.5).abs() < 1e-15);
        assert!((vals[1] - 0.5).abs() < 1e-15);
        let v = vecs.unwrap();
        // eigenvectors orthonormal
        assert!(v.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn tridiagonal_matches_characteristic_roots() {
        // [[1,-1],[-1,3]] -> 2 +/- sqrt(2)
        let (vals, _) = symmetric_tridiagonal_eigen(&[1.0, 3.0], &[-1.0], false).unwrap();
        assert!((vals[0] - (2.0 - 2f64.sqrt())).abs() < 1e-14);
        assert!((vals[1] - (2.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn dense_eigen_reconstructs_matrix() {
        let mut a = Mat::zeros(5, 5);
        let vals_in = [3.0, -1.0, 0.5, 2.0, 7.0];
        // A = Q D Q^T for a Householder-ish orthogonal Q built from rotations
        let mut q = Mat::identity(5);
        let angles: [f64; 6] = [0.3, 1.1, -0.7, 0.25, 2.0, -1.4];
        let mut idx = 0;
        for i in 0..4 {
            for j in (i + 1)..5 {
                if idx >= angles.len() {
                    break;
                }
                let (s, c) = angles[idx].sin_cos();
                idx += 1;
                for r in 0..5 {
                    let (qi, qj) = (q[(r, i)], q[(r, j)]);
                    q[(r, i)] = c * qi - s * qj;
                    q[(r, j)] = s * qi + c * qj;
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let mut s = 0.0;
                for k in 0..5 {
                    s += q[(i, k)] * vals_in[k] * q[(j, k)];
                }
                a[(i, j)] = s;
            }
        }
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let mut expected = vals_in.to_vec();
        expected.sort_by(f64::total_cmp);
        for (v, e) in vals.iter().zip(&expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        // A V = V D
        let av = a.matmul(&vecs);
        for j in 0..5 {
            for i in 0..5 {
                assert!((av[(i, j)] - vals[j] * vecs[(i, j)]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn single_element() {
        let (vals, vecs) = symmetric_tridiagonal_eigen(&[4.2], &[], true).unwrap();
        assert_eq!(vals, vec![4.2]);
        assert_eq!(vecs.unwrap()[(0, 0)], 1.0);
    }
}
