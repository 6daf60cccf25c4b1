//! The DVR transformation matrix and pseudospectral solves.
//!
//! `T[p][q] = N_q sqrt(w_p) p_q(x_p)` maps variational basis coefficients
//! to grid-localized ones. Rows are built by running the orthonormal column
//! recurrence at each node and normalizing the row; by the Christoffel
//! identity the row norm is exactly `1/sqrt(w_p)`, so this is the column
//! recurrence build with the weight factored out. Running it per row keeps
//! every entry relatively accurate even where `sqrt(w_p)` sits hundreds of
//! orders of magnitude below 1 (Hermite and Laguerre at large N).

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::polyfam::PolynomialFamily;
use crate::quadrature::{self, Quadrature};

use rayon::prelude::*;

/// The N x N FBR-to-DVR transformation. Row index `p` is the grid point
/// (nodes ascending), column index `q` the basis function degree.
#[derive(Clone, Debug)]
pub struct DvrMatrix {
    pub family: PolynomialFamily,
    pub n: usize,
    entries: Mat,
    pub quadrature: Quadrature,
    /// max |(T^T T - I)|, |(T T^T - I)| measured at construction.
    pub unitarity_defect: f64,
}

impl DvrMatrix {
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.entries[(p, q)]
    }

    pub fn row(&self, p: usize) -> &[f64] {
        self.entries.row(p)
    }

    pub fn column(&self, q: usize) -> Vec<f64> {
        self.entries.column(q)
    }

    pub fn matrix(&self) -> &Mat {
        &self.entries
    }

    /// max over both Gram residuals; recomputed on demand.
    pub fn orthogonality_defect(&self) -> f64 {
        let d1 = self.entries.orthogonality_defect();
        let d2 = self.entries.transpose().orthogonality_defect();
        d1.max(d2)
    }

    /// max |T_pq - (-1)^q T_{N-1-p,q}|; `None` for non-parity families.
    pub fn parity_residual(&self) -> Option<f64> {
        if !self.family.is_parity_conserving() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for p in 0..self.n {
            for q in 0..self.n {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                worst = worst.max((self.entry(p, q) - sign * self.entry(self.n - 1 - p, q)).abs());
            }
        }
        Some(worst)
    }

    /// Largest |d_l(x_k)| for l != k relative to the diagonal scale
    /// max_l |d_l(x_l)|.
    pub fn kronecker_residual(&self) -> Result<f64> {
        let mut off: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for k in 0..self.n {
            let x = self.quadrature.nodes[k];
            for l in 0..self.n {
                let v = dvr_basis_value(self, l, x)?;
                if l == k {
                    diag = diag.max(v.abs());
                } else {
                    off = off.max(v.abs());
                }
            }
        }
        Ok(off / diag)
    }
}

/// Build the DVR matrix from the column recurrence.
pub fn build_dvr(family: &PolynomialFamily, n: usize) -> Result<DvrMatrix> {
    if n < 1 {
        return Err(Error::invalid("matrix size must be >= 1"));
    }
    let quad = quadrature::nodes_weights(family, n)?;
    let steps = quadrature::column_steps(family, n);
    let rows: Vec<Vec<f64>> = quad
        .nodes
        .par_iter()
        .map(|&x| {
            let (mut row, _) = quadrature::scaled_orthonormal_row(family, n, x, &steps);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut row {
                *v /= norm;
            }
            row
        })
        .collect();
    let entries = Mat::from_rows(&rows);
    let mut dvr = DvrMatrix {
        family: *family,
        n,
        entries,
        quadrature: quad,
        unitarity_defect: 0.0,
    };
    dvr.unitarity_defect = dvr.orthogonality_defect();
    Ok(dvr)
}

/// Build the DVR matrix as the eigenvector matrix of the tridiagonal
/// position operator (rows are the normalized eigenvectors, nodes
/// ascending).
///
/// Eigenvector signs are arbitrary; each row is oriented so that its
/// largest-magnitude entry carries the sign of the corresponding
/// orthonormal polynomial value. Orienting on the first entry would match
/// the direct build in exact arithmetic (column 0 is positive), but that
/// entry underflows the eigensolver's absolute accuracy at the outermost
/// Hermite/Laguerre nodes.
pub fn build_dvr_from_position_operator(family: &PolynomialFamily, n: usize) -> Result<DvrMatrix> {
    if n < 1 {
        return Err(Error::invalid("matrix size must be >= 1"));
    }
    let pos = quadrature::position_matrix(family, n);
    let (nodes, vectors) =
        linalg::symmetric_tridiagonal_eigen(&pos.diagonal, &pos.off_diagonal, true)?;
    let vectors = vectors.expect("eigenvectors requested");
    let steps = quadrature::column_steps(family, n);
    let mut entries = Mat::zeros(n, n);
    for p in 0..n {
        let mut row: Vec<f64> = (0..n).map(|q| vectors[(q, p)]).collect();
        let q_star = (0..n)
            .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()))
            .unwrap();
        let (reference, _) = quadrature::scaled_orthonormal_row(family, n, nodes[p], &steps);
        if row[q_star] * reference[q_star] < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
        }
        entries.row_mut(p).copy_from_slice(&row);
    }
    let quad = quadrature::nodes_weights(family, n)?;
    let mut dvr = DvrMatrix {
        family: *family,
        n,
        entries,
        quadrature: quad,
        unitarity_defect: 0.0,
    };
    dvr.unitarity_defect = dvr.orthogonality_defect();
    Ok(dvr)
}

/// `d_l(x) = sum_q T_lq N_q p_q(x) sqrt(w(x))`.
pub fn dvr_basis_value(dvr: &DvrMatrix, l: usize, x: f64) -> Result<f64> {
    if l >= dvr.n {
        return Err(Error::invalid(format!("basis index {l} out of range")));
    }
    let weight = dvr.family.weight(x)?;
    let phi = dvr.family.orthonormal_values(dvr.n, x);
    let sum: f64 = dvr.row(l).iter().zip(&phi).map(|(t, p)| t * p).sum();
    Ok(sum * weight.sqrt())
}

/// Coefficient transform into the grid basis: `z = T u`.
pub fn fbr_to_dvr(dvr: &DvrMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != dvr.n {
        return Err(Error::ShapeMismatch {
            expected: dvr.n,
            got: v.len(),
        });
    }
    Ok(dvr.entries.matvec(v))
}

/// Inverse transform: `u = T^T z`.
pub fn dvr_to_fbr(dvr: &DvrMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != dvr.n {
        return Err(Error::ShapeMismatch {
            expected: dvr.n,
            got: v.len(),
        });
    }
    let mut out = vec![0.0; dvr.n];
    for (p, &vp) in v.iter().enumerate() {
        for (o, t) in out.iter_mut().zip(dvr.row(p)) {
            *o += t * vp;
        }
    }
    Ok(out)
}

/// Apply `T_0 (x) T_1 (x) ... (x) T_{D-1}` to a flattened row-major state
/// without materializing the Kronecker product: each factor is applied
/// along its own axis with a fixed summation order.
pub fn tensor_apply(dims: &[&DvrMatrix], state: &[f64]) -> Result<Vec<f64>> {
    tensor_apply_impl(dims, state, false)
}

/// Same with every factor transposed (the inverse transform).
pub fn tensor_apply_transpose(dims: &[&DvrMatrix], state: &[f64]) -> Result<Vec<f64>> {
    tensor_apply_impl(dims, state, true)
}

fn tensor_apply_impl(dims: &[&DvrMatrix], state: &[f64], transpose: bool) -> Result<Vec<f64>> {
    let total: usize = dims.iter().map(|d| d.n).product();
    if state.len() != total {
        return Err(Error::ShapeMismatch {
            expected: total,
            got: state.len(),
        });
    }
    let mut cur = state.to_vec();
    let shape: Vec<usize> = dims.iter().map(|d| d.n).collect();
    for (axis, dvr) in dims.iter().enumerate() {
        let n = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let block = n * stride;
        let src = cur;
        let mut next = vec![0.0; total];
        next.par_chunks_mut(block)
            .zip(src.par_chunks(block))
            .take(outer)
            .for_each(|(dst, sblock)| {
                let mut gathered = vec![0.0; n];
                for r in 0..stride {
                    for (j, g) in gathered.iter_mut().enumerate() {
                        *g = sblock[j * stride + r];
                    }
                    for i in 0..n {
                        let mut acc = 0.0;
                        if transpose {
                            for (j, g) in gathered.iter().enumerate() {
                                acc += dvr.entry(j, i) * g;
                            }
                        } else {
                            for (j, g) in gathered.iter().enumerate() {
                                acc += dvr.entry(i, j) * g;
                            }
                        }
                        dst[i * stride + r] = acc;
                    }
                }
            });
        cur = next;
    }
    Ok(cur)
}

/// Kinetic operator `p^2/2` of the unit harmonic oscillator in its own
/// eigenbasis: diagonal `(2i+1)/4`, second off-diagonal
/// `-sqrt((i+1)(i+2))/4` from the ladder algebra.
pub fn hermite_kinetic(n: usize) -> Mat {
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = (2 * i + 1) as f64 / 4.0;
        if i + 2 < n {
            let v = -(((i + 1) * (i + 2)) as f64).sqrt() / 4.0;
            k[(i, i + 2)] = v;
            k[(i + 2, i)] = v;
        }
    }
    k
}

/// A (possibly multi-dimensional) DVR Hamiltonian: per-axis kinetic
/// matrices in the variational basis plus the potential evaluated on the
/// direct-product grid.
pub struct DvrHamiltonian {
    pub dims: Vec<DvrMatrix>,
    pub kinetic: Vec<Mat>,
    pub potential_diag: Vec<f64>,
}

impl DvrHamiltonian {
    pub fn new(dims: Vec<DvrMatrix>, kinetic: Vec<Mat>, potential_diag: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() != kinetic.len() {
            return Err(Error::invalid(
                "need one kinetic matrix per DVR dimension".to_string(),
            ));
        }
        let total: usize = dims.iter().map(|d| d.n).product();
        if potential_diag.len() != total {
            return Err(Error::ShapeMismatch {
                expected: total,
                got: potential_diag.len(),
            });
        }
        for (d, k) in dims.iter().zip(&kinetic) {
            if k.rows() != d.n || !k.is_symmetric(1e-12) {
                return Err(Error::invalid(
                    "kinetic matrix must be symmetric and match its dimension".to_string(),
                ));
            }
        }
        Ok(DvrHamiltonian {
            dims,
            kinetic,
            potential_diag,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().map(|d| d.n).product()
    }

    /// Dense grid-basis Hamiltonian `sum_c T_c K_c T_c^T (x) I + diag(V)`.
    pub fn assemble(&self) -> Mat {
        let total = self.total_dim();
        let shape: Vec<usize> = self.dims.iter().map(|d| d.n).collect();
        let mut h = Mat::zeros(total, total);
        for (axis, (dvr, k)) in self.dims.iter().zip(&self.kinetic).enumerate() {
            // K in the grid basis of this axis
            let kd = dvr.matrix().matmul(&k.matmul(&dvr.matrix().transpose()));
            let stride: usize = shape[axis + 1..].iter().product();
            let n = shape[axis];
            let outer: usize = shape[..axis].iter().product();
            for o in 0..outer {
                for r in 0..stride {
                    let base = o * n * stride + r;
                    for i in 0..n {
                        for j in 0..n {
                            h[(base + i * stride, base + j * stride)] += kd[(i, j)];
                        }
                    }
                }
            }
        }
        for (i, &v) in self.potential_diag.iter().enumerate() {
            h[(i, i)] += v;
        }
        h
    }
}

/// Lowest `n_eigs` eigenpairs of the assembled Hamiltonian, ascending.
pub fn solve_schrodinger(h: &DvrHamiltonian, n_eigs: usize) -> Result<(Vec<f64>, Mat)> {
    let total = h.total_dim();
    if n_eigs > total {
        return Err(Error::invalid(format!(
            "requested {n_eigs} eigenpairs from a {total}-dimensional problem"
        )));
    }
    let dense = h.assemble();
    let (vals, vecs) = linalg::symmetric_eigen(&dense)?;
    let mut out_vecs = Mat::zeros(total, n_eigs);
    for j in 0..n_eigs {
        for i in 0..total {
            out_vecs[(i, j)] = vecs[(i, j)];
        }
    }
    Ok((vals[..n_eigs].to_vec(), out_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfam::PolynomialFamily;

    fn shipped_families() -> Vec<PolynomialFamily> {
        vec![
            PolynomialFamily::hermite(),
            PolynomialFamily::legendre(),
            PolynomialFamily::chebyshev_first(),
            PolynomialFamily::chebyshev_second(),
            PolynomialFamily::laguerre(0.0).unwrap(),
            PolynomialFamily::laguerre(1.5).unwrap(),
            PolynomialFamily::jacobi(0.5, 1.5).unwrap(),
            PolynomialFamily::jacobi(0.75, 0.75).unwrap(),
        ]
    }

    #[test]
    fn one_by_one_is_orthogonal() {
        for fam in shipped_families() {
            let t = build_dvr(&fam, 1).unwrap();
            assert!((t.entry(0, 0).abs() - 1.0).abs() < 1e-12, "{}", fam.tag());
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn chebyshev_second_two_by_two() {
        let t = build_dvr(&PolynomialFamily::chebyshev_second(), 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let want = [[s, -s], [s, s]];
        for p in 0..2 {
            for q in 0..2 {
                assert!((t.entry(p, q) - want[p][q]).abs() < 1e-14, "({p},{q})");
            }
        }
        assert!((t.quadrature.nodes[0] + 0.5).abs() < 1e-14);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn legendre_two_by_two() {
        let t = build_dvr(&PolynomialFamily::legendre(), 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let want = [[s, -s], [s, s]];
        for p in 0..2 {
            for q in 0..2 {
                assert!((t.entry(p, q) - want[p][q]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unitarity_across_families() {
        for fam in shipped_families() {
            for n in [4usize, 16, 64] {
                let t = build_dvr(&fam, n).unwrap();
                assert!(
                    t.unitarity_defect < 1e-11,
                    "{} N={n}: defect {}",
                    fam.tag(),
                    t.unitarity_defect
                );
            }
        }
    }

    #[test]
    fn parity_symmetry_is_exact() {
        for fam in [
            PolynomialFamily::hermite(),
            PolynomialFamily::legendre(),
            PolynomialFamily::chebyshev_first(),
            PolynomialFamily::chebyshev_second(),
            PolynomialFamily::jacobi(0.75, 0.75).unwrap(),
        ] {
            for n in [8usize, 17, 64] {
                let t = build_dvr(&fam, n).unwrap();
                assert_eq!(t.parity_residual(), Some(0.0), "{} N={n}", fam.tag());
            }
        }
        assert!(build_dvr(&PolynomialFamily::laguerre(0.0).unwrap(), 8)
            .unwrap()
            .parity_residual()
            .is_none());
        // stays exact at the largest shipped size
        for fam in [
            PolynomialFamily::hermite(),
            PolynomialFamily::chebyshev_second(),
        ] {
            let t = build_dvr(&fam, 256).unwrap();
            assert_eq!(t.parity_residual(), Some(0.0), "{} N=256", fam.tag());
        }
    }

    #[test]
    fn kronecker_node_property() {
        for fam in [
            PolynomialFamily::legendre(),
            PolynomialFamily::chebyshev_second(),
            PolynomialFamily::hermite(),
        ] {
            let t = build_dvr(&fam, 16).unwrap();
            assert!(t.kronecker_residual().unwrap() < 1e-10, "{}", fam.tag());
        }
        // odd sizes put a node exactly at the origin
        let t = build_dvr(&PolynomialFamily::hermite(), 33).unwrap();
        assert!(t.kronecker_residual().unwrap() < 1e-10);
        assert_eq!(t.quadrature.nodes[16], 0.0);
    }

    #[test]
    fn basis_value_diagonal_matches_weight_ratio() {
        // d_l(x_l) = sqrt(w(x_l)/w_l); keep N small enough that the
        // eigen-route weights stay relatively accurate
        for fam in [
            PolynomialFamily::legendre(),
            PolynomialFamily::chebyshev_second(),
            PolynomialFamily::hermite(),
        ] {
            let t = build_dvr(&fam, 16).unwrap();
            for l in 0..16 {
                let x = t.quadrature.nodes[l];
                let want = (fam.weight(x).unwrap() / t.quadrature.weights[l]).sqrt();
                let got = dvr_basis_value(&t, l, x).unwrap();
                assert!(
                    (got - want).abs() <= 1e-9 * want,
                    "{} l={l}: {got} vs {want}",
                    fam.tag()
                );
            }
        }
    }

    #[test]
    fn basis_value_outside_support_is_domain_error() {
        let t = build_dvr(&PolynomialFamily::legendre(), 4).unwrap();
        assert!(dvr_basis_value(&t, 0, 1.5).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn transform_round_trip_and_columns() {
        let t = build_dvr(&PolynomialFamily::jacobi(0.5, 1.5).unwrap(), 12).unwrap();
        // deterministic pseudo-random vector
        let v: Vec<f64> = (0..12)
            .map(|i| ((i * 37 + 11) % 23) as f64 / 23.0 - 0.4)
            .collect();
        let round = dvr_to_fbr(&t, &fbr_to_dvr(&t, &v).unwrap()).unwrap();
        for (a, b) in v.iter().zip(&round) {
            assert!((a - b).abs() < 1e-10);
        }
        // basis vector maps to the matching column
        let mut e2 = vec![0.0; 12];
        e2[2] = 1.0;
        let col = fbr_to_dvr(&t, &e2).unwrap();
        for p in 0..12 {
            assert_eq!(col[p], t.entry(p, 2));
        }
        // N=2 Chebyshev-II: (1,0) -> (1/sqrt2, 1/sqrt2)
        let t2 = build_dvr(&PolynomialFamily::chebyshev_second(), 2).unwrap();
        let out = fbr_to_dvr(&t2, &[1.0, 0.0]).unwrap();
        assert!((out[0] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((out[1] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn tensor_apply_matches_dense_kronecker() {
        let ta = build_dvr(&PolynomialFamily::chebyshev_second(), 2).unwrap();
        let tb = build_dvr(&PolynomialFamily::legendre(), 2).unwrap();
        let state = [0.3, -0.7, 0.11, 0.95];
        let got = tensor_apply(&[&ta, &tb], &state).unwrap();
        // dense Kronecker oracle
        let mut want = [0.0; 4];
        for i0 in 0..2 {
            for i1 in 0..2 {
                let mut acc = 0.0;
                for j0 in 0..2 {
                    for j1 in 0..2 {
                        acc += ta.entry(i0, j0) * tb.entry(i1, j1) * state[j0 * 2 + j1];
                    }
                }
                want[i0 * 2 + i1] = acc;
            }
        }
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_apply_preserves_norm_in_3d() {
        let t = build_dvr(&PolynomialFamily::hermite(), 4).unwrap();
        let state: Vec<f64> = (0..64)
            .map(|i| ((i * 29 + 7) % 17) as f64 / 17.0 - 0.5)
            .collect();
        let out = tensor_apply(&[&t, &t, &t], &state).unwrap();
        let n_in: f64 = state.iter().map(|v| v * v).sum();
        let n_out: f64 = out.iter().map(|v| v * v).sum();
        assert!((n_in - n_out).abs() < 1e-10 * n_in);
        // round trip
        let back = tensor_apply_transpose(&[&t, &t, &t], &out).unwrap();
        for (a, b) in state.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn tensor_apply_identity_sized_dims() {
        let t = build_dvr(&PolynomialFamily::hermite(), 1).unwrap();
        let state = [0.42];
        let out = tensor_apply(&[&t, &t], &state).unwrap();
        assert!((out[0].abs() - 0.42).abs() < 1e-14);
    }

    #[test]
    fn position_operator_route_matches_direct_build() {
        for fam in shipped_families() {
            for n in [2usize, 8, 33, 64] {
                let direct = build_dvr(&fam, n).unwrap();
                let via_x = build_dvr_from_position_operator(&fam, n).unwrap();
                let diff = direct.matrix().max_abs_diff(via_x.matrix());
                assert!(diff < 1e-9, "{} N={n}: {diff}", fam.tag());
            }
        }
    }

    #[test]
    fn potential_matrix_is_diagonal_under_quadrature_sums() {
        // <d_i|V|d_j> evaluated by explicit quadrature sums collapses to
        // V(x_i) delta_ij
        let fam = PolynomialFamily::legendre();
        let t = build_dvr(&fam, 12).unwrap();
        let v = |x: f64| 0.3 + 1.7 * x + 0.9 * x * x;
        let mut scale: f64 = 0.0;
        let mut values = Mat::zeros(12, 12);
        for i in 0..12 {
            for j in 0..12 {
                let mut acc = 0.0;
                for k in 0..12 {
                    let xk = t.quadrature.nodes[k];
                    let wk = t.quadrature.weights[k];
                    let di = dvr_basis_value(&t, i, xk).unwrap();
                    let dj = dvr_basis_value(&t, j, xk).unwrap();
                    acc += wk / fam.weight(xk).unwrap() * di * v(xk) * dj;
                }
                values[(i, j)] = acc;
                scale = scale.max(acc.abs());
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j {
                    v(t.quadrature.nodes[i])
                } else {
                    0.0
                };
                assert!(
                    (values[(i, j)] - want).abs() <= 1e-10 * scale,
                    "({i},{j}): {} vs {want}",
                    values[(i, j)]
                );
            }
        }
    }

    #[test]
    fn hermite_kinetic_matches_finite_difference_oracle() {
        // <phi_i| -1/2 d^2/dx^2 |phi_j> for harmonic-oscillator functions,
        // via central differences and the trapezoid rule on a dense grid
        let n = 6usize;
        let fam = PolynomialFamily::hermite();
        let phi = |q: usize, x: f64| fam.orthonormal_values(q + 1, x)[q] * (-x * x / 2.0).exp();
        let h = 1e-3;
        let (lo, hi) = (-12.0, 12.0);
        let steps = ((hi - lo) / h) as usize;
        let k = hermite_kinetic(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for s in 1..steps {
                    let x = lo + s as f64 * h;
                    let d2 = (phi(j, x + h) - 2.0 * phi(j, x) + phi(j, x - h)) / (h * h);
                    acc += phi(i, x) * (-0.5 * d2) * h;
                }
                assert!(
                    (acc - k[(i, j)]).abs() < 1e-5,
                    "({i},{j}): {acc} vs {}",
                    k[(i, j)]
                );
            }
        }
    }

    #[test]
    fn harmonic_oscillator_spectrum() {
        let n = 20usize;
        let t = build_dvr(&PolynomialFamily::hermite(), n).unwrap();
        let v: Vec<f64> = t.quadrature.nodes.iter().map(|x| x * x / 2.0).collect();
        let k = hermite_kinetic(n);
        let h = DvrHamiltonian::new(vec![t], vec![k], v).unwrap();
        let (vals, _) = solve_schrodinger(&h, 5).unwrap();
        for (i, &e) in vals.iter().enumerate() {
            assert!((e - (i as f64 + 0.5)).abs() < 1e-8, "level {i}: {e}");
        }
    }

    #[test]
    fn zero_hamiltonian_has_zero_spectrum() {
        let t = build_dvr(&PolynomialFamily::hermite(), 6).unwrap();
        let k = Mat::zeros(6, 6);
        let h = DvrHamiltonian::new(vec![t], vec![k], vec![0.0; 6]).unwrap();
        let (vals, _) = solve_schrodinger(&h, 6).unwrap();
        for e in vals {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_oscillator_ground_state() {
        let n = 8usize;
        let t = build_dvr(&PolynomialFamily::hermite(), n).unwrap();
        let k = hermite_kinetic(n);
        let mut v = Vec::with_capacity(n * n);
        for &x in &t.quadrature.nodes {
            for &y in &t.quadrature.nodes {
                v.push((x * x + y * y) / 2.0);
            }
        }
        let h = DvrHamiltonian::new(vec![t.clone(), t], vec![k.clone(), k], v).unwrap();
        let (vals, _) = solve_schrodinger(&h, 1).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-8, "{}", vals[0]);
    }
}
