//! Gaussian quadrature nodes and weights.
//!
//! Nodes are the eigenvalues of the tridiagonal position-operator matrix in
//! the orthonormal polynomial basis (Golub-Welsch). Weights are the squared
//! first components of the normalized eigenvectors times the zeroth moment;
//! the eigenvector of a Jacobi matrix at eigenvalue `x` is the vector of
//! orthonormal polynomial values at `x`, so that first component is
//! evaluated analytically through the recurrence with exponent rescaling.
//! The accumulated-rotation eigenvectors lose the outermost components of
//! Hermite/Laguerre rules to absolute roundoff long before N = 64; the
//! recurrence route keeps every weight relatively accurate down to (and
//! past) the f64 underflow edge.
//!
//! The textbook explicit formula
//! `w_k = (lead_N/lead_{N-1}) ||p_{N-1}||^2 / (p'_N(x_k) p_{N-1}(x_k))`
//! is kept as an independent cross-check route.

use crate::error::{Error, Result};
use crate::linalg;
use crate::polyfam::PolynomialFamily;

/// Tridiagonal position operator in the orthonormal basis.
#[derive(Clone, Debug)]
pub struct PositionMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

/// `X[i][i] = -a_{i+1}/b_{i+1}`, `X[i][i+1] = N_i / (N_{i+1} b_{i+1})`,
/// from expanding `x p~_i` in the orthonormal basis.
pub fn position_matrix(family: &PolynomialFamily, n: usize) -> PositionMatrix {
    assert!(n >= 1);
    let mut diagonal = vec![0.0; n];
    let mut off_diagonal = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let step = family.recurrence_step(i + 1);
        diagonal[i] = -step.a / step.b;
        if i + 1 < n {
            off_diagonal[i] = (family.log_norm(i + 1) - family.log_norm(i)).exp() / step.b;
        }
    }
    PositionMatrix {
        diagonal,
        off_diagonal,
    }
}

/// An N-point Gaussian rule for a family's measure.
///
/// Nodes ascend strictly. `sqrt_weights` is the numerically primary field;
/// `weights` is its square and can underflow to zero for the outermost
/// Laguerre nodes once N exceeds roughly 150.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub family: PolynomialFamily,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub sqrt_weights: Vec<f64>,
}

impl Quadrature {
    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    /// `sum_k w_k f(x_k)`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Orthonormal polynomial values at `x` scaled by `exp(-log_scale)`,
/// rescaled on the fly so intermediate values never overflow. Returns the
/// scaled vector and `log_scale`.
pub(crate) fn scaled_orthonormal_row(
    family: &PolynomialFamily,
    n: usize,
    x: f64,
    column_ab_c: &[(f64, f64, f64)],
) -> (Vec<f64>, f64) {
    const RESCALE_LIMIT: f64 = 1e140;
    let mut vals = vec![0.0; n];
    let mut log_scale = 0.0f64;
    vals[0] = (-family.log_norm(0)).exp();
    if n > 1 {
        let (a1, b1, _) = column_ab_c[1];
        vals[1] = (a1 + b1 * x) * vals[0];
    }
    for q in 2..n {
        let (a, b, c) = column_ab_c[q];
        let v = (a + b * x) * vals[q - 1] + c * vals[q - 2];
        vals[q] = v;
        if v.abs() > RESCALE_LIMIT {
            // rescale the whole prefix so the recurrence keeps its two
            // live terms on a common scale
            for item in vals.iter_mut().take(q + 1) {
                *item /= RESCALE_LIMIT;
            }
            log_scale += RESCALE_LIMIT.ln();
        }
    }
    (vals, log_scale)
}

pub(crate) fn column_steps(family: &PolynomialFamily, n: usize) -> Vec<(f64, f64, f64)> {
    let mut steps = vec![(0.0, 0.0, 0.0); n.max(2)];
    for (q, step) in steps.iter_mut().enumerate().skip(1) {
        *step = family.column_step(q);
    }
    steps
}

/// Gaussian nodes and weights for the family.
pub fn nodes_weights(family: &PolynomialFamily, n: usize) -> Result<Quadrature> {
    if n < 1 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let pos = position_matrix(family, n);
    let (mut nodes, _) =
        linalg::symmetric_tridiagonal_eigen(&pos.diagonal, &pos.off_diagonal, false)?;

    if family.is_parity_conserving() {
        symmetrize_nodes(&mut nodes);
    }

    let steps = column_steps(family, n);
    let mut sqrt_weights = vec![0.0; n];
    for (p, &x) in nodes.iter().enumerate() {
        let (row, log_scale) = scaled_orthonormal_row(family, n, x, &steps);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        // the normalized Jacobi-matrix eigenvector at x_p is the vector of
        // orthonormal polynomial values, so the Golub-Welsch weight
        // mu0 * (first component)^2 collapses to 1 / || p~(x_p) ||^2,
        // with the row's running scale folded back in log space
        sqrt_weights[p] = (-log_scale - norm.ln()).exp();
    }
    if family.is_parity_conserving() {
        for p in 0..n / 2 {
            let avg = 0.5 * (sqrt_weights[p] + sqrt_weights[n - 1 - p]);
            sqrt_weights[p] = avg;
            sqrt_weights[n - 1 - p] = avg;
        }
    }
    let weights: Vec<f64> = sqrt_weights.iter().map(|s| s * s).collect();

    let quad = Quadrature {
        family: *family,
        nodes,
        weights,
        sqrt_weights,
    };
    let (lo, hi) = family.support();
    for win in quad.nodes.windows(2) {
        if win[0].partial_cmp(&win[1]) != Some(std::cmp::Ordering::Less) {
            return Err(Error::numeric(format!(
                "nodes not strictly increasing: {} !< {}",
                win[0], win[1]
            )));
        }
    }
    if quad.nodes[0] <= lo || quad.nodes[n - 1] >= hi {
        return Err(Error::numeric("node escaped the support interior"));
    }
    Ok(quad)
}

fn symmetrize_nodes(nodes: &mut [f64]) {
    let n = nodes.len();
    for p in 0..n / 2 {
        let half = 0.5 * (nodes[n - 1 - p] - nodes[p]);
        nodes[p] = -half;
        nodes[n - 1 - p] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Weights from the explicit formula
/// `w_k = (lead_N / lead_{N-1}) ||p_{N-1}||^2 / (p'_N(x_k) p_{N-1}(x_k))`,
/// with the leading-coefficient ratio equal to the linear recurrence term
/// `b_N`. Raw polynomial values stay inside f64 range up to N = 64 for the
/// shipped families, which is all this cross-check route is used for.
pub fn explicit_weights(family: &PolynomialFamily, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lead_ratio = family.recurrence_step(n).b;
    let norm_sq = (2.0 * family.log_norm(n - 1)).exp();
    nodes
        .iter()
        .map(|&x| {
            let (p_n1, dp_n) = value_and_next_derivative(family, n, x);
            lead_ratio * norm_sq / (dp_n * p_n1)
        })
        .collect()
}

/// `(p_{N-1}(x), p'_N(x))` by differentiating the three-term recurrence.
fn value_and_next_derivative(family: &PolynomialFamily, n: usize, x: f64) -> (f64, f64) {
    let mut pm2 = 1.0;
    let mut dm2 = 0.0;
    let s1 = family.recurrence_step(1);
    let mut pm1 = s1.a + s1.b * x;
    let mut dm1 = s1.b;
    if n == 1 {
        return (pm2, dm1);
    }
    for q in 2..=n {
        let s = family.recurrence_step(q);
        let p = (s.a + s.b * x) * pm1 + s.c * pm2;
        let d = s.b * pm1 + (s.a + s.b * x) * dm1 + s.c * dm2;
        pm2 = pm1;
        dm2 = dm1;
        pm1 = p;
        dm1 = d;
    }
    (pm2, dm1)
}
