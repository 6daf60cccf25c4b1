//! Dense verification of the DVR-unitary constructions.
//!
//! Column state preparation drives a binary angle tree: the rotation at
//! node `l` of level `t` splits the probability of a block of 2^{-t} N
//! rows between its two halves, with one sign bit per node flipping the
//! lower branch. Parity-conserving columns need only the upper-half tree;
//! the lower half is produced by a reflection of the index bits followed
//! by the column-parity sign. The prepared states
//! `|w_k> = (|0>|k> - |1>|u_k>)/sqrt(2)` are mutually orthonormal, so the
//! product of the N reflections `I - 2|w_k><w_k|` collapses to an
//! anti-block matrix pairing `T` with its transpose; which of the two
//! pairings is realized is decided numerically, not assumed.

use crate::dvr::DvrMatrix;
use crate::error::{Error, Result};
use crate::fixed_point::{
    fx_add, fx_decode, fx_encode, fx_mul, CostConvention, CostLedger, FixedPointValue, FxConfig,
    FxMode,
};
use crate::linalg::Mat;

use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Signed rotation angles preparing the amplitude profile of one column.
#[derive(Clone, Debug, Serialize)]
pub struct AngleTree {
    pub column: usize,
    /// Upper-half tree with mirrored lower half (parity families), or the
    /// full tree.
    pub parity_mode: bool,
    /// Level-0 angle; fixed at pi/4 in parity mode (the equal half split).
    pub root: f64,
    /// Levels t = 1..n-1 with 2^{t-1} (parity) or 2^t (full) signed angles.
    pub levels: Vec<Vec<f64>>,
    pub column_odd: bool,
    /// Sign of the first column entry (zero counts as nonnegative); the
    /// preparation anchors the profile on it.
    pub first_entry_nonneg: bool,
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Angle tree for an explicit column. `n_rows` must be a power of two.
pub fn angle_tree_from_column(column: &[f64], k: usize, parity_mode: bool) -> Result<AngleTree> {
    let n = column.len();
    if !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "column length {n} is not a power of two"
        )));
    }
    let norm: f64 = column.iter().map(|c| c * c).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!(
            "column {k} is not normalized (|.|^2 = {norm})"
        )));
    }
    let n_qubits = n.trailing_zeros() as usize;
    let block_sum = |start: usize, len: usize| -> f64 {
        column[start..start + len].iter().map(|c| c * c).sum()
    };
    // angle of one tree node: probability split of a block between its
    // halves, zero by convention on unreachable (zero-norm) blocks
    let node = |start: usize, len: usize| -> f64 {
        let total = block_sum(start, len);
        if total == 0.0 {
            return 0.0;
        }
        let left = (block_sum(start, len / 2) / total).clamp(0.0, 1.0);
        let phi = left.sqrt().acos();
        if sgn(column[start]) * sgn(column[start + len / 2]) >= 0.0 {
            phi
        } else {
            -phi
        }
    };
    let mut levels = Vec::new();
    let root = if parity_mode {
        FRAC_PI_4
    } else if n > 1 {
        node(0, n)
    } else {
        0.0
    };
    for t in 1..n_qubits {
        let len = n >> t;
        let count = if parity_mode { 1 << (t - 1) } else { 1 << t };
        levels.push((0..count).map(|l| node(l * len, len)).collect());
    }
    Ok(AngleTree {
        column: k,
        parity_mode,
        root,
        levels,
        column_odd: k % 2 == 1,
        first_entry_nonneg: column[0] >= 0.0,
    })
}

/// Angle tree of column `k` of a DVR matrix; parity-conserving families
/// consume only the upper half.
pub fn angle_tree(t: &DvrMatrix, k: usize) -> Result<AngleTree> {
    if k >= t.n {
        return Err(Error::invalid(format!("column {k} out of range")));
    }
    angle_tree_from_column(&t.column(k), k, t.family.is_parity_conserving())
}

/// Classically simulate the column state preparation and verify the
/// result: returns the 2N-vector `(|0>|k> - |1>|u_k>)/sqrt(2)` (ancilla
/// major), or a synthesis error when the reconstruction deviates from the
/// target by more than 1e-8.
pub fn simulate_state_prep(t: &DvrMatrix, tree: &AngleTree) -> Result<Vec<f64>> {
    let n = t.n;
    let k = tree.column;
    let n_qubits = n.trailing_zeros() as usize;
    if !n.is_power_of_two() {
        return Err(Error::invalid(format!("N = {n} is not a power of two")));
    }
    let mut state = vec![0.0; 2 * n];
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    // sign gate + Hadamard on the ancilla, then the index load on the
    // |0>_a branch
    let column_branch = if tree.first_entry_nonneg {
        -inv_sqrt2
    } else {
        inv_sqrt2
    };
    state[k] = inv_sqrt2;
    state[n] = column_branch;

    let rot = |state: &mut [f64], j0: usize, j1: usize, phi: f64| {
        let (s, c) = phi.sin_cos();
        let (x0, x1) = (state[n + j0], state[n + j1]);
        state[n + j0] = c * x0 - s * x1;
        state[n + j1] = s * x0 + c * x1;
    };

    if n > 1 {
        if tree.parity_mode {
            // half split (controlled Hadamard)
            rot(&mut state, 0, n / 2, tree.root);
            for tlev in 1..n_qubits {
                let bit = n >> (tlev + 1);
                let angles = &tree.levels[tlev - 1];
                for j in 0..n / 2 {
                    if j & bit != 0 || j & (bit - 1) != 0 {
                        continue;
                    }
                    let l = (j >> (n_qubits - tlev)) & ((1 << (tlev - 1)) - 1);
                    rot(&mut state, j, j | bit, angles[l]);
                    rot(&mut state, j + n / 2, (j + n / 2) | bit, angles[l]);
                }
            }
            // reflect the lower half (the index-bit fan), then the
            // column-parity sign
            for j in n / 2..n {
                let jj = n / 2 + ((j - n / 2) ^ (n / 2 - 1));
                if jj > j {
                    state.swap(n + j, n + jj);
                }
            }
            if tree.column_odd {
                for j in n / 2..n {
                    state[n + j] = -state[n + j];
                }
            }
        } else {
            rot(&mut state, 0, n / 2, tree.root);
            for tlev in 1..n_qubits {
                let bit = n >> (tlev + 1);
                let angles = &tree.levels[tlev - 1];
                for j in 0..n {
                    if j & bit != 0 || j & (bit - 1) != 0 {
                        continue;
                    }
                    let l = j >> (n_qubits - tlev);
                    rot(&mut state, j, j | bit, angles[l]);
                }
            }
        }
    }

    // verify against the target
    let mut target = vec![0.0; 2 * n];
    target[k] = inv_sqrt2;
    for p in 0..n {
        target[n + p] = -t.entry(p, k) * inv_sqrt2;
    }
    let worst = state
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::Synthesis(format!(
            "prepared state for column {k} deviates from target by {worst:.3e}"
        )));
    }
    Ok(state)
}

/// The normalized reflection vectors `|w_k> = (|0>|k> - |1>|u_k>)/sqrt(2)`.
pub fn reflection_vectors(t: &DvrMatrix) -> Vec<Vec<f64>> {
    let n = t.n;
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    (0..n)
        .map(|k| {
            let mut w = vec![0.0; 2 * n];
            w[k] = inv_sqrt2;
            for p in 0..n {
                w[n + p] = -t.entry(p, k) * inv_sqrt2;
            }
            let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut w {
                *v /= norm;
            }
            w
        })
        .collect()
}

/// Which anti-block matrix the reflection product realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockPairing {
    /// `[[0, T], [T^T, 0]]`
    TUpperRight,
    /// `[[0, T^T], [T, 0]]`
    TLowerLeft,
}

#[derive(Clone, Debug)]
pub struct ReflectionProduct {
    pub matrix: Mat,
    pub realized: BlockPairing,
    pub residual_upper: f64,
    pub residual_lower: f64,
}

fn anti_block(t: &DvrMatrix, pairing: BlockPairing) -> Mat {
    let n = t.n;
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            match pairing {
                BlockPairing::TUpperRight => {
                    m[(i, n + j)] = t.entry(i, j);
                    m[(n + i, j)] = t.entry(j, i);
                }
                BlockPairing::TLowerLeft => {
                    m[(i, n + j)] = t.entry(j, i);
                    m[(n + i, j)] = t.entry(i, j);
                }
            }
        }
    }
    m
}

/// Multiply out the N reflections `I - 2 |w_k><w_k|` in index order and
/// identify the realized anti-block pairing. Errors when neither pairing
/// fits to 1e-9, reporting both residuals.
pub fn reflection_product(t: &DvrMatrix) -> Result<ReflectionProduct> {
    let product = reflection_product_in_order(t, &(0..t.n).collect::<Vec<_>>());
    let residual_upper = product.max_abs_diff(&anti_block(t, BlockPairing::TUpperRight));
    let residual_lower = product.max_abs_diff(&anti_block(t, BlockPairing::TLowerLeft));
    let realized = if residual_lower <= residual_upper {
        BlockPairing::TLowerLeft
    } else {
        BlockPairing::TUpperRight
    };
    if residual_lower.min(residual_upper) > 1e-9 {
        return Err(Error::Synthesis(format!(
            "reflection product matches neither pairing: residual [[0,T],[T^T,0]] = \
             {residual_upper:.3e}, residual [[0,T^T],[T,0]] = {residual_lower:.3e}"
        )));
    }
    Ok(ReflectionProduct {
        matrix: product,
        realized,
        residual_upper,
        residual_lower,
    })
}

/// The reflection product with an explicit application order.
pub fn reflection_product_in_order(t: &DvrMatrix, order: &[usize]) -> Mat {
    let n2 = 2 * t.n;
    let ws = reflection_vectors(t);
    let mut product = Mat::identity(n2);
    for &k in order {
        // R_k P computed as P - 2 w (w^T P), one rank-1 update per factor
        let w = &ws[k];
        let mut wt_p = vec![0.0; n2];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (acc, &pij) in wt_p.iter_mut().zip(product.row(i)) {
                *acc += wi * pij;
            }
        }
        for (i, &wi) in w.iter().enumerate() {
            let row = product.row_mut(i);
            for (j, r) in row.iter_mut().enumerate() {
                *r -= 2.0 * wi * wt_p[j];
            }
        }
    }
    product
}

/// The arcsin oracle table: `(2/pi) arcsin(T_pq)` rounded to m bits, with
/// the worst-case error of recovering `T_pq` back through the rotation
/// `sin(pi/2 *.)`.
#[derive(Clone, Debug)]
pub struct ArcsinOracle {
    pub m: u32,
    /// Decoded m-bit values, row-major.
    pub values: Vec<f64>,
    pub max_recovery_error: f64,
}

pub fn arcsin_oracle_values(t: &DvrMatrix, m: u32) -> Result<ArcsinOracle> {
    let cfg = FxConfig::truncating(m)?;
    let n = t.n;
    let mut values = vec![0.0; n * n];
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in 0..n {
            let a = t.entry(p, q);
            if a.abs() > 1.0 {
                return Err(Error::Domain(format!(
                    "matrix entry {a} at ({p},{q}) exceeds 1 in magnitude"
                )));
            }
            let angle = a.asin() * 2.0 / PI;
            let enc = fx_encode(angle, &cfg)?;
            let dec = fx_decode(&enc);
            values[p * n + q] = dec;
            let recovered = (dec * FRAC_PI_2).sin();
            worst = worst.max((recovered - a).abs());
        }
    }
    let bound = (2.0f64 - m as f64).exp2();
    if worst > bound {
        return Err(Error::Synthesis(format!(
            "rotation recovery error {worst:.3e} exceeds 2^-(m-2) = {bound:.3e}"
        )));
    }
    Ok(ArcsinOracle {
        m,
        values,
        max_recovery_error: worst,
    })
}

/// Maclaurin coefficients of arcsin restricted to odd powers:
/// 1, 1/6, 3/40, 15/336, 105/3456, ...
pub fn arcsin_coefficients(p_terms: usize) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(p_terms);
    let mut c = 1.0f64;
    for k in 0..p_terms {
        if k > 0 {
            let kf = k as f64;
            c *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (2.0 * kf * (2.0 * kf + 1.0));
        }
        coeffs.push(c);
    }
    coeffs
}

/// Entries larger than this in magnitude should be loaded directly rather
/// than run through the polynomial.
pub const ARCSIN_TAYLOR_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub struct TaylorEval {
    pub value: FixedPointValue,
    /// Set when |x| exceeded the accuracy threshold.
    pub above_threshold: bool,
}

/// Evaluate the odd arcsin Taylor polynomial in fixed point with the
/// power-register schedule: square once, extend the odd powers by repeated
/// multiplication with x^2, then scale-and-accumulate each term.
pub fn arcsin_taylor(
    x: f64,
    p_terms: usize,
    cfg: &FxConfig,
    ledger: &mut CostLedger,
    threshold: f64,
) -> Result<TaylorEval> {
    if cfg.mode != FxMode::Truncating {
        return Err(Error::invalid(
            "the polynomial registers hold m bits; use a truncating config".to_string(),
        ));
    }
    if p_terms == 0 {
        return Err(Error::invalid("need at least one polynomial term"));
    }
    if x.abs() > 1.0 {
        return Err(Error::Domain(format!("|{x}| > 1 is outside arcsin range")));
    }
    let above_threshold = x.abs() > threshold;
    let coeffs = arcsin_coefficients(p_terms);
    let x_fx = fx_encode(x, cfg)?;
    // |x>, |x^2>, |x^3>, |x^5>, ...
    let x2 = fx_mul(&x_fx, &x_fx, cfg, ledger, false, CostConvention::AppendixC)?;
    let mut powers = vec![x_fx];
    for _ in 1..p_terms {
        let next = fx_mul(
            powers.last().unwrap(),
            &x2,
            cfg,
            ledger,
            false,
            CostConvention::AppendixC,
        )?;
        powers.push(next);
    }
    let mut acc = fx_encode(0.0, cfg)?;
    for (coeff, power) in coeffs.iter().zip(&powers) {
        let c_fx = fx_encode(*coeff, cfg)?;
        let term = fx_mul(power, &c_fx, cfg, ledger, true, CostConvention::AppendixC)?;
        acc = fx_add(&acc, &term, cfg, ledger, true)?;
    }
    Ok(TaylorEval {
        value: acc,
        above_threshold,
    })
}

/// Ledger charges of one column state preparation: the angle-tree QROM
/// (computed and uncomputed) plus one data-controlled rotation per level.
pub fn charge_state_prep(ledger: &mut CostLedger, n: usize, m: u32) {
    let n_qubits = n.trailing_zeros() as u64;
    ledger.charge("angle tree loads (with uncompute)", n as u64, n as u64);
    for t in 1..n_qubits.max(1) {
        ledger.charge(format!("level {t} rotation"), 2 * m as u64, 2 * m as u64);
    }
}
