//! Orthogonal polynomial families and their recurrence data.
//!
//! Each family stores the classical three-term recurrence
//! `p_q(x) = (a_q + b_q x) p_{q-1}(x) + c_q p_{q-2}(x)` together with the
//! L2 norms `||p_q||` of the classical (unnormalized) polynomials. The
//! normalized-column constants
//!
//! `A_q = (N_q/N_{q-1}) a_q`, `B_q = (N_q/N_{q-1}) b_q`, `C_q = (N_q/N_{q-2}) c_q`
//!
//! with `N_q = 1/||p_q||` drive everything downstream: the tridiagonal
//! position matrix, the column-wise DVR build and the segmented oracle
//! recursion. Norm ratios are always formed from log-gamma differences so
//! the constants stay finite for degrees far beyond the f64 overflow point
//! of the raw norms.

use crate::error::{Error, Result};
use crate::oracle::SegmentSpec;

use std::f64::consts::PI;

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Which classical family, with shape parameters where the family has them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyKind {
    Hermite,
    Laguerre { alpha: f64 },
    Legendre,
    ChebyshevFirst,
    ChebyshevSecond,
    Jacobi { alpha: f64, beta: f64 },
}

/// A validated orthogonal-polynomial family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialFamily {
    kind: FamilyKind,
}

/// One step of the classical recurrence: `p_q = (a + b x) p_{q-1} + c p_{q-2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecurrenceStep {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PolynomialFamily {
    pub fn hermite() -> Self {
        PolynomialFamily {
            kind: FamilyKind::Hermite,
        }
    }

    pub fn legendre() -> Self {
        PolynomialFamily {
            kind: FamilyKind::Legendre,
        }
    }

    pub fn chebyshev_first() -> Self {
        PolynomialFamily {
            kind: FamilyKind::ChebyshevFirst,
        }
    }

    pub fn chebyshev_second() -> Self {
        PolynomialFamily {
            kind: FamilyKind::ChebyshevSecond,
        }
    }

    pub fn laguerre(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > -1.0) {
            return Err(Error::invalid(format!(
                "laguerre alpha must be finite and > -1, got {alpha}"
            )));
        }
        Ok(PolynomialFamily {
            kind: FamilyKind::Laguerre { alpha },
        })
    }

    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > -1.0) {
            return Err(Error::invalid(format!(
                "jacobi alpha must be finite and > -1, got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > -1.0) {
            return Err(Error::invalid(format!(
                "jacobi beta must be finite and > -1, got {beta}"
            )));
        }
        Ok(PolynomialFamily {
            kind: FamilyKind::Jacobi { alpha, beta },
        })
    }

    /// Parse a family spec string: `name[:p1[,p2]]`.
    ///
    /// Accepted names: `hermite`, `legendre`, `chebyshev1`, `chebyshev2`,
    /// `laguerre[:alpha]` (alpha defaults to 0) and `jacobi:alpha,beta`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, params) = match spec.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (spec.trim(), None),
        };
        let parse_f64 = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad numeric parameter {s:?} in {spec:?}")))
        };
        match name.to_ascii_lowercase().as_str() {
            "hermite" => Ok(Self::hermite()),
            "legendre" => Ok(Self::legendre()),
            "chebyshev1" | "cheb1" => Ok(Self::chebyshev_first()),
            "chebyshev2" | "cheb2" => Ok(Self::chebyshev_second()),
            "laguerre" => {
                let alpha = match params {
                    Some(p) if !p.is_empty() => parse_f64(p)?,
                    _ => 0.0,
                };
                Self::laguerre(alpha)
            }
            "jacobi" => {
                let p = params
                    .ok_or_else(|| Error::invalid("jacobi requires parameters: jacobi:a,b"))?;
                let (a, b) = p
                    .split_once(',')
                    .ok_or_else(|| Error::invalid("jacobi requires two parameters: jacobi:a,b"))?;
                Self::jacobi(parse_f64(a)?, parse_f64(b)?)
            }
            other => Err(Error::invalid(format!("unknown family {other:?}"))),
        }
    }

    /// Canonical spec string; `parse(tag())` round-trips.
    pub fn tag(&self) -> String {
        match self.kind {
            FamilyKind::Hermite => "hermite".into(),
            FamilyKind::Legendre => "legendre".into(),
            FamilyKind::ChebyshevFirst => "chebyshev1".into(),
            FamilyKind::ChebyshevSecond => "chebyshev2".into(),
            FamilyKind::Laguerre { alpha } => format!("laguerre:{alpha}"),
            FamilyKind::Jacobi { alpha, beta } => format!("jacobi:{alpha},{beta}"),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Support interval of the measure (may be half-infinite or infinite).
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            FamilyKind::Hermite => (f64::NEG_INFINITY, f64::INFINITY),
            FamilyKind::Laguerre { .. } => (0.0, f64::INFINITY),
            _ => (-1.0, 1.0),
        }
    }

    /// True exactly when the free recurrence term vanishes for all degrees,
    /// i.e. the polynomials alternate parity and the DVR columns mirror.
    pub fn is_parity_conserving(&self) -> bool {
        match self.kind {
            FamilyKind::Hermite
            | FamilyKind::Legendre
            | FamilyKind::ChebyshevFirst
            | FamilyKind::ChebyshevSecond => true,
            FamilyKind::Laguerre { .. } => false,
            FamilyKind::Jacobi { alpha, beta } => alpha == beta,
        }
    }

    /// Density of the measure at `x`.
    pub fn weight(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!(
                "x = {x} outside support [{lo}, {hi}] of {}",
                self.tag()
            )));
        }
        Ok(match self.kind {
            FamilyKind::Hermite => (-x * x).exp(),
            FamilyKind::Laguerre { alpha } => x.powf(alpha) * (-x).exp(),
            FamilyKind::Legendre => 1.0,
            FamilyKind::ChebyshevFirst => (1.0 - x * x).powf(-0.5),
            FamilyKind::ChebyshevSecond => (1.0 - x * x).sqrt(),
            FamilyKind::Jacobi { alpha, beta } => (1.0 - x).powf(alpha) * (1.0 + x).powf(beta),
        })
    }

    /// Classical recurrence step producing degree `q >= 1`.
    pub fn recurrence_step(&self, q: usize) -> RecurrenceStep {
        debug_assert!(q >= 1);
        let qf = q as f64;
        match self.kind {
            FamilyKind::Hermite => RecurrenceStep {
                a: 0.0,
                b: 2.0,
                c: -2.0 * (qf - 1.0),
            },
            FamilyKind::Laguerre { alpha } => RecurrenceStep {
                a: (2.0 * qf + alpha - 1.0) / qf,
                b: -1.0 / qf,
                c: if q == 1 {
                    0.0
                } else {
                    -(qf + alpha - 1.0) / qf
                },
            },
            FamilyKind::Legendre => RecurrenceStep {
                a: 0.0,
                b: (2.0 * qf - 1.0) / qf,
                c: -(qf - 1.0) / qf,
            },
            FamilyKind::ChebyshevFirst => RecurrenceStep {
                a: 0.0,
                b: if q == 1 { 1.0 } else { 2.0 },
                c: if q == 1 { 0.0 } else { -1.0 },
            },
            FamilyKind::ChebyshevSecond => RecurrenceStep {
                a: 0.0,
                b: 2.0,
                c: if q == 1 { 0.0 } else { -1.0 },
            },
            FamilyKind::Jacobi { alpha, beta } => {
                if q == 1 {
                    // the generic prefactor 2n(n+a+b)(2n+a+b-2) vanishes at
                    // n = 1 when a+b = 0; the direct first step covers it
                    RecurrenceStep {
                        a: (alpha - beta) / 2.0,
                        b: (alpha + beta + 2.0) / 2.0,
                        c: 0.0,
                    }
                } else {
                    let s = alpha + beta;
                    let den = 2.0 * qf * (qf + s) * (2.0 * qf + s - 2.0);
                    RecurrenceStep {
                        a: (2.0 * qf + s - 1.0) * (alpha * alpha - beta * beta) / den,
                        b: (2.0 * qf + s - 1.0) * (2.0 * qf + s) * (2.0 * qf + s - 2.0) / den,
                        c: -2.0 * (qf + alpha - 1.0) * (qf + beta - 1.0) * (2.0 * qf + s) / den,
                    }
                }
            }
        }
    }

    /// `ln ||p_q||`.
    pub fn log_norm(&self, q: usize) -> f64 {
        let qf = q as f64;
        match self.kind {
            FamilyKind::Hermite => {
                0.5 * (qf * std::f64::consts::LN_2 + ln_gamma(qf + 1.0) + 0.5 * PI.ln())
            }
            FamilyKind::Laguerre { alpha } => {
                0.5 * (ln_gamma(alpha + qf + 1.0) - ln_gamma(qf + 1.0))
            }
            FamilyKind::Legendre => 0.5 * (2.0 / (2.0 * qf + 1.0)).ln(),
            FamilyKind::ChebyshevFirst => {
                if q == 0 {
                    0.5 * PI.ln()
                } else {
                    0.5 * (PI / 2.0).ln()
                }
            }
            FamilyKind::ChebyshevSecond => 0.5 * (PI / 2.0).ln(),
            FamilyKind::Jacobi { alpha, beta } => {
                let s = alpha + beta;
                if q == 0 {
                    // ||p_0||^2 = 2^{a+b+1} B(a+1, b+1); the generic form has a
                    // removable 0 * inf at a+b = -1
                    0.5 * ((s + 1.0) * std::f64::consts::LN_2
                        + ln_gamma(alpha + 1.0)
                        + ln_gamma(beta + 1.0)
                        - ln_gamma(s + 2.0))
                } else {
                    0.5 * ((s + 1.0) * std::f64::consts::LN_2 - (2.0 * qf + s + 1.0).ln()
                        + ln_gamma(alpha + qf + 1.0)
                        + ln_gamma(beta + qf + 1.0)
                        - ln_gamma(s + qf + 1.0)
                        - ln_gamma(qf + 1.0))
                }
            }
        }
    }

    /// `||p_q||`, overflowing to infinity for very large Hermite degrees.
    pub fn norm(&self, q: usize) -> f64 {
        self.log_norm(q).exp()
    }

    /// `integral of d(mu)`, i.e. `||p_0||^2`.
    pub fn zeroth_moment(&self) -> f64 {
        (2.0 * self.log_norm(0)).exp()
    }

    /// Normalized-column constants for degree `q >= 1`:
    /// `(A_q, B_q, C_q)` with the norm ratios folded in.
    pub fn column_step(&self, q: usize) -> (f64, f64, f64) {
        let step = self.recurrence_step(q);
        let r1 = (self.log_norm(q - 1) - self.log_norm(q)).exp();
        let c = if q >= 2 {
            (self.log_norm(q - 2) - self.log_norm(q)).exp() * step.c
        } else {
            0.0
        };
        (r1 * step.a, r1 * step.b, c)
    }

    /// Classical `p_q(x)` by forward recurrence.
    pub fn eval_poly(&self, q: usize, x: f64) -> f64 {
        if q == 0 {
            return 1.0;
        }
        let mut pm2 = 1.0;
        let s1 = self.recurrence_step(1);
        let mut pm1 = (s1.a + s1.b * x) * pm2;
        for k in 2..=q {
            let s = self.recurrence_step(k);
            let p = (s.a + s.b * x) * pm1 + s.c * pm2;
            pm2 = pm1;
            pm1 = p;
        }
        pm1
    }

    /// Orthonormal values `N_q p_q(x)` for q = 0..n-1, by the normalized
    /// column recurrence.
    pub fn orthonormal_values(&self, n: usize, x: f64) -> Vec<f64> {
        let mut vals = vec![0.0; n];
        if n == 0 {
            return vals;
        }
        vals[0] = (-self.log_norm(0)).exp();
        if n > 1 {
            let (a1, b1, _) = self.column_step(1);
            vals[1] = (a1 + b1 * x) * vals[0];
        }
        for q in 2..n {
            let (a, b, c) = self.column_step(q);
            vals[q] = (a + b * x) * vals[q - 1] + c * vals[q - 2];
        }
        vals
    }
}

/// Recurrence coefficients for degrees 0..=max_degree.
///
/// `a[q]`, `b[q]`, `c[q]` are the classical step producing degree q
/// (entries at q = 0 are unused and zero); `column_a/b/c` carry the norm
/// ratios. Raw `norms` overflow around Hermite degree ~150; `log_norms`
/// stay usable up to the 2^14 degrees reached by cost sweeps.
#[derive(Clone, Debug)]
pub struct RecurrenceCoeffs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub norms: Vec<f64>,
    pub log_norms: Vec<f64>,
    pub column_a: Vec<f64>,
    pub column_b: Vec<f64>,
    pub column_c: Vec<f64>,
}

pub fn recurrence_coeffs(family: &PolynomialFamily, max_degree: usize) -> Result<RecurrenceCoeffs> {
    if max_degree < 1 {
        return Err(Error::invalid("max_degree must be >= 1"));
    }
    let n = max_degree + 1;
    let mut out = RecurrenceCoeffs {
        a: vec![0.0; n],
        b: vec![0.0; n],
        c: vec![0.0; n],
        norms: vec![0.0; n],
        log_norms: vec![0.0; n],
        column_a: vec![0.0; n],
        column_b: vec![0.0; n],
        column_c: vec![0.0; n],
    };
    for q in 0..n {
        out.log_norms[q] = family.log_norm(q);
        out.norms[q] = out.log_norms[q].exp();
        if q >= 1 {
            let step = family.recurrence_step(q);
            out.a[q] = step.a;
            out.b[q] = step.b;
            out.c[q] = step.c;
            let (ca, cb, cc) = family.column_step(q);
            out.column_a[q] = ca;
            out.column_b[q] = cb;
            out.column_c[q] = cc;
        }
    }
    Ok(out)
}

/// Per-column scalings for the segmented recursion.
///
/// `gamma[q]` rescales column q (`T'_q = gamma_q T_q`); the two midpoint
/// columns of every segment keep gamma = 1. `a_scaled[q]`, `b_scaled[q]`
/// produce scaled column q from its inward neighbour:
///
/// ascending  (q > midpoint):  T'_q = (A'_q + B'_q x) T'_{q-1} + T'_{q-2}
/// descending (q < midpoint-1): T'_q = (A'_q + B'_q x) T'_{q+1} + T'_{q+2}
///
/// with the sign flip on the descending branch folded into `A'`, `B'`.
#[derive(Clone, Debug)]
pub struct GammaScalings {
    pub gamma: Vec<f64>,
    pub a_scaled: Vec<f64>,
    pub b_scaled: Vec<f64>,
}

pub fn gamma_scalings(family: &PolynomialFamily, spec: &SegmentSpec) -> Result<GammaScalings> {
    let n = spec.n_basis();
    let f = spec.segment_len();
    let coeffs = recurrence_coeffs(family, n.max(2) - 1)?;
    let ca = &coeffs.column_a;
    let cb = &coeffs.column_b;
    let cc = &coeffs.column_c;

    let mut gamma = vec![1.0; n];
    let mut a_scaled = vec![0.0; n];
    let mut b_scaled = vec![0.0; n];
    for w in 0..spec.segments() {
        let mid = spec.midpoint(w);
        // ascending half: q = mid+1 .. w*f + f-1
        for k in 1..f / 2 {
            let q = mid + k;
            if cc[q] == 0.0 {
                return Err(Error::SingularScaling(format!(
                    "C_{q} = 0 in the ascending branch of segment {w}"
                )));
            }
            gamma[q] = gamma[q - 2] / cc[q];
        }
        // descending half: q = mid-2 .. w*f
        for k in 1..f / 2 {
            let q = mid - 1 - k;
            gamma[q] = cc[q + 2] * gamma[q + 2];
        }
        for k in 1..f / 2 {
            let q = mid + k;
            let r = gamma[q] / gamma[q - 1];
            a_scaled[q] = r * ca[q];
            b_scaled[q] = r * cb[q];
        }
        for k in 1..f / 2 {
            let q = mid - 1 - k;
            let r = -gamma[q + 2] / gamma[q + 1];
            a_scaled[q] = r * ca[q + 2];
            b_scaled[q] = r * cb[q + 2];
        }
    }
    Ok(GammaScalings {
        gamma,
        a_scaled,
        b_scaled,
    })
}
