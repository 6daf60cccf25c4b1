//! Gaussian discrete-variable-representation (DVR) toolkit.
//!
//! The crate builds the unitary FBR-to-DVR transformation matrix
//! `T[p][q] = N_q * sqrt(w_p) * p_q(x_p)` for the classical orthogonal
//! polynomial families (Hermite, Laguerre, Legendre, Chebyshev I/II, Jacobi),
//! classically emulates a segmented recursive construction of the quantum
//! oracle `|p>|q>|0> -> |p>|q>|T_pq>` under double-precision or fixed-point
//! arithmetic, and evaluates closed-form fault-tolerant resource costs
//! (Toffoli counts, T-depth, qubit counts, volume) for the competing
//! oracle and unitary constructions.
//!
//! Module map:
//! - [`polyfam`]: recurrence coefficients, norms, weights and the per-column
//!   scaling constants of each polynomial family.
//! - [`quadrature`]: Gaussian nodes/weights via Golub-Welsch, with the
//!   explicit weight formula as an independent cross-check.
//! - [`dvr`]: the DVR matrix itself, FBR<->DVR transforms, tensor-product
//!   application and small pseudospectral eigenproblems.
//! - [`fixed_point`]: an m-bit signed fixed-point emulator with a Toffoli
//!   cost ledger.
//! - [`oracle`]: the segmented recursive oracle emulator.
//! - [`cost`]: closed-form resource models and volume sweeps.
//! - [`synthesis`]: state-preparation angle trees, reflection products and
//!   the arcsin block-encoding oracle.

pub mod cost;
pub mod dvr;
pub mod error;
pub mod fixed_point;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod polyfam;
pub mod quadrature;
pub mod synthesis;

pub use error::{Error, Result};
pub use polyfam::PolynomialFamily;
