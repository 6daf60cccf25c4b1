//! Signed fixed-point arithmetic with Toffoli cost accounting.
//!
//! Values are two's-complement integers `raw` interpreted as
//! `raw * 2^-frac_bits`. Two modes:
//!
//! - `Widening`: exact integer semantics, widths grow (`m'' = m + m' + 1`
//!   per product). Mirrors a reversible circuit that keeps every bit.
//! - `Truncating`: results are rounded to nearest-even back to the
//!   configured width after each operation; overflow saturates and is
//!   counted rather than wrapped.
//!
//! Toffoli charges follow the shift-add multiplier built from controlled
//! adders: `2 * len(a) * len(b)` per product, halved when one factor is a
//! classical constant (`AppendixC` convention). The `Section3` convention
//! keeps the full `2 m^2` charge for classical constants as well; the two
//! diverge once widths grow. Clifford counts are order-of-magnitude
//! estimates only.

use crate::error::{Error, Result};
use serde::Serialize;

pub const WIDTH_BUDGET: u32 = 127;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FxMode {
    Widening,
    Truncating,
}

/// Which accounting convention prices a multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CostConvention {
    /// `2 m^2` regardless of classical factors.
    Section3,
    /// `2 len(a) len(b)`, halved for a classical factor.
    AppendixC,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FxConfig {
    pub total_bits: u32,
    pub frac_bits: u32,
    pub mode: FxMode,
}

impl FxConfig {
    pub fn new(total_bits: u32, frac_bits: u32, mode: FxMode) -> Result<Self> {
        if !(2..total_bits).contains(&frac_bits) || total_bits > 63 {
            return Err(Error::invalid(format!(
                "fixed-point config requires 2 <= frac_bits < total_bits <= 63, got m={total_bits}, frac={frac_bits}"
            )));
        }
        Ok(FxConfig {
            total_bits,
            frac_bits,
            mode,
        })
    }

    /// Truncating config with the default `frac_bits = m - 2` layout
    /// (two integer bits cover the scaled matrix entries).
    pub fn truncating(total_bits: u32) -> Result<Self> {
        FxConfig::new(total_bits, total_bits.saturating_sub(2), FxMode::Truncating)
    }

    pub fn widening(total_bits: u32) -> Result<Self> {
        FxConfig::new(total_bits, total_bits.saturating_sub(2), FxMode::Widening)
    }
}

/// An m-bit signed fixed-point number; `decode = raw * 2^-frac_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointValue {
    raw: i128,
    width: u32,
    frac_bits: u32,
}

impl FixedPointValue {
    /// Assemble from parts already known to be in range.
    pub(crate) fn from_raw(raw: i128, width: u32, frac_bits: u32) -> Self {
        debug_assert!(raw.unsigned_abs() < 1u128 << (width - 1));
        FixedPointValue {
            raw,
            width,
            frac_bits,
        }
    }

    pub fn raw(&self) -> i128 {
        self.raw
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }
}

/// One priced event; the ledger dump lists them in order.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerEvent {
    pub label: String,
    pub toffoli: u64,
}

/// Monotone resource counters for one computation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CostLedger {
    pub toffoli: u64,
    pub clifford_estimate: u64,
    pub ancilla_highwater: u64,
    pub saturation_events: u64,
    pub events: Vec<LedgerEvent>,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    pub fn charge(&mut self, label: impl Into<String>, toffoli: u64, clifford: u64) {
        self.toffoli += toffoli;
        self.clifford_estimate += clifford;
        self.events.push(LedgerEvent {
            label: label.into(),
            toffoli,
        });
    }

    pub fn note_ancilla(&mut self, count: u64) {
        self.ancilla_highwater = self.ancilla_highwater.max(count);
    }

    pub fn last_toffoli(&self) -> u64 {
        self.events.last().map_or(0, |e| e.toffoli)
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.toffoli += other.toffoli;
        self.clifford_estimate += other.clifford_estimate;
        self.ancilla_highwater = self.ancilla_highwater.max(other.ancilla_highwater);
        self.saturation_events += other.saturation_events;
        self.events.extend(other.events.iter().cloned());
    }
}

/// Round `raw / 2^shift` to nearest, ties to even.
fn round_shift_half_even(raw: i128, shift: u32) -> i128 {
    if shift == 0 {
        return raw;
    }
    let half = 1i128 << (shift - 1);
    let mask = (1i128 << shift) - 1;
    let floor = raw >> shift;
    let rem = raw & mask;
    if rem > half || (rem == half && floor & 1 != 0) {
        floor + 1
    } else {
        floor
    }
}

/// Encode a real into the configured layout, rounding to nearest-even.
pub fn fx_encode(x: f64, cfg: &FxConfig) -> Result<FixedPointValue> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot encode {x}")));
    }
    let scaled = x * (cfg.frac_bits as f64).exp2();
    let raw = scaled.round_ties_even();
    let limit = (1i128 << (cfg.total_bits - 1)) as f64;
    if raw.abs() >= limit {
        return Err(Error::Domain(format!(
            "{x} overflows {} bits with {} fractional bits",
            cfg.total_bits, cfg.frac_bits
        )));
    }
    Ok(FixedPointValue {
        raw: raw as i128,
        width: cfg.total_bits,
        frac_bits: cfg.frac_bits,
    })
}

pub fn fx_decode(v: &FixedPointValue) -> f64 {
    v.raw as f64 * (-(v.frac_bits as f64)).exp2()
}

fn saturate(raw: i128, width: u32, ledger: &mut CostLedger) -> i128 {
    let max = (1i128 << (width - 1)) - 1;
    if raw > max {
        ledger.saturation_events += 1;
        max
    } else if raw < -max {
        ledger.saturation_events += 1;
        -max
    } else {
        raw
    }
}

/// Addition. Operands must share `frac_bits`. Charges `2m` Toffoli when
/// controlled, `4m` otherwise (m = operand width). Widening grows the
/// width by one bit; truncating saturates on overflow and flags it.
pub fn fx_add(
    a: &FixedPointValue,
    b: &FixedPointValue,
    cfg: &FxConfig,
    ledger: &mut CostLedger,
    controlled: bool,
) -> Result<FixedPointValue> {
    if a.frac_bits != b.frac_bits {
        return Err(Error::invalid(format!(
            "addend fractional bits differ: {} vs {}",
            a.frac_bits, b.frac_bits
        )));
    }
    let m = a.width.max(b.width) as u64;
    let (cost, label) = if controlled {
        (2 * m, "add (controlled)")
    } else {
        (4 * m, "add")
    };
    ledger.charge(label, cost, m);
    let raw = a.raw + b.raw;
    match cfg.mode {
        FxMode::Widening => {
            let width = a.width.max(b.width) + 1;
            if width > WIDTH_BUDGET {
                return Err(Error::Resource(format!(
                    "sum width {width} exceeds the {WIDTH_BUDGET}-bit budget"
                )));
            }
            Ok(FixedPointValue {
                raw,
                width,
                frac_bits: a.frac_bits,
            })
        }
        FxMode::Truncating => Ok(FixedPointValue {
            raw: saturate(raw, cfg.total_bits, ledger),
            width: cfg.total_bits,
            frac_bits: a.frac_bits,
        }),
    }
}

/// Multiplication via the controlled-adder schedule. Charges
/// `2 len(a) len(b)` Toffoli, halved when `b` is a classical constant and
/// the AppendixC convention is selected. Widening results carry
/// `len(a) + len(b) + 1` bits; truncating results are rounded to the
/// configured layout.
pub fn fx_mul(
    a: &FixedPointValue,
    b: &FixedPointValue,
    cfg: &FxConfig,
    ledger: &mut CostLedger,
    b_is_classical: bool,
    convention: CostConvention,
) -> Result<FixedPointValue> {
    let base = 2 * (a.width as u64) * (b.width as u64);
    let cost = if b_is_classical && convention == CostConvention::AppendixC {
        base / 2
    } else {
        base
    };
    let label = if b_is_classical {
        "mul (classical factor)"
    } else {
        "mul"
    };
    ledger.charge(label, cost, base);
    ledger.note_ancilla(b.width as u64 + 1);

    let raw = a
        .raw
        .checked_mul(b.raw)
        .ok_or_else(|| Error::Resource("product exceeds the 127-bit raw budget".to_string()))?;
    let frac = a.frac_bits + b.frac_bits;
    match cfg.mode {
        FxMode::Widening => {
            let width = a.width + b.width + 1;
            if width > WIDTH_BUDGET {
                return Err(Error::Resource(format!(
                    "product width {width} exceeds the {WIDTH_BUDGET}-bit budget"
                )));
            }
            Ok(FixedPointValue {
                raw,
                width,
                frac_bits: frac,
            })
        }
        FxMode::Truncating => {
            let rounded = round_shift_half_even(raw, frac - cfg.frac_bits);
            Ok(FixedPointValue {
                raw: saturate(rounded, cfg.total_bits, ledger),
                width: cfg.total_bits,
                frac_bits: cfg.frac_bits,
            })
        }
    }
}

/// Mirror the cost of a computed block that must be reversed.
pub fn fx_uncompute(ledger: &mut CostLedger, op_cost: u64) {
    ledger.charge("uncompute", op_cost, 0);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t16() -> FxConfig {
        FxConfig::truncating(16).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FxConfig::new(16, 14, FxMode::Truncating).is_ok());
        assert!(FxConfig::new(16, 16, FxMode::Truncating).is_err());
        assert!(FxConfig::new(64, 10, FxMode::Truncating).is_err());
        assert!(FxConfig::new(4, 1, FxMode::Truncating).is_err());
    }

    #[test]
    fn encode_basics() {
        let cfg = t16();
        let half = fx_encode(0.5, &cfg).unwrap();
        assert_eq!(half.raw(), 8192);
        assert_eq!(fx_decode(&half), 0.5);
        assert_eq!(fx_encode(0.0, &cfg).unwrap().raw(), 0);
        let third = fx_encode(1.0 / 3.0, &cfg).unwrap();
        assert!((fx_decode(&third) - 1.0 / 3.0).abs() <= (-15.0f64).exp2());
        assert!(fx_encode(3.0, &cfg).is_err());
    }

    #[test]
    fn add_costs_and_identity() {
        let cfg = t16();
        let mut ledger = CostLedger::new();
        let a = fx_encode(0.25, &cfg).unwrap();
        let b = fx_encode(0.25, &cfg).unwrap();
        let sum = fx_add(&a, &b, &cfg, &mut ledger, true).unwrap();
        assert_eq!(fx_decode(&sum), 0.5);
        assert_eq!(ledger.toffoli, 2 * 16);
        let zero = fx_encode(0.0, &cfg).unwrap();
        let same = fx_add(&a, &zero, &cfg, &mut ledger, false).unwrap();
        assert_eq!(fx_decode(&same), 0.25);
        // uncontrolled pair-add at m=16 charges 4 * 16
        assert_eq!(ledger.last_toffoli(), 64);
    }

    #[test]
    fn mul_costs() {
        let cfg = t16();
        let mut ledger = CostLedger::new();
        let a = fx_encode(0.5, &cfg).unwrap();
        let b = fx_encode(0.5, &cfg).unwrap();
        let _ = fx_mul(&a, &b, &cfg, &mut ledger, false, CostConvention::AppendixC).unwrap();
        assert_eq!(ledger.last_toffoli(), 512);
        let _ = fx_mul(&a, &b, &cfg, &mut ledger, true, CostConvention::AppendixC).unwrap();
        assert_eq!(ledger.last_toffoli(), 256);
        // Section3 pins the full charge even for classical factors
        let _ = fx_mul(&a, &b, &cfg, &mut ledger, true, CostConvention::Section3).unwrap();
        assert_eq!(ledger.last_toffoli(), 512);
    }

    #[test]
    fn mul_by_one_is_exact() {
        for mode in [FxMode::Widening, FxMode::Truncating] {
            let cfg = FxConfig::new(16, 12, mode).unwrap();
            let mut ledger = CostLedger::new();
            let a = fx_encode(0.8125, &cfg).unwrap();
            let one = fx_encode(1.0, &cfg).unwrap();
            let prod =
                fx_mul(&a, &one, &cfg, &mut ledger, true, CostConvention::AppendixC).unwrap();
            assert_eq!(fx_decode(&prod), 0.8125);
        }
    }

    #[test]
    fn uncompute_mirrors_cost() {
        let mut ledger = CostLedger::new();
        ledger.charge("mul", 512, 0);
        fx_uncompute(&mut ledger, 512);
        assert_eq!(ledger.toffoli, 1024);
        fx_uncompute(&mut ledger, 0);
        assert_eq!(ledger.toffoli, 1024);
    }

    #[test]
    fn truncating_saturates_and_flags() {
        let cfg = FxConfig::new(8, 4, FxMode::Truncating).unwrap();
        let mut ledger = CostLedger::new();
        let a = fx_encode(7.0, &cfg).unwrap();
        let sum = fx_add(&a, &a, &cfg, &mut ledger, false).unwrap();
        assert_eq!(ledger.saturation_events, 1);
        assert_eq!(sum.raw(), (1 << 7) - 1);
    }

    #[test]
    fn widening_width_budget_enforced() {
        let cfg = FxConfig::new(63, 30, FxMode::Widening).unwrap();
        let mut ledger = CostLedger::new();
        let a = fx_encode(1.5, &cfg).unwrap();
        let sq = fx_mul(&a, &a, &cfg, &mut ledger, false, CostConvention::AppendixC).unwrap();
        assert_eq!(sq.width(), 127);
        assert!(fx_mul(&sq, &a, &cfg, &mut ledger, false, CostConvention::AppendixC).is_err());
    }

    #[test]
    fn truncating_rounding_error_bound() {
        let cfg = t16();
        let mut ledger = CostLedger::new();
        let vals = [0.3217, -0.8841, 0.0417, 0.5, -0.25, 0.7774];
        for &x in &vals {
            for &y in &vals {
                let a = fx_encode(x, &cfg).unwrap();
                let b = fx_encode(y, &cfg).unwrap();
                let prod =
                    fx_mul(&a, &b, &cfg, &mut ledger, false, CostConvention::AppendixC).unwrap();
                let err = (fx_decode(&prod) - fx_decode(&a) * fx_decode(&b)).abs();
                assert!(err <= (-(cfg.frac_bits as f64)).exp2(), "{x} * {y}: {err}");
            }
        }
        assert_eq!(ledger.saturation_events, 0);
    }

    #[test]
    fn ledger_json_shape() {
        let mut ledger = CostLedger::new();
        ledger.charge("probe", 7, 3);
        ledger.note_ancilla(9);
        let json = serde_json::to_value(&ledger).unwrap();
        assert_eq!(json["toffoli"], 7);
        assert_eq!(json["ancilla_highwater"], 9);
        assert_eq!(json["events"][0]["label"], "probe");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn widening_mul_is_exact(ar in -(1i64 << 24)..(1i64 << 24), br in -(1i64 << 24)..(1i64 << 24)) {
                let cfg = FxConfig::new(26, 12, FxMode::Widening).unwrap();
                let a = FixedPointValue { raw: ar as i128, width: 26, frac_bits: 12 };
                let b = FixedPointValue { raw: br as i128, width: 26, frac_bits: 12 };
                let mut ledger = CostLedger::new();
                let prod = fx_mul(&a, &b, &cfg, &mut ledger, false, CostConvention::AppendixC).unwrap();
                // products stay under 2^53, so the f64 comparison is exact
                prop_assert_eq!(fx_decode(&prod), fx_decode(&a) * fx_decode(&b));
            }

            #[test]
            fn widening_add_is_exact(ar in -(1i64 << 40)..(1i64 << 40), br in -(1i64 << 40)..(1i64 << 40)) {
                let cfg = FxConfig::new(42, 20, FxMode::Widening).unwrap();
                let a = FixedPointValue { raw: ar as i128, width: 42, frac_bits: 20 };
                let b = FixedPointValue { raw: br as i128, width: 42, frac_bits: 20 };
                let mut ledger = CostLedger::new();
                let sum = fx_add(&a, &b, &cfg, &mut ledger, false).unwrap();
                prop_assert_eq!(fx_decode(&sum), fx_decode(&a) + fx_decode(&b));
            }

            #[test]
            fn encode_decode_round_trip_on_grid(raw in -(1i64 << 13)..(1i64 << 13)) {
                let cfg = FxConfig::truncating(16).unwrap();
                let x = raw as f64 * (-(cfg.frac_bits as f64)).exp2();
                let v = fx_encode(x, &cfg).unwrap();
                prop_assert_eq!(fx_decode(&v), x);
            }
        }
    }
}
