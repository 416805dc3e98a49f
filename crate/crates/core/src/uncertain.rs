//! Uncertain measurements `best ± uncertainty`, their propagation rules, the
//! total order used to rank them, and the UDISSIM vector dissimilarity.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UstError};

/// A measurement `best ± uncertainty`.
///
/// `best` is the optimistic estimate and `uncertainty` the non-negative
/// half-width of the interval the true value is believed to lie in. Both
/// fields are always finite.
///
/// Equality and ordering are exact on the underlying reals: values compare
/// by `best` first and by `uncertainty` on ties, which makes
/// `UncertainValue` usable as a sort key.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "RawValue")]
pub struct UncertainValue {
    best: f64,
    uncertainty: f64,
}

#[derive(Deserialize)]
struct RawValue {
    best: f64,
    uncertainty: f64,
}

impl TryFrom<RawValue> for UncertainValue {
    type Error = UstError;

    fn try_from(raw: RawValue) -> Result<Self> {
        UncertainValue::new(raw.best, raw.uncertainty)
    }
}

impl UncertainValue {
    /// Builds `best ± |uncertainty|`. Non-finite inputs are rejected.
    pub fn new(best: f64, uncertainty: f64) -> Result<Self> {
        if !best.is_finite() {
            return Err(UstError::NonFinite("best estimate"));
        }
        if !uncertainty.is_finite() {
            return Err(UstError::NonFinite("uncertainty"));
        }
        Ok(Self {
            best,
            uncertainty: uncertainty.abs(),
        })
    }

    /// A value with zero uncertainty.
    pub fn certain(best: f64) -> Result<Self> {
        Self::new(best, 0.0)
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    /// Same best estimate, uncertainty dropped.
    pub fn without_uncertainty(&self) -> Self {
        Self {
            best: self.best,
            uncertainty: 0.0,
        }
    }

    // Callers guarantee finiteness; used on hot paths and by the
    // propagation rules after their own checks.
    pub(crate) fn from_parts_unchecked(best: f64, uncertainty: f64) -> Self {
        debug_assert!(best.is_finite() && uncertainty.is_finite() && uncertainty >= 0.0);
        Self { best, uncertainty }
    }

    fn finite(best: f64, uncertainty: f64, op: &'static str) -> Result<Self> {
        if best.is_finite() && uncertainty.is_finite() {
            Ok(Self { best, uncertainty })
        } else {
            Err(UstError::NumericOverflow(op))
        }
    }

    /// `(x ± δx) + (y ± δy) = (x + y) ± (δx + δy)`.
    pub fn checked_add(self, other: Self) -> Result<Self> {
        Self::finite(
            self.best + other.best,
            self.uncertainty + other.uncertainty,
            "addition",
        )
    }

    /// `(x ± δx) − (y ± δy) = (x − y) ± (δx + δy)`; uncertainties add.
    pub fn checked_sub(self, other: Self) -> Result<Self> {
        Self::finite(
            self.best - other.best,
            self.uncertainty + other.uncertainty,
            "subtraction",
        )
    }

    /// `(x ± δx)^n = x^n ± |n|·|x|^(n−1)·δx` for `n ≥ 1`.
    ///
    /// The relative form `|n|·(δx/|x|)·|x^n|` is singular at `x = 0`; the
    /// expression above is its continuous extension, so `0 ± δ` squared is
    /// `0 ± 0` and `0 ± δ` to the first power is `0 ± δ`.
    pub fn checked_pow(self, n: i32) -> Result<Self> {
        if n < 1 {
            return Err(UstError::UnsupportedExponent(n));
        }
        let best = self.best.powi(n);
        let uncertainty = f64::from(n) * self.best.abs().powi(n - 1) * self.uncertainty;
        Self::finite(best, uncertainty, "power")
    }

    /// Exact equality of both fields.
    pub fn u_eq(&self, other: &Self) -> bool {
        self.best == other.best && self.uncertainty == other.uncertainty
    }

    /// Strict order: smaller best first, then smaller uncertainty.
    pub fn u_lt(&self, other: &Self) -> bool {
        self.best < other.best
            || (self.best == other.best && self.uncertainty < other.uncertainty)
    }
}

impl PartialEq for UncertainValue {
    fn eq(&self, other: &Self) -> bool {
        self.u_eq(other)
    }
}

impl Eq for UncertainValue {}

impl PartialOrd for UncertainValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UncertainValue {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.u_lt(other) {
            Ordering::Less
        } else if other.u_lt(self) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }
}

impl fmt::Display for UncertainValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.best, self.uncertainty)
    }
}

/// A fixed-length, non-empty sequence of uncertain values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<UncertainValue>", into = "Vec<UncertainValue>")]
pub struct UncertainVector(Vec<UncertainValue>);

impl UncertainVector {
    pub fn new(elements: Vec<UncertainValue>) -> Result<Self> {
        if elements.is_empty() {
            return Err(UstError::InvalidData(
                "uncertain vector must have at least one element".into(),
            ));
        }
        Ok(Self(elements))
    }

    /// Pairs bests with uncertainties element-wise.
    pub fn from_pairs(bests: &[f64], uncertainties: &[f64]) -> Result<Self> {
        if bests.len() != uncertainties.len() {
            return Err(UstError::DimensionMismatch(format!(
                "{} bests but {} uncertainties",
                bests.len(),
                uncertainties.len()
            )));
        }
        bests
            .iter()
            .zip(uncertainties)
            .map(|(&b, &u)| UncertainValue::new(b, u))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[UncertainValue] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UncertainValue> {
        self.0.iter()
    }
}

impl TryFrom<Vec<UncertainValue>> for UncertainVector {
    type Error = UstError;

    fn try_from(v: Vec<UncertainValue>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UncertainVector> for Vec<UncertainValue> {
    fn from(v: UncertainVector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for UncertainVector {
    type Output = UncertainValue;

    fn index(&self, i: usize) -> &UncertainValue {
        &self.0[i]
    }
}

/// UDISSIM between two uncertain vectors of equal length:
/// `Σ (v_i − u_i)² ± 2·Σ |v_i − u_i|·(δv_i + δu_i)`.
pub fn udissim(v: &UncertainVector, u: &UncertainVector) -> Result<UncertainValue> {
    udissim_slices(v.as_slice(), u.as_slice())
}

/// [`udissim`] over raw slices, for windows borrowed out of a longer series.
pub fn udissim_slices(v: &[UncertainValue], u: &[UncertainValue]) -> Result<UncertainValue> {
    if v.len() != u.len() {
        return Err(UstError::DimensionMismatch(format!(
            "udissim between vectors of length {} and {}",
            v.len(),
            u.len()
        )));
    }
    if v.is_empty() {
        return Err(UstError::DimensionMismatch(
            "udissim of empty vectors".into(),
        ));
    }
    let (best, uncertainty) = udissim_raw(v, u);
    UncertainValue::finite(best, uncertainty, "udissim")
}

/// Single left-to-right pass; the summation order is fixed so results are
/// reproducible bit for bit.
#[inline]
pub(crate) fn udissim_raw(v: &[UncertainValue], u: &[UncertainValue]) -> (f64, f64) {
    let mut best = 0.0;
    let mut spread = 0.0;
    for (a, b) in v.iter().zip(u) {
        let diff = a.best - b.best;
        best += diff * diff;
        spread += diff.abs() * (a.uncertainty + b.uncertainty);
    }
    (best, 2.0 * spread)
}
