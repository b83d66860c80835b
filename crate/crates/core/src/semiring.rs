//! The max-plus semiring: scalars from ℝ ∪ {−∞} with ⊕ = max and ⊙ = +,
//! plus the smoothed addition family ⊕ₕ that recovers max as h → 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of the max-plus semiring.
///
/// Bottom (−∞) is a distinguished variant rather than an IEEE infinity so
/// that arithmetic never routes −∞ through floating-point addition; every
/// operation branches on it explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScalarRepr", into = "ScalarRepr")]
pub enum MaxPlusScalar {
    /// The additive zero −∞: neutral for ⊕, absorbing for ⊙.
    Bottom,
    /// A finite real value.
    Finite(f64),
}

impl MaxPlusScalar {
    /// Additive zero (−∞).
    pub const fn zero() -> Self {
        MaxPlusScalar::Bottom
    }

    /// Multiplicative unit (0).
    pub const fn one() -> Self {
        MaxPlusScalar::Finite(0.0)
    }

    /// Classifies an `f64`: −∞ becomes bottom, finite values stay finite,
    /// NaN and +∞ are rejected.
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::NEG_INFINITY {
            Ok(MaxPlusScalar::Bottom)
        } else if value.is_finite() {
            Ok(MaxPlusScalar::Finite(value))
        } else {
            Err(Error::NonFiniteScalar(value))
        }
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, MaxPlusScalar::Bottom)
    }

    /// The underlying value, with bottom mapped to −∞.
    pub fn as_f64(self) -> f64 {
        match self {
            MaxPlusScalar::Bottom => f64::NEG_INFINITY,
            MaxPlusScalar::Finite(v) => v,
        }
    }

    /// Semiring addition: a ⊕ b = max{a, b}.
    pub fn oplus(self, other: Self) -> Self {
        match (self, other) {
            (MaxPlusScalar::Bottom, x) | (x, MaxPlusScalar::Bottom) => x,
            (MaxPlusScalar::Finite(a), MaxPlusScalar::Finite(b)) => MaxPlusScalar::Finite(a.max(b)),
        }
    }

    /// Semiring multiplication: a ⊙ b = a + b.
    pub fn odot(self, other: Self) -> Self {
        match (self, other) {
            (MaxPlusScalar::Bottom, _) | (_, MaxPlusScalar::Bottom) => MaxPlusScalar::Bottom,
            (MaxPlusScalar::Finite(a), MaxPlusScalar::Finite(b)) => MaxPlusScalar::Finite(a + b),
        }
    }

    /// The canonical order: a ≺ b iff a ⊕ b = b.
    pub fn precedes(self, other: Self) -> bool {
        self.oplus(other) == other
    }
}

/// Smoothed addition u ⊕ₕ v = h·ln(e^{u/h} + e^{v/h}).
///
/// Evaluated as max(u,v) + h·ln(1 + e^{−|u−v|/h}), which cannot overflow
/// and keeps max(u,v) ≤ u ⊕ₕ v ≤ max(u,v) + h·ln 2 for every h > 0.
pub fn oplus_h(u: f64, v: f64, h: f64) -> Result<f64> {
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::NonFiniteDequantization);
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::NonpositiveH(h));
    }
    let m = u.max(v);
    let gap = (u - v).abs();
    Ok(m + h * (-gap / h).exp().ln_1p())
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Num(f64),
    Str(String),
}

impl TryFrom<ScalarRepr> for MaxPlusScalar {
    type Error = String;

    fn try_from(repr: ScalarRepr) -> std::result::Result<Self, String> {
        match repr {
            ScalarRepr::Num(v) => MaxPlusScalar::new(v).map_err(|e| e.to_string()),
            ScalarRepr::Str(s) if s == "-inf" => Ok(MaxPlusScalar::Bottom),
            ScalarRepr::Str(s) => Err(format!("expected a number or \"-inf\", got \"{s}\"")),
        }
    }
}

impl From<MaxPlusScalar> for ScalarRepr {
    fn from(s: MaxPlusScalar) -> Self {
        match s {
            MaxPlusScalar::Bottom => ScalarRepr::Str("-inf".to_owned()),
            MaxPlusScalar::Finite(v) => ScalarRepr::Num(v),
        }
    }
}
