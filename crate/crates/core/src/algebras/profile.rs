use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::tolerance::ToleranceConfig;

/// A norm that may be unbounded. Serialises as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(*v),
            Bound::Infinite => None,
        }
    }
}

impl From<f64> for Bound {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Bound::Finite(v)
        } else {
            Bound::Infinite
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) => s.serialize_f64(*v),
            Bound::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BoundVisitor;
        impl Visitor<'_> for BoundVisitor {
            type Value = Bound;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Bound, E> {
                Ok(Bound::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bound, E> {
                Ok(Bound::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bound, E> {
                Ok(Bound::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Bound, E> {
                if v == "inf" {
                    Ok(Bound::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(BoundVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub indices: Vec<usize>,
    pub values: Vec<Bound>,
    pub fitted_slope: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictState {
    In,
    Out,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub state: VerdictState,
    pub constant: Option<f64>,
    pub profile: GrowthProfile,
    pub reason: String,
}

impl Verdict {
    pub fn is_in(&self) -> bool {
        self.state == VerdictState::In
    }
    pub fn is_out(&self) -> bool {
        self.state == VerdictState::Out
    }
    pub fn is_conclusive(&self) -> bool {
        self.state != VerdictState::Inconclusive
    }
    /// `Some(true)` for In, `Some(false)` for Out.
    pub fn membership(&self) -> Option<bool> {
        match self.state {
            VerdictState::In => Some(true),
            VerdictState::Out => Some(false),
            VerdictState::Inconclusive => None,
        }
    }
}

/// Fewest profile points that still allow a trend decision.
pub const MIN_POINTS: usize = 4;

/// Least-squares slope of `ln value` against index over the tail half,
/// ignoring exact zeros. All-zero tails have slope 0.
pub fn tail_slope(indices: &[usize], values: &[f64]) -> f64 {
    let start = values.len() / 2;
    let pts: Vec<(f64, f64)> = indices[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (*i as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Number of trailing increments inspected by [`accelerating_tail`].
const RISING_RUN: usize = 3;

/// True when `m·(β_{m+1} − β_m)/β_m` is positive and strictly increasing over
/// the last few steps. A convergent profile has this quantity tending to 0;
/// slow unbounded growth such as `√(a + b·m)` has it rising towards a positive
/// limit, even while the plain log-slope is still below threshold.
pub fn accelerating_tail(indices: &[usize], values: &[f64], floor: f64) -> bool {
    if values.len() < RISING_RUN + 1 {
        return false;
    }
    let k = values.len();
    let g: Vec<f64> = (k - RISING_RUN - 1..k - 1)
        .map(|i| indices[i] as f64 * (values[i + 1] - values[i]) / values[i])
        .collect();
    g.iter().all(|&x| x > floor) && g.windows(2).all(|w| w[1] > w[0])
}

/// Trend classification shared by every empirical oracle.
pub fn classify(indices: Vec<usize>, values: Vec<Bound>, tol: &ToleranceConfig, note: &str) -> Verdict {
    let saturated = values.iter().any(|v| !v.is_finite());
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        let reason = format!("unbounded at index {}", indices[pos]);
        return Verdict {
            state: VerdictState::Out,
            constant: None,
            profile: GrowthProfile {
                indices,
                values,
                fitted_slope: None,
                saturated,
            },
            reason,
        };
    }
    let finite: Vec<f64> = values.iter().filter_map(Bound::value).collect();
    if finite.len() < MIN_POINTS {
        let reason = format!("only {} profile points{note}", finite.len());
        return Verdict {
            state: VerdictState::Inconclusive,
            constant: None,
            profile: GrowthProfile {
                indices,
                values,
                fitted_slope: None,
                saturated,
            },
            reason,
        };
    }
    let slope = tail_slope(&indices, &finite);
    let max = finite.iter().copied().fold(0.0, f64::max);
    let (state, constant, reason) = if slope > tol.growth_slope_tol {
        (VerdictState::Out, None, format!("tail log-slope {slope:.4} exceeds {}{note}", tol.growth_slope_tol))
    } else if finite.iter().all(|&v| v > 0.0) && accelerating_tail(&indices, &finite, tol.residual_tol) {
        (
            VerdictState::Inconclusive,
            None,
            format!("tail log-slope {slope:.4} but relative increments still accelerating{note}"),
        )
    } else {
        (VerdictState::In, Some(max), format!("bounded by {max:.6e}, tail log-slope {slope:.4}{note}"))
    };
    Verdict {
        state,
        constant,
        profile: GrowthProfile {
            indices,
            values,
            fitted_slope: Some(slope),
            saturated,
        },
        reason,
    }
}
