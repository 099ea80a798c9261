//! Increasing concave utilities with analytic first and second derivatives.
//!
//! Every kind is total on finite inputs. The piecewise kinds switch branch at a
//! fixed knot; the closed side of the knot always takes the "upper" formula
//! (`x >= knot`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents passed to `exp` are clamped to this magnitude.
pub const EXP_CLAMP: f64 = 700.0;

/// Knot of [`UtilitySpec::ExtendedArctan`]: `1/sqrt(3)`.
pub const ARCTAN_KNOT: f64 = 0.577_350_269_189_625_8;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// An increasing, concave utility function.
///
/// Serialized as `{"kind": "cara", "gamma": 0.2}`, `{"kind": "extended_log"}`,
/// `{"kind": "partial_iara"}`, `{"kind": "extended_arctan"}` or
/// `{"kind": "risk_neutral"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// `-exp(-gamma x)`.
    Cara { gamma: f64 },
    /// `ln x` for `x >= 1`, continued below 1 by the quadratic `-(x^2 - 4x + 3)/2`.
    ExtendedLog,
    /// `-exp(-x)` for `x >= 0`, continued below 0 by `-(x^2/2 - x + 1)`.
    PartialIara,
    /// `arctan x` for `x >= 1/sqrt(3)`, continued below by a quadratic. Bounded above by `pi/2`.
    ExtendedArctan,
    /// `x`.
    RiskNeutral,
}

#[inline]
fn clamped_exp(e: f64) -> f64 {
    e.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

impl UtilitySpec {
    pub fn cara(gamma: f64) -> Self {
        UtilitySpec::Cara { gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if let UtilitySpec::Cara { gamma } = *self {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::invalid("gamma", "CARA risk aversion must be a positive finite number"));
            }
        }
        Ok(())
    }

    /// Risk-aversion coefficient when the utility is CARA.
    pub fn cara_gamma(&self) -> Option<f64> {
        match *self {
            UtilitySpec::Cara { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn is_risk_neutral(&self) -> bool {
        matches!(self, UtilitySpec::RiskNeutral)
    }

    pub fn name(&self) -> &'static str {
        match self {
            UtilitySpec::Cara { .. } => "cara",
            UtilitySpec::ExtendedLog => "extended_log",
            UtilitySpec::PartialIara => "partial_iara",
            UtilitySpec::ExtendedArctan => "extended_arctan",
            UtilitySpec::RiskNeutral => "risk_neutral",
        }
    }

    /// `u(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Cara { gamma } => -clamped_exp(-gamma * x),
            UtilitySpec::ExtendedLog => {
                if x >= 1.0 {
                    x.ln()
                } else {
                    -0.5 * (x * x - 4.0 * x + 3.0)
                }
            }
            UtilitySpec::PartialIara => {
                if x >= 0.0 {
                    -(-x).exp()
                } else {
                    -(0.5 * x * x - x + 1.0)
                }
            }
            UtilitySpec::ExtendedArctan => {
                if x >= ARCTAN_KNOT {
                    x.atan()
                } else {
                    (-3.0 * SQRT_3 * x * x + 18.0 * x + 16.0 * PI / 6.0 + SQRT_3 - 18.0 / SQRT_3) / 16.0
                }
            }
            UtilitySpec::RiskNeutral => x,
        }
    }

    /// `u'(x)`.
    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Cara { gamma } => gamma * clamped_exp(-gamma * x),
            UtilitySpec::ExtendedLog => {
                if x >= 1.0 {
                    1.0 / x
                } else {
                    2.0 - x
                }
            }
            UtilitySpec::PartialIara => {
                if x >= 0.0 {
                    (-x).exp()
                } else {
                    1.0 - x
                }
            }
            UtilitySpec::ExtendedArctan => {
                if x >= ARCTAN_KNOT {
                    1.0 / (1.0 + x * x)
                } else {
                    (18.0 - 6.0 * SQRT_3 * x) / 16.0
                }
            }
            UtilitySpec::RiskNeutral => 1.0,
        }
    }

    /// `u''(x)`.
    pub fn deriv2(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Cara { gamma } => -gamma * gamma * clamped_exp(-gamma * x),
            UtilitySpec::ExtendedLog => {
                if x >= 1.0 {
                    -1.0 / (x * x)
                } else {
                    -1.0
                }
            }
            UtilitySpec::PartialIara => {
                if x >= 0.0 {
                    -(-x).exp()
                } else {
                    -1.0
                }
            }
            UtilitySpec::ExtendedArctan => {
                if x >= ARCTAN_KNOT {
                    let d = 1.0 + x * x;
                    -2.0 * x / (d * d)
                } else {
                    -3.0 * SQRT_3 / 8.0
                }
            }
            UtilitySpec::RiskNeutral => 0.0,
        }
    }

    /// `-u''(x) / u'(x)`.
    pub fn absolute_risk_aversion(&self, x: f64) -> f64 {
        match *self {
            // Exact, and immune to the exponent clamp.
            UtilitySpec::Cara { gamma } => gamma,
            _ => -self.deriv2(x) / self.deriv(x),
        }
    }

    /// True when evaluating at `x` hits the exponent clamp, i.e. the returned
    /// value is a saturated stand-in for an unrepresentable number.
    pub fn saturates(&self, x: f64) -> bool {
        match *self {
            UtilitySpec::Cara { gamma } => (gamma * x).abs() > EXP_CLAMP,
            _ => false,
        }
    }

    /// Branch points of piecewise kinds.
    pub fn knots(&self) -> &'static [f64] {
        match self {
            UtilitySpec::ExtendedLog => &[1.0],
            UtilitySpec::PartialIara => &[0.0],
            UtilitySpec::ExtendedArctan => &[ARCTAN_KNOT],
            _ => &[],
        }
    }

    /// Least upper bound of `u` over the reals, if finite.
    pub fn supremum(&self) -> Option<f64> {
        match self {
            UtilitySpec::Cara { .. } | UtilitySpec::PartialIara => Some(0.0),
            UtilitySpec::ExtendedArctan => Some(PI / 2.0),
            _ => None,
        }
    }
}
