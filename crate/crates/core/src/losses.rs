//! Per-sample loss models and their convex conjugates.
//!
//! Every loss is written as `l(u, y)` with `u = w·x` the prediction. The
//! conjugate is taken in `u` for fixed `y`. Huber and hinge losses act on the
//! margin `y·u` and need labels in {-1, +1}; their dual variables live in the
//! interval `{a : y·a ∈ [-1, 0]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothing width of the Huber loss.
pub const DEFAULT_HUBER_GAMMA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    /// `(y - u)^2`
    Squared,
    /// Smoothed hinge with quadratic zone of width `gamma`.
    Huber { gamma: f64 },
    /// `max(0, 1 - y u)`
    Hinge,
}

/// Closed interval of admissible dual values; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FeasibleInterval {
    pub fn contains(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }

    pub fn clamp(&self, a: f64) -> f64 {
        a.max(self.lo).min(self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl LossModel {
    pub fn huber(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "huber gamma must be positive, got {gamma}"
            )));
        }
        Ok(LossModel::Huber { gamma })
    }

    /// Builds a loss from its configuration id.
    pub fn from_id(id: &str, gamma: Option<f64>) -> Result<Self> {
        match id {
            "squared" => Ok(LossModel::Squared),
            "hinge" => Ok(LossModel::Hinge),
            "huber" => LossModel::huber(gamma.unwrap_or(DEFAULT_HUBER_GAMMA)),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected one of \"squared\", \"huber\", \"hinge\""
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            LossModel::Squared => "squared",
            LossModel::Huber { .. } => "huber",
            LossModel::Hinge => "hinge",
        }
    }

    /// Smoothness modulus: the loss is `1/mu`-smooth, `mu = 0` when non-smooth.
    pub fn mu(&self) -> f64 {
        match *self {
            LossModel::Squared => 0.5,
            LossModel::Huber { gamma } => gamma,
            LossModel::Hinge => 0.0,
        }
    }

    pub fn is_classification(&self) -> bool {
        !matches!(self, LossModel::Squared)
    }

    pub fn check_label(&self, y: f64) -> Result<()> {
        self.check_label_for(0, y)
    }

    pub(crate) fn check_label_for(&self, sample: usize, y: f64) -> Result<()> {
        let ok = if self.is_classification() {
            y == 1.0 || y == -1.0
        } else {
            y.is_finite()
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLabel { sample, label: y })
        }
    }

    pub fn loss_value(&self, u: f64, y: f64) -> Result<f64> {
        self.check_label(y)?;
        Ok(self.value(u, y))
    }

    pub(crate) fn value(&self, u: f64, y: f64) -> f64 {
        match *self {
            LossModel::Squared => (y - u) * (y - u),
            LossModel::Huber { gamma } => {
                let z = y * u;
                if z >= 1.0 {
                    0.0
                } else if z < 1.0 - gamma {
                    1.0 - z - 0.5 * gamma
                } else {
                    (1.0 - z) * (1.0 - z) / (2.0 * gamma)
                }
            }
            LossModel::Hinge => (1.0 - y * u).max(0.0),
        }
    }

    /// Derivative in `u`; for the hinge the kink `y·u = 1` selects 0.
    pub fn loss_derivative(&self, u: f64, y: f64) -> f64 {
        match *self {
            LossModel::Squared => 2.0 * (u - y),
            LossModel::Huber { gamma } => {
                let z = y * u;
                if z >= 1.0 {
                    0.0
                } else if z < 1.0 - gamma {
                    -y
                } else {
                    -y * (1.0 - z) / gamma
                }
            }
            LossModel::Hinge => {
                if y * u < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }

    /// Subdifferential of the loss at `u` as an interval.
    pub fn subdifferential(&self, u: f64, y: f64) -> FeasibleInterval {
        match self {
            LossModel::Hinge => {
                let z = y * u;
                if z < 1.0 {
                    FeasibleInterval { lo: -y, hi: -y }
                } else if z > 1.0 {
                    FeasibleInterval { lo: 0.0, hi: 0.0 }
                } else {
                    FeasibleInterval {
                        lo: (-y).min(0.0),
                        hi: (-y).max(0.0),
                    }
                }
            }
            _ => {
                let g = self.loss_derivative(u, y);
                FeasibleInterval { lo: g, hi: g }
            }
        }
    }

    pub fn feasible_interval(&self, y: f64) -> FeasibleInterval {
        match self {
            LossModel::Squared => FeasibleInterval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            _ => {
                if y > 0.0 {
                    FeasibleInterval { lo: -1.0, hi: 0.0 }
                } else {
                    FeasibleInterval { lo: 0.0, hi: 1.0 }
                }
            }
        }
    }

    pub fn project_feasible(&self, a: f64, y: f64) -> f64 {
        match self {
            LossModel::Squared => a,
            _ => self.feasible_interval(y).clamp(a),
        }
    }

    /// Convex conjugate in `u`; `+inf` outside the feasible interval.
    pub fn conjugate_value(&self, a: f64, y: f64) -> f64 {
        match *self {
            LossModel::Squared => 0.25 * a * a + y * a,
            LossModel::Huber { gamma } => {
                if self.feasible_interval(y).contains(a) {
                    y * a + 0.5 * gamma * a * a
                } else {
                    f64::INFINITY
                }
            }
            LossModel::Hinge => {
                if self.feasible_interval(y).contains(a) {
                    y * a
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Derivative of the conjugate; errors when `a` is infeasible.
    pub fn conjugate_derivative(&self, a: f64, y: f64) -> Result<f64> {
        let interval = self.feasible_interval(y);
        if !interval.contains(a) {
            return Err(Error::Infeasible {
                sample: 0,
                value: a,
                lo: interval.lo,
                hi: interval.hi,
            });
        }
        Ok(self.conjugate_slope(a, y))
    }

    #[inline]
    pub(crate) fn conjugate_slope(&self, a: f64, y: f64) -> f64 {
        match *self {
            LossModel::Squared => 0.5 * a + y,
            LossModel::Huber { gamma } => y + gamma * a,
            // linear on the closed interval
            LossModel::Hinge => y,
        }
    }
}
