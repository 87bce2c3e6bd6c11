//! Motility functions `Φ: [0, ∞) → [0, ∞)` with degeneracy `Φ(s) ~ s^α` at 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A motility function together with an exact supremum on `[0, b]`.
///
/// The timestep condition needs a certified bound, so implementors must
/// supply `sup_on` exactly rather than estimate it.
pub trait Motility: Send + Sync {
    /// `Φ(s)` for `s ≥ 0`.
    fn eval(&self, s: f64) -> Result<f64>;

    /// `max_{x ∈ [0, b]} Φ(x)`.
    fn sup_on(&self, b: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotilityKind {
    /// `scale · s^α`
    Power,
    /// `scale · s^α + floor`
    PowerPlusFloor,
    /// `scale · s^α / (1 + s^α)`
    BoundedRational,
}

impl MotilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MotilityKind::Power => "power",
            MotilityKind::PowerPlusFloor => "power_plus_floor",
            MotilityKind::BoundedRational => "bounded_rational",
        }
    }
}

impl fmt::Display for MotilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(MotilityKind::Power),
            "power_plus_floor" => Ok(MotilityKind::PowerPlusFloor),
            "bounded_rational" => Ok(MotilityKind::BoundedRational),
            other => Err(Error::InvalidArgument(format!("unknown motility kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotilityModel {
    kind: MotilityKind,
    alpha: f64,
    scale: f64,
    floor: f64,
}

impl MotilityModel {
    pub fn new(kind: MotilityKind, alpha: f64, scale: f64, floor: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("motility alpha must be > 0 (got {alpha})")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("motility scale must be > 0 (got {scale})")));
        }
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::InvalidArgument(format!("motility floor must be >= 0 (got {floor})")));
        }
        if floor != 0.0 && kind != MotilityKind::PowerPlusFloor {
            return Err(Error::InvalidArgument(format!("floor is only meaningful for power_plus_floor, not {kind}")));
        }
        Ok(Self { kind, alpha, scale, floor })
    }

    pub fn power(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(MotilityKind::Power, alpha, scale, 0.0)
    }

    pub fn power_plus_floor(alpha: f64, scale: f64, floor: f64) -> Result<Self> {
        Self::new(MotilityKind::PowerPlusFloor, alpha, scale, floor)
    }

    pub fn bounded_rational(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(MotilityKind::BoundedRational, alpha, scale, 0.0)
    }

    pub fn kind(&self) -> MotilityKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    fn value(&self, s: f64) -> f64 {
        let p = s.powf(self.alpha);
        match self.kind {
            MotilityKind::Power => self.scale * p,
            MotilityKind::PowerPlusFloor => self.scale * p + self.floor,
            MotilityKind::BoundedRational => {
                if p.is_infinite() {
                    self.scale
                } else {
                    self.scale * p / (1.0 + p)
                }
            }
        }
    }
}

impl Motility for MotilityModel {
    fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!("motility evaluated at {s} < 0")));
        }
        Ok(self.value(s))
    }

    fn sup_on(&self, b: f64) -> Result<f64> {
        // all builtin kinds are nondecreasing on [0, ∞)
        self.eval(b)
    }
}
