//! Polarized photons with read-once measurement semantics.
//!
//! A photon carries a polarization angle. Measuring it through a polarizer
//! consumes it; if it is transmitted, a fresh photon polarized along the
//! polarizer axis emerges. Protocol code only ever prepares the four canonical
//! angles 0, 45, 90 and 135 degrees, where the basis bit selects rectilinear
//! (0/90) or diagonal (45/135) and the value bit selects within the pair.

mod pulse;

pub use pulse::{
    four_way_fractions, pulse_detect_four_way, pulse_receive, DetectorModel, FaintPulse, FourWayCounts, Reception,
    REFERENCE_EFFICIENCY,
};

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::Diagonal
    }

    /// Axis of the polarizer that reads value 0 in this basis.
    pub fn axis(self) -> f64 {
        if self.bit() {
            45.0
        } else {
            0.0
        }
    }

    pub fn other(self) -> Self {
        Basis::from_bit(!self.bit())
    }
}

/// One of the four canonical polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Polarization {
    pub basis: Basis,
    pub value: bool,
}

impl Polarization {
    pub const ALL: [Polarization; 4] = [
        Polarization::new(Basis::Rectilinear, false),
        Polarization::new(Basis::Diagonal, false),
        Polarization::new(Basis::Rectilinear, true),
        Polarization::new(Basis::Diagonal, true),
    ];

    pub const fn new(basis: Basis, value: bool) -> Self {
        Self { basis, value }
    }

    /// 45·basis + 90·value.
    pub fn angle(self) -> f64 {
        self.basis.axis() + if self.value { 90.0 } else { 0.0 }
    }

    /// Inverse of [`Polarization::angle`] for the four canonical angles.
    pub fn from_angle(angle: f64) -> Option<Self> {
        let a = normalize(angle);
        Polarization::ALL.into_iter().find(|p| p.angle() == a)
    }

    pub fn rotated(self) -> Self {
        Self::new(self.basis, !self.value)
    }
}

/// Reduce an axis angle to `[0, 180)`; polarization axes are unoriented.
pub fn normalize(angle: f64) -> f64 {
    let a = angle.rem_euclid(180.0);
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

/// cos² of an angle difference in degrees, exact at multiples of 45°.
pub fn cos2(delta: f64) -> f64 {
    let d = normalize(delta);
    if d == 0.0 {
        1.0
    } else if d == 90.0 {
        0.0
    } else if d == 45.0 || d == 135.0 {
        0.5
    } else {
        d.to_radians().cos().powi(2)
    }
}

/// A single photon. Any measurement consumes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Photon {
    angle: f64,
    consumed: bool,
}

impl Photon {
    pub fn at_angle(angle: f64) -> Self {
        Self {
            angle: normalize(angle),
            consumed: false,
        }
    }

    pub fn new(polarization: Polarization) -> Self {
        Self::at_angle(polarization.angle())
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// The canonical polarization, if the angle is one of the four.
    pub fn polarization(&self) -> Option<Polarization> {
        Polarization::from_angle(self.angle)
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    fn consume(&mut self) {
        assert!(!self.consumed, "photon measured twice");
        self.consumed = true;
    }
}

/// Prepare a photon carrying message bit `m` in the basis selected by key bit `k`.
pub fn encode_bit(m: bool, k: bool) -> Photon {
    Photon::new(Polarization::new(Basis::from_bit(k), m))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolarizerOutcome {
    /// The photon passed and now sits exactly on the polarizer axis.
    Transmitted(Photon),
    Absorbed,
}

impl PolarizerOutcome {
    pub fn transmitted(&self) -> bool {
        matches!(self, PolarizerOutcome::Transmitted(_))
    }
}

/// Send a photon into a polarizer at angle `beta`.
///
/// Transmission happens with probability cos²(α − β). Panics if the photon
/// was already consumed.
pub fn measure_polarizer(photon: &mut Photon, beta: f64, rng: &mut RngStream) -> PolarizerOutcome {
    photon.consume();
    if rng.bernoulli(cos2(photon.angle - beta)) {
        PolarizerOutcome::Transmitted(Photon::at_angle(beta))
    } else {
        PolarizerOutcome::Absorbed
    }
}

/// Read a photon in `basis`: transmission through the basis' zero axis reads 0.
/// Deterministic when the basis matches, a fair coin when it does not.
pub fn measure_basis(photon: &mut Photon, basis: Basis, rng: &mut RngStream) -> bool {
    !measure_polarizer(photon, basis.axis(), rng).transmitted()
}

/// Rotate the polarization axis by 90° without measuring.
pub fn rotate90(photon: &Photon) -> Photon {
    assert!(!photon.consumed, "cannot rotate a consumed photon");
    Photon::at_angle(photon.angle + 90.0)
}
