//! Faint light pulses and photon-counting detectors.
//!
//! A pulse is described by how many photons a detector of the reference
//! efficiency registers on average when the whole pulse enters it. Photon
//! arrivals are Poisson, so splitting the pulse across beams and detectors
//! gives independent Poisson counts per beam (thinning).

use serde::{Deserialize, Serialize};

use super::{cos2, Basis, Polarization};
use crate::rng::RngStream;

/// Detector efficiency at which a standard pulse's mean is calibrated.
pub const REFERENCE_EFFICIENCY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
}

impl DetectorModel {
    pub fn new(efficiency: f64) -> Self {
        assert!(
            efficiency > 0.0 && efficiency <= 1.0,
            "detector efficiency must lie in (0, 1], got {efficiency}"
        );
        Self { efficiency }
    }

    pub fn reference() -> Self {
        Self::new(REFERENCE_EFFICIENCY)
    }

    pub fn perfect() -> Self {
        Self::new(1.0)
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::reference()
    }
}

/// A weak coherent pulse in one of the canonical polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct FaintPulse {
    pub polarization: Polarization,
    mean_detected: f64,
}

impl FaintPulse {
    pub const STANDARD_MEAN: f64 = 1.0;

    pub fn new(polarization: Polarization, mean_detected: f64) -> Self {
        assert!(
            mean_detected > 0.0 && mean_detected.is_finite(),
            "pulse mean must be positive"
        );
        Self {
            polarization,
            mean_detected,
        }
    }

    pub fn standard(polarization: Polarization) -> Self {
        Self::new(polarization, Self::STANDARD_MEAN)
    }

    pub fn mean_detected(&self) -> f64 {
        self.mean_detected
    }

    /// Mean detected photon count at the given detector efficiency.
    pub fn effective_mean(&self, detector: DetectorModel) -> f64 {
        self.mean_detected * detector.efficiency / REFERENCE_EFFICIENCY
    }
}

/// Photon counts on the four beams of a mirror-and-two-prisms analyzer,
/// indexed like [`Polarization::ALL`] (0°, 45°, 90°, 135°).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FourWayCounts(pub [u64; 4]);

impl FourWayCounts {
    pub fn get(&self, p: Polarization) -> u64 {
        self.0[beam_index(p)]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn beams_fired(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    /// The pulse polarization when three beams fired. The silent beam is the
    /// one orthogonal to the pulse, since a canonical pulse sends no light there.
    pub fn unambiguous(&self) -> Option<Polarization> {
        if self.beams_fired() != 3 {
            return None;
        }
        let silent = Polarization::ALL
            .into_iter()
            .find(|p| self.get(*p) == 0)
            .expect("one silent beam");
        Some(silent.rotated())
    }
}

fn beam_index(p: Polarization) -> usize {
    Polarization::ALL
        .iter()
        .position(|q| *q == p)
        .expect("canonical")
}

/// Fraction of the pulse's light reaching each of the four beams: the mirror
/// halves the pulse and each prism splits its half by cos²/sin².
pub fn four_way_fractions(theta: f64) -> [f64; 4] {
    Polarization::ALL.map(|beam| 0.5 * cos2(theta - beam.angle()))
}

/// Split a pulse four ways and count photons on each beam. Consumes the pulse.
pub fn pulse_detect_four_way(
    pulse: FaintPulse,
    detector: DetectorModel,
    rng: &mut RngStream,
) -> FourWayCounts {
    let mu = pulse.effective_mean(detector);
    let fractions = four_way_fractions(pulse.polarization.angle());
    FourWayCounts(fractions.map(|f| rng.poisson(mu * f)))
}

/// What a two-detector receiver reports for one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reception {
    Bit(bool),
    /// Neither detector registered a photon.
    Erasure,
    /// Both detectors registered: the pulse was not in the receiving basis.
    Conflict,
}

/// Analyze a pulse with a prism in `basis` and one detector per output.
/// Consumes the pulse.
pub fn pulse_receive(
    pulse: FaintPulse,
    basis: Basis,
    detector: DetectorModel,
    rng: &mut RngStream,
) -> Reception {
    let mu = pulse.effective_mean(detector);
    let p0 = cos2(pulse.polarization.angle() - basis.axis());
    let zero = rng.poisson(mu * p0);
    let one = rng.poisson(mu * (1.0 - p0));
    match (zero > 0, one > 0) {
        (false, false) => Reception::Erasure,
        (true, false) => Reception::Bit(false),
        (false, true) => Reception::Bit(true),
        (true, true) => Reception::Conflict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol(angle: f64) -> Polarization {
        Polarization::from_angle(angle).unwrap()
    }

    #[test]
    fn effective_mean_scales_with_efficiency() {
        let p = FaintPulse::standard(pol(0.0));
        assert!((p.effective_mean(DetectorModel::reference()) - 1.0).abs() < 1e-12);
        assert!((p.effective_mean(DetectorModel::perfect()) - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn zero_mean_rejected() {
        FaintPulse::new(pol(0.0), 0.0);
    }

    #[test]
    #[should_panic]
    fn efficiency_out_of_range() {
        DetectorModel::new(1.5);
    }

    #[test]
    fn fractions_sum_to_one() {
        for theta in [0.0, 10.0, 45.0, 77.0, 90.0, 135.0, 170.0] {
            let s: f64 = four_way_fractions(theta).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "theta {theta}: {s}");
        }
    }

    #[test]
    fn orthogonal_beam_is_dark() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..10_000 {
            let c = pulse_detect_four_way(
                FaintPulse::standard(pol(0.0)),
                DetectorModel::perfect(),
                &mut rng,
            );
            assert_eq!(c.get(pol(90.0)), 0);
        }
    }

    #[test]
    fn unambiguous_identification() {
        // 0° pulse: 90° beam dark, the others lit
        let c = FourWayCounts([2, 1, 0, 1]);
        assert_eq!(c.unambiguous(), Some(pol(0.0)));
        let c = FourWayCounts([1, 0, 1, 1]);
        assert_eq!(c.unambiguous(), Some(pol(135.0)));
        assert_eq!(FourWayCounts([1, 1, 0, 0]).unambiguous(), None);
        assert_eq!(FourWayCounts::default().unambiguous(), None);
    }

    #[test]
    fn correct_basis_never_conflicts() {
        let mut rng = RngStream::new(2, 0);
        for p in Polarization::ALL {
            for _ in 0..5_000 {
                let r = pulse_receive(
                    FaintPulse::standard(p),
                    p.basis,
                    DetectorModel::perfect(),
                    &mut rng,
                );
                assert_ne!(r, Reception::Conflict);
                if let Reception::Bit(v) = r {
                    assert_eq!(v, p.value);
                }
            }
        }
    }
}
