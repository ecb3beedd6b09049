//! Simulator for reusing one-time pads over a quantum channel: photon and
//! faint-pulse carriers, error-detecting codes, the key lifecycle, adversary
//! strategies and the Monte Carlo machinery to measure them.

pub mod adversary;
pub mod bits;
pub mod codes;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod sim;

pub use bits::{Bitstring, ReceivedWord, Symbol};
pub use codes::{Codec, CodeFamily, DecodeVerdict, RejectReason};
pub use protocol::{KeyRecord, Role, Scheme, Transmission, Verdict};
pub use quantum::{Basis, DetectorModel, FaintPulse, Photon, Polarization};
pub use rng::RngStream;
