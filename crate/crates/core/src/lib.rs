//! Simulator for interferometric key distribution with delayed-choice
//! analyzers.
//!
//! Alice either inserts a 50/50 splitter in front of a single photon or sends
//! it down one of two routes; Bob independently inserts or removes a second
//! splitter in front of two detectors. With both splitters in, detector 1
//! always fires; with exactly one in, the detectors fire with equal
//! probability; with neither, the detector identifies the route and yields a
//! key bit.
//!
//! * [`optics`]: floating-point amplitudes, splitters, loss, detectors.
//! * [`adversary`]: intercept-resend eavesdroppers.
//! * [`protocol`]: choices, rounds, sifting, verification, key extraction.
//! * [`session`]: seeded end-to-end runs, reports, CSV transcripts.
//! * [`oracle`]: exact enumeration over `Q(√2)[i]`, independent of [`optics`].

pub mod adversary;
pub mod error;
pub mod optics;
pub mod oracle;
pub mod probability;
pub mod protocol;
pub mod session;
pub mod stats;

pub use adversary::{eve_intervene, EveRecord, EveStrategy, MeasBasis};
pub use error::{Error, Result};
pub use optics::{DetectionEvent, OutcomeDistribution, PhotonState, RouteLabel};
pub use oracle::{enumerate_cell, CellDistribution, ConfigCell};
pub use probability::Probability;
pub use protocol::{AliceChoice, BobChoice, Disposition, RoundRecord, SiftedKey, VerificationReport, VerifyConfig};
pub use session::{run_session, ExecMode, SessionConfig, SessionReport};
