//! Intercept-resend eavesdroppers acting on the photon between the loss
//! event and Bob's analyzer.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{ComplexAmp, PhotonState, Unitary2};
use crate::probability::Probability;

/// The projective measurement Eve performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasBasis {
    /// Which-route measurement; outcome 0 is route a.
    Route,
    /// Eve inserts her own copy of Bob's splitter and measures its output
    /// ports; outcome 0 is the detector-1 port.
    Interference,
}

impl MeasBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasBasis::Route => "route",
            MeasBasis::Interference => "interference",
        }
    }
}

impl fmt::Display for MeasBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Eavesdropper configuration. Textual form is `none` or
/// `intercept:<route|interference>:<p>`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EveStrategy {
    #[default]
    None,
    InterceptResend {
        basis: MeasBasis,
        p_intercept: Probability,
    },
}

impl EveStrategy {
    pub fn intercept(basis: MeasBasis, p_intercept: f64) -> Result<Self> {
        Ok(EveStrategy::InterceptResend {
            basis,
            p_intercept: Probability::named("p_intercept", p_intercept)?,
        })
    }
}

impl fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EveStrategy::None => f.write_str("none"),
            EveStrategy::InterceptResend { basis, p_intercept } => {
                write!(f, "intercept:{basis}:{p_intercept}")
            }
        }
    }
}

impl FromStr for EveStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidStrategy(s.to_string());
        let s_trim = s.trim();
        if s_trim.eq_ignore_ascii_case("none") {
            return Ok(EveStrategy::None);
        }
        let mut parts = s_trim.split(':');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("intercept"), Some(basis), Some(p), None) => {
                let basis = match basis {
                    "route" => MeasBasis::Route,
                    "interference" => MeasBasis::Interference,
                    _ => return Err(bad()),
                };
                let p: f64 = p.parse().map_err(|_| bad())?;
                EveStrategy::intercept(basis, p)
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for EveStrategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EveStrategy> for String {
    fn from(e: EveStrategy) -> String {
        e.to_string()
    }
}

/// What Eve did to one photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EveRecord {
    pub intercepted: bool,
    pub basis: Option<MeasBasis>,
    pub outcome_bit: Option<u8>,
}

impl EveRecord {
    fn pass() -> Self {
        EveRecord::default()
    }
}

/// Applies the strategy to one in-flight photon.
///
/// An intercepted photon is measured projectively and the post-measurement
/// state (the normalized projection of the input) is sent on to Bob, so
/// eigenstates of Eve's measurement pass through undisturbed.
pub fn eve_intervene<R: Rng + ?Sized>(
    state: PhotonState,
    strategy: EveStrategy,
    rng: &mut R,
) -> (PhotonState, EveRecord) {
    let (basis, p_intercept) = match strategy {
        EveStrategy::None => return (state, EveRecord::pass()),
        EveStrategy::InterceptResend { basis, p_intercept } => (basis, p_intercept),
    };
    if state.is_lost() || rng.random::<f64>() >= p_intercept.get() {
        return (state, EveRecord::pass());
    }

    // Rotate into Eve's measurement frame, collapse there, rotate back.
    let (to_frame, from_frame) = match basis {
        MeasBasis::Route => (Unitary2::identity(), Unitary2::identity()),
        MeasBasis::Interference => {
            let u = Unitary2::bob_splitter();
            (u, u.adjoint())
        }
    };
    let (bit, collapsed) = collapse(&to_frame.apply(&state), rng);
    let record = EveRecord {
        intercepted: true,
        basis: Some(basis),
        outcome_bit: Some(bit),
    };
    (from_frame.apply(&collapsed), record)
}

fn collapse<R: Rng + ?Sized>(state: &PhotonState, rng: &mut R) -> (u8, PhotonState) {
    let PhotonState::Present { amp_a, amp_b } = *state else {
        unreachable!("lost photons are never measured")
    };
    let (p0, p1) = (amp_a.norm_sqr(), amp_b.norm_sqr());
    let keep_phase = |amp: ComplexAmp, p: f64| amp.scale(1.0 / p.sqrt());
    // Sampling against the actual total keeps a zero-weight branch unreachable.
    let u = rng.random::<f64>() * (p0 + p1);
    if p1 == 0.0 || u < p0 {
        (
            0,
            PhotonState::Present {
                amp_a: keep_phase(amp_a, p0),
                amp_b: ComplexAmp::ZERO,
            },
        )
    } else {
        (
            1,
            PhotonState::Present {
                amp_a: ComplexAmp::ZERO,
                amp_b: keep_phase(amp_b, p1),
            },
        )
    }
}
