//! Honest-party behaviour: drawing the random choices, running a round through
//! the apparatus, public sifting, the interference check, and key extraction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_intervene, EveRecord, EveStrategy};
use crate::error::{Error, Result};
use crate::optics::{
    alice_splitter_state, apply_bob_splitter, apply_loss, measure_detectors, prepare_route, DetectionEvent, RouteLabel,
};
use crate::probability::Probability;
use crate::stats::binomial_two_sided_half;

/// Alice either inserts her splitter or sends the photon down a chosen route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AliceChoice {
    SplitterIn,
    RouteSend(RouteLabel),
}

impl AliceChoice {
    pub const ALL: [AliceChoice; 3] = [
        AliceChoice::SplitterIn,
        AliceChoice::RouteSend(RouteLabel::A),
        AliceChoice::RouteSend(RouteLabel::B),
    ];

    pub fn splitter_in(self) -> bool {
        self == AliceChoice::SplitterIn
    }

    pub fn route(self) -> Option<RouteLabel> {
        match self {
            AliceChoice::SplitterIn => None,
            AliceChoice::RouteSend(r) => Some(r),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AliceChoice::SplitterIn => "splitter_in",
            AliceChoice::RouteSend(RouteLabel::A) => "route_a",
            AliceChoice::RouteSend(RouteLabel::B) => "route_b",
        }
    }
}

impl fmt::Display for AliceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AliceChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AliceChoice::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown alice choice {s:?}"))
    }
}

impl TryFrom<String> for AliceChoice {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<AliceChoice> for String {
    fn from(c: AliceChoice) -> String {
        c.as_str().to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobChoice {
    SplitterIn,
    SplitterOut,
}

impl BobChoice {
    pub const ALL: [BobChoice; 2] = [BobChoice::SplitterIn, BobChoice::SplitterOut];

    pub fn splitter_in(self) -> bool {
        self == BobChoice::SplitterIn
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BobChoice::SplitterIn => "splitter_in",
            BobChoice::SplitterOut => "splitter_out",
        }
    }
}

impl fmt::Display for BobChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a round ends up after the public discussion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Discarded,
    CheckOnlyOne,
    CheckBoth,
    KeyRound,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Discarded => "discarded",
            Disposition::CheckOnlyOne => "check_only_one",
            Disposition::CheckBoth => "check_both",
            Disposition::KeyRound => "key_round",
        }
    }
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything said over the public channel about one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Announcement {
    pub alice_splitter_in: bool,
    pub bob_splitter_in: bool,
    pub clicked: bool,
}

impl Announcement {
    /// The sifting rule. Routes and detector identities never enter here.
    pub fn disposition(self) -> Disposition {
        match (self.clicked, self.alice_splitter_in, self.bob_splitter_in) {
            (false, _, _) => Disposition::Discarded,
            (true, true, true) => Disposition::CheckBoth,
            (true, false, false) => Disposition::KeyRound,
            (true, _, _) => Disposition::CheckOnlyOne,
        }
    }
}

/// Per-round transcript entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub alice: AliceChoice,
    pub bob: BobChoice,
    pub eve_note: Option<EveRecord>,
    pub event: DetectionEvent,
    pub disposition: Disposition,
    pub alice_bit: Option<u8>,
    pub bob_bit: Option<u8>,
}

impl RoundRecord {
    pub fn announcement(&self) -> Announcement {
        Announcement {
            alice_splitter_in: self.alice.splitter_in(),
            bob_splitter_in: self.bob.splitter_in(),
            clicked: self.event.clicked(),
        }
    }
}

/// One fair coin for Alice's splitter, one for her route, one for Bob.
pub fn draw_choice<R: Rng + ?Sized>(rng: &mut R) -> (AliceChoice, BobChoice) {
    let alice = if rng.random_bool(0.5) {
        AliceChoice::SplitterIn
    } else if rng.random_bool(0.5) {
        AliceChoice::RouteSend(RouteLabel::A)
    } else {
        AliceChoice::RouteSend(RouteLabel::B)
    };
    let bob = if rng.random_bool(0.5) {
        BobChoice::SplitterIn
    } else {
        BobChoice::SplitterOut
    };
    (alice, bob)
}

pub fn draw_choices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<(AliceChoice, BobChoice)>> {
    if n == 0 {
        return Err(Error::ZeroRounds);
    }
    Ok((0..n).map(|_| draw_choice(rng)).collect())
}

/// Runs one photon through prepare → loss → Eve → Bob's analyzer → detectors.
pub fn run_round<R: Rng + ?Sized>(
    index: usize,
    (alice, bob): (AliceChoice, BobChoice),
    eve: EveStrategy,
    p_loss: Probability,
    rng: &mut R,
) -> RoundRecord {
    let prepared = match alice {
        AliceChoice::SplitterIn => alice_splitter_state(),
        AliceChoice::RouteSend(route) => prepare_route(route),
    };
    let in_flight = apply_loss(prepared, p_loss, rng);
    let (in_flight, eve_record) = eve_intervene(in_flight, eve, rng);
    let at_detectors = match bob {
        BobChoice::SplitterIn => apply_bob_splitter(in_flight),
        BobChoice::SplitterOut => in_flight,
    };
    let event = measure_detectors(&at_detectors, rng);

    let mut record = RoundRecord {
        index,
        alice,
        bob,
        eve_note: (eve != EveStrategy::None).then_some(eve_record),
        event,
        disposition: Disposition::Discarded,
        alice_bit: alice.route().map(RouteLabel::bit),
        bob_bit: None,
    };
    record.disposition = record.announcement().disposition();
    if record.disposition == Disposition::KeyRound {
        record.bob_bit = Some(detector_bit(event));
    }
    record
}

/// Bob's coding: detector 1 means route a (0), detector 2 means route b (1).
fn detector_bit(event: DetectionEvent) -> u8 {
    match event {
        DetectionEvent::Detector1 => 0,
        DetectionEvent::Detector2 => 1,
        DetectionEvent::NoClick => unreachable!("no-click rounds are discarded before decoding"),
    }
}

/// Rounds surviving the no-click discard, partitioned by announced choices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiftedRounds<'a> {
    pub only_one: Vec<&'a RoundRecord>,
    pub both: Vec<&'a RoundRecord>,
    pub key_rounds: Vec<&'a RoundRecord>,
}

/// Partitions the transcript using only the public announcements.
pub fn sift(records: &[RoundRecord]) -> SiftedRounds<'_> {
    let mut out = SiftedRounds::default();
    for r in records {
        match r.announcement().disposition() {
            Disposition::Discarded => {}
            Disposition::CheckOnlyOne => out.only_one.push(r),
            Disposition::CheckBoth => out.both.push(r),
            Disposition::KeyRound => out.key_rounds.push(r),
        }
    }
    out
}

/// Significance level for the equal-probability test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub alpha: f64,
}

impl VerifyConfig {
    pub const DEFAULT_ALPHA: f64 = 1e-6;

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(VerifyConfig { alpha })
        } else {
            Err(Error::InvalidSignificance(alpha))
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

/// Bob's eavesdropping check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n_both: u64,
    pub n_both_det2: u64,
    pub n_one: u64,
    pub n_one_det1: u64,
    pub p_value_uniform: f64,
    pub alpha: f64,
    pub both_clean: bool,
    pub accepted: bool,
}

/// Both-splitters rounds must never fire detector 2; one-splitter rounds must
/// pass a two-sided exact binomial test for p = 1/2 at level `alpha`.
pub fn verify(checks: &SiftedRounds<'_>, config: &VerifyConfig) -> VerificationReport {
    let count = |rs: &[&RoundRecord], e: DetectionEvent| rs.iter().filter(|r| r.event == e).count() as u64;
    let n_both = checks.both.len() as u64;
    let n_both_det2 = count(&checks.both, DetectionEvent::Detector2);
    let n_one = checks.only_one.len() as u64;
    let n_one_det1 = count(&checks.only_one, DetectionEvent::Detector1);
    let p_value_uniform = binomial_two_sided_half(n_one_det1, n_one);
    let both_clean = n_both_det2 == 0;
    VerificationReport {
        n_both,
        n_both_det2,
        n_one,
        n_one_det1,
        p_value_uniform,
        alpha: config.alpha,
        both_clean,
        accepted: both_clean && p_value_uniform >= config.alpha,
    }
}

/// A bit string together with the transcript rounds it came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    #[serde(with = "bit_string")]
    pub bits: Vec<u8>,
    pub source_indices: Vec<usize>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }
}

/// Decodes Alice's routes and Bob's detectors on key rounds, in transcript order.
pub fn extract_key(key_rounds: &[&RoundRecord]) -> Result<(SiftedKey, SiftedKey)> {
    let mut alice = SiftedKey::default();
    let mut bob = SiftedKey::default();
    for r in key_rounds {
        let (Disposition::KeyRound, Some(a), Some(b)) = (r.disposition, r.alice_bit, r.bob_bit) else {
            return Err(Error::NotKeyRound {
                index: r.index,
                disposition: r.disposition.to_string(),
            });
        };
        alice.bits.push(a);
        alice.source_indices.push(r.index);
        bob.bits.push(b);
        bob.source_indices.push(r.index);
    }
    Ok((alice, bob))
}

mod bit_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let text: String = bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
        s.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        String::deserialize(d)?
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(D::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::MeasBasis;
    use crate::stats::within_sigmas;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn record(alice: AliceChoice, bob: BobChoice, event: DetectionEvent) -> RoundRecord {
        let mut r = RoundRecord {
            index: 0,
            alice,
            bob,
            eve_note: None,
            event,
            disposition: Disposition::Discarded,
            alice_bit: alice.route().map(RouteLabel::bit),
            bob_bit: None,
        };
        r.disposition = r.announcement().disposition();
        if r.disposition == Disposition::KeyRound {
            r.bob_bit = Some(detector_bit(event));
        }
        r
    }

    #[test]
    fn choice_marginals() {
        let n = 100_000u64;
        let choices = draw_choices(n as usize, &mut rng(11)).unwrap();
        let count = |f: &dyn Fn(&(AliceChoice, BobChoice)) -> bool| choices.iter().filter(|c| f(c)).count() as u64;
        assert!(within_sigmas(count(&|c| c.0 == AliceChoice::SplitterIn), n, 0.5, 5.0));
        assert!(within_sigmas(
            count(&|c| c.0 == AliceChoice::RouteSend(RouteLabel::A)),
            n,
            0.25,
            5.0
        ));
        assert!(within_sigmas(
            count(&|c| c.0 == AliceChoice::RouteSend(RouteLabel::B)),
            n,
            0.25,
            5.0
        ));
        assert!(within_sigmas(count(&|c| c.1 == BobChoice::SplitterIn), n, 0.5, 5.0));
        // independence: joint cell
        assert!(within_sigmas(
            count(&|c| c.0 == AliceChoice::SplitterIn && c.1 == BobChoice::SplitterIn),
            n,
            0.25,
            5.0
        ));
    }

    #[test]
    fn choices_replay_and_reject_zero() {
        assert_eq!(
            draw_choices(500, &mut rng(3)).unwrap(),
            draw_choices(500, &mut rng(3)).unwrap()
        );
        assert!(matches!(draw_choices(0, &mut rng(3)), Err(Error::ZeroRounds)));
    }

    #[test]
    fn both_splitters_always_detector1() {
        let mut r = rng(12);
        for i in 0..10_000 {
            let rec = run_round(
                i,
                (AliceChoice::SplitterIn, BobChoice::SplitterIn),
                EveStrategy::None,
                Probability::ZERO,
                &mut r,
            );
            assert_eq!(rec.event, DetectionEvent::Detector1);
            assert_eq!(rec.disposition, Disposition::CheckBoth);
            assert_eq!((rec.alice_bit, rec.bob_bit), (None, None));
        }
    }

    #[test]
    fn route_b_key_round() {
        let rec = run_round(
            7,
            (AliceChoice::RouteSend(RouteLabel::B), BobChoice::SplitterOut),
            EveStrategy::None,
            Probability::ZERO,
            &mut rng(0),
        );
        assert_eq!(rec.event, DetectionEvent::Detector2);
        assert_eq!(rec.disposition, Disposition::KeyRound);
        assert_eq!((rec.alice_bit, rec.bob_bit), (Some(1), Some(1)));
        assert_eq!(rec.index, 7);
        assert!(rec.eve_note.is_none());
    }

    #[test]
    fn route_with_bob_splitter_is_balanced() {
        let mut r = rng(13);
        let n = 100_000u64;
        let d1 = (0..n as usize)
            .filter(|&i| {
                run_round(
                    i,
                    (AliceChoice::RouteSend(RouteLabel::A), BobChoice::SplitterIn),
                    EveStrategy::None,
                    Probability::ZERO,
                    &mut r,
                )
                .event
                    == DetectionEvent::Detector1
            })
            .count() as u64;
        assert!(within_sigmas(d1, n, 0.5, 5.0), "d1 {d1}");
    }

    #[test]
    fn lost_round_is_discarded_but_keeps_alice_bit() {
        let rec = run_round(
            0,
            (AliceChoice::RouteSend(RouteLabel::A), BobChoice::SplitterOut),
            EveStrategy::intercept(MeasBasis::Route, 1.0).unwrap(),
            Probability::ONE,
            &mut rng(0),
        );
        assert_eq!(rec.event, DetectionEvent::NoClick);
        assert_eq!(rec.disposition, Disposition::Discarded);
        assert_eq!((rec.alice_bit, rec.bob_bit), (Some(0), None));
        assert!(!rec.eve_note.unwrap().intercepted);
    }

    #[test]
    fn sift_partitions() {
        let lost: Vec<_> = (0..5)
            .map(|_| record(AliceChoice::SplitterIn, BobChoice::SplitterIn, DetectionEvent::NoClick))
            .collect();
        assert_eq!(sift(&lost), SiftedRounds::default());

        let recs = vec![
            record(
                AliceChoice::SplitterIn,
                BobChoice::SplitterOut,
                DetectionEvent::Detector2,
            ),
            record(
                AliceChoice::SplitterIn,
                BobChoice::SplitterIn,
                DetectionEvent::Detector1,
            ),
            record(
                AliceChoice::RouteSend(RouteLabel::A),
                BobChoice::SplitterOut,
                DetectionEvent::Detector1,
            ),
            record(
                AliceChoice::RouteSend(RouteLabel::B),
                BobChoice::SplitterIn,
                DetectionEvent::Detector1,
            ),
            record(
                AliceChoice::RouteSend(RouteLabel::B),
                BobChoice::SplitterOut,
                DetectionEvent::NoClick,
            ),
        ];
        let s = sift(&recs);
        assert_eq!(s.only_one, vec![&recs[0], &recs[3]]);
        assert_eq!(s.both, vec![&recs[1]]);
        assert_eq!(s.key_rounds, vec![&recs[2]]);
    }

    #[test]
    fn single_detector2_in_both_cell_rejects() {
        let mut recs: Vec<_> = (0..100)
            .map(|_| {
                record(
                    AliceChoice::SplitterIn,
                    BobChoice::SplitterIn,
                    DetectionEvent::Detector1,
                )
            })
            .collect();
        recs.push(record(
            AliceChoice::SplitterIn,
            BobChoice::SplitterIn,
            DetectionEvent::Detector2,
        ));
        let rep = verify(&sift(&recs), &VerifyConfig::default());
        assert_eq!((rep.n_both, rep.n_both_det2), (101, 1));
        assert!(!rep.both_clean);
        assert!(!rep.accepted);
    }

    #[test]
    fn lopsided_one_splitter_cell_rejects() {
        let recs: Vec<_> = (0..1000)
            .map(|_| {
                record(
                    AliceChoice::SplitterIn,
                    BobChoice::SplitterOut,
                    DetectionEvent::Detector1,
                )
            })
            .collect();
        let rep = verify(&sift(&recs), &VerifyConfig::default());
        assert_eq!((rep.n_one, rep.n_one_det1), (1000, 1000));
        let want = 2f64.powi(-999);
        assert!(((rep.p_value_uniform - want) / want).abs() < 1e-9);
        assert!(rep.both_clean);
        assert!(!rep.accepted);
    }

    #[test]
    fn empty_checks_accept() {
        let rep = verify(&SiftedRounds::default(), &VerifyConfig::default());
        assert_eq!(rep.p_value_uniform, 1.0);
        assert!(rep.accepted);
    }

    #[test]
    fn verify_config_bounds() {
        assert!(VerifyConfig::new(0.0).is_err());
        assert!(VerifyConfig::new(1.0).is_err());
        assert!(VerifyConfig::new(f64::NAN).is_err());
        assert_eq!(VerifyConfig::new(0.01).unwrap().alpha, 0.01);
    }

    #[test]
    fn key_from_routes() {
        let recs: Vec<_> = [RouteLabel::A, RouteLabel::B, RouteLabel::B, RouteLabel::A]
            .into_iter()
            .enumerate()
            .map(|(i, route)| {
                run_round(
                    i,
                    (AliceChoice::RouteSend(route), BobChoice::SplitterOut),
                    EveStrategy::None,
                    Probability::ZERO,
                    &mut rng(i as u64),
                )
            })
            .collect();
        let s = sift(&recs);
        let (a, b) = extract_key(&s.key_rounds).unwrap();
        assert_eq!(a.to_bit_string(), "0110");
        assert_eq!(a, b);
        assert_eq!(a.source_indices, vec![0, 1, 2, 3]);

        let (a, b) = extract_key(&[]).unwrap();
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn key_extraction_rejects_check_rounds() {
        let r = record(
            AliceChoice::SplitterIn,
            BobChoice::SplitterIn,
            DetectionEvent::Detector1,
        );
        assert!(matches!(extract_key(&[&r]), Err(Error::NotKeyRound { .. })));
    }

    #[test]
    fn sifted_key_serializes_as_bit_string() {
        let k = SiftedKey {
            bits: vec![0, 1, 1],
            source_indices: vec![2, 5, 9],
        };
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, r#"{"bits":"011","source_indices":[2,5,9]}"#);
        assert_eq!(serde_json::from_str::<SiftedKey>(&json).unwrap(), k);
    }

    #[test]
    fn choice_strings_round_trip() {
        for c in AliceChoice::ALL {
            assert_eq!(c.as_str().parse::<AliceChoice>().unwrap(), c);
        }
        assert!("route_c".parse::<AliceChoice>().is_err());
    }
}
