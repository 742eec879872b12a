//! End-to-end sessions: seeded per-round streams, serial or parallel execution,
//! the public discussion, and the machine-readable report and transcript.

use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{Error, Result};
use crate::optics::DetectionEvent;
use crate::probability::Probability;
use crate::protocol::{
    draw_choice, extract_key, run_round, sift, verify, AliceChoice, BobChoice, RoundRecord, SiftedKey,
    VerificationReport, VerifyConfig,
};

/// Stream id reserved for choosing which key bits get disclosed.
const DISCLOSURE_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    #[default]
    Serial,
    Parallel,
}

/// Parameters for one session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    pub seed: u64,
    pub p_loss: Probability,
    pub eve: EveStrategy,
    pub alpha: f64,
    /// Fraction of sifted key bits to disclose and compare. `None` runs the
    /// protocol exactly as published, with no key-bit comparison.
    pub compare_key_fraction: Option<f64>,
}

impl SessionConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SessionConfig {
            n,
            seed,
            p_loss: Probability::ZERO,
            eve: EveStrategy::None,
            alpha: VerifyConfig::DEFAULT_ALPHA,
            compare_key_fraction: None,
        }
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    pub fn with_loss(mut self, p_loss: Probability) -> Self {
        self.p_loss = p_loss;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_key_comparison(mut self, fraction: f64) -> Self {
        self.compare_key_fraction = Some(fraction);
        self
    }

    pub fn validate(&self) -> Result<VerifyConfig> {
        if self.n == 0 {
            return Err(Error::ZeroRounds);
        }
        if let Some(f) = self.compare_key_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidProbability {
                    name: "compare_key_fraction",
                    value: f,
                });
            }
        }
        VerifyConfig::new(self.alpha)
    }
}

/// Detection counts for one (Alice, Bob) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTally {
    pub alice: AliceChoice,
    pub bob: BobChoice,
    pub detector1: u64,
    pub detector2: u64,
    pub no_click: u64,
}

impl CellTally {
    pub fn total(&self) -> u64 {
        self.detector1 + self.detector2 + self.no_click
    }

    pub fn count(&self, event: DetectionEvent) -> u64 {
        match event {
            DetectionEvent::Detector1 => self.detector1,
            DetectionEvent::Detector2 => self.detector2,
            DetectionEvent::NoClick => self.no_click,
        }
    }
}

/// Tallies the transcript over the six (Alice, Bob) cells, in a fixed order.
pub fn tally_cells(records: &[RoundRecord]) -> Vec<CellTally> {
    let mut cells: Vec<CellTally> = AliceChoice::ALL
        .into_iter()
        .flat_map(|alice| {
            BobChoice::ALL.into_iter().map(move |bob| CellTally {
                alice,
                bob,
                detector1: 0,
                detector2: 0,
                no_click: 0,
            })
        })
        .collect();
    for r in records {
        let cell = cells
            .iter_mut()
            .find(|c| c.alice == r.alice && c.bob == r.bob)
            .expect("every choice pair has a cell");
        match r.event {
            DetectionEvent::Detector1 => cell.detector1 += 1,
            DetectionEvent::Detector2 => cell.detector2 += 1,
            DetectionEvent::NoClick => cell.no_click += 1,
        }
    }
    cells
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub n_rounds: u64,
    pub n_clicked: u64,
    pub n_key_rounds: u64,
    pub eve_intercepts: u64,
    /// Simulator-side diagnostic: fraction of key rounds where Alice's and
    /// Bob's bits agree. Not available to the parties themselves.
    pub key_agreement: Option<f64>,
}

/// Result of the optional disclosed-bit comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyComparison {
    pub fraction: f64,
    pub compared: u64,
    pub mismatches: u64,
    pub disclosed_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub config: SessionConfig,
    pub summary: SessionSummary,
    pub cells: Vec<CellTally>,
    pub verification: VerificationReport,
    /// Present only when the comparison step was enabled; it is not part of
    /// the basic protocol.
    pub key_comparison: Option<KeyComparison>,
    pub accepted: bool,
    pub alice_key: Option<SiftedKey>,
    pub bob_key: Option<SiftedKey>,
    #[serde(skip)]
    pub transcript: Vec<RoundRecord>,
}

impl SessionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_transcript_csv<W: Write>(&self, w: W) -> Result<()> {
        write_transcript_csv(&self.transcript, w)
    }
}

/// Independent random stream for round `index` of session `seed`.
pub fn round_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates and runs every round. Round `i` draws its choices and physics
/// from `round_rng(seed, i)` only, so both modes give identical transcripts.
pub fn run_rounds(config: &SessionConfig, mode: ExecMode) -> Vec<RoundRecord> {
    let one = |i: usize| {
        let mut rng = round_rng(config.seed, i);
        let choices = draw_choice(&mut rng);
        run_round(i, choices, config.eve, config.p_loss, &mut rng)
    };
    match mode {
        ExecMode::Serial => (0..config.n).map(one).collect(),
        ExecMode::Parallel => (0..config.n).into_par_iter().map(one).collect(),
    }
}

pub fn run_session(config: &SessionConfig, mode: ExecMode) -> Result<SessionReport> {
    let verify_config = config.validate()?;
    let transcript = run_rounds(config, mode);

    let sifted = sift(&transcript);
    let verification = verify(&sifted, &verify_config);
    let (mut alice_key, mut bob_key) = extract_key(&sifted.key_rounds)?;

    let agreeing = alice_key.bits.iter().zip(&bob_key.bits).filter(|(a, b)| a == b).count();
    let summary = SessionSummary {
        n_rounds: transcript.len() as u64,
        n_clicked: transcript.iter().filter(|r| r.event.clicked()).count() as u64,
        n_key_rounds: sifted.key_rounds.len() as u64,
        eve_intercepts: transcript
            .iter()
            .filter(|r| r.eve_note.is_some_and(|e| e.intercepted))
            .count() as u64,
        key_agreement: (!alice_key.is_empty()).then(|| agreeing as f64 / alice_key.len() as f64),
    };

    let key_comparison = config
        .compare_key_fraction
        .map(|fraction| compare_and_discard(&mut alice_key, &mut bob_key, fraction, config.seed));

    let accepted = verification.accepted && key_comparison.as_ref().is_none_or(|c| c.mismatches == 0);
    let (alice_key, bob_key) = if accepted {
        (Some(alice_key), Some(bob_key))
    } else {
        (None, None)
    };

    Ok(SessionReport {
        config: *config,
        summary,
        cells: tally_cells(&transcript),
        verification,
        key_comparison,
        accepted,
        alice_key,
        bob_key,
        transcript,
    })
}

/// Discloses a seeded random subset of key positions, counts mismatches, and
/// removes the disclosed bits from both keys.
fn compare_and_discard(alice: &mut SiftedKey, bob: &mut SiftedKey, fraction: f64, seed: u64) -> KeyComparison {
    let len = alice.len();
    let amount = ((len as f64) * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DISCLOSURE_STREAM);
    let mut positions = sample(&mut rng, len, amount.min(len)).into_vec();
    positions.sort_unstable();

    let mismatches = positions.iter().filter(|&&p| alice.bits[p] != bob.bits[p]).count() as u64;
    let disclosed_indices = positions.iter().map(|&p| alice.source_indices[p]).collect();

    let mut disclosed = vec![false; len];
    for &p in &positions {
        disclosed[p] = true;
    }
    for key in [alice, bob] {
        let mut keep = disclosed.iter().map(|d| !d);
        key.bits.retain(|_| keep.next().unwrap());
        let mut keep = disclosed.iter().map(|d| !d);
        key.source_indices.retain(|_| keep.next().unwrap());
    }

    KeyComparison {
        fraction,
        compared: positions.len() as u64,
        mismatches,
        disclosed_indices,
    }
}

#[derive(Serialize)]
struct TranscriptRow<'a> {
    index: usize,
    alice_choice: &'a str,
    alice_route: String,
    bob_choice: &'a str,
    event: &'a str,
    disposition: &'a str,
    alice_bit: Option<u8>,
    bob_bit: Option<u8>,
}

/// Writes the transcript as CSV with columns
/// `index,alice_choice,alice_route,bob_choice,event,disposition,alice_bit,bob_bit`.
pub fn write_transcript_csv<W: Write>(records: &[RoundRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(TranscriptRow {
            index: r.index,
            alice_choice: if r.alice.splitter_in() {
                "splitter_in"
            } else {
                "route_send"
            },
            alice_route: r.alice.route().map(|x| x.to_string()).unwrap_or_default(),
            bob_choice: r.bob.as_str(),
            event: r.event.as_str(),
            disposition: r.disposition.as_str(),
            alice_bit: r.alice_bit,
            bob_bit: r.bob_bit,
        })?;
    }
    out.flush()?;
    Ok(())
}
