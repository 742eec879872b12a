#![allow(dead_code)]

use dcqkd_core::optics::DetectionEvent;
use dcqkd_core::oracle::{CellDistribution, ConfigCell};
use dcqkd_core::protocol::run_round;
use dcqkd_core::session::round_rng;
use dcqkd_core::stats::within_sigmas;
use dcqkd_core::Probability;

pub const SIGMAS: f64 = 5.0;

#[derive(Debug, Default, Clone, Copy)]
pub struct Counts {
    pub det1: u64,
    pub det2: u64,
    pub noclick: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.det1 + self.det2 + self.noclick
    }

    pub fn get(&self, e: DetectionEvent) -> u64 {
        match e {
            DetectionEvent::Detector1 => self.det1,
            DetectionEvent::Detector2 => self.det2,
            DetectionEvent::NoClick => self.noclick,
        }
    }
}

/// Runs `n` rounds with fixed choices, each on its own stream of `seed`.
pub fn simulate_cell(cell: &ConfigCell, p_loss: Probability, n: usize, seed: u64) -> Counts {
    let mut c = Counts::default();
    for i in 0..n {
        let mut rng = round_rng(seed, i);
        match run_round(i, (cell.alice, cell.bob), cell.eve, p_loss, &mut rng).event {
            DetectionEvent::Detector1 => c.det1 += 1,
            DetectionEvent::Detector2 => c.det2 += 1,
            DetectionEvent::NoClick => c.noclick += 1,
        }
    }
    c
}

/// Per-component k-sigma agreement; zero-probability outcomes must never occur.
pub fn agrees_with(counts: &Counts, exact: &CellDistribution) -> bool {
    let n = counts.total();
    [
        DetectionEvent::Detector1,
        DetectionEvent::Detector2,
        DetectionEvent::NoClick,
    ]
    .into_iter()
    .all(|e| within_sigmas(counts.get(e), n, exact.probability(e).to_f64(), SIGMAS))
}

pub fn report(id: &str, what: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("[{}] {id}: {what} ({detail})", if ok { "PASS" } else { "FAIL" });
}
