use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dcqkd_core::session::SessionConfig;
use dcqkd_core::{EveStrategy, Probability, VerifyConfig};
use serde::Deserialize;

/// Flat JSON config file. Every field is optional; command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub p_loss: Option<f64>,
    pub eve: Option<String>,
    pub alpha: Option<f64>,
    pub compare_key_fraction: Option<f64>,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub p_loss: Probability,
    pub eve: EveStrategy,
    pub alpha: f64,
    pub compare_key_fraction: Option<f64>,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

impl RunConfig {
    pub const DEFAULT_N: usize = 10_000;

    /// Overlays `flags` on `file` on the built-in defaults and validates the result.
    pub fn resolve(flags: FileConfig, file: FileConfig) -> Result<Self> {
        let n = flags.n.or(file.n).unwrap_or(Self::DEFAULT_N);
        if n == 0 {
            bail!("--n must be at least 1");
        }
        let p_loss = Probability::named("p_loss", flags.p_loss.or(file.p_loss).unwrap_or(0.0))?;
        let eve = match flags.eve.or(file.eve) {
            Some(s) => s.parse()?,
            None => EveStrategy::None,
        };
        let alpha = flags.alpha.or(file.alpha).unwrap_or(VerifyConfig::DEFAULT_ALPHA);
        VerifyConfig::new(alpha)?;
        let compare_key_fraction = flags.compare_key_fraction.or(file.compare_key_fraction);
        if let Some(f) = compare_key_fraction {
            if !(f > 0.0 && f <= 1.0) {
                bail!("--compare-key-fraction must lie in (0, 1], got {f}");
            }
        }
        Ok(RunConfig {
            n,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            p_loss,
            eve,
            alpha,
            compare_key_fraction,
            out: flags.out.or(file.out),
            transcript: flags.transcript.or(file.transcript),
        })
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            n: self.n,
            seed: self.seed,
            p_loss: self.p_loss,
            eve: self.eve,
            alpha: self.alpha,
            compare_key_fraction: self.compare_key_fraction,
        }
    }
}
