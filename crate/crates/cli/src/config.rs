use std::path::{Path, PathBuf};

use ewm_core::phase1::Phase1Method;
use ewm_core::phase2::{Phase2Method, Phase2Options};
use ewm_core::ring::{RingContext, RingElement, RootChoice};
use ewm_core::system::{EligibilityReport, NumerationSystem};
use ewm_core::{EwmError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A synthesis job. Polynomial coefficients and element coordinates are
/// listed lowest power first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub omega_min_poly: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinguished_root: Option<[f64; 2]>,
    pub base: Vec<i64>,
    pub alphabet: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_alphabet: Option<Vec<Vec<i64>>>,
    #[serde(default = "default_block_length")]
    pub block_length: usize,
    #[serde(default)]
    pub method_phase1: Phase1Method,
    #[serde(default)]
    pub method_phase2: Phase2Method,
    #[serde(default = "default_max_k")]
    pub max_k: usize,
    #[serde(default = "default_max_table")]
    pub max_table: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_block_length() -> usize {
    1
}

fn default_max_k() -> usize {
    Phase2Options::default().max_k
}

fn default_max_table() -> u64 {
    Phase2Options::default().max_table
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| EwmError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EwmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn context(&self) -> Result<RingContext> {
        let choice = match self.distinguished_root {
            Some([re, im]) => RootChoice::Near(Complex64::new(re, im)),
            None => RootChoice::Default,
        };
        RingContext::new(&self.omega_min_poly, choice)
    }

    pub fn phase2_options(&self) -> Phase2Options {
        Phase2Options { method: self.method_phase2, max_k: self.max_k, max_table: self.max_table }
    }

    /// Builds and validates the numeration system, lifted to blocks when
    /// `block_length` > 1.
    pub fn system(&self) -> Result<(NumerationSystem, EligibilityReport)> {
        let ctx = self.context()?;
        let element = |c: &[i64]| ctx.element(c);
        let base = element(&self.base)?;
        let alphabet = self.alphabet.iter().map(|c| element(c)).collect::<Result<Vec<RingElement>>>()?;
        let input = match &self.input_alphabet {
            Some(b) => Some(b.iter().map(|c| element(c)).collect::<Result<Vec<RingElement>>>()?),
            None => None,
        };
        NumerationSystem::build(ctx.clone(), base, alphabet, input, self.block_length)
    }
}
