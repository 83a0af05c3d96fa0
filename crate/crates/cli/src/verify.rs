//! Checks run on every synthesized or imported table.

use ewm_core::convert::{add, DigitString, Mode};
use ewm_core::phase1::verify_fixpoint;
use ewm_core::ring::RingElement;
use ewm_core::system::NumerationSystem;
use ewm_core::table::{ValidityReport, WeightFunction, EXHAUSTIVE_CHECK_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_MAX_LENGTH: usize = 20;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AdditionReport {
    pub trials: u64,
    pub max_length: usize,
    pub seed: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FixpointReport {
    pub passed: bool,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundReport {
    pub bound: f64,
    pub max_norm: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerificationReport {
    /// B + Q ⊆ A + βQ; absent for imported tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixpoint: Option<FixpointReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReport>,
    pub zero_window: bool,
    pub validity: ValidityReport,
    pub additions: AdditionReport,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.fixpoint.as_ref().map_or(true, |f| f.passed)
            && self.bound.as_ref().map_or(true, |b| b.passed)
            && self.zero_window
            && self.validity.passed()
            && self.additions.failures == 0
    }

    pub fn failure(&self) -> Option<String> {
        if let Some(x) = self.fixpoint.as_ref().and_then(|f| f.counterexample.as_ref()) {
            return Some(format!("{x} is not in A + beta Q"));
        }
        if let Some(b) = self.bound.as_ref().filter(|b| !b.passed) {
            return Some(format!("weight coefficient beta-norm {} exceeds {}", b.max_norm, b.bound));
        }
        if !self.zero_window {
            return Some("q(0,...,0) is not 0".into());
        }
        if let Some(v) = &self.validity.violation {
            return Some(format!("window [{}]: {}", v.window.join(" "), v.reason));
        }
        self.additions.first_failure.clone()
    }
}

pub fn weight_bound(system: &NumerationSystem, q: &[RingElement]) -> BoundReport {
    let bound = system.weight_bound();
    let max_norm = q.iter().map(|x| system.context().beta_norm(x)).fold(0.0, f64::max);
    BoundReport { bound, max_norm, passed: max_norm <= bound * (1.0 + 1e-9) + 1e-9 }
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: &[RingElement], max_length: usize) -> DigitString {
    let n = rng.gen_range(1..=max_length);
    DigitString::new((0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect(), 0)
}

/// x + y for random x, y over A, compared with exact evaluation; the parallel
/// conversion must agree digit for digit with the sequential one.
pub fn random_additions(wf: &WeightFunction, trials: u64, max_length: usize, seed: u64) -> AdditionReport {
    let system = wf.system();
    let a = system.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_failure = None;
    for _ in 0..trials {
        let x = random_string(&mut rng, a, max_length);
        let y = random_string(&mut rng, a, max_length);
        let problem = match (add(&x, &y, wf, Mode::Sequential), add(&x, &y, wf, Mode::Parallel)) {
            (Ok(s), Ok(p)) if s != p => Some(format!("{x} + {y}: parallel result {p} differs from {s}")),
            (Ok(s), Ok(_)) => {
                let expected = &x.evaluate(system).0 + &y.evaluate(system).0;
                let got = s.evaluate(system).0;
                (expected != got).then(|| format!("{x} + {y} gave {s} with value {got}, expected {expected}"))
            }
            (Err(e), _) | (_, Err(e)) => Some(format!("{x} + {y}: {e}")),
        };
        if let Some(p) = problem {
            failures += 1;
            first_failure.get_or_insert(p);
        }
    }
    AdditionReport { trials, max_length, seed, failures, first_failure }
}

/// Table-only checks plus the random addition suite.
pub fn verify_table(wf: &WeightFunction, trials: u64, max_length: usize, seed: u64) -> VerificationReport {
    VerificationReport {
        fixpoint: None,
        bound: None,
        zero_window: wf.zero_window_is_zero(),
        validity: wf.check_validity(EXHAUSTIVE_CHECK_BUDGET, seed),
        additions: random_additions(wf, trials, max_length, seed),
    }
}

/// Everything in [`verify_table`] plus the phase 1 fixpoint and bound on Q.
pub fn verify_synthesis(
    wf: &WeightFunction,
    q: &[RingElement],
    trials: u64,
    max_length: usize,
    seed: u64,
) -> VerificationReport {
    let system = wf.system();
    VerificationReport {
        fixpoint: Some(match verify_fixpoint(system, q) {
            Ok(()) => FixpointReport { passed: true, counterexample: None },
            Err(x) => FixpointReport { passed: false, counterexample: Some(x.to_string()) },
        }),
        bound: Some(weight_bound(system, q)),
        ..verify_table(wf, trials, max_length, seed)
    }
}
