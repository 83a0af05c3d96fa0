//! Weight functions: a trie from digit windows to weight coefficients, plus
//! the exhaustive validity check and CSV I/O.

mod csv;
mod trie;

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use self::csv::{export_csv, import_csv, read_csv, write_csv};
pub use self::trie::{Node, Trie};
use crate::error::{EwmError, Result};
use crate::ring::RingElement;
use crate::system::NumerationSystem;

/// q: B^r → Q stored as a variable-depth trie. The window of position j is
/// (w_j, w_{j-1}, …, w_{j-r+1}); the trie is keyed most significant first.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    system: NumerationSystem,
    q_values: Vec<RingElement>,
    beta_q: Vec<RingElement>,
    r: usize,
    trie: Trie,
    digit_index: HashMap<RingElement, u32>,
    zero_digit: u32,
    alphabet: HashSet<RingElement>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Violation {
    /// w_0, w_-1, …, w_-r.
    pub window: Vec<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidityReport {
    pub exhaustive: bool,
    /// Leaf pairs (or sampled windows) evaluated.
    pub checks: u64,
    pub violation: Option<Violation>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Leaf-pair budget for the exhaustive check before falling back to sampling.
pub const EXHAUSTIVE_CHECK_BUDGET: u64 = 200_000_000;
pub const SAMPLED_WINDOWS: u64 = 1_000_000;

#[derive(Clone, Copy)]
enum Cursor {
    Node(usize),
    Leaf(u32),
}

impl WeightFunction {
    pub fn new(system: NumerationSystem, q_values: Vec<RingElement>, r: usize, trie: Trie) -> Result<Self> {
        if r == 0 {
            return Err(EwmError::Config("weight function memory must be at least 1".into()));
        }
        let b = system.input_alphabet();
        if trie.radix() != b.len() {
            return Err(EwmError::Internal("trie radix does not match the input alphabet".into()));
        }
        let digit_index: HashMap<RingElement, u32> =
            b.iter().enumerate().map(|(i, d)| (d.clone(), i as u32)).collect();
        let zero_digit = *digit_index
            .get(&system.context().zero())
            .ok_or_else(|| EwmError::Config("input alphabet must contain 0".into()))?;
        let beta_q = q_values.iter().map(|q| system.context().mul(system.base(), q)).collect();
        let alphabet = system.alphabet().iter().cloned().collect();
        Ok(Self { system, q_values, beta_q, r, trie, digit_index, zero_digit, alphabet })
    }

    pub fn system(&self) -> &NumerationSystem {
        &self.system
    }

    /// Memory r: the number of digits the weight function reads.
    pub fn memory(&self) -> usize {
        self.r
    }

    /// Window width p = r + 1 of the induced conversion.
    pub fn locality(&self) -> usize {
        self.r + 1
    }

    pub fn q_values(&self) -> &[RingElement] {
        &self.q_values
    }

    pub fn trie(&self) -> &Trie {
        &self.trie
    }

    pub fn rows(&self) -> usize {
        self.trie.leaf_count()
    }

    pub fn digit_index(&self, d: &RingElement) -> Option<u32> {
        self.digit_index.get(d).copied()
    }

    pub fn zero_digit(&self) -> u32 {
        self.zero_digit
    }

    pub fn in_alphabet(&self, d: &RingElement) -> bool {
        self.alphabet.contains(d)
    }

    /// β·q for the coefficient with the given index.
    pub fn beta_times(&self, q: u32) -> &RingElement {
        &self.beta_q[q as usize]
    }

    /// Coefficient index for a window of digit indices (length r).
    pub fn lookup_index(&self, window: &[u32]) -> Option<u32> {
        self.trie.lookup(window)
    }

    pub fn lookup(&self, window: &[RingElement]) -> Result<&RingElement> {
        let idx: Option<Vec<u32>> = window.iter().map(|d| self.digit_index(d)).collect();
        idx.and_then(|w| self.trie.lookup(&w))
            .map(|q| &self.q_values[q as usize])
            .ok_or_else(|| EwmError::TableIncomplete { window: window_string(window) })
    }

    pub fn digits(&self, window: &[u32]) -> Vec<RingElement> {
        let b = self.system.input_alphabet();
        window.iter().map(|&d| b[d as usize].clone()).collect()
    }

    /// q(0, …, 0) = 0.
    pub fn zero_window_is_zero(&self) -> bool {
        let zeros = vec![self.zero_digit; self.r];
        self.trie
            .lookup(&zeros)
            .is_some_and(|q| self.q_values[q as usize].is_zero())
    }

    fn step(&self, c: Cursor, digit: u32) -> Cursor {
        match c {
            Cursor::Leaf(_) => c,
            Cursor::Node(i) => {
                let next = match self.trie.node(i) {
                    Node::Branch(f) => f as usize + digit as usize,
                    Node::Any(f) => f as usize,
                    Node::Leaf(q) => return Cursor::Leaf(q),
                    Node::Empty => return c,
                };
                match self.trie.node(next) {
                    Node::Leaf(q) => Cursor::Leaf(q),
                    _ => Cursor::Node(next),
                }
            }
        }
    }

    fn branches(&self, c: Cursor) -> bool {
        matches!(c, Cursor::Node(i) if matches!(self.trie.node(i), Node::Branch(_)))
    }

    fn start(&self) -> Cursor {
        match self.trie.node(Trie::ROOT) {
            Node::Leaf(q) => Cursor::Leaf(q),
            _ => Cursor::Node(Trie::ROOT),
        }
    }

    /// Checks w_0 + q(w_-1..w_-r) − β·q(w_0..w_-(r-1)) ∈ A on every window of
    /// B^(r+1). Walks both lookups through the trie at once so windows that
    /// share a decision are checked once. Falls back to sampling `SAMPLED_WINDOWS`
    /// windows (seeded) when the walk would exceed `budget` checks.
    pub fn check_validity(&self, budget: u64, seed: u64) -> ValidityReport {
        let mut state = Walk { checks: 0, budget, path: Vec::with_capacity(self.r + 1), violation: None };
        let finished = self.validity_walk(0, self.start(), self.start(), 0, &mut state);
        if finished || state.violation.is_some() {
            return ValidityReport { exhaustive: state.violation.is_none(), checks: state.checks, violation: state.violation };
        }
        log::info!("exhaustive window check exceeds {budget} checks; sampling {SAMPLED_WINDOWS} windows");
        self.sample_validity(SAMPLED_WINDOWS, seed)
    }

    pub fn sample_validity(&self, samples: u64, seed: u64) -> ValidityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = self.system.input_alphabet().len() as u32;
        let mut window = vec![0u32; self.r + 1];
        for i in 0..samples {
            for d in window.iter_mut() {
                *d = rng.gen_range(0..nb);
            }
            if let Some(v) = self.check_window(&window) {
                return ValidityReport { exhaustive: false, checks: i + 1, violation: Some(v) };
            }
        }
        ValidityReport { exhaustive: false, checks: samples, violation: None }
    }

    /// Validity of one window (w_0, …, w_-r) of digit indices.
    pub fn check_window(&self, window: &[u32]) -> Option<Violation> {
        let hi = self.trie.lookup(&window[..self.r]);
        let lo = self.trie.lookup(&window[1..]);
        match (hi, lo) {
            (Some(hi), Some(lo)) => self.check_pair(window[0], hi, lo).map(|reason| Violation {
                window: self.digits(window).iter().map(ToString::to_string).collect(),
                reason,
            }),
            _ => Some(Violation {
                window: self.digits(window).iter().map(ToString::to_string).collect(),
                reason: "window missing from table".into(),
            }),
        }
    }

    fn check_pair(&self, w0: u32, hi: u32, lo: u32) -> Option<String> {
        let w0 = &self.system.input_alphabet()[w0 as usize];
        let z = &(w0 + &self.q_values[lo as usize]) - &self.beta_q[hi as usize];
        (!self.alphabet.contains(&z)).then(|| format!("output digit {z} is not in the alphabet"))
    }

    fn validity_walk(&self, j: usize, a: Cursor, b: Cursor, w0: u32, st: &mut Walk) -> bool {
        if let (Cursor::Leaf(hi), Cursor::Leaf(lo)) = (a, b) {
            st.checks += 1;
            if let Some(reason) = self.check_pair(w0, hi, lo) {
                st.violation = Some(self.violation_at(&st.path, reason));
                return false;
            }
            return st.checks <= st.budget;
        }
        if j > self.r {
            st.violation = Some(self.violation_at(&st.path, "window missing from table".into()));
            return false;
        }
        let a_reads = j < self.r;
        let b_reads = j >= 1;
        let matters = j == 0 || (a_reads && self.branches(a)) || (b_reads && self.branches(b));
        let nb = if matters { self.system.input_alphabet().len() as u32 } else { 1 };
        for d in 0..nb {
            let na = if a_reads { self.step(a, d) } else { a };
            let nbc = if b_reads { self.step(b, d) } else { b };
            if self.dead_end(na) || self.dead_end(nbc) {
                st.path.push(d);
                st.violation = Some(self.violation_at(&st.path, "window missing from table".into()));
                return false;
            }
            st.path.push(d);
            let ok = self.validity_walk(j + 1, na, nbc, if j == 0 { d } else { w0 }, st);
            st.path.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    fn dead_end(&self, c: Cursor) -> bool {
        matches!(c, Cursor::Node(i) if matches!(self.trie.node(i), Node::Empty))
    }

    fn violation_at(&self, path: &[u32], reason: String) -> Violation {
        let mut w = path.to_vec();
        w.resize(self.r + 1, self.zero_digit);
        Violation { window: self.digits(&w).iter().map(ToString::to_string).collect(), reason }
    }
}

struct Walk {
    checks: u64,
    budget: u64,
    path: Vec<u32>,
    violation: Option<Violation>,
}

pub(crate) fn window_string(w: &[RingElement]) -> String {
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}
