//! Phase 1: the weight coefficients set Q with B + Q ⊆ A + βQ.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EwmError, Result};
use crate::ring::{Divisor, RingElement};
use crate::system::NumerationSystem;

pub const DEFAULT_MAX_ITER: usize = 1000;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Phase1Method {
    /// Smallest modulus under the distinguished embedding ('1b').
    Abs,
    /// Smallest β-norm ('1d').
    #[default]
    BetaNorm,
}

impl fmt::Display for Phase1Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Abs => "abs",
            Self::BetaNorm => "beta_norm",
        })
    }
}

impl FromStr for Phase1Method {
    type Err = EwmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" | "1b" => Ok(Self::Abs),
            "beta_norm" | "1d" => Ok(Self::BetaNorm),
            _ => Err(EwmError::Config(format!("unknown phase 1 method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightCoefficientsSet {
    /// Sorted lexicographically.
    pub elements: Vec<RingElement>,
    pub iterations: usize,
    /// |Q_k| after each iteration.
    pub history: Vec<usize>,
    pub method: Phase1Method,
}

/// Precomputed state for candidate sets of one system.
pub struct Candidates<'a> {
    system: &'a NumerationSystem,
    divisor: Divisor,
}

impl<'a> Candidates<'a> {
    pub fn new(system: &'a NumerationSystem) -> Result<Self> {
        let divisor = Divisor::new(system.context(), system.base())?;
        Ok(Self { system, divisor })
    }

    /// C_x = {(x − a)/β : a ∈ A, β | x − a}, sorted.
    pub fn of(&self, x: &RingElement) -> Result<Vec<RingElement>> {
        let set: BTreeSet<RingElement> = self
            .system
            .alphabet()
            .iter()
            .filter_map(|a| self.divisor.divide(&(x - a)))
            .collect();
        if set.is_empty() {
            return Err(EwmError::Internal(format!("no candidate weight coefficient for {x}")));
        }
        Ok(set.into_iter().collect())
    }
}

pub fn candidate_set(x: &RingElement, system: &NumerationSystem) -> Result<Vec<RingElement>> {
    Candidates::new(system)?.of(x)
}

fn size(system: &NumerationSystem, method: Phase1Method, q: &RingElement) -> f64 {
    match method {
        Phase1Method::Abs => system.context().abs(q),
        Phase1Method::BetaNorm => system.context().beta_norm(q),
    }
}

/// One extension step. `current` is Q_k; `lists` holds (x, C_x) for the x
/// that still need checking, in processing order. Returns Q_{k+1}.
pub fn extend(
    system: &NumerationSystem,
    current: &BTreeSet<RingElement>,
    lists: &[(RingElement, Vec<RingElement>)],
    method: Phase1Method,
) -> BTreeSet<RingElement> {
    let mut next = current.clone();
    for (_, c) in lists {
        if c.len() == 1 {
            next.insert(c[0].clone());
        }
    }
    for (_, c) in lists {
        if c.iter().any(|q| next.contains(q)) {
            continue;
        }
        let sizes: Vec<f64> = c.iter().map(|q| size(system, method, q)).collect();
        let min = sizes.iter().copied().fold(f64::INFINITY, f64::min);
        for (q, s) in c.iter().zip(&sizes) {
            if *s <= min + TIE_TOLERANCE {
                next.insert(q.clone());
            }
        }
    }
    next
}

/// Iterates the extension until Q_k = Q_{k+1}.
pub fn run_phase1(system: &NumerationSystem, method: Phase1Method, max_iter: usize) -> Result<WeightCoefficientsSet> {
    let candidates = Candidates::new(system)?;
    let bound = system.weight_bound();
    let ctx = system.context();
    let mut q: BTreeSet<RingElement> = BTreeSet::from([ctx.zero()]);
    let mut fresh: Vec<RingElement> = vec![ctx.zero()];
    let mut seen: HashSet<RingElement> = HashSet::new();
    let mut iterations = 0;
    let mut history = Vec::new();

    loop {
        if iterations >= max_iter {
            return Err(EwmError::Abort(format!(
                "phase 1 did not reach a fixpoint within {max_iter} iterations (|Q| = {})",
                q.len()
            )));
        }
        iterations += 1;

        // Sums b + q with q added in the previous step; older sums are covered.
        let mut xs: BTreeSet<RingElement> = BTreeSet::new();
        for b in system.input_alphabet() {
            for f in &fresh {
                let x = b + f;
                if !seen.contains(&x) {
                    xs.insert(x);
                }
            }
        }
        let xs: Vec<RingElement> = xs.into_iter().collect();
        let lists: Vec<(RingElement, Vec<RingElement>)> = xs
            .par_iter()
            .map(|x| candidates.of(x).map(|c| (x.clone(), c)))
            .collect::<Result<_>>()?;
        seen.extend(xs);

        let next = extend(system, &q, &lists, method);
        fresh = next.difference(&q).cloned().collect();
        for f in &fresh {
            let n = ctx.beta_norm(f);
            if n > bound * (1.0 + 1e-9) + 1e-9 {
                return Err(EwmError::Internal(format!(
                    "weight coefficient {f} has beta-norm {n} above the bound {bound}"
                )));
            }
        }
        log::debug!(
            "phase 1 iteration {iterations}: {} sums checked, |Q| {} -> {}",
            lists.len(),
            q.len(),
            next.len()
        );
        history.push(next.len());
        if fresh.is_empty() {
            break;
        }
        q = next;
    }

    log::info!("phase 1 finished after {iterations} iterations with |Q| = {}", q.len());
    Ok(WeightCoefficientsSet { elements: q.into_iter().collect(), iterations, history, method })
}

/// Independent fixpoint check: every b + q equals a + βq' for some a ∈ A,
/// q' ∈ Q. Uses multiplication only.
pub fn verify_fixpoint(system: &NumerationSystem, q: &[RingElement]) -> std::result::Result<(), RingElement> {
    let ctx = system.context();
    let targets: HashSet<RingElement> = q
        .iter()
        .flat_map(|qq| {
            let bq = ctx.mul(system.base(), qq);
            system.alphabet().iter().map(move |a| a + &bq)
        })
        .collect();
    for b in system.input_alphabet() {
        for qq in q {
            let x = b + qq;
            if !targets.contains(&x) {
                return Err(x);
            }
        }
    }
    Ok(())
}
