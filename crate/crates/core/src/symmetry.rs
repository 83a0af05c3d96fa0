//! Tables reduced by a group of units ρ with q(ρw) = ρ·q(w).

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{EwmError, Result};
use crate::ring::RingElement;
use crate::table::{window_string, WeightFunction};

const MAX_WINDOWS: u64 = 10_000_000;
const MAX_GROUP: usize = 1000;
const GRID: f64 = 1e-9;

/// One stored window per orbit; everything else is recovered on lookup.
#[derive(Clone, Debug)]
pub struct SymmetryReduction {
    units: Vec<RingElement>,
    /// [ρ][d]: index of ρ·b_d in B.
    digit_perm: Vec<Vec<u32>>,
    /// [ρ][q]: index of ρ⁻¹·q in Q.
    q_inverse: Vec<Vec<u32>>,
    rank: Vec<u32>,
    table: HashMap<Vec<u32>, u32>,
    r: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Agreement {
    pub windows: u64,
    pub representatives: usize,
    pub mismatch: Option<Vec<String>>,
}

impl Agreement {
    pub fn agrees(&self) -> bool {
        self.mismatch.is_none()
    }
}

fn group_closure(wf: &WeightFunction, units: &[RingElement]) -> Result<Vec<RingElement>> {
    let ctx = wf.system().context();
    let mut group: BTreeSet<RingElement> = BTreeSet::from([ctx.one()]);
    let mut frontier: Vec<RingElement> = units.to_vec();
    while let Some(x) = frontier.pop() {
        if !group.insert(x.clone()) {
            continue;
        }
        if group.len() > MAX_GROUP {
            return Err(EwmError::Config("units generate an infinite or very large group".into()));
        }
        for g in units {
            frontier.push(ctx.mul(&x, g));
        }
    }
    Ok(group.into_iter().collect())
}

fn permutation(ctx: &crate::ring::RingContext, rho: &RingElement, set: &[RingElement], name: &str) -> Result<Vec<u32>> {
    let index: HashMap<&RingElement, u32> = set.iter().enumerate().map(|(i, x)| (x, i as u32)).collect();
    set.iter()
        .map(|x| {
            let y = ctx.mul(rho, x);
            index
                .get(&y)
                .copied()
                .ok_or_else(|| EwmError::Config(format!("unit {rho} maps {x} outside {name}")))
        })
        .collect()
}

/// Digit order for choosing representatives: zero first, then by argument in
/// [0, 2π), then by modulus, then by coordinates.
fn digit_ranks(wf: &WeightFunction) -> Vec<u32> {
    let ctx = wf.system().context();
    let b = wf.system().input_alphabet();
    let key = |x: &RingElement| {
        let z = ctx.to_complex(x);
        let mut arg = z.arg();
        if arg < -GRID {
            arg += TAU;
        }
        let arg = (arg.max(0.0) / GRID).round() as i64;
        let modulus = (z.norm() / GRID).round() as i64;
        (!x.is_zero(), arg, modulus, x.clone())
    };
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by_key(|&i| key(&b[i]));
    let mut rank = vec![0u32; b.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32;
    }
    rank
}

pub fn symmetry_reduce(wf: &WeightFunction, units: &[RingElement]) -> Result<SymmetryReduction> {
    let sys = wf.system();
    let ctx = sys.context();
    for rho in units {
        ctx.check(rho)?;
        if !ctx.is_unit(rho) {
            return Err(EwmError::Config(format!("{rho} is not a unit")));
        }
    }
    let group = group_closure(wf, units)?;
    let mut digit_perm = Vec::new();
    let mut q_inverse = Vec::new();
    for rho in &group {
        permutation(ctx, rho, sys.alphabet(), "A")?;
        digit_perm.push(permutation(ctx, rho, sys.input_alphabet(), "B")?);
        let inv = ctx.unit_inverse(rho).expect("checked above");
        q_inverse.push(permutation(ctx, &inv, wf.q_values(), "Q")?);
    }
    let r = wf.memory();
    let nb = sys.input_alphabet().len() as u64;
    let total = nb.checked_pow(r as u32).filter(|&t| t <= MAX_WINDOWS).ok_or_else(|| {
        EwmError::ResourceAbort(format!("{nb}^{r} windows exceed the symmetry reduction limit"))
    })?;
    let mut red = SymmetryReduction { units: group, digit_perm, q_inverse, rank: digit_ranks(wf), table: HashMap::new(), r };
    let mut window = vec![0u32; r];
    for _ in 0..total {
        let (rep, _) = red.canonical(&window);
        if rep == window {
            let q = wf
                .lookup_index(&window)
                .ok_or_else(|| EwmError::TableIncomplete { window: window_string(&wf.digits(&window)) })?;
            red.table.insert(rep, q);
        }
        advance(&mut window, nb as u32);
    }
    Ok(red)
}

fn advance(window: &mut [u32], nb: u32) {
    for d in window.iter_mut().rev() {
        *d += 1;
        if *d < nb {
            return;
        }
        *d = 0;
    }
}

impl SymmetryReduction {
    pub fn units(&self) -> &[RingElement] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Representative of the orbit of `window` and the index of the unit
    /// mapping the window onto it.
    pub fn canonical(&self, window: &[u32]) -> (Vec<u32>, usize) {
        let mut best: Option<(Vec<u32>, usize)> = None;
        let mut best_key: Vec<u32> = Vec::new();
        for (g, perm) in self.digit_perm.iter().enumerate() {
            let image: Vec<u32> = window.iter().map(|&d| perm[d as usize]).collect();
            let key: Vec<u32> = image.iter().map(|&d| self.rank[d as usize]).collect();
            if best.is_none() || key < best_key {
                best_key = key;
                best = Some((image, g));
            }
        }
        best.expect("the group contains 1")
    }

    /// q(w) = ρ⁻¹·q(ρw) where ρw is the stored representative.
    pub fn lookup_index(&self, window: &[u32]) -> Option<u32> {
        let (rep, g) = self.canonical(window);
        self.table.get(&rep).map(|&q| self.q_inverse[g][q as usize])
    }

    /// First digits of the stored representatives.
    pub fn leading_digits(&self, wf: &WeightFunction) -> Vec<RingElement> {
        let b = wf.system().input_alphabet();
        let set: BTreeSet<u32> = self.table.keys().filter_map(|w| w.first().copied()).collect();
        set.into_iter().map(|d| b[d as usize].clone()).collect()
    }

    /// Compares the reduced lookup with the full table on every window.
    pub fn agreement(&self, wf: &WeightFunction) -> Agreement {
        let nb = wf.system().input_alphabet().len() as u32;
        let total = (nb as u64).pow(self.r as u32);
        let mut window = vec![0u32; self.r];
        for _ in 0..total {
            if self.lookup_index(&window) != wf.lookup_index(&window) {
                return Agreement {
                    windows: total,
                    representatives: self.len(),
                    mismatch: Some(wf.digits(&window).iter().map(|d| d.to_string()).collect()),
                };
            }
            advance(&mut window, nb);
        }
        Agreement { windows: total, representatives: self.len(), mismatch: None }
    }
}

/// The units ±1, ±ω, ±ω², … of finite order that also stabilize the system's
/// digit sets; used as a default when none are given.
pub fn stabilizing_roots_of_unity(wf: &WeightFunction, max_order: u32) -> Vec<RingElement> {
    let ctx = wf.system().context();
    let mut out = Vec::new();
    let minus_one = ctx.integer(-1);
    let mut candidates = vec![ctx.one(), minus_one.clone()];
    let mut p = ctx.omega();
    for _ in 1..=max_order {
        candidates.push(p.clone());
        candidates.push(ctx.mul(&p, &minus_one));
        p = ctx.mul(&p, &ctx.omega());
    }
    for rho in candidates {
        if out.contains(&rho) || !ctx.is_unit(&rho) {
            continue;
        }
        let sys = wf.system();
        let ok = permutation(ctx, &rho, sys.alphabet(), "A").is_ok()
            && permutation(ctx, &rho, sys.input_alphabet(), "B").is_ok()
            && permutation(ctx, &rho, wf.q_values(), "Q").is_ok();
        if ok {
            out.push(rho);
        }
    }
    out
}
