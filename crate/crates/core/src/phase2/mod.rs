//! Phase 2: shrink the coefficient sets of growing digit windows until every
//! window determines a single weight coefficient.
//!
//! Windows of level k are (w_0, …, w_-k) ∈ B^(k+1), encoded as base-|B|
//! integers with w_0 most significant. Coefficient sets are bitmasks over the
//! sorted Q and are interned, so restriction results can be memoized on
//! (w_0, carry set, previous set).

#[cfg(test)]
mod rauzy;
mod sparse;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EwmError, Result};
use crate::ring::RingElement;
use crate::system::NumerationSystem;
use crate::table::WeightFunction;

pub const DEFAULT_MAX_K: usize = 12;
pub const DEFAULT_MAX_TABLE: u64 = 100_000_000;
const TIE_TOLERANCE: f64 = 1e-9;
const CHUNK: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Phase2Method {
    /// Closest to the centre of gravity of the partial result ('2b').
    #[default]
    Gravity,
    /// Smallest β-norm ('2d').
    BetaNorm,
}

impl fmt::Display for Phase2Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gravity => "gravity",
            Self::BetaNorm => "beta_norm",
        })
    }
}

impl FromStr for Phase2Method {
    type Err = EwmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gravity" | "2b" => Ok(Self::Gravity),
            "beta_norm" | "2d" => Ok(Self::BetaNorm),
            _ => Err(EwmError::Config(format!("unknown phase 2 method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Phase2Options {
    pub method: Phase2Method,
    pub max_k: usize,
    /// Cap on the window sets evaluated for one level.
    pub max_table: u64,
}

impl Default for Phase2Options {
    fn default() -> Self {
        Self { method: Phase2Method::default(), max_k: DEFAULT_MAX_K, max_table: DEFAULT_MAX_TABLE }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub windows: u64,
    /// Windows whose set was computed rather than inherited from a singleton prefix.
    pub evaluated: u64,
    pub max_size: u32,
    pub mean_size: f64,
    pub rauzy_vertices: Option<u64>,
}

/// Proof that phase 2 cannot terminate.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonConvergence {
    /// The sets for (b, …, b) stopped shrinking at `size` ≥ 2.
    ConstantDigit { digit: String, length: usize, size: u32 },
    /// Window `window` (level `level`) has ≥ 2 coefficients and its suffix
    /// starts a walk in the Rauzy graph that reaches a cycle; `walk` lists the
    /// vertices up to the first repetition.
    RauzyWalk { level: usize, window: Vec<String>, walk: Vec<Vec<String>> },
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantDigit { digit, length, size } => {
                write!(f, "constant input {digit} keeps {size} weight coefficients at window length {length}")
            }
            Self::RauzyWalk { level, window, walk } => write!(
                f,
                "window [{}] keeps several coefficients along an infinite walk of {} vertices in the level-{level} Rauzy graph",
                window.join(" "),
                walk.len()
            ),
        }
    }
}

pub struct Phase2Result {
    pub weight_function: WeightFunction,
    pub levels: Vec<LevelStats>,
}

pub enum Phase2Outcome {
    Converged(Phase2Result),
    NonConvergent { witness: NonConvergence, levels: Vec<LevelStats> },
}

struct Interner {
    words: usize,
    data: Vec<u64>,
    sizes: Vec<u32>,
    index: HashMap<Box<[u64]>, u32>,
}

impl Interner {
    fn new(words: usize) -> Self {
        Self { words, data: Vec::new(), sizes: Vec::new(), index: HashMap::new() }
    }

    fn intern(&mut self, mask: &[u64]) -> u32 {
        if let Some(&id) = self.index.get(mask) {
            return id;
        }
        let id = self.sizes.len() as u32;
        self.data.extend_from_slice(mask);
        self.sizes.push(mask.iter().map(|w| w.count_ones()).sum());
        self.index.insert(mask.into(), id);
        id
    }

    fn get(&self, id: u32) -> &[u64] {
        let s = id as usize * self.words;
        &self.data[s..s + self.words]
    }

    fn size(&self, id: u32) -> u32 {
        self.sizes[id as usize]
    }
}

fn bits(mask: &[u64]) -> impl Iterator<Item = usize> + '_ {
    mask.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let t = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * 64 + t)
        })
    })
}

fn disjoint(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

fn popcount(a: &[u64]) -> u32 {
    a.iter().map(|w| w.count_ones()).sum()
}

/// Coefficient sets of one level, indexed by window.
struct Level {
    k: usize,
    ids: Vec<u32>,
    /// Set differs from the set of the window without its last digit.
    shrunk: Vec<bool>,
}

type Key = (u32, u32, u32);

struct Engine<'a> {
    system: &'a NumerationSystem,
    q: &'a [RingElement],
    nb: usize,
    words: usize,
    /// cover[(b·|Q| + q_c)] = {q_0 : b + q_c − β q_0 ∈ A}
    cover: Vec<u64>,
    z: Vec<Complex64>,
    norms: Vec<f64>,
    method: Phase2Method,
    sets: Interner,
    memo: HashMap<Key, u32>,
    full: u32,
}

impl<'a> Engine<'a> {
    fn new(system: &'a NumerationSystem, q: &'a [RingElement], method: Phase2Method) -> Self {
        let ctx = system.context();
        let nq = q.len();
        let nb = system.input_alphabet().len();
        let words = nq.div_ceil(64);
        let alphabet: std::collections::HashSet<&RingElement> = system.alphabet().iter().collect();
        let beta_q: Vec<RingElement> = q.iter().map(|x| ctx.mul(system.base(), x)).collect();
        let cover: Vec<u64> = system
            .input_alphabet()
            .par_iter()
            .flat_map_iter(|b| {
                let mut rows = vec![0u64; nq * words];
                for (c, qc) in q.iter().enumerate() {
                    let x = b + qc;
                    for (j, bq) in beta_q.iter().enumerate() {
                        if alphabet.contains(&(&x - bq)) {
                            rows[c * words + j / 64] |= 1 << (j % 64);
                        }
                    }
                }
                rows
            })
            .collect();
        let z = q.iter().map(|x| ctx.to_complex(x)).collect();
        let norms = q.iter().map(|x| ctx.beta_norm(x)).collect();
        let mut sets = Interner::new(words);
        let mut full_mask = vec![0u64; words];
        for j in 0..nq {
            full_mask[j / 64] |= 1 << (j % 64);
        }
        let full = sets.intern(&full_mask);
        Self { system, q, nb, words, cover, z, norms, method, sets, memo: HashMap::new(), full }
    }

    fn cover_row(&self, b: usize, qc: usize) -> &[u64] {
        let s = (b * self.q.len() + qc) * self.words;
        &self.cover[s..s + self.words]
    }

    fn pick(&self, chosen: &[u64], union: &[u64]) -> usize {
        let centroid = |set: &[u64]| {
            let n = popcount(set);
            if n == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                bits(set).map(|i| self.z[i]).sum::<Complex64>() / n as f64
            }
        };
        let g = centroid(chosen);
        // Remaining ties go by angle seen from a reference point, so that
        // multiplying everything by a root of unity maps the pick along.
        let reference = if g.norm() > TIE_TOLERANCE { Some(g) } else { Some(centroid(union)).filter(|c| c.norm() > TIE_TOLERANCE) };
        let angle = |i: usize| match reference {
            Some(c) if self.z[i].norm() > TIE_TOLERANCE => {
                let a = (self.z[i] / c).arg();
                if a <= -std::f64::consts::PI + TIE_TOLERANCE {
                    std::f64::consts::PI
                } else {
                    a
                }
            }
            _ => 0.0,
        };
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for i in bits(union) {
            let dist = match self.method {
                Phase2Method::Gravity => (self.z[i] - g).norm(),
                Phase2Method::BetaNorm => 0.0,
            };
            let norm = self.norms[i];
            let ang = angle(i);
            let better = match best {
                None => true,
                Some((_, bd, bn, ba)) => {
                    let tie = |x: f64, y: f64| (x - y).abs() <= TIE_TOLERANCE;
                    dist < bd - TIE_TOLERANCE
                        || (tie(dist, bd) && norm < bn - TIE_TOLERANCE)
                        || (tie(dist, bd) && tie(norm, bn) && ang < ba - TIE_TOLERANCE)
                }
            };
            if better {
                best = Some((i, dist, norm, ang));
            }
        }
        best.expect("nonempty union").0
    }

    /// Minimal subset of `prev` covering w_0 + carry.
    fn restrict(&self, w0: usize, carry: &[u64], prev: &[u64]) -> Result<Vec<u64>> {
        let mut ds: Vec<Vec<u64>> = Vec::new();
        for qc in bits(carry) {
            let d: Vec<u64> = self.cover_row(w0, qc).iter().zip(prev).map(|(a, b)| a & b).collect();
            if d.iter().all(|&w| w == 0) {
                return Err(EwmError::Internal(format!(
                    "digit {} with carry {} cannot be covered",
                    self.system.input_alphabet()[w0],
                    self.q[qc]
                )));
            }
            ds.push(d);
        }
        ds.sort_unstable();
        ds.dedup();
        let mut result = vec![0u64; self.words];
        for d in &ds {
            if popcount(d) == 1 {
                for (r, w) in result.iter_mut().zip(d) {
                    *r |= w;
                }
            }
        }
        loop {
            let open: Vec<&Vec<u64>> = ds.iter().filter(|d| disjoint(d, &result)).collect();
            let Some(m) = open.iter().map(|d| popcount(d)).min() else { break };
            let mut union = vec![0u64; self.words];
            for d in open.iter().filter(|d| popcount(d) == m) {
                for (u, w) in union.iter_mut().zip(d.iter()) {
                    *u |= w;
                }
            }
            let i = self.pick(&result, &union);
            result[i / 64] |= 1 << (i % 64);
        }
        Ok(result)
    }

    fn restrict_memo(&mut self, w0: usize, carry: u32, prev: u32) -> Result<u32> {
        let key = (w0 as u32, carry, prev);
        if let Some(&id) = self.memo.get(&key) {
            return Ok(id);
        }
        let mask = self.restrict(w0, self.sets.get(carry), self.sets.get(prev))?;
        let id = self.sets.intern(&mask);
        self.memo.insert(key, id);
        Ok(id)
    }

    fn level0(&mut self) -> Result<Level> {
        let mut ids = Vec::with_capacity(self.nb);
        for b in 0..self.nb {
            ids.push(self.restrict_memo(b, self.full, self.full)?);
        }
        let shrunk = ids.iter().map(|&id| id != self.full).collect();
        Ok(Level { k: 0, ids, shrunk })
    }

    /// Looks up or computes the restrictions named by `keys`.
    fn resolve(&mut self, keys: Vec<std::result::Result<u32, Key>>) -> Result<Vec<u32>> {
        let mut missing: Vec<Key> = keys
            .iter()
            .filter_map(|k| k.err())
            .filter(|k| !self.memo.contains_key(k))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        let computed: Vec<Vec<u64>> = missing
            .par_iter()
            .map(|&(w0, c, p)| self.restrict(w0 as usize, self.sets.get(c), self.sets.get(p)))
            .collect::<Result<_>>()?;
        for (key, mask) in missing.into_iter().zip(computed) {
            let id = self.sets.intern(&mask);
            self.memo.insert(key, id);
        }
        Ok(keys
            .into_iter()
            .map(|key| match key {
                Ok(id) => id,
                Err(key) => self.memo[&key],
            })
            .collect())
    }

    /// Dense counterpart of the trie levels, for inspection of small systems.
    fn next_level(&mut self, prev: &Level) -> Result<Level> {
        let k = prev.k + 1;
        let nb = self.nb;
        let stride = nb.pow(k as u32);
        let n = stride * nb;
        let mut ids = Vec::with_capacity(n);
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let sets = &self.sets;
            let keys: Vec<std::result::Result<u32, Key>> = (start..end)
                .into_par_iter()
                .map(|idx| {
                    let pid = prev.ids[idx / nb];
                    let suffix = idx % stride;
                    if sets.size(pid) == 1 || (k >= 2 && !prev.shrunk[suffix]) {
                        Ok(pid)
                    } else {
                        Err(((idx / stride) as u32, prev.ids[suffix], pid))
                    }
                })
                .collect();
            ids.extend(self.resolve(keys)?);
        }
        let shrunk = ids.iter().enumerate().map(|(idx, &id)| id != prev.ids[idx / nb]).collect();
        Ok(Level { k, ids, shrunk })
    }

    #[cfg(test)]
    fn stats(&self, level: &Level) -> LevelStats {
        let (max, sum) = level
            .ids
            .par_iter()
            .map(|&id| self.sets.size(id))
            .fold(|| (0u32, 0u64), |(m, s), x| (m.max(x), s + x as u64))
            .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
        LevelStats {
            level: level.k,
            windows: level.ids.len() as u64,
            evaluated: level.ids.len() as u64,
            max_size: max,
            mean_size: sum as f64 / level.ids.len() as f64,
            rauzy_vertices: None,
        }
    }

    /// Checks the constant windows (b, …, b); see the module docs of the
    /// non-convergence criteria.
    fn constant_digit_check(&mut self) -> Result<Option<NonConvergence>> {
        for b in 0..self.nb {
            let mut cur = self.restrict_memo(b, self.full, self.full)?;
            let mut cur_shrunk = cur != self.full;
            let mut m = 1;
            while self.sets.size(cur) > 1 {
                let next = if m >= 2 && !cur_shrunk { cur } else { self.restrict_memo(b, cur, cur)? };
                if self.sets.size(next) == self.sets.size(cur) {
                    return Ok(Some(NonConvergence::ConstantDigit {
                        digit: self.system.input_alphabet()[b].to_string(),
                        length: m + 1,
                        size: self.sets.size(next),
                    }));
                }
                cur_shrunk = next != cur;
                cur = next;
                m += 1;
            }
        }
        Ok(None)
    }

    #[cfg(test)]
    fn digits_of(&self, mut idx: usize, len: usize) -> Vec<String> {
        let b = self.system.input_alphabet();
        let mut out = vec![String::new(); len];
        for slot in out.iter_mut().rev() {
            *slot = b[idx % self.nb].to_string();
            idx /= self.nb;
        }
        out
    }
}

/// Runs the constant-digit pre-check and then levels 0, 1, … until every
/// window has a single weight coefficient.
pub fn run_phase2(system: &NumerationSystem, q: &[RingElement], opts: &Phase2Options) -> Result<Phase2Outcome> {
    if !q.windows(2).all(|w| w[0] < w[1]) {
        return Err(EwmError::Internal("weight coefficients must be sorted and distinct".into()));
    }
    let mut engine = Engine::new(system, q, opts.method);
    if let Some(witness) = engine.constant_digit_check()? {
        log::info!("phase 2 pre-check: {witness}");
        return Ok(Phase2Outcome::NonConvergent { witness, levels: Vec::new() });
    }

    let mut levels = Vec::new();
    let mut level = sparse::Windows::level0(&mut engine)?;
    loop {
        let mut stats = level.stats(&engine);
        if stats.max_size == 1 {
            log_level(&stats);
            levels.push(stats);
            break;
        }
        if level.k >= 1 {
            let check = level.rauzy();
            stats.rauzy_vertices = Some(check.vertices);
            log_level(&stats);
            levels.push(stats);
            if let Some(w) = check.witness {
                let digits = |w: &[u16]| w.iter().map(|&d| system.input_alphabet()[d as usize].to_string()).collect();
                let witness = NonConvergence::RauzyWalk {
                    level: level.k,
                    window: digits(&w.window),
                    walk: w.walk.iter().map(|v| digits(v)).collect(),
                };
                log::info!("phase 2 stopped: {witness}");
                return Ok(Phase2Outcome::NonConvergent { witness, levels });
            }
        } else {
            log_level(&stats);
            levels.push(stats);
        }
        let k = level.k + 1;
        if k > opts.max_k {
            return Err(EwmError::ResourceAbort(format!(
                "phase 2 needs window length above {} (max_k {})",
                opts.max_k + 1,
                opts.max_k
            )));
        }
        let evaluated = level.open_windows() as u128 * engine.nb as u128;
        if evaluated > opts.max_table as u128 {
            return Err(EwmError::ResourceAbort(format!(
                "level {k} needs {evaluated} window sets, above max_table {}",
                opts.max_table
            )));
        }
        if (engine.nb as u128).checked_pow(k as u32 + 1).is_none() {
            return Err(EwmError::ResourceAbort(format!("level {k} windows cannot be indexed")));
        }
        level.next_level(&mut engine)?;
    }

    let trie = level.build_trie(&engine);
    let r = level.k + 1;
    let wf = WeightFunction::new(system.clone(), q.to_vec(), r, trie)?;
    log::info!("phase 2 converged: r = {r}, {} table rows", wf.rows());
    Ok(Phase2Outcome::Converged(Phase2Result { weight_function: wf, levels }))
}

fn log_level(s: &LevelStats) {
    match s.rauzy_vertices {
        Some(v) => log::info!(
            "phase 2 level {}: {} windows ({} evaluated), max set size {}, mean set size {:.4}, {} Rauzy vertices",
            s.level,
            s.windows,
            s.evaluated,
            s.max_size,
            s.mean_size,
            v
        ),
        None => log::info!(
            "phase 2 level {}: {} windows ({} evaluated), max set size {}, mean set size {:.4}",
            s.level,
            s.windows,
            s.evaluated,
            s.max_size,
            s.mean_size
        ),
    }
}

/// Sets Q_[w_0..w_-k] for levels 0..=up_to, as sorted indices into `q`.
/// Meant for inspecting small systems.
pub fn window_sets(
    system: &NumerationSystem,
    q: &[RingElement],
    method: Phase2Method,
    up_to: usize,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let mut engine = Engine::new(system, q, method);
    let mut level = engine.level0()?;
    let mut out = Vec::new();
    loop {
        out.push(level.ids.iter().map(|&id| bits(engine.sets.get(id)).collect()).collect());
        if level.k == up_to {
            break;
        }
        level = engine.next_level(&level)?;
    }
    Ok(out)
}

/// Single restriction step on explicit sets (indices into `q`).
pub fn restrict(
    system: &NumerationSystem,
    q: &[RingElement],
    method: Phase2Method,
    w0: &RingElement,
    carry: &[usize],
    prev: &[usize],
) -> Result<Vec<usize>> {
    let engine = Engine::new(system, q, method);
    let w = system
        .input_alphabet()
        .iter()
        .position(|b| b == w0)
        .ok_or_else(|| EwmError::Domain(format!("{w0} is not an input digit")))?;
    let mask = |s: &[usize]| {
        let mut m = vec![0u64; engine.words];
        for &i in s {
            m[i / 64] |= 1 << (i % 64);
        }
        m
    };
    Ok(bits(&engine.restrict(w, &mask(carry), &mask(prev))?).collect())
}
