//! Levels kept as a trie. Only windows whose prefix still has several
//! coefficients get children; everything below a singleton is implied, so a
//! level costs |B| times the number of open windows of the previous one.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::{bits, Engine, Key, LevelStats, CHUNK};
use crate::error::{EwmError, Result};
use crate::table::{Node as TableNode, Trie};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    set: u32,
    /// Set differs from the set of the parent.
    shrunk: bool,
    children: u32,
}

#[derive(Clone, Copy)]
enum Descent {
    /// Reached a leaf above the requested depth.
    Stop(u32),
    At(usize),
}

pub(super) struct Witness {
    pub window: Vec<u16>,
    pub walk: Vec<Vec<u16>>,
}

pub(super) struct Check {
    pub vertices: u64,
    pub witness: Option<Witness>,
}

pub(super) struct Windows {
    nb: usize,
    nodes: Vec<Node>,
    pub k: usize,
    /// First node of the deepest level; the level runs to the end of `nodes`.
    level_start: usize,
    /// Windows of level k with several coefficients, in window order.
    open: Vec<u32>,
    digits: Vec<u16>,
    /// Same for level k − 1.
    parents: Vec<u32>,
    parent_digits: Vec<u16>,
}

impl Windows {
    pub(super) fn level0(engine: &mut Engine) -> Result<Self> {
        let nb = engine.nb;
        let full = engine.full;
        let mut w = Self {
            nb,
            nodes: vec![Node { set: full, shrunk: false, children: 1 }],
            k: 0,
            level_start: 1,
            open: Vec::new(),
            digits: Vec::new(),
            parents: vec![0],
            parent_digits: Vec::new(),
        };
        for b in 0..nb {
            let id = engine.restrict_memo(b, full, full)?;
            w.push_child(engine, id, full, vec![b as u16]);
        }
        Ok(w)
    }

    fn push_child(&mut self, engine: &Engine, id: u32, parent: u32, digits: Vec<u16>) {
        let index = self.nodes.len() as u32;
        self.nodes.push(Node { set: id, shrunk: id != parent, children: NONE });
        if engine.sets.size(id) >= 2 {
            self.open.push(index);
            self.digits.extend(digits);
        }
    }

    pub(super) fn open_windows(&self) -> usize {
        self.open.len()
    }

    fn descend(&self, digits: &[u16]) -> Descent {
        let mut node = 0;
        for &d in digits {
            let n = self.nodes[node];
            if n.children == NONE {
                return Descent::Stop(n.set);
            }
            node = n.children as usize + d as usize;
        }
        Descent::At(node)
    }

    /// Set of a window of length at most k + 1, and whether it shrank when
    /// its last digit was appended.
    pub(super) fn window(&self, w: &[u16]) -> (u32, bool) {
        let (last, head) = w.split_last().expect("nonempty window");
        self.child_of(self.descend(head), *last)
    }

    fn child_of(&self, at: Descent, d: u16) -> (u32, bool) {
        match at {
            Descent::Stop(set) => (set, false),
            Descent::At(node) => {
                let n = self.nodes[node];
                if n.children == NONE {
                    (n.set, false)
                } else {
                    let c = self.nodes[n.children as usize + d as usize];
                    (c.set, c.shrunk)
                }
            }
        }
    }

    pub(super) fn next_level(&mut self, engine: &mut Engine) -> Result<()> {
        let k = self.k + 1;
        let nb = self.nb;
        let open = std::mem::take(&mut self.open);
        let digits = std::mem::take(&mut self.digits);
        self.level_start = self.nodes.len();
        if self.level_start + open.len() * nb >= NONE as usize {
            return Err(EwmError::ResourceAbort("phase 2 trie exceeds 2^32 nodes".into()));
        }
        let per_chunk = (CHUNK / nb).max(1);
        for start in (0..open.len()).step_by(per_chunk) {
            let end = (start + per_chunk).min(open.len());
            let this = &*self;
            let keys: Vec<std::result::Result<u32, Key>> = (start..end)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let parent = &digits[i * k..(i + 1) * k];
                    let pid = this.nodes[open[i] as usize].set;
                    let tail = this.descend(&parent[1..]);
                    let suffixes: Vec<(u32, bool)> = (0..nb as u16)
                        .map(|d| this.child_of(tail, d))
                        .collect();
                    suffixes.into_iter().map(move |(sid, shrunk)| {
                        if k >= 2 && !shrunk {
                            Ok(pid)
                        } else {
                            Err((parent[0] as u32, sid, pid))
                        }
                    })
                })
                .collect();
            let ids = engine.resolve(keys)?;
            for (j, i) in (start..end).enumerate() {
                let node = open[i] as usize;
                let pid = self.nodes[node].set;
                self.nodes[node].children = self.nodes.len() as u32;
                for d in 0..nb {
                    let mut w = digits[i * k..(i + 1) * k].to_vec();
                    w.push(d as u16);
                    self.push_child(engine, ids[j * nb + d], pid, w);
                }
            }
        }
        self.parents = open;
        self.parent_digits = digits;
        self.k = k;
        Ok(())
    }

    pub(super) fn stats(&self, engine: &Engine) -> LevelStats {
        let level = &self.nodes[self.level_start..];
        let (max, sum) = level
            .par_iter()
            .map(|n| engine.sets.size(n.set))
            .fold(|| (0u32, 0u128), |(m, s), x| (m.max(x), s + x as u128))
            .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
        let total = self.total();
        let sum = sum + total - level.len() as u128;
        LevelStats {
            level: self.k,
            windows: u64::try_from(total).unwrap_or(u64::MAX),
            evaluated: level.len() as u64,
            max_size: max.max(1),
            mean_size: sum as f64 / total as f64,
            rauzy_vertices: None,
        }
    }

    fn total(&self) -> u128 {
        (self.nb as u128).pow(self.k as u32 + 1)
    }

    fn key(w: &[u16], nb: usize) -> u128 {
        w.iter().fold(0u128, |acc, &d| acc * nb as u128 + d as u128)
    }

    /// Vertices are the windows of the level whose set did not shrink when
    /// their last digit was added; edges join windows overlapping in all but
    /// one digit. Vertices without an infinite forward walk are stripped, then
    /// the first surviving suffix of a window with several coefficients is
    /// followed until it repeats.
    pub(super) fn rauzy(&self) -> Check {
        let (nb, k) = (self.nb, self.k);
        let shrunk = self.nodes[self.level_start..].par_iter().filter(|n| n.shrunk).count() as u128;
        let vertices = u64::try_from(self.total() - shrunk).unwrap_or(u64::MAX);
        let in_graph = |v: &[u16]| !self.window(v).1;
        let initial_outdeg = |u: &[u16]| match self.descend(u) {
            Descent::Stop(_) => nb as u32,
            Descent::At(node) => {
                let n = self.nodes[node];
                if n.children == NONE {
                    nb as u32
                } else {
                    (0..nb).filter(|&d| !self.nodes[n.children as usize + d].shrunk).count() as u32
                }
            }
        };

        // Successors of v are (v_1, …, v_k, d), so all predecessors of the
        // windows extending u share one out-degree, kept per u.
        let mut outdeg: HashMap<u128, u32> = HashMap::new();
        let mut removed: HashSet<u128> = HashSet::new();
        let mut stack: Vec<Vec<u16>> = Vec::new();
        for (i, &node) in self.parents.iter().enumerate() {
            let u = &self.parent_digits[i * k..(i + 1) * k];
            let n = self.nodes[node as usize];
            let deg = (0..nb).filter(|&d| !self.nodes[n.children as usize + d].shrunk).count() as u32;
            outdeg.insert(Self::key(u, nb), deg);
            if deg == 0 {
                stack.extend(predecessors(u, nb).filter(|p| in_graph(p)));
            }
        }
        while let Some(v) = stack.pop() {
            if !removed.insert(Self::key(&v, nb)) {
                continue;
            }
            let u = &v[..k];
            let deg = outdeg.entry(Self::key(u, nb)).or_insert_with(|| initial_outdeg(u));
            *deg -= 1;
            if *deg == 0 {
                stack.extend(predecessors(u, nb).filter(|p| in_graph(p) && !removed.contains(&Self::key(p, nb))));
            }
        }
        let alive = |v: &[u16]| in_graph(v) && !removed.contains(&Self::key(v, nb));

        let len = k + 1;
        let best = (0..self.open.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let w = &self.digits[i * len..(i + 1) * len];
                (0..nb as u16).filter_map(move |d| {
                    let mut v = w[1..].to_vec();
                    v.push(d);
                    alive(&v).then(|| (Self::key(&v, nb), w[0], v))
                })
            })
            .min_by_key(|(key, w0, _)| (*key, *w0));
        let witness = best.map(|(_, w0, v)| {
            let mut window = vec![w0];
            window.extend_from_slice(&v[..k]);
            let mut walk = vec![v.clone()];
            let mut seen = HashSet::from([Self::key(&v, nb)]);
            let mut cur = v;
            loop {
                let next = (0..nb as u16)
                    .map(|d| {
                        let mut s = cur[1..].to_vec();
                        s.push(d);
                        s
                    })
                    .find(|s| alive(s))
                    .expect("surviving vertices have surviving successors");
                walk.push(next.clone());
                if !seen.insert(Self::key(&next, nb)) {
                    break;
                }
                cur = next;
            }
            Witness { window, walk }
        });
        Check { vertices, witness }
    }

    pub(super) fn build_trie(&self, engine: &Engine) -> Trie {
        let mut trie = Trie::new(self.nb);
        self.fill(engine, &mut trie, Trie::ROOT, 0);
        trie
    }

    fn fill(&self, engine: &Engine, trie: &mut Trie, at: usize, node: usize) {
        let n = self.nodes[node];
        if n.children == NONE {
            let q = bits(engine.sets.get(n.set)).next().expect("singleton");
            trie.set(at, TableNode::Leaf(q as u32));
            return;
        }
        let first = trie.make_branch(at);
        for d in 0..self.nb {
            self.fill(engine, trie, first + d, n.children as usize + d);
        }
    }
}

fn predecessors(u: &[u16], nb: usize) -> impl Iterator<Item = Vec<u16>> + '_ {
    (0..nb as u16).map(move |d| {
        let mut p = Vec::with_capacity(u.len() + 1);
        p.push(d);
        p.extend_from_slice(u);
        p
    })
}
