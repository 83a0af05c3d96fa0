//! Rauzy graph of a level: vertices are windows whose set did not shrink
//! when their last digit was added, edges join windows overlapping in all but
//! one digit.

use super::Level;

pub(super) struct Witness {
    /// Level-L window with at least two coefficients.
    pub window: usize,
    /// Vertices from the window's suffix up to the first repeated vertex.
    pub walk: Vec<usize>,
}

pub(super) struct Check {
    pub vertices: u64,
    pub witness: Option<Witness>,
}

pub(super) fn check(level: &Level, size: impl Fn(u32) -> u32, nb: usize) -> Check {
    let n = level.ids.len();
    let stride = n / nb;
    let in_graph = |v: usize| !level.shrunk[v];
    let successors = move |v: usize| (0..nb).map(move |d| (v % stride) * nb + d);
    let predecessors = move |v: usize| (0..nb).map(move |d| d * stride + v / nb);

    let mut outdeg = vec![0u16; n];
    let mut stack = Vec::new();
    let mut vertices = 0u64;
    for v in 0..n {
        if !in_graph(v) {
            continue;
        }
        vertices += 1;
        outdeg[v] = successors(v).filter(|&s| in_graph(s)).count() as u16;
        if outdeg[v] == 0 {
            stack.push(v);
        }
    }
    // Strip vertices without an infinite walk: repeatedly remove sinks.
    let mut removed = vec![false; n];
    while let Some(v) = stack.pop() {
        removed[v] = true;
        for u in predecessors(v) {
            if in_graph(u) && !removed[u] && outdeg[u] > 0 {
                outdeg[u] -= 1;
                if outdeg[u] == 0 {
                    stack.push(u);
                }
            }
        }
    }
    let alive = |v: usize| in_graph(v) && !removed[v];

    for v in 0..n {
        if !alive(v) {
            continue;
        }
        let Some(window) = (0..nb)
            .map(|w0| w0 * stride + v / nb)
            .find(|&w| size(level.ids[w]) >= 2)
        else {
            continue;
        };
        let mut walk = vec![v];
        let mut seen = std::collections::HashSet::from([v]);
        let mut cur = v;
        loop {
            let next = successors(cur).find(|&s| alive(s)).expect("surviving vertices have surviving successors");
            walk.push(next);
            if !seen.insert(next) {
                break;
            }
            cur = next;
        }
        return Check { vertices, witness: Some(Witness { window, walk }) };
    }
    Check { vertices, witness: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(k: usize, shrunk: Vec<bool>, ids: Vec<u32>) -> Level {
        Level { k, ids, shrunk }
    }

    #[test]
    fn empty_graph_is_fine() {
        let l = level(1, vec![true; 4], vec![0; 4]);
        let c = check(&l, |_| 2, 2);
        assert_eq!(c.vertices, 0);
        assert!(c.witness.is_none());
    }

    #[test]
    fn constant_self_loop_is_reported() {
        // B = {b0, b1}; only (b1, b1) kept its set, and it has two coefficients.
        let shrunk = vec![true, true, true, false];
        let l = level(1, shrunk, vec![0, 0, 0, 1]);
        let c = check(&l, |id| if id == 1 { 2 } else { 1 }, 2);
        assert_eq!(c.vertices, 1);
        let w = c.witness.unwrap();
        assert_eq!(w.window, 3);
        assert_eq!(w.walk, vec![3, 3]);
    }

    #[test]
    fn chains_into_sinks_are_stripped() {
        // radix 3: (0,1) -> (1,2) -> nothing.
        let mut shrunk = vec![true; 9];
        shrunk[1] = false;
        shrunk[5] = false;
        let c = check(&level(1, shrunk, vec![1; 9]), |_| 2, 3);
        assert_eq!(c.vertices, 2);
        assert!(c.witness.is_none());
    }

    #[test]
    fn two_cycles_are_reported() {
        // radix 2: (b0,b1) -> (b1,b0) -> (b0,b1).
        let shrunk = vec![true, false, false, true];
        let c = check(&level(1, shrunk, vec![1; 4]), |_| 2, 2);
        let w = c.witness.unwrap();
        assert_eq!(w.walk, vec![1, 2, 1]);
    }
}
