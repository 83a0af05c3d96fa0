use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{Node, Trie, WeightFunction};
use crate::error::{EwmError, Result};
use crate::ring::RingElement;
use crate::system::NumerationSystem;

fn header(r: usize) -> String {
    let mut h = String::from("w_0");
    for i in 1..r {
        let _ = write!(h, ";w_-{i}");
    }
    h.push_str(";q");
    h
}

/// Serializes the table: one row per stored leaf in depth-first digit order.
/// Trailing empty cells mark a shallower leaf; an empty cell followed by
/// digits marks a position that does not matter.
pub fn export_csv(wf: &WeightFunction) -> String {
    let b = wf.system().input_alphabet();
    let r = wf.memory();
    let mut out = header(r);
    out.push('\n');
    wf.trie().for_each_leaf(|path, q| {
        for i in 0..r {
            if let Some(Some(d)) = path.get(i) {
                let _ = write!(out, "{}", b[*d as usize]);
            }
            out.push(';');
        }
        let _ = writeln!(out, "{}", wf.q_values()[q as usize]);
    });
    out
}

pub fn write_csv(wf: &WeightFunction, path: &Path) -> Result<()> {
    std::fs::write(path, export_csv(wf))?;
    Ok(())
}

pub fn read_csv(path: &Path, system: &NumerationSystem) -> Result<WeightFunction> {
    let text = std::fs::read_to_string(path)?;
    import_csv(&text, system)
}

/// Parses a table written by [`export_csv`] or by hand.
///
/// Checks structure and totality only; whether the rule is a valid
/// conversion is left to [`WeightFunction::check_validity`].
pub fn import_csv(text: &str, system: &NumerationSystem) -> Result<WeightFunction> {
    let err = |row: usize, message: String| EwmError::Import { row, message };
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let head = lines.next().unwrap_or_default();
    let columns = head.split(';').count();
    if columns < 2 || head != header(columns - 1) {
        return Err(err(1, format!("unexpected header {head:?}")));
    }
    let r = columns - 1;
    let ctx = system.context();
    let digits: std::collections::HashMap<&RingElement, u32> =
        system.input_alphabet().iter().enumerate().map(|(i, d)| (d, i as u32)).collect();

    let mut rows: Vec<(usize, Vec<Option<u32>>, RingElement)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = n + 2;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(';').collect();
        if cells.len() != columns {
            return Err(err(row, format!("expected {columns} cells, found {}", cells.len())));
        }
        let mut path = Vec::with_capacity(r);
        for cell in &cells[..r] {
            if cell.trim().is_empty() {
                path.push(None);
                continue;
            }
            let d: RingElement = cell.parse().map_err(|e: EwmError| err(row, e.to_string()))?;
            ctx.check(&d).map_err(|e| err(row, e.to_string()))?;
            let i = digits
                .get(&d)
                .ok_or_else(|| err(row, format!("digit {d} is not in the input alphabet")))?;
            path.push(Some(*i));
        }
        while path.last() == Some(&None) {
            path.pop();
        }
        let q: RingElement = cells[r].parse().map_err(|e: EwmError| err(row, e.to_string()))?;
        ctx.check(&q).map_err(|e| err(row, e.to_string()))?;
        rows.push((row, path, q));
    }
    if rows.is_empty() {
        return Err(err(2, "table has no rows".into()));
    }

    let mut q_set: BTreeSet<RingElement> = rows.iter().map(|(_, _, q)| q.clone()).collect();
    q_set.insert(ctx.zero());
    let q_values: Vec<RingElement> = q_set.into_iter().collect();

    let mut trie = Trie::new(system.input_alphabet().len());
    for (row, path, q) in &rows {
        let mut node = Trie::ROOT;
        for (depth, cell) in path.iter().enumerate() {
            node = match (trie.node(node), cell) {
                (Node::Empty, Some(d)) => trie.make_branch(node) + *d as usize,
                (Node::Branch(c), Some(d)) => c as usize + *d as usize,
                (Node::Empty, None) => trie.make_any(node),
                (Node::Any(c), None) => c as usize,
                (Node::Leaf(_), _) => {
                    return Err(err(*row, format!("row is shadowed by a shorter row ending at position {depth}")))
                }
                _ => return Err(err(*row, format!("position {depth} mixes wildcard and explicit digits"))),
            };
        }
        if trie.node(node) != Node::Empty {
            return Err(err(*row, "row overlaps an earlier row".into()));
        }
        let qi = q_values.binary_search(q).expect("collected above") as u32;
        trie.set(node, Node::Leaf(qi));
    }
    if let Some(gap) = trie.find_gap(r) {
        let b = system.input_alphabet();
        let shown: Vec<String> = gap
            .iter()
            .map(|c| c.map(|d| b[d as usize].to_string()).unwrap_or_else(|| "*".into()))
            .collect();
        let last = rows.last().map(|(row, _, _)| row + 1).unwrap_or(2);
        return Err(err(last, format!("table has no entry for windows starting {}", shown.join(" "))));
    }
    WeightFunction::new(system.clone(), q_values, r, trie)
}
