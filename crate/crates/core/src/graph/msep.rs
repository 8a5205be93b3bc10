use std::collections::VecDeque;

use super::{set_to_mask, Mark, MixedGraph, NodeSet};
use crate::error::{input, Result};

/// `x` and `y` are m-separated by `z`.
///
/// Reachability over `(node, entered through an arrowhead)` states: a
/// collider may be passed only if it is an ancestor of `z`, a non-collider
/// only if it is not in `z`.
pub fn m_separated(g: &MixedGraph, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
    Ok(!m_connected(g, x, y, z)?)
}

pub fn m_connected(g: &MixedGraph, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
    g.check_node(x)?;
    g.check_node(y)?;
    if x == y {
        return input("m-separation query needs two distinct nodes");
    }
    for &v in z {
        g.check_node(v)?;
    }
    if z.contains(&x) || z.contains(&y) {
        return input("conditioning set contains a query endpoint");
    }
    let in_z = set_to_mask(z, g.n());
    Ok(reachable(g, x, y, &in_z))
}

pub(crate) fn reachable(g: &MixedGraph, x: usize, y: usize, in_z: &[bool]) -> bool {
    let n = g.n();
    let anc_z = g.ancestor_mask((0..n).filter(|&v| in_z[v]));
    // visited[v][0]: reached v through a non-arrow mark, [1]: through an arrowhead
    let mut visited = vec![[false; 2]; n];
    let mut queue = VecDeque::new();
    for w in g.neighbors(x) {
        for (_, mw) in g.simple_edges(x, w) {
            let into = mw == Mark::ARROW;
            if !visited[w][into as usize] {
                visited[w][into as usize] = true;
                queue.push_back((w, into));
            }
        }
    }
    while let Some((v, into)) = queue.pop_front() {
        if v == y {
            return true;
        }
        for u in g.neighbors(v) {
            for (mv, mu) in g.simple_edges(v, u) {
                let collider = into && mv == Mark::ARROW;
                let pass = if collider { anc_z[v] } else { !in_z[v] };
                if !pass {
                    continue;
                }
                let next_into = mu == Mark::ARROW;
                if !visited[u][next_into as usize] {
                    visited[u][next_into as usize] = true;
                    queue.push_back((u, next_into));
                }
            }
        }
    }
    false
}
