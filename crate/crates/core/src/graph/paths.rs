use super::{set_to_mask, Mark, MixedGraph, NodeSet};
use crate::error::{input, Result};

/// Maximum number of edges a path may have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PathBound {
    #[default]
    Unbounded,
    Edges(usize),
}

impl PathBound {
    pub fn allows(self, edges: usize) -> bool {
        match self {
            PathBound::Unbounded => true,
            PathBound::Edges(k) => edges <= k,
        }
    }
}

/// Is there a path between `x` and `y` whose non-colliders all lie in
/// `latent` and whose colliders are all ancestors of `x` or `y`?
///
/// Without a length bound this reduces to one m-connection query given
/// `An({x, y}) \ (latent ∪ {x, y})`, the set that separates the pair if
/// any set does. With a bound the simple paths are searched directly.
pub fn has_inducing_path(
    g: &MixedGraph,
    x: usize,
    y: usize,
    latent: &NodeSet,
    bound: PathBound,
) -> Result<bool> {
    g.check_node(x)?;
    g.check_node(y)?;
    if x == y {
        return input("inducing path query needs two distinct nodes");
    }
    for &v in latent {
        g.check_node(v)?;
    }
    if latent.contains(&x) || latent.contains(&y) {
        return input("latent set contains a path endpoint");
    }
    if g.adjacent(x, y) {
        return Ok(true);
    }
    let in_l = set_to_mask(latent, g.n());
    let anc = g.ancestor_mask([x, y]);
    Ok(match bound {
        PathBound::Edges(k) if k < g.n() - 1 => search_paths(g, x, y, &in_l, &anc, k),
        _ => {
            let z: Vec<bool> = (0..g.n())
                .map(|v| anc[v] && !in_l[v] && v != x && v != y)
                .collect();
            super::msep::reachable(g, x, y, &z)
        }
    })
}

/// Inducing path relative to the empty set: every inner node is a collider
/// and an ancestor of an endpoint.
pub fn has_primitive_inducing_path(g: &MixedGraph, x: usize, y: usize) -> Result<bool> {
    has_inducing_path(g, x, y, &NodeSet::new(), PathBound::Unbounded)
}

/// Depth-first search over simple paths of at most `max_edges` edges.
pub(crate) fn search_paths(
    g: &MixedGraph,
    x: usize,
    y: usize,
    in_l: &[bool],
    anc: &[bool],
    max_edges: usize,
) -> bool {
    let mut on_path = vec![false; g.n()];
    on_path[x] = true;
    step(
        g,
        x,
        Mark::NONE,
        y,
        in_l,
        anc,
        max_edges,
        &mut on_path,
        true,
    )
}

#[allow(clippy::too_many_arguments)]
fn step(
    g: &MixedGraph,
    v: usize,
    arrived: Mark,
    y: usize,
    in_l: &[bool],
    anc: &[bool],
    left: usize,
    on_path: &mut [bool],
    first: bool,
) -> bool {
    if v == y {
        return true;
    }
    if left == 0 {
        return false;
    }
    for u in g.neighbors(v) {
        if on_path[u] {
            continue;
        }
        for (mv, mu) in g.simple_edges(v, u) {
            if !first {
                let collider = arrived == Mark::ARROW && mv == Mark::ARROW;
                let ok = if collider { anc[v] } else { in_l[v] };
                if !ok {
                    continue;
                }
            }
            on_path[u] = true;
            let hit = step(g, u, mu, y, in_l, anc, left - 1, on_path, false);
            on_path[u] = false;
            if hit {
                return true;
            }
        }
    }
    false
}
