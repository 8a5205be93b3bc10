use crate::graph::{Mark, MixedGraph, NodeSet, Path};

/// Which paths of the search graph are worth encoding.
#[derive(Clone, Copy, Debug)]
pub enum PathMode<'a> {
    /// Possibly inducing under the given interventions: no inner node is
    /// manipulated and a manipulated endpoint has no fixed arrowhead on its
    /// path edge.
    Inducing(&'a NodeSet),
    /// Possibly directed from the first node to the last under the given
    /// interventions: no fixed arrowhead at a node's outgoing edge and no
    /// manipulated node after the first.
    Ancestral(&'a NodeSet),
}

/// Simple paths from `x` to `y` with at most `max_edges` edges (`None`
/// for no bound) that the fixed marks of `h` do not already rule out.
/// Paths come out in depth-first order over increasing node index.
pub fn enumerate_possible_paths(
    h: &MixedGraph,
    x: usize,
    y: usize,
    mode: PathMode,
    max_edges: Option<usize>,
) -> Vec<Path> {
    let mut out = Vec::new();
    if x == y || x >= h.n() || y >= h.n() {
        return out;
    }
    let limit = max_edges.unwrap_or(h.n() - 1).min(h.n() - 1);
    if limit == 0 {
        return out;
    }
    let mut path = vec![x];
    let mut on = vec![false; h.n()];
    on[x] = true;
    extend(h, y, mode, limit, &mut path, &mut on, &mut out);
    out
}

/// Whether stepping from the end of `path` to `next` keeps the path possible.
fn step_ok(h: &MixedGraph, y: usize, mode: PathMode, path: &[usize], next: usize) -> bool {
    let cur = *path.last().expect("path starts at x");
    match mode {
        PathMode::Inducing(targets) => {
            if next != y && targets.contains(&next) {
                return false;
            }
            if path.len() == 1 && targets.contains(&cur) && h.mark(next, cur) == Mark::ARROW {
                return false;
            }
            !(next == y && targets.contains(&y) && h.mark(cur, y) == Mark::ARROW)
        }
        PathMode::Ancestral(targets) => {
            !targets.contains(&next) && h.mark(next, cur) != Mark::ARROW
        }
    }
}

fn extend(
    h: &MixedGraph,
    y: usize,
    mode: PathMode,
    limit: usize,
    path: &mut Path,
    on: &mut [bool],
    out: &mut Vec<Path>,
) {
    let cur = *path.last().expect("path starts at x");
    for next in h.neighbors(cur).collect::<Vec<_>>() {
        if on[next] || !step_ok(h, y, mode, path, next) {
            continue;
        }
        path.push(next);
        if next == y {
            out.push(path.clone());
        } else if path.len() <= limit {
            on[next] = true;
            extend(h, y, mode, limit, path, on, out);
            on[next] = false;
        }
        path.pop();
    }
}
