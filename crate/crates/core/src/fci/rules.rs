//! Orientation rules for partial ancestral graphs without selection bias.
//!
//! `g.mark(a, b)` is the mark at `b`. Rules that rely on a triple being a
//! non-collider only fire on triples labelled definite non-colliders.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{DiscriminatingPath, Labels, TripleLabel};
use crate::graph::{Mark, MixedGraph, Path};

const A: Mark = Mark::ARROW;
const T: Mark = Mark::TAIL;
const C: Mark = Mark::CIRCLE;

fn label(labels: &Labels, x: usize, y: usize, z: usize) -> Option<TripleLabel> {
    labels.get(&(x.min(z), y, x.max(z))).copied()
}

fn is_dnc(labels: &Labels, x: usize, y: usize, z: usize) -> bool {
    label(labels, x, y, z) == Some(TripleLabel::Dnc)
}

pub(super) fn orient_colliders(g: &mut MixedGraph, labels: &Labels) {
    for (&(x, y, z), &l) in labels {
        if l == TripleLabel::Collider {
            g.set_mark(x, y, A);
            g.set_mark(z, y, A);
        }
    }
}

/// Nodes reachable from `x` along paths on which every inner node is a
/// collider or the middle of a triangle.
pub(super) fn possible_dsep(g: &MixedGraph, x: usize) -> BTreeSet<usize> {
    let n = g.n();
    let mut seen = vec![vec![false; n]; n];
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::new();
    for v in g.neighbors(x) {
        seen[x][v] = true;
        out.insert(v);
        queue.push_back((x, v));
    }
    while let Some((a, b)) = queue.pop_front() {
        for c in g.neighbors(b) {
            if c == a || c == x || seen[b][c] {
                continue;
            }
            let collider = g.mark(a, b) == A && g.mark(c, b) == A;
            if collider || g.adjacent(a, c) {
                seen[b][c] = true;
                out.insert(c);
                queue.push_back((b, c));
            }
        }
    }
    out
}

/// Applies the arrowhead and tail rules until nothing changes.
pub(super) fn complete(
    g: &mut MixedGraph,
    labels: &Labels,
    sepsets: &BTreeMap<(usize, usize), Vec<usize>>,
) {
    loop {
        let changed = rule1(g, labels)
            | rule2(g)
            | rule3(g, labels)
            | rule4(g, sepsets)
            | rule8(g)
            | rule9(g)
            | rule10(g);
        if !changed {
            break;
        }
    }
}

/// `a *-> b o-* c`, `a` and `c` non-adjacent: `b -> c`.
fn rule1(g: &mut MixedGraph, labels: &Labels) -> bool {
    let mut changed = false;
    let n = g.n();
    for b in 0..n {
        for a in g.neighbors(b).collect::<Vec<_>>() {
            if g.mark(a, b) != A {
                continue;
            }
            for c in g.neighbors(b).collect::<Vec<_>>() {
                if c != a && g.mark(c, b) == C && !g.adjacent(a, c) && is_dnc(labels, a, b, c) {
                    g.set_mark(c, b, T);
                    g.set_mark(b, c, A);
                    changed = true;
                }
            }
        }
    }
    changed
}

/// `a -> b *-> c` or `a *-> b -> c`, with `a *-o c`: `a *-> c`.
fn rule2(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in ordered_edges(g) {
        if g.mark(a, c) != C {
            continue;
        }
        let hit = g.neighbors(a).any(|b| {
            b != c
                && g.adjacent(b, c)
                && ((g.mark(b, a) == T && g.mark(a, b) == A && g.mark(b, c) == A)
                    || (g.mark(a, b) == A && g.mark(c, b) == T && g.mark(b, c) == A))
        });
        if hit {
            g.set_mark(a, c, A);
            changed = true;
        }
    }
    changed
}

/// `a *-> b <-* c`, `a *-o t o-* c`, `a`, `c` non-adjacent, `t *-o b`:
/// `t *-> b`.
fn rule3(g: &mut MixedGraph, labels: &Labels) -> bool {
    let mut changed = false;
    for (t, b) in ordered_edges(g) {
        if g.mark(t, b) != C {
            continue;
        }
        let parents: Vec<usize> = g
            .neighbors(b)
            .filter(|&a| a != t && g.mark(a, b) == A && g.adjacent(a, t) && g.mark(a, t) == C)
            .collect();
        let hit = parents.iter().enumerate().any(|(i, &a)| {
            parents[i + 1..]
                .iter()
                .any(|&c| !g.adjacent(a, c) && g.mark(c, t) == C && is_dnc(labels, a, t, c))
        });
        if hit {
            g.set_mark(t, b, A);
            changed = true;
        }
    }
    changed
}

/// Discriminating path `<w, ..., a, b, c>` with `b o-* c`: `b -> c` when
/// `b` separates `w` from `c`, otherwise `a <-> b <-> c`.
fn rule4(g: &mut MixedGraph, sepsets: &BTreeMap<(usize, usize), Vec<usize>>) -> bool {
    let mut changed = false;
    for (b, c) in ordered_edges(g) {
        if g.mark(c, b) != C {
            continue;
        }
        let Some(path) = discriminating_from(g, b, c).into_iter().next() else {
            continue;
        };
        let w = path[0];
        let a = path[path.len() - 3];
        let in_sep = sepsets
            .get(&(w.min(c), w.max(c)))
            .is_some_and(|s| s.contains(&b));
        if in_sep {
            g.set_mark(c, b, T);
            g.set_mark(b, c, A);
        } else {
            g.set_mark(a, b, A);
            g.set_mark(b, a, A);
            g.set_mark(c, b, A);
            g.set_mark(b, c, A);
        }
        changed = true;
    }
    changed
}

/// `a -> b -> c` or `a -o b -> c`, with `a o-> c`: `a -> c`.
fn rule8(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in ordered_edges(g) {
        if !(g.mark(a, c) == A && g.mark(c, a) == C) {
            continue;
        }
        let hit = g.neighbors(a).any(|b| {
            b != c
                && g.adjacent(b, c)
                && g.mark(c, b) == T
                && g.mark(b, c) == A
                && g.mark(b, a) == T
                && (g.mark(a, b) == A || g.mark(a, b) == C)
        });
        if hit {
            g.set_mark(c, a, T);
            changed = true;
        }
    }
    changed
}

/// `a o-> c` and an uncovered potentially directed path `<a, b, ..., c>`
/// with `b`, `c` non-adjacent: `a -> c`.
fn rule9(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in ordered_edges(g) {
        if !(g.mark(a, c) == A && g.mark(c, a) == C) {
            continue;
        }
        let hit = g
            .neighbors(a)
            .any(|b| b != c && !g.adjacent(b, c) && uncovered_pd_path(g, a, b, c));
        if hit {
            g.set_mark(c, a, T);
            changed = true;
        }
    }
    changed
}

/// `a o-> c`, `b -> c <- d`, uncovered potentially directed paths from
/// `a` to `b` and to `d` whose second nodes are distinct and non-adjacent:
/// `a -> c`.
fn rule10(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in ordered_edges(g) {
        if !(g.mark(a, c) == A && g.mark(c, a) == C) {
            continue;
        }
        let parents: Vec<usize> = g
            .neighbors(c)
            .filter(|&p| p != a && g.mark(c, p) == T && g.mark(p, c) == A)
            .collect();
        if parents.len() < 2 {
            continue;
        }
        let starts = |target: usize| -> Vec<usize> {
            g.neighbors(a)
                .filter(|&m| m != c && uncovered_pd_path(g, a, m, target))
                .collect()
        };
        let firsts: Vec<Vec<usize>> = parents.iter().map(|&p| starts(p)).collect();
        let hit = (0..parents.len()).any(|i| {
            (i + 1..parents.len()).any(|j| {
                firsts[i]
                    .iter()
                    .any(|&m| firsts[j].iter().any(|&w| m != w && !g.adjacent(m, w)))
            })
        });
        if hit {
            g.set_mark(c, a, T);
            changed = true;
        }
    }
    changed
}

fn ordered_edges(g: &MixedGraph) -> Vec<(usize, usize)> {
    g.adjacent_pairs()
        .flat_map(|(x, y)| [(x, y), (y, x)])
        .collect()
}

/// The edge `u - v` can be oriented `u -> v` consistently with its marks.
fn pd_edge(g: &MixedGraph, u: usize, v: usize) -> bool {
    g.mark(v, u) != A && g.mark(u, v) != T
}

/// Is there an uncovered potentially directed path from `a` to `target`
/// whose second node is `first`?
fn uncovered_pd_path(g: &MixedGraph, a: usize, first: usize, target: usize) -> bool {
    if !pd_edge(g, a, first) {
        return false;
    }
    if first == target {
        return true;
    }
    let mut on_path = vec![false; g.n()];
    on_path[a] = true;
    on_path[first] = true;
    extend_uncovered(g, a, first, target, &mut on_path)
}

fn extend_uncovered(
    g: &MixedGraph,
    prev: usize,
    cur: usize,
    target: usize,
    on_path: &mut [bool],
) -> bool {
    for next in g.neighbors(cur).collect::<Vec<_>>() {
        if on_path[next] || g.adjacent(prev, next) || !pd_edge(g, cur, next) {
            continue;
        }
        if next == target {
            return true;
        }
        on_path[next] = true;
        let found = extend_uncovered(g, cur, next, target, on_path);
        on_path[next] = false;
        if found {
            return true;
        }
    }
    false
}

/// Every discriminating path `<w, ..., a, b, c>` for `b` ending in `c`.
fn discriminating_from(g: &MixedGraph, b: usize, c: usize) -> Vec<Path> {
    let mut found = Vec::new();
    for a in g.neighbors(b) {
        // a is a collider on the path and a parent of c
        if a == c || g.mark(b, a) != A || g.mark(c, a) != T || g.mark(a, c) != A {
            continue;
        }
        let mut rev = vec![c, b, a];
        extend_discriminating(g, c, &mut rev, &mut found);
    }
    found
}

/// `rev` holds the path backwards from `c`; its last node is a collider
/// whose incoming arrowhead from the next predecessor is still required.
fn extend_discriminating(g: &MixedGraph, c: usize, rev: &mut Path, found: &mut Vec<Path>) {
    let cur = *rev.last().expect("path is non-empty");
    for p in g.neighbors(cur).collect::<Vec<_>>() {
        if rev.contains(&p) || g.mark(p, cur) != A {
            continue;
        }
        if !g.adjacent(p, c) {
            let mut path = rev.clone();
            path.push(p);
            path.reverse();
            found.push(path);
        } else if g.mark(c, p) == T && g.mark(p, c) == A && g.mark(cur, p) == A {
            rev.push(p);
            extend_discriminating(g, c, rev, found);
            rev.pop();
        }
    }
}

/// Discriminating paths of the final graph whose middle node has a
/// definite status.
pub(super) fn discriminating_paths(g: &MixedGraph) -> Vec<DiscriminatingPath> {
    let mut out = Vec::new();
    for (b, c) in ordered_edges(g) {
        for path in discriminating_from(g, b, c) {
            let a = path[path.len() - 3];
            let label = if g.mark(c, b) == T || g.mark(a, b) == T {
                TripleLabel::Dnc
            } else if g.mark(c, b) == A && g.mark(a, b) == A {
                TripleLabel::Collider
            } else {
                continue;
            };
            out.push(DiscriminatingPath { path, label });
        }
    }
    out.sort_by(|x, y| x.path.cmp(&y.path));
    out
}
