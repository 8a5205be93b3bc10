use super::{msep, set_to_mask, GraphKind, Mark, MixedGraph, NodeSet};
use crate::error::{input, Result};
use crate::Error;

/// Hard intervention on `targets`: every edge component with an arrowhead at
/// a target is removed.
///
/// Only defined for DAGs and SMCMs. The effect of an intervention on a MAG
/// is not determined by the MAG alone.
pub fn manipulate(s: &MixedGraph, targets: &NodeSet) -> Result<MixedGraph> {
    if !matches!(s.kind(), GraphKind::Dag | GraphKind::Smcm) {
        return Err(Error::Precondition(format!(
            "manipulation is only defined on DAGs and SMCMs, got {:?}",
            s.kind()
        )));
    }
    for &t in targets {
        s.check_node(t)?;
    }
    let hit = set_to_mask(targets, s.n());
    let mut out = s.clone();
    for (x, y) in s.adjacent_pairs() {
        let kept: Vec<(Mark, Mark)> = s
            .simple_edges(x, y)
            .into_iter()
            .filter(|&(mx, my)| !(hit[x] && mx == Mark::ARROW) && !(hit[y] && my == Mark::ARROW))
            .collect();
        out.remove_edge(x, y);
        for (mx, my) in kept {
            match (mx, my) {
                (Mark::TAIL, Mark::ARROW) => out.add_directed(x, y),
                (Mark::ARROW, Mark::TAIL) => out.add_directed(y, x),
                _ => out.add_bidirected(x, y),
            }
        }
    }
    Ok(out)
}

/// The MAG over the same nodes entailing the same m-separations.
///
/// Every pair joined by a primitive inducing path becomes adjacent and is
/// oriented by ancestry, which also turns a bidirected edge into a directed
/// one when it would otherwise close an almost directed cycle.
pub fn smcm_to_mag(s: &MixedGraph) -> Result<MixedGraph> {
    if s.has_directed_cycle() {
        return input("graph has a directed cycle");
    }
    let n = s.n();
    let all: Vec<usize> = (0..n).collect();
    orient_by_ancestry(s, &all, &vec![false; n])
}

/// Marginal MAG `m[latent]` over the remaining nodes, in their original order.
pub fn marginalize_mag(m: &MixedGraph, latent: &NodeSet) -> Result<MixedGraph> {
    if m.kind() != GraphKind::Mag {
        return Err(Error::Precondition(format!(
            "expected a MAG, got {:?}",
            m.kind()
        )));
    }
    m.validate()?;
    marginal(m, latent)
}

fn marginal(g: &MixedGraph, latent: &NodeSet) -> Result<MixedGraph> {
    for &v in latent {
        g.check_node(v)?;
    }
    let in_l = set_to_mask(latent, g.n());
    let keep: Vec<usize> = (0..g.n()).filter(|&v| !in_l[v]).collect();
    orient_by_ancestry(g, &keep, &in_l)
}

fn orient_by_ancestry(g: &MixedGraph, keep: &[usize], in_l: &[bool]) -> Result<MixedGraph> {
    let n = g.n();
    let anc = g.ancestor_matrix();
    let mut out = MixedGraph::new(keep.iter().map(|&v| g.name(v).to_string()), GraphKind::Mag);
    for (a, &x) in keep.iter().enumerate() {
        for (b, &y) in keep.iter().enumerate().skip(a + 1) {
            let joined = g.adjacent(x, y) || {
                let anc_xy: Vec<bool> = (0..n).map(|v| anc[v][x] || anc[v][y]).collect();
                let z: Vec<bool> = (0..n)
                    .map(|v| anc_xy[v] && !in_l[v] && v != x && v != y)
                    .collect();
                msep::reachable(g, x, y, &z)
            };
            if !joined {
                continue;
            }
            if anc[x][y] {
                out.set_edge(a, b, Mark::TAIL, Mark::ARROW);
            } else if anc[y][x] {
                out.set_edge(a, b, Mark::ARROW, Mark::TAIL);
            } else {
                out.set_edge(a, b, Mark::ARROW, Mark::ARROW);
            }
        }
    }
    Ok(out)
}

/// Latent projection of a DAG or SMCM onto the nodes outside `latent`.
///
/// `x -> y` survives when a directed path from `x` to `y` passes only through
/// latent nodes; `x <-> y` appears when the two share a latent ancestor
/// reachable through latents only, or a bidirected edge joins their
/// latent-only ancestries.
pub fn latent_projection(s: &MixedGraph, latent: &NodeSet) -> Result<MixedGraph> {
    if !matches!(s.kind(), GraphKind::Dag | GraphKind::Smcm) {
        return Err(Error::Precondition(format!(
            "latent projection needs a DAG or SMCM, got {:?}",
            s.kind()
        )));
    }
    for &v in latent {
        s.check_node(v)?;
    }
    let n = s.n();
    let in_l = set_to_mask(latent, n);
    let keep: Vec<usize> = (0..n).filter(|&v| !in_l[v]).collect();
    // hidden_anc[v]: v itself plus latents with a directed path into v through latents only
    let hidden_anc: Vec<Vec<bool>> = (0..n)
        .map(|v| {
            let mut seen = vec![false; n];
            seen[v] = true;
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                for p in s.parents(u) {
                    if in_l[p] && !seen[p] {
                        seen[p] = true;
                        stack.push(p);
                    }
                }
            }
            seen
        })
        .collect();
    let mut out = MixedGraph::new(keep.iter().map(|&v| s.name(v).to_string()), GraphKind::Smcm);
    for (a, &x) in keep.iter().enumerate() {
        for (b, &y) in keep.iter().enumerate() {
            if a == b {
                continue;
            }
            let directed = (0..n).any(|w| hidden_anc[y][w] && s.is_parent(x, w));
            if directed {
                out.add_directed(a, b);
            }
        }
    }
    for (a, &x) in keep.iter().enumerate() {
        for (b, &y) in keep.iter().enumerate().skip(a + 1) {
            let common = (0..n).any(|l| in_l[l] && hidden_anc[x][l] && hidden_anc[y][l]);
            let joined = common
                || (0..n).any(|u| {
                    hidden_anc[x][u]
                        && (0..n).any(|w| hidden_anc[y][w] && u != w && s.is_bidirected(u, w))
                });
            if joined {
                out.add_bidirected(a, b);
            }
        }
    }
    Ok(out)
}
