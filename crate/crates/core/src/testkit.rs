//! Shared fixtures for unit tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{m_separated, GraphKind, MixedGraph, NodeSet};

/// Random acyclic SMCM: every pair independently gets one of the six edge
/// states, directions following a shuffled order.
pub(crate) fn random_smcm(rng: &mut impl Rng, n: usize, density: f64) -> MixedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = MixedGraph::with_size(n, GraphKind::Smcm);
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(density) {
                continue;
            }
            let (a, b) = (order[i], order[j]);
            match rng.gen_range(0..3) {
                0 => g.add_directed(a, b),
                1 => g.add_bidirected(a, b),
                _ => {
                    g.add_directed(a, b);
                    g.add_bidirected(a, b);
                }
            }
        }
    }
    g
}

pub(crate) fn subset(items: &[usize], bits: u32) -> NodeSet {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| bits >> i & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// m-separation of every pair of `nodes` given every subset of the rest.
pub(crate) fn separation_table(g: &MixedGraph, nodes: &[usize]) -> Vec<bool> {
    let mut table = Vec::new();
    for (a, &x) in nodes.iter().enumerate() {
        for &y in &nodes[a + 1..] {
            let rest: Vec<usize> = nodes
                .iter()
                .copied()
                .filter(|&v| v != x && v != y)
                .collect();
            for bits in 0u32..1 << rest.len() {
                table.push(m_separated(g, x, y, &subset(&rest, bits)).unwrap());
            }
        }
    }
    table
}

/// Every acyclic SMCM over `n` nodes: six states per pair.
pub(crate) fn all_smcms(n: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .collect();
    let mut out = Vec::new();
    for code in 0..6usize.pow(pairs.len() as u32) {
        let mut g = MixedGraph::with_size(n, GraphKind::Smcm);
        let mut c = code;
        for &(x, y) in &pairs {
            match c % 6 {
                1 => g.add_directed(x, y),
                2 => g.add_directed(y, x),
                3 => g.add_bidirected(x, y),
                4 => {
                    g.add_directed(x, y);
                    g.add_bidirected(x, y);
                }
                5 => {
                    g.add_directed(y, x);
                    g.add_bidirected(x, y);
                }
                _ => {}
            }
            c /= 6;
        }
        if !g.has_directed_cycle() {
            out.push(g);
        }
    }
    out
}

/// Measured variables and intervention targets of one dataset.
#[derive(Clone, Debug)]
pub(crate) struct Design {
    pub observed: Vec<usize>,
    pub targets: NodeSet,
}

/// Random designs over `n` variables whose measured sets cover all of them.
pub(crate) fn random_designs(rng: &mut impl Rng, n: usize, count: usize) -> Vec<Design> {
    loop {
        let designs: Vec<Design> = (0..count)
            .map(|_| {
                let mut observed: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
                while observed.len() < 2 {
                    observed = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
                }
                let targets = observed
                    .iter()
                    .copied()
                    .filter(|_| rng.gen_bool(0.25))
                    .collect();
                Design { observed, targets }
            })
            .collect();
        if (0..n).all(|v| designs.iter().any(|d| d.observed.contains(&v))) {
            return designs;
        }
    }
}

/// The consistency test of a candidate SMCM: each dataset's manipulated
/// marginal has exactly the true separations among measured variables.
pub(crate) fn consistent(candidate: &MixedGraph, truth: &MixedGraph, designs: &[Design]) -> bool {
    designs.iter().all(|d| {
        let c = crate::graph::manipulate(candidate, &d.targets).unwrap();
        let t = crate::graph::manipulate(truth, &d.targets).unwrap();
        separation_table(&c, &d.observed) == separation_table(&t, &d.observed)
    })
}

/// Oracle search results for every design, aligned to the truth's nodes.
pub(crate) fn oracle_observations(
    truth: &MixedGraph,
    designs: &[Design],
) -> Vec<crate::encode::Observation> {
    designs
        .iter()
        .map(|d| {
            let g = crate::graph::manipulate(truth, &d.targets).unwrap();
            let names: Vec<String> = d
                .observed
                .iter()
                .map(|&v| truth.name(v).to_string())
                .collect();
            let oracle = crate::stats::Oracle::new(g, d.observed.clone()).unwrap();
            let cfg = crate::fci::FciConfig {
                alpha: 0.5,
                max_k: truth.n(),
                pds: true,
            };
            let fci = crate::fci::run_fci(&oracle, &names, &cfg).unwrap();
            crate::encode::Observation {
                fci,
                vars: d.observed.clone(),
                targets: d.targets.clone(),
            }
        })
        .collect()
}
