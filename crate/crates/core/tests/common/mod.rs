//! Brute-force ground truth built from the public graph API only: every
//! acyclic SMCM over a few nodes, filtered by agreement of m-separation
//! statements with a true graph under each dataset's manipulation.
#![allow(dead_code)]

use std::collections::HashMap;

use causal_sat::graph::{m_separated, manipulate, GraphKind, MixedGraph, NodeSet};
use causal_sat::pipeline::DesignSpec;
use causal_sat::summary::{EdgeStatus, EndMark, SummaryGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Random acyclic SMCM on `X0..X{n-1}`: each pair is adjacent with
/// probability `density`, then directed, bidirected or both along a
/// shuffled order.
pub fn random_smcm(rng: &mut impl Rng, n: usize, density: f64) -> MixedGraph {
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

pub fn subset(items: &[usize], bits: u32) -> NodeSet {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| bits >> i & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

fn bits_of(set: &NodeSet) -> u32 {
    set.iter().fold(0, |acc, &v| acc | 1 << v)
}

/// Measured variables and targets of one dataset, as node bitmasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Design {
    pub observed: u32,
    pub targets: u32,
}

impl Design {
    pub fn spec(&self, g: &MixedGraph) -> DesignSpec {
        let names = |mask: u32| {
            (0..g.n())
                .filter(|v| mask >> v & 1 == 1)
                .map(|v| g.name(v).to_string())
                .collect()
        };
        DesignSpec {
            observed: names(self.observed),
            targets: names(self.targets),
        }
    }
}

/// `count` datasets, each measuring at least two variables and manipulating
/// some of them, that together measure every variable.
pub fn random_designs(rng: &mut impl Rng, n: usize, count: usize) -> Vec<Design> {
    loop {
        let designs: Vec<Design> = (0..count)
            .map(|_| {
                let observed = (0..n)
                    .filter(|_| rng.gen_bool(0.7))
                    .fold(0, |a, v| a | 1 << v);
                let targets = (0..n)
                    .filter(|v| observed >> v & 1 == 1 && rng.gen_bool(0.25))
                    .fold(0, |a, v| a | 1 << v);
                Design { observed, targets }
            })
            .collect();
        let covered = designs.iter().fold(0, |a, d| a | d.observed);
        if covered == (1 << n) - 1 && designs.iter().all(|d| d.observed.count_ones() >= 2) {
            return designs;
        }
    }
}

/// Every acyclic SMCM over `n` nodes: six states per pair.
pub fn all_smcms(n: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .collect();
    (0..6usize.pow(pairs.len() as u32))
        .into_par_iter()
        .filter_map(|code| {
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
            (!g.has_directed_cycle()).then_some(g)
        })
        .collect()
}

/// One m-separation statement: a pair and a conditioning set, as bitmasks.
#[derive(Clone, Copy, Debug)]
struct Statement {
    x: usize,
    y: usize,
    z: u32,
}

/// All acyclic SMCMs over `n` nodes with their separation tables, one per
/// target set, computed on first use.
pub struct Enumeration {
    pub n: usize,
    pub graphs: Vec<MixedGraph>,
    statements: Vec<Statement>,
    tables: HashMap<u32, Vec<u64>>,
}

impl Enumeration {
    pub fn new(n: usize) -> Enumeration {
        let mut statements = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                for bits in 0..1u32 << rest.len() {
                    statements.push(Statement {
                        x,
                        y,
                        z: bits_of(&subset(&rest, bits)),
                    });
                }
            }
        }
        assert!(statements.len() <= 64);
        Enumeration {
            n,
            graphs: all_smcms(n),
            statements,
            tables: HashMap::new(),
        }
    }

    /// Bit `i` set iff statement `i` is a separation in `g` manipulated on
    /// `targets`.
    fn table_of(&self, g: &MixedGraph, targets: u32) -> u64 {
        let t: NodeSet = (0..self.n).filter(|v| targets >> v & 1 == 1).collect();
        let m = manipulate(g, &t).unwrap();
        self.statements.iter().enumerate().fold(0, |acc, (i, s)| {
            let z: NodeSet = (0..self.n).filter(|v| s.z >> v & 1 == 1).collect();
            acc | (u64::from(m_separated(&m, s.x, s.y, &z).unwrap()) << i)
        })
    }

    /// Statements expressible over the variables in `observed`.
    fn visible(&self, observed: u32) -> u64 {
        self.statements.iter().enumerate().fold(0, |acc, (i, s)| {
            let inside =
                observed >> s.x & 1 == 1 && observed >> s.y & 1 == 1 && s.z & !observed == 0;
            acc | (u64::from(inside) << i)
        })
    }

    fn ensure(&mut self, targets: u32) {
        if !self.tables.contains_key(&targets) {
            let table = self
                .graphs
                .par_iter()
                .map(|g| self.table_of(g, targets))
                .collect();
            self.tables.insert(targets, table);
        }
    }

    /// Indices of the graphs whose every dataset shows the same
    /// separations as `truth`'s.
    pub fn consistent(&mut self, truth: &MixedGraph, designs: &[Design]) -> Vec<usize> {
        let checks: Vec<(u32, u64, u64)> = designs
            .iter()
            .map(|d| {
                self.ensure(d.targets);
                (
                    d.targets,
                    self.visible(d.observed),
                    self.table_of(truth, d.targets),
                )
            })
            .collect();
        (0..self.graphs.len())
            .filter(|&i| {
                checks
                    .iter()
                    .all(|&(t, mask, want)| (self.tables[&t][i] ^ want) & mask == 0)
            })
            .collect()
    }
}

/// Per pair: solid if every graph has the edge, absent if none does;
/// per endpoint of a surviving edge: the mark shared by every graph with the
/// edge, or a circle.
pub struct BruteSummary {
    pub status: Vec<Vec<EdgeStatus>>,
    pub marks: Vec<Vec<Option<EndMark>>>,
}

pub fn brute_summary(graphs: &[&MixedGraph], n: usize) -> BruteSummary {
    let mut status = vec![vec![EdgeStatus::Absent; n]; n];
    let mut marks = vec![vec![None; n]; n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let with: Vec<&&MixedGraph> = graphs.iter().filter(|g| g.adjacent(x, y)).collect();
            status[x][y] = if with.is_empty() {
                EdgeStatus::Absent
            } else if with.len() == graphs.len() {
                EdgeStatus::Solid
            } else {
                EdgeStatus::Dashed
            };
            if let Some(first) = with.first() {
                let m = EndMark::of(first.mark(x, y));
                let shared = with.iter().all(|g| EndMark::of(g.mark(x, y)) == m);
                marks[x][y] = Some(if shared { m } else { EndMark::Circle });
            }
        }
    }
    BruteSummary { status, marks }
}

/// First disagreement between a learned summary and the brute force, if any.
/// Nodes are matched by name against `names`.
pub fn compare(learned: &SummaryGraph, brute: &BruteSummary, names: &[String]) -> Option<String> {
    let n = names.len();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let (a, b) = (names[x].as_str(), names[y].as_str());
            if learned.status(a, b) != brute.status[x][y] {
                return Some(format!(
                    "{a}-{b}: {:?} vs {:?}",
                    learned.status(a, b),
                    brute.status[x][y]
                ));
            }
            if learned.mark(a, b) != brute.marks[x][y] {
                return Some(format!(
                    "mark at {b} on {a}-{b}: {:?} vs {:?}",
                    learned.mark(a, b),
                    brute.marks[x][y]
                ));
            }
        }
    }
    None
}
