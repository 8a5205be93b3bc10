//! Partial ancestral graph learning with conservative collider orientation.
//!
//! The skeleton search removes an edge at the first conditioning set whose
//! p-value exceeds `alpha`; every test performed lands in a [`PValueCache`]
//! so later stages can read the largest p-value seen for each pair.

mod rules;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::graph::{GraphKind, Mark, MixedGraph, Path};
use crate::stats::{CiTest, PValueCache};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FciConfig {
    pub alpha: f64,
    /// Largest conditioning set tried.
    pub max_k: usize,
    /// Run the Possible-D-Sep stage.
    pub pds: bool,
}

impl Default for FciConfig {
    fn default() -> Self {
        FciConfig {
            alpha: 0.1,
            max_k: 5,
            pds: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleLabel {
    Collider,
    /// Definite non-collider.
    Dnc,
    /// Some separating sets contain the middle node and some do not.
    Ambiguous,
}

/// An unshielded triple `x - y - z` with `x < z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub label: TripleLabel,
}

/// A discriminating path `<w, ..., a, b, c>` for `b`, with the status of
/// `b` as found in the final graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatingPath {
    pub path: Path,
    pub label: TripleLabel,
}

impl DiscriminatingPath {
    /// The node whose status the path decides.
    pub fn middle(&self) -> usize {
        self.path[self.path.len() - 2]
    }
    pub fn first(&self) -> usize {
        self.path[0]
    }
    pub fn last(&self) -> usize {
        self.path[self.path.len() - 1]
    }
}

#[derive(Clone, Debug)]
pub struct FciResult {
    pub pag: MixedGraph,
    /// Separating set of every non-adjacent pair, keyed `(min, max)`.
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub triples: Vec<Triple>,
    pub discriminating: Vec<DiscriminatingPath>,
    pub cache: PValueCache,
}

impl FciResult {
    /// Largest p-value of any test run on the pair.
    pub fn max_p(&self, x: usize, y: usize) -> Option<f64> {
        self.cache.max_p(0, x, y).map(|(p, _)| p)
    }

    pub fn sepset(&self, x: usize, y: usize) -> Option<&[usize]> {
        self.sepsets.get(&(x.min(y), x.max(y))).map(Vec::as_slice)
    }

    pub fn triple_label(&self, x: usize, y: usize, z: usize) -> Option<TripleLabel> {
        let (x, z) = (x.min(z), x.max(z));
        self.triples
            .iter()
            .find(|t| t.x == x && t.y == y && t.z == z)
            .map(|t| t.label)
    }
}

/// Runs the search on the variables answered by `test`, named by `names`.
pub fn run_fci(test: &dyn CiTest, names: &[String], config: &FciConfig) -> Result<FciResult> {
    let n = names.len();
    if n < 2 {
        return input("FCI needs at least two variables");
    }
    if test.n_vars() != n {
        return input(format!(
            "test covers {} variables but {n} names were given",
            test.n_vars()
        ));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return input(format!("alpha must lie in (0, 1), got {}", config.alpha));
    }
    let mut run = Run {
        test,
        alpha: config.alpha,
        max_k: config.max_k,
        cache: PValueCache::new(),
        sepsets: BTreeMap::new(),
        adj: vec![vec![true; n]; n],
    };
    for (x, row) in run.adj.iter_mut().enumerate() {
        row[x] = false;
    }
    run.skeleton()?;
    let mut labels = run.label_triples()?;
    if config.pds {
        let mut g = run.circle_graph(names);
        rules::orient_colliders(&mut g, &labels);
        if run.possible_dsep(&g)? {
            labels = run.label_triples()?;
        }
    }
    let mut pag = run.circle_graph(names);
    rules::orient_colliders(&mut pag, &labels);
    rules::complete(&mut pag, &labels, &run.sepsets);
    let discriminating = rules::discriminating_paths(&pag);
    let mut triples: Vec<Triple> = labels
        .into_iter()
        .map(|((x, y, z), label)| Triple { x, y, z, label })
        .collect();
    triples.sort_by_key(|t| (t.y, t.x, t.z));
    Ok(FciResult {
        pag,
        sepsets: run.sepsets,
        triples,
        discriminating,
        cache: run.cache,
    })
}

pub(crate) type Labels = HashMap<(usize, usize, usize), TripleLabel>;

struct Run<'a> {
    test: &'a dyn CiTest,
    alpha: f64,
    max_k: usize,
    cache: PValueCache,
    sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    adj: Vec<Vec<bool>>,
}

impl Run<'_> {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.adj[x][v]).collect()
    }

    /// Tests `x ⊥ y | z`; a skipped test counts as dependence.
    fn independent(&mut self, x: usize, y: usize, z: &[usize]) -> Result<bool> {
        let p = match self.cache.get(0, x, y, z) {
            Some(p) => Some(p),
            None => match self.test.p_value(x, y, z)? {
                Some(p) => Some(self.cache.insert(0, x, y, z, p)),
                None => None,
            },
        };
        Ok(p.is_some_and(|p| p > self.alpha))
    }

    fn remove(&mut self, x: usize, y: usize, sep: Vec<usize>) {
        self.adj[x][y] = false;
        self.adj[y][x] = false;
        self.sepsets.insert((x.min(y), x.max(y)), sep);
    }

    /// Order-independent adjacency search: neighbourhoods are frozen at the
    /// start of each conditioning-set size.
    fn skeleton(&mut self) -> Result<()> {
        let n = self.n();
        for depth in 0..=self.max_k {
            let frozen: Vec<Vec<usize>> = (0..n).map(|x| self.neighbors(x)).collect();
            let mut any = false;
            for x in 0..n {
                for y in 0..n {
                    if x == y || !self.adj[x][y] {
                        continue;
                    }
                    let others: Vec<usize> =
                        frozen[x].iter().copied().filter(|&v| v != y).collect();
                    if others.len() < depth {
                        continue;
                    }
                    any = true;
                    for s in Subsets::new(&others, depth) {
                        if self.independent(x, y, &s)? {
                            self.remove(x, y, s);
                            break;
                        }
                    }
                }
            }
            if !any {
                break;
            }
        }
        Ok(())
    }

    /// Labels every unshielded triple by checking which separating sets,
    /// among subsets of either endpoint's neighbours, contain the middle.
    fn label_triples(&mut self) -> Result<Labels> {
        let n = self.n();
        let mut labels = Labels::new();
        for x in 0..n {
            for z in x + 1..n {
                if self.adj[x][z] {
                    continue;
                }
                let middles: Vec<usize> = (0..n)
                    .filter(|&y| self.adj[x][y] && self.adj[z][y])
                    .collect();
                if middles.is_empty() {
                    continue;
                }
                let mut seps: Vec<Vec<usize>> = Vec::new();
                if let Some(s) = self.sepsets.get(&(x, z)) {
                    seps.push(s.clone());
                }
                for (a, b) in [(x, z), (z, x)] {
                    let pool: Vec<usize> =
                        self.neighbors(a).into_iter().filter(|&v| v != b).collect();
                    for k in 0..=self.max_k.min(pool.len()) {
                        for s in Subsets::new(&pool, k) {
                            if self.independent(x, z, &s)? {
                                seps.push(s);
                            }
                        }
                    }
                }
                for y in middles {
                    let with = seps.iter().filter(|s| s.contains(&y)).count();
                    let label = if with == seps.len() {
                        TripleLabel::Dnc
                    } else if with == 0 {
                        TripleLabel::Collider
                    } else {
                        TripleLabel::Ambiguous
                    };
                    labels.insert((x, y, z), label);
                }
            }
        }
        Ok(labels)
    }

    fn circle_graph(&self, names: &[String]) -> MixedGraph {
        let mut g = MixedGraph::new(names.iter().cloned(), GraphKind::Pag);
        for x in 0..self.n() {
            for y in x + 1..self.n() {
                if self.adj[x][y] {
                    g.set_edge(x, y, Mark::CIRCLE, Mark::CIRCLE);
                }
            }
        }
        g
    }

    /// Retests each remaining edge given subsets of Possible-D-Sep of
    /// either endpoint. Returns whether any edge was removed.
    fn possible_dsep(&mut self, g: &MixedGraph) -> Result<bool> {
        let n = self.n();
        let mut removed = false;
        for x in 0..n {
            let pds = rules::possible_dsep(g, x);
            for y in 0..n {
                if x == y || !self.adj[x][y] {
                    continue;
                }
                let pool: Vec<usize> = pds.iter().copied().filter(|&v| v != y).collect();
                'sizes: for k in 1..=self.max_k.min(pool.len()) {
                    for s in Subsets::new(&pool, k) {
                        if self.independent(x, y, &s)? {
                            self.remove(x, y, s);
                            removed = true;
                            break 'sizes;
                        }
                    }
                }
            }
        }
        Ok(removed)
    }
}

/// All size-`k` subsets of `items` in lexicographic index order.
pub(crate) struct Subsets<'a> {
    items: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Subsets<'a> {
    pub(crate) fn new(items: &'a [usize], k: usize) -> Self {
        Subsets {
            items,
            idx: (0..k).collect(),
            done: k > items.len(),
        }
    }
}

impl Iterator for Subsets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.iter().map(|&i| self.items[i]).collect();
        let (k, n) = (self.idx.len(), self.items.len());
        match (0..k).rev().find(|&i| self.idx[i] < n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}
