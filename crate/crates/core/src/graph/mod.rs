//! Mixed causal graphs: DAGs, semi-Markov causal models, maximal ancestral
//! graphs, partial ancestral graphs and the search graph all share one
//! representation, an `n x n` table of endpoint marks.
//!
//! `mark(x, y)` is the mark *at `y`* on the edge between `x` and `y`. A pair
//! is adjacent iff both of its endpoint marks are non-empty. In an SMCM a
//! single endpoint can carry both a tail and an arrowhead, which encodes a
//! directed edge plus a bidirected edge between the same two nodes.

mod io;
mod msep;
mod paths;
mod transform;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

pub(crate) use io::escape;
pub use io::{EdgeRecord, GraphDoc, MarkName};
pub use msep::{m_connected, m_separated};
pub use paths::{has_inducing_path, has_primitive_inducing_path, PathBound};
pub use transform::{latent_projection, manipulate, marginalize_mag, smcm_to_mag};

/// Node identifiers are indices into [`MixedGraph::names`].
pub type NodeSet = BTreeSet<usize>;

/// A simple path: distinct node indices, consecutive ones adjacent.
pub type Path = Vec<usize>;

/// Endpoint mark. `ARROW | TAIL` is only legal in SMCMs and search graphs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Mark(u8);

impl Mark {
    pub const NONE: Mark = Mark(0);
    pub const ARROW: Mark = Mark(1);
    pub const TAIL: Mark = Mark(2);
    pub const ARROW_TAIL: Mark = Mark(3);
    pub const CIRCLE: Mark = Mark(4);

    #[inline]
    pub fn is_none(self) -> bool {
        self.0 == 0
    }
    #[inline]
    pub fn has_arrow(self) -> bool {
        self.0 & 1 != 0
    }
    #[inline]
    pub fn has_tail(self) -> bool {
        self.0 & 2 != 0
    }
    #[inline]
    pub fn is_circle(self) -> bool {
        self.0 & 4 != 0
    }
    #[inline]
    pub fn union(self, other: Mark) -> Mark {
        Mark(self.0 | other.0)
    }
    /// Arrow or tail, exactly one.
    pub fn is_single(self) -> bool {
        self == Mark::ARROW || self == Mark::TAIL
    }
}

impl fmt::Debug for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "none",
            1 => "arrow",
            2 => "tail",
            3 => "arrow+tail",
            4 => "circle",
            _ => "invalid",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Smcm,
    Mag,
    Pag,
    Search,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    names: Vec<String>,
    kind: GraphKind,
    marks: Vec<Mark>,
}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[", self.kind)?;
        let mut first = true;
        for (x, y) in self.adjacent_pairs() {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(
                f,
                "{} {:?}-{:?} {}",
                self.names[x],
                self.mark(y, x),
                self.mark(x, y),
                self.names[y]
            )?;
        }
        write!(f, "]")
    }
}

impl MixedGraph {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, kind: GraphKind) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let n = names.len();
        MixedGraph {
            names,
            kind,
            marks: vec![Mark::NONE; n * n],
        }
    }

    /// Graph with nodes named `X0..X{n-1}`.
    pub fn with_size(n: usize, kind: GraphKind) -> Self {
        Self::new((0..n).map(|i| format!("X{i}")), kind)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| crate::Error::Input(format!("unknown node '{name}'")))
    }

    pub fn check_node(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            return input(format!("node index {x} out of range (n = {})", self.n()));
        }
        Ok(())
    }

    /// Mark at `y` on the edge between `x` and `y`.
    #[inline]
    pub fn mark(&self, x: usize, y: usize) -> Mark {
        self.marks[x * self.n() + y]
    }

    #[inline]
    pub fn adjacent(&self, x: usize, y: usize) -> bool {
        x != y && !self.mark(x, y).is_none() && !self.mark(y, x).is_none()
    }

    /// Overwrite both endpoint marks of the pair. Passing `NONE` for both removes the edge.
    pub fn set_edge(&mut self, x: usize, y: usize, at_x: Mark, at_y: Mark) {
        assert_ne!(x, y, "self loops are not representable");
        let n = self.n();
        self.marks[y * n + x] = at_x;
        self.marks[x * n + y] = at_y;
    }

    /// Set only the mark at `y` on an existing edge.
    pub fn set_mark(&mut self, x: usize, y: usize, at_y: Mark) {
        let n = self.n();
        self.marks[x * n + y] = at_y;
    }

    pub fn remove_edge(&mut self, x: usize, y: usize) {
        self.set_edge(x, y, Mark::NONE, Mark::NONE);
    }

    /// Adds `x -> y`, merging with an existing bidirected edge into a double edge.
    pub fn add_directed(&mut self, x: usize, y: usize) {
        let (mx, my) = (self.mark(y, x), self.mark(x, y));
        if mx == Mark::ARROW && my == Mark::ARROW {
            self.set_edge(x, y, Mark::ARROW_TAIL, Mark::ARROW);
        } else {
            self.set_edge(x, y, Mark::TAIL, Mark::ARROW);
        }
    }

    /// Adds `x <-> y`, merging with an existing directed edge into a double edge.
    pub fn add_bidirected(&mut self, x: usize, y: usize) {
        let (mx, my) = (self.mark(y, x), self.mark(x, y));
        match (mx, my) {
            (Mark::TAIL, Mark::ARROW) => self.set_edge(x, y, Mark::ARROW_TAIL, Mark::ARROW),
            (Mark::ARROW, Mark::TAIL) => self.set_edge(x, y, Mark::ARROW, Mark::ARROW_TAIL),
            (Mark::ARROW_TAIL, _) | (_, Mark::ARROW_TAIL) => {}
            _ => self.set_edge(x, y, Mark::ARROW, Mark::ARROW),
        }
    }

    /// The single-mark edges that make up the (possibly double) edge between
    /// `x` and `y`, as `(mark at x, mark at y)`.
    pub fn simple_edges(&self, x: usize, y: usize) -> Vec<(Mark, Mark)> {
        if !self.adjacent(x, y) {
            return Vec::new();
        }
        let (mx, my) = (self.mark(y, x), self.mark(x, y));
        if mx == Mark::ARROW_TAIL {
            vec![(Mark::TAIL, my), (Mark::ARROW, my)]
        } else if my == Mark::ARROW_TAIL {
            vec![(mx, Mark::TAIL), (mx, Mark::ARROW)]
        } else {
            vec![(mx, my)]
        }
    }

    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&y| self.adjacent(x, y))
    }

    /// All adjacent pairs `(x, y)` with `x < y`.
    pub fn adjacent_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n)
            .flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
            .filter(move |&(x, y)| self.adjacent(x, y))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacent_pairs().count()
    }

    /// `x -> y` is present (possibly as part of a double edge).
    #[inline]
    pub fn is_parent(&self, x: usize, y: usize) -> bool {
        self.adjacent(x, y)
            && self.mark(y, x).has_tail()
            && !self.mark(y, x).is_circle()
            && self.mark(x, y).has_arrow()
    }

    /// A bidirected component is present between `x` and `y`.
    pub fn is_bidirected(&self, x: usize, y: usize) -> bool {
        self.simple_edges(x, y)
            .iter()
            .any(|&(a, b)| a == Mark::ARROW && b == Mark::ARROW)
    }

    pub fn parents(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&p| self.is_parent(p, x))
    }

    pub fn children(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&c| self.is_parent(x, c))
    }

    /// Reflexive-transitive closure of the parent relation, as a membership vector.
    pub fn ancestor_mask(&self, targets: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for t in targets {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
        while let Some(v) = queue.pop_front() {
            for p in 0..self.n() {
                if !seen[p] && self.is_parent(p, v) {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// `An(x)`, including `x` itself.
    pub fn ancestors(&self, x: usize) -> Result<NodeSet> {
        self.check_node(x)?;
        Ok(mask_to_set(&self.ancestor_mask([x])))
    }

    /// Full ancestor relation: `m[a][b]` iff `a ∈ An(b)`.
    pub fn ancestor_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        let mut m = vec![vec![false; n]; n];
        for b in 0..n {
            let mask = self.ancestor_mask([b]);
            for a in 0..n {
                m[a][b] = mask[a];
            }
        }
        m
    }

    pub fn has_directed_cycle(&self) -> bool {
        // Kahn's algorithm over the directed components
        let n = self.n();
        let mut indeg = vec![0usize; n];
        for x in 0..n {
            for y in 0..n {
                if self.is_parent(x, y) {
                    indeg[y] += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for c in 0..n {
                if self.is_parent(v, c) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        stack.push(c);
                    }
                }
            }
        }
        seen != n
    }

    /// Checks the structural invariants implied by [`GraphKind`].
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for x in 0..n {
            if !self.mark(x, x).is_none() {
                return input(format!("self loop at {}", self.names[x]));
            }
            for y in 0..n {
                if x == y {
                    continue;
                }
                let (mx, my) = (self.mark(y, x), self.mark(x, y));
                if mx.is_none() != my.is_none() {
                    return input(format!(
                        "dangling endpoint between {} and {}",
                        self.names[x], self.names[y]
                    ));
                }
            }
        }
        for (x, y) in self.adjacent_pairs() {
            let (mx, my) = (self.mark(y, x), self.mark(x, y));
            let pair = || format!("{}-{}", self.names[x], self.names[y]);
            if mx.0 > 4 || my.0 > 4 {
                return input(format!("invalid mark on {}", pair()));
            }
            let circle = mx.is_circle() || my.is_circle();
            let double = mx == Mark::ARROW_TAIL || my == Mark::ARROW_TAIL;
            match self.kind {
                GraphKind::Dag => {
                    if !((mx == Mark::TAIL && my == Mark::ARROW)
                        || (mx == Mark::ARROW && my == Mark::TAIL))
                    {
                        return input(format!("DAG edge {} is not directed", pair()));
                    }
                }
                GraphKind::Smcm => {
                    if circle {
                        return input(format!("circle mark in SMCM edge {}", pair()));
                    }
                    if mx.has_tail() && my.has_tail() {
                        return input(format!("tail-tail edge {}", pair()));
                    }
                    if mx == Mark::ARROW_TAIL && my == Mark::ARROW_TAIL {
                        return input(format!("invalid double edge {}", pair()));
                    }
                }
                GraphKind::Mag => {
                    if circle || double {
                        return input(format!(
                            "MAG edge {} must be a single directed or bidirected edge",
                            pair()
                        ));
                    }
                    if mx == Mark::TAIL && my == Mark::TAIL {
                        return input(format!("tail-tail edge {}", pair()));
                    }
                }
                GraphKind::Pag => {
                    if double {
                        return input(format!("PAG edge {} carries a double mark", pair()));
                    }
                }
                GraphKind::Search => {}
            }
        }
        if matches!(self.kind, GraphKind::Dag | GraphKind::Smcm | GraphKind::Mag)
            && self.has_directed_cycle()
        {
            return input("graph has a directed cycle");
        }
        if self.kind == GraphKind::Mag {
            let anc = self.ancestor_matrix();
            for (x, y) in self.adjacent_pairs() {
                if self.is_bidirected(x, y) && (anc[x][y] || anc[y][x]) {
                    return input(format!(
                        "almost directed cycle through {}<->{}",
                        self.names[x], self.names[y]
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy restricted to `keep` (in the given order).
    pub fn induced_subgraph(&self, keep: &[usize]) -> MixedGraph {
        let mut g = MixedGraph::new(keep.iter().map(|&i| self.names[i].clone()), self.kind);
        for (a, &x) in keep.iter().enumerate() {
            for (b, &y) in keep.iter().enumerate() {
                if a != b {
                    g.set_mark(a, b, self.mark(x, y));
                }
            }
        }
        g
    }
}

pub(crate) fn mask_to_set(mask: &[bool]) -> NodeSet {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn set_to_mask(set: &NodeSet, n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in set {
        m[i] = true;
    }
    m
}
