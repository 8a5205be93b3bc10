//! Translation of per-dataset PAG features into a propositional formula over
//! the edges and endpoints of an unknown SMCM.
//!
//! Core atoms: `edge(x, y)`, `arrow(x, y)` (some edge between the two is
//! into `y`) and `tail(x, y)` (some edge is out of `y`). Both endpoint atoms
//! may hold at once, which is how a directed plus bidirected pair is stored.

mod builder;
mod paths;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::fci::FciResult;
use crate::graph::{GraphKind, Mark, MixedGraph, NodeSet, Path};
use crate::solve::{Cnf, Lit, Var};

pub use builder::build_constraints;
pub use paths::{enumerate_possible_paths, PathMode};

/// One dataset's search result placed in the global variable universe.
#[derive(Clone, Debug)]
pub struct Observation {
    pub fci: FciResult,
    /// Global index of each of the result's local variables.
    pub vars: Vec<usize>,
    /// Global indices of the manipulated variables.
    pub targets: NodeSet,
}

impl Observation {
    /// Maps a result onto `universe` by variable name.
    pub fn align(universe: &[String], fci: FciResult, targets: &[String]) -> Result<Observation> {
        let index: HashMap<&str, usize> = universe
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let lookup = |name: &str| {
            index.get(name).copied().ok_or_else(|| {
                crate::Error::Input(format!("variable '{name}' is not in the universe"))
            })
        };
        let vars = fci
            .pag
            .names()
            .iter()
            .map(|s| lookup(s))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = NodeSet::new();
        if !vars.iter().all(|&v| seen.insert(v)) {
            return input("dataset lists a variable twice");
        }
        let mut target_set = NodeSet::new();
        for t in targets {
            let g = lookup(t)?;
            if !seen.contains(&g) {
                return input(format!(
                    "intervention target '{t}' is not measured in its dataset"
                ));
            }
            target_set.insert(g);
        }
        Ok(Observation {
            fci,
            vars,
            targets: target_set,
        })
    }

    pub fn observes(&self, v: usize) -> bool {
        self.vars.contains(&v)
    }
}

fn check_universe(n: usize, obs: &[Observation]) -> Result<()> {
    for (i, o) in obs.iter().enumerate() {
        if o.vars.len() != o.fci.pag.n() {
            return input(format!(
                "dataset {i}: variable map does not match its graph"
            ));
        }
        if let Some(&v) = o.vars.iter().chain(&o.targets).find(|&&v| v >= n) {
            return input(format!(
                "dataset {i}: variable {v} outside a universe of {n}"
            ));
        }
        if !o.targets.iter().all(|t| o.vars.contains(t)) {
            return input(format!("dataset {i}: intervention target not measured"));
        }
    }
    Ok(())
}

/// Candidate SMCM: the union of all skeletons, arrowheads kept where every
/// graph showing the edge agrees, plus `o-o` edges for pairs never measured
/// together with both unmanipulated.
pub fn initialize_search_graph(names: &[String], obs: &[Observation]) -> Result<MixedGraph> {
    let n = names.len();
    check_universe(n, obs)?;
    let mut h = MixedGraph::new(names.iter().cloned(), GraphKind::Search);
    // arrow_everywhere[x][y]: every graph showing x - y has an arrowhead at y
    let mut arrow_everywhere = vec![vec![true; n]; n];
    for o in obs {
        let g = &o.fci.pag;
        for (a, b) in g.adjacent_pairs() {
            let (x, y) = (o.vars[a], o.vars[b]);
            h.set_edge(x, y, Mark::CIRCLE, Mark::CIRCLE);
            arrow_everywhere[x][y] &= g.mark(a, b) == Mark::ARROW;
            arrow_everywhere[y][x] &= g.mark(b, a) == Mark::ARROW;
        }
    }
    for (x, y) in h.adjacent_pairs().collect::<Vec<_>>() {
        if arrow_everywhere[x][y] {
            h.set_mark(x, y, Mark::ARROW);
        }
        if arrow_everywhere[y][x] {
            h.set_mark(y, x, Mark::ARROW);
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            if h.adjacent(x, y) {
                continue;
            }
            let seen_free = obs.iter().any(|o| {
                o.observes(x) && o.observes(y) && !o.targets.contains(&x) && !o.targets.contains(&y)
            });
            if seen_free {
                continue;
            }
            h.set_edge(x, y, Mark::CIRCLE, Mark::CIRCLE);
            for (a, b) in [(x, y), (y, x)] {
                let cut = obs.iter().any(|o| {
                    o.observes(a)
                        && o.observes(b)
                        && o.targets.contains(&a)
                        && !o.targets.contains(&b)
                });
                if cut {
                    h.set_mark(b, a, Mark::ARROW);
                }
            }
        }
    }
    Ok(h)
}

/// Tagged meaning of a propositional variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Edge(usize, usize),
    Arrow(usize, usize),
    Tail(usize, usize),
    /// `adjacent(x, y)` in dataset `i`'s marginal.
    Adjacent(usize, usize, usize),
    Inducing(Path, usize),
    Unblocked(usize, usize, usize, usize, usize, usize),
    /// Ancestral path under the interventions of experiment `exp`; `None`
    /// is the unmanipulated model.
    Ancestral(Path, Option<usize>),
    Ancestor(usize, usize, Option<usize>),
    /// Selector of soft literal `k`.
    Soft(usize),
}

/// Bijection between variables and atoms.
#[derive(Clone, Debug, Default)]
pub struct VarRegistry {
    atoms: Vec<Atom>,
    index: HashMap<Atom, Var>,
}

impl VarRegistry {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, v: Var) -> Option<&Atom> {
        self.atoms.get(v as usize)
    }

    pub fn var(&self, atom: &Atom) -> Option<Var> {
        self.index.get(atom).copied()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn add(&mut self, atom: Atom) -> Var {
        debug_assert!(
            !self.index.contains_key(&atom),
            "atom registered twice: {atom:?}"
        );
        let v = self.atoms.len() as Var;
        self.index.insert(atom.clone(), v);
        self.atoms.push(atom);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiteralKind {
    Adjacent,
    NonAdjacent,
    Collider,
    Dnc,
}

/// An observed feature that may be dropped to restore satisfiability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftLiteral {
    pub kind: LiteralKind,
    pub dataset: usize,
    /// Global nodes: the pair, the triple, or the whole discriminating path.
    pub nodes: Vec<usize>,
    pub discriminating: bool,
    /// Largest p-value seen for the pair whose (non)adjacency ranks this
    /// literal.
    pub p_value: Option<f64>,
    pub score: Option<f64>,
    /// Formula literal asserted when the feature is accepted, in DIMACS
    /// numbering when serialized.
    pub lit: Option<Lit>,
}

impl SoftLiteral {
    /// Pair whose p-value ranks the literal: the endpoints of the pair,
    /// triple or path.
    pub fn ranking_pair(&self) -> (usize, usize) {
        let (a, b) = match self.kind {
            LiteralKind::Adjacent | LiteralKind::NonAdjacent => (self.nodes[0], self.nodes[1]),
            _ if self.discriminating => (self.nodes[0], self.nodes[self.nodes.len() - 1]),
            _ => (self.nodes[0], self.nodes[2]),
        };
        (a.min(b), a.max(b))
    }

    pub fn literal(&self) -> Lit {
        self.lit.expect("soft literal built by the encoder")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeConfig {
    /// Longest candidate path in edges; `None` for no bound.
    pub mpl: Option<usize>,
    /// Ancestry uses unbounded directed paths even when `mpl` is set.
    pub full_ancestry: bool,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        EncodeConfig {
            mpl: Some(3),
            full_ancestry: false,
        }
    }
}

/// Hard clauses plus the soft literals of every dataset.
#[derive(Clone, Debug)]
pub struct CnfProblem {
    pub names: Vec<String>,
    pub search: MixedGraph,
    pub registry: VarRegistry,
    pub cnf: Cnf,
    pub soft: Vec<SoftLiteral>,
}

fn pair_index(n: usize, x: usize, y: usize) -> usize {
    let (x, y) = (x.min(y), x.max(y));
    x * n - x * (x + 1) / 2 + (y - x - 1)
}

fn ordered_index(n: usize, x: usize, y: usize) -> usize {
    x * (n - 1) + if y < x { y } else { y - 1 }
}

impl CnfProblem {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn edge_var(&self, x: usize, y: usize) -> Var {
        pair_index(self.n(), x, y) as Var
    }

    /// Variable of "some edge between `x` and `y` is into `y`".
    pub fn arrow_var(&self, x: usize, y: usize) -> Var {
        let n = self.n();
        (n * (n - 1) / 2 + ordered_index(n, x, y)) as Var
    }

    /// Variable of "some edge between `x` and `y` is out of `y`".
    pub fn tail_var(&self, x: usize, y: usize) -> Var {
        let n = self.n();
        (n * (n - 1) / 2 + n * (n - 1) + ordered_index(n, x, y)) as Var
    }

    pub fn adjacent_var(&self, x: usize, y: usize, dataset: usize) -> Option<Var> {
        self.registry
            .var(&Atom::Adjacent(x.min(y), x.max(y), dataset))
    }

    /// Core atoms of the pairs adjacent in the search graph.
    pub fn core_candidates(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for (x, y) in self.search.adjacent_pairs() {
            out.push(self.edge_var(x, y));
            for (a, b) in [(x, y), (y, x)] {
                out.push(self.arrow_var(a, b));
                out.push(self.tail_var(a, b));
            }
        }
        out
    }

    /// Literals fixing the core atoms to the edges of `s`.
    pub fn assignment_of(&self, s: &MixedGraph) -> Vec<Lit> {
        let n = self.n();
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                out.push(Lit::new(self.edge_var(x, y), s.adjacent(x, y)));
                for (a, b) in [(x, y), (y, x)] {
                    out.push(Lit::new(self.arrow_var(a, b), s.mark(a, b).has_arrow()));
                    out.push(Lit::new(self.tail_var(a, b), s.mark(a, b).has_tail()));
                }
            }
        }
        out
    }

    /// The SMCM described by a model's core atoms.
    pub fn decode(&self, model: &[bool]) -> MixedGraph {
        let n = self.n();
        let mut g = MixedGraph::new(self.names.iter().cloned(), GraphKind::Smcm);
        for x in 0..n {
            for y in x + 1..n {
                if !model[self.edge_var(x, y) as usize] {
                    continue;
                }
                let end = |a: usize, b: usize| {
                    let mut m = Mark::NONE;
                    if model[self.arrow_var(a, b) as usize] {
                        m = m.union(Mark::ARROW);
                    }
                    if model[self.tail_var(a, b) as usize] {
                        m = m.union(Mark::TAIL);
                    }
                    m
                };
                g.set_edge(x, y, end(y, x), end(x, y));
            }
        }
        g
    }

    /// Hard clauses in DIMACS form.
    pub fn to_dimacs(&self) -> String {
        self.cnf.to_dimacs()
    }

    /// JSON sidecar mapping one-based DIMACS variables to atoms.
    pub fn registry_json(&self) -> String {
        let map: BTreeMap<u32, &Atom> = self
            .registry
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i as u32 + 1, a))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "nodes": self.names, "variables": map }))
            .expect("registry serializes")
    }

    pub fn soft_json(&self) -> String {
        serde_json::to_string_pretty(&self.soft).expect("soft literals serialize")
    }
}

#[cfg(test)]
mod tests;
