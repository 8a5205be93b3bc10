//! What every SMCM consistent with the accepted features agrees on.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encode::CnfProblem;
use crate::error::{input, Result};
use crate::graph::{Mark, MixedGraph};
use crate::solve::{backbone_with, Lit, Polarity, Solver, Var};

/// Edge in every consistent SMCM, in none, or in some.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStatus {
    Solid,
    Dashed,
    Absent,
}

/// Endpoint of an edge across the consistent SMCMs that contain the edge:
/// a fixed mark, or `Circle` when it varies. `ArrowTail` is the end of a
/// directed edge that also carries a confounding edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndMark {
    Arrow,
    Tail,
    ArrowTail,
    Circle,
}

impl EndMark {
    fn from_atoms(arrow: Option<Polarity>, tail: Option<Polarity>) -> EndMark {
        use Polarity::{ForcedFalse as F, ForcedTrue as T};
        match (arrow, tail) {
            (Some(T), Some(F)) => EndMark::Arrow,
            (Some(F), Some(T)) => EndMark::Tail,
            (Some(T), Some(T)) => EndMark::ArrowTail,
            _ => EndMark::Circle,
        }
    }

    /// The mark a graph edge has at one end, for comparisons with a truth.
    pub fn of(m: Mark) -> EndMark {
        match m {
            Mark::ARROW => EndMark::Arrow,
            Mark::TAIL => EndMark::Tail,
            Mark::ARROW_TAIL => EndMark::ArrowTail,
            _ => EndMark::Circle,
        }
    }

    fn dot(self) -> &'static str {
        match self {
            EndMark::Arrow => "normal",
            EndMark::Tail => "none",
            EndMark::ArrowTail => "normaltee",
            EndMark::Circle => "odot",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEdge {
    pub x: String,
    pub y: String,
    pub status: EdgeStatus,
    pub mark_at_x: EndMark,
    pub mark_at_y: EndMark,
}

/// Edges that are not listed are absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<SummaryEdge>,
}

impl SummaryGraph {
    pub fn empty(nodes: Vec<String>) -> SummaryGraph {
        SummaryGraph {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| crate::Error::Input(format!("unknown node '{name}'")))
    }

    fn find(&self, x: &str, y: &str) -> Option<(&SummaryEdge, bool)> {
        self.edges.iter().find_map(|e| {
            if e.x == x && e.y == y {
                Some((e, false))
            } else if e.x == y && e.y == x {
                Some((e, true))
            } else {
                None
            }
        })
    }

    pub fn status(&self, x: &str, y: &str) -> EdgeStatus {
        self.find(x, y)
            .map_or(EdgeStatus::Absent, |(e, _)| e.status)
    }

    /// Mark at `y` on the edge between `x` and `y`, if the edge may exist.
    pub fn mark(&self, x: &str, y: &str) -> Option<EndMark> {
        self.find(x, y)
            .map(|(e, swapped)| if swapped { e.mark_at_x } else { e.mark_at_y })
    }

    pub fn count(&self, status: EdgeStatus) -> usize {
        self.edges.iter().filter(|e| e.status == status).count()
    }

    /// Fixed marks and circles over all listed edges.
    pub fn endpoints(&self) -> impl Iterator<Item = EndMark> + '_ {
        self.edges.iter().flat_map(|e| [e.mark_at_x, e.mark_at_y])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(text: &str) -> Result<SummaryGraph> {
        let s: SummaryGraph = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if index.len() != self.nodes.len() {
            return input("duplicate node in summary");
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            let (Some(&x), Some(&y)) = (index.get(e.x.as_str()), index.get(e.y.as_str())) else {
                return input(format!("edge {}-{} names an unknown node", e.x, e.y));
            };
            if x == y || !seen.insert((x.min(y), x.max(y))) {
                return input(format!("bad or repeated edge {}-{}", e.x, e.y));
            }
            if e.status == EdgeStatus::Absent {
                return input(format!("absent edge {}-{} listed", e.x, e.y));
            }
        }
        Ok(())
    }

    /// Graphviz rendering: dashed edges dashed, varying endpoints `odot`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph summary {\n");
        for name in &self.nodes {
            let _ = writeln!(out, "  \"{}\";", crate::graph::escape(name));
        }
        for e in &self.edges {
            let style = if e.status == EdgeStatus::Dashed {
                "dashed"
            } else {
                "solid"
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=both, style={style}, arrowtail={}, arrowhead={}];",
                crate::graph::escape(&e.x),
                crate::graph::escape(&e.y),
                e.mark_at_x.dot(),
                e.mark_at_y.dot()
            );
        }
        out.push_str("}\n");
        out
    }

    /// Summary of a single SMCM: everything solid.
    pub fn of_graph(g: &MixedGraph) -> SummaryGraph {
        let edges = g
            .adjacent_pairs()
            .map(|(x, y)| SummaryEdge {
                x: g.name(x).to_string(),
                y: g.name(y).to_string(),
                status: EdgeStatus::Solid,
                mark_at_x: EndMark::of(g.mark(y, x)),
                mark_at_y: EndMark::of(g.mark(x, y)),
            })
            .collect();
        SummaryGraph {
            nodes: g.names().to_vec(),
            edges,
        }
    }

    /// The search graph's pairs classified by the backbone of the hard
    /// clauses plus `fixed`. Endpoints of a possible edge are classified
    /// among the models that contain it.
    pub fn from_backbone(problem: &CnfProblem, fixed: &[Lit]) -> Result<(SummaryGraph, usize)> {
        let mut solver = Solver::from_cnf(&problem.cnf);
        let pairs: Vec<(usize, usize)> = problem.search.adjacent_pairs().collect();
        let edge_vars: Vec<Var> = pairs.iter().map(|&(x, y)| problem.edge_var(x, y)).collect();
        let edges = backbone_with(&mut solver, fixed, &edge_vars)?;
        let mut calls = edges.solver_calls;
        let ends = |x: usize, y: usize| {
            [
                problem.arrow_var(y, x),
                problem.tail_var(y, x),
                problem.arrow_var(x, y),
                problem.tail_var(x, y),
            ]
        };
        let mut status = Vec::with_capacity(pairs.len());
        let mut solid_ends = Vec::new();
        for (&(x, y), &v) in pairs.iter().zip(&edge_vars) {
            let s = match edges.get(v) {
                Some(Polarity::ForcedTrue) => EdgeStatus::Solid,
                Some(Polarity::ForcedFalse) => EdgeStatus::Absent,
                _ => EdgeStatus::Dashed,
            };
            if s == EdgeStatus::Solid {
                solid_ends.extend(ends(x, y));
            }
            status.push(s);
        }
        // every solid edge shares the same condition, so one pass covers them
        let solid = backbone_with(&mut solver, fixed, &solid_ends)?;
        calls += solid.solver_calls;
        let mut out = SummaryGraph::empty(problem.names.clone());
        for (k, &(x, y)) in pairs.iter().enumerate() {
            let report = match status[k] {
                EdgeStatus::Absent => continue,
                EdgeStatus::Solid => solid.clone(),
                EdgeStatus::Dashed => {
                    let mut with = fixed.to_vec();
                    with.push(Lit::pos(edge_vars[k]));
                    let r = backbone_with(&mut solver, &with, &ends(x, y))?;
                    calls += r.solver_calls;
                    r
                }
            };
            let [ax, tx, ay, ty] = ends(x, y);
            out.edges.push(SummaryEdge {
                x: problem.names[x].clone(),
                y: problem.names[y].clone(),
                status: status[k],
                mark_at_x: EndMark::from_atoms(report.get(ax), report.get(tx)),
                mark_at_y: EndMark::from_atoms(report.get(ay), report.get(ty)),
            });
        }
        Ok((out, calls))
    }
}
