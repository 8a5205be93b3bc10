use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{GraphKind, Mark, MixedGraph};
use crate::error::{input, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkName {
    Arrow,
    Tail,
    Circle,
}

impl MarkName {
    fn to_mark(self) -> Mark {
        match self {
            MarkName::Arrow => Mark::ARROW,
            MarkName::Tail => Mark::TAIL,
            MarkName::Circle => Mark::CIRCLE,
        }
    }

    fn from_mark(m: Mark) -> Option<MarkName> {
        match m {
            Mark::ARROW => Some(MarkName::Arrow),
            Mark::TAIL => Some(MarkName::Tail),
            Mark::CIRCLE => Some(MarkName::Circle),
            _ => None,
        }
    }

    pub(crate) fn dot_arrow(self) -> &'static str {
        match self {
            MarkName::Arrow => "normal",
            MarkName::Tail => "none",
            MarkName::Circle => "odot",
        }
    }
}

/// One edge. With `double` set the record describes a directed edge
/// (`mark_at_x`/`mark_at_y` give its direction) that is accompanied by a
/// bidirected edge between the same nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub x: String,
    pub y: String,
    pub mark_at_x: MarkName,
    pub mark_at_y: MarkName,
    #[serde(default)]
    pub double: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub kind: GraphKind,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphDoc {
    pub fn from_graph(g: &MixedGraph) -> GraphDoc {
        let mut edges = Vec::new();
        for (x, y) in g.adjacent_pairs() {
            let (mx, my) = (g.mark(y, x), g.mark(x, y));
            let double = mx == Mark::ARROW_TAIL || my == Mark::ARROW_TAIL;
            let (mx, my) = if mx == Mark::ARROW_TAIL {
                (Mark::TAIL, my)
            } else if my == Mark::ARROW_TAIL {
                (mx, Mark::TAIL)
            } else {
                (mx, my)
            };
            edges.push(EdgeRecord {
                x: g.name(x).to_string(),
                y: g.name(y).to_string(),
                mark_at_x: MarkName::from_mark(mx).expect("single mark"),
                mark_at_y: MarkName::from_mark(my).expect("single mark"),
                double,
            });
        }
        GraphDoc {
            kind: g.kind(),
            nodes: g.names().to_vec(),
            edges,
        }
    }

    pub fn to_graph(&self) -> Result<MixedGraph> {
        let mut g = MixedGraph::new(self.nodes.iter().cloned(), self.kind);
        let mut names = std::collections::HashSet::new();
        for name in &self.nodes {
            if !names.insert(name) {
                return input(format!("duplicate node '{name}'"));
            }
        }
        for e in &self.edges {
            let (x, y) = (g.index_of(&e.x)?, g.index_of(&e.y)?);
            if x == y {
                return input(format!("self loop at '{}'", e.x));
            }
            if g.adjacent(x, y) {
                return input(format!("duplicate edge {}-{}", e.x, e.y));
            }
            let (mut mx, mut my) = (e.mark_at_x.to_mark(), e.mark_at_y.to_mark());
            if e.double {
                match (mx, my) {
                    (Mark::TAIL, Mark::ARROW) => mx = Mark::ARROW_TAIL,
                    (Mark::ARROW, Mark::TAIL) => my = Mark::ARROW_TAIL,
                    _ => return input(format!("double edge {}-{} must be directed", e.x, e.y)),
                }
            }
            g.set_edge(x, y, mx, my);
        }
        g.validate()?;
        Ok(g)
    }
}

impl MixedGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphDoc::from_graph(self))
            .expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<MixedGraph> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        doc.to_graph()
    }

    /// Graphviz rendering; circle marks are drawn as `odot`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph G {\n");
        for name in self.names() {
            let _ = writeln!(out, "  \"{}\";", escape(name));
        }
        for e in GraphDoc::from_graph(self).edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [dir=both, arrowtail={}, arrowhead={}];",
                escape(&e.x),
                escape(&e.y),
                e.mark_at_x.dot_arrow(),
                e.mark_at_y.dot_arrow()
            );
            if e.double {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [dir=both, arrowtail=normal, arrowhead=normal];",
                    escape(&e.x),
                    escape(&e.y)
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
