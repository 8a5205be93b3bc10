use std::collections::HashMap;
use std::ops::Not;

use super::paths::{enumerate_possible_paths, PathMode};
use super::{
    check_universe, Atom, CnfProblem, EncodeConfig, LiteralKind, Observation, SoftLiteral,
    VarRegistry,
};
use crate::error::{input, Result};
use crate::fci::TripleLabel;
use crate::graph::{GraphKind, Mark, MixedGraph, NodeSet};
use crate::solve::{Cnf, Lit};

/// A literal or a constant, so trivially decided atoms need no variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Term {
    True,
    False,
    Lit(Lit),
}

impl Not for Term {
    type Output = Term;
    fn not(self) -> Term {
        match self {
            Term::True => Term::False,
            Term::False => Term::True,
            Term::Lit(l) => Term::Lit(!l),
        }
    }
}

/// Builds the hard clauses and soft literals for the datasets in `obs`
/// over the search graph `h`.
///
/// Each dataset contributes `adjacent(x, y, i) <-> OR inducing(p, i)` over
/// the candidate paths of every measured pair, and one soft literal per
/// (non)adjacency, labelled unshielded triple and discriminating path.
pub fn build_constraints(
    h: &MixedGraph,
    obs: &[Observation],
    config: &EncodeConfig,
) -> Result<CnfProblem> {
    if h.kind() != GraphKind::Search {
        return input(format!("expected a search graph, got {:?}", h.kind()));
    }
    if config.mpl == Some(0) {
        return input("maximum path length must be at least 1");
    }
    let n = h.n();
    check_universe(n, obs)?;
    let exp_of = obs
        .iter()
        .map(|o| {
            if o.targets.is_empty() {
                None
            } else {
                obs.iter().position(|p| p.targets == o.targets)
            }
        })
        .collect();
    let mut b = Builder {
        p: CnfProblem {
            names: h.names().to_vec(),
            search: h.clone(),
            registry: VarRegistry::default(),
            cnf: Cnf::new(),
            soft: Vec::new(),
        },
        obs,
        config: *config,
        memo: HashMap::new(),
        exp_of,
        no_targets: NodeSet::new(),
    };
    b.core();
    b.structure();
    for i in 0..obs.len() {
        b.dataset(i);
    }
    let total = b.p.registry.len() as u32;
    b.p.cnf.ensure_vars(total);
    Ok(b.p)
}

struct Builder<'a> {
    p: CnfProblem,
    obs: &'a [Observation],
    config: EncodeConfig,
    memo: HashMap<Atom, Term>,
    /// Experiment whose ancestry atoms dataset `i` reuses: the first
    /// dataset with the same targets, `None` when nothing is manipulated.
    exp_of: Vec<Option<usize>>,
    no_targets: NodeSet,
}

impl Builder<'_> {
    fn n(&self) -> usize {
        self.p.n()
    }

    fn edge(&self, x: usize, y: usize) -> Term {
        Term::Lit(Lit::pos(self.p.edge_var(x, y)))
    }

    fn arrow(&self, x: usize, y: usize) -> Term {
        Term::Lit(Lit::pos(self.p.arrow_var(x, y)))
    }

    fn tail(&self, x: usize, y: usize) -> Term {
        Term::Lit(Lit::pos(self.p.tail_var(x, y)))
    }

    fn clause(&mut self, terms: &[Term]) {
        if terms.contains(&Term::True) {
            return;
        }
        let lits: Vec<Lit> = terms
            .iter()
            .filter_map(|t| match t {
                Term::Lit(l) => Some(*l),
                _ => None,
            })
            .collect();
        self.p.cnf.add_clause(lits);
    }

    fn core(&mut self) {
        let n = self.n();
        for x in 0..n {
            for y in x + 1..n {
                let v = self.p.registry.add(Atom::Edge(x, y));
                debug_assert_eq!(v, self.p.edge_var(x, y));
            }
        }
        for make in [Atom::Arrow as fn(usize, usize) -> Atom, Atom::Tail] {
            for x in 0..n {
                for y in (0..n).filter(|&y| y != x) {
                    self.p.registry.add(make(x, y));
                }
            }
        }
        self.p.cnf = Cnf::with_vars(self.p.registry.len() as u32);
    }

    /// Edge shape, search-graph restrictions and acyclicity.
    fn structure(&mut self) {
        let n = self.n();
        let h = self.p.search.clone();
        for x in 0..n {
            for y in x + 1..n {
                let e = self.edge(x, y);
                let ends = [(x, y), (y, x)];
                if !h.adjacent(x, y) {
                    self.clause(&[!e]);
                }
                for (a, b) in ends {
                    let (ar, tl) = (self.arrow(a, b), self.tail(a, b));
                    self.clause(&[!e, ar, tl]);
                    self.clause(&[e, !ar]);
                    self.clause(&[e, !tl]);
                    if h.mark(a, b) == Mark::ARROW {
                        self.clause(&[!tl]);
                    }
                }
                let (t1, t2) = (self.tail(x, y), self.tail(y, x));
                self.clause(&[!t1, !t2]);
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                let a = self.ancestor(x, y, None);
                let b = self.ancestor(y, x, None);
                self.clause(&[!a, !b]);
            }
        }
    }

    /// Registers `atom <-> AND(conj) AND OR(disj)`; `disj = None` means no
    /// disjunctive part. With `force` the atom always gets a variable.
    fn define(
        &mut self,
        atom: Atom,
        conj: Vec<Term>,
        disj: Option<Vec<Term>>,
        force: bool,
    ) -> Term {
        if let Some(&t) = self.memo.get(&atom) {
            return t;
        }
        let mut value = None;
        let mut conj: Vec<Lit> = conj
            .into_iter()
            .filter_map(|t| match t {
                Term::True => None,
                Term::False => {
                    value = Some(Term::False);
                    None
                }
                Term::Lit(l) => Some(l),
            })
            .collect();
        conj.sort_unstable();
        conj.dedup();
        let disj: Option<Vec<Lit>> = match disj {
            None => None,
            Some(ts) if ts.contains(&Term::True) => None,
            Some(ts) => {
                let mut lits: Vec<Lit> = ts
                    .into_iter()
                    .filter_map(|t| match t {
                        Term::Lit(l) => Some(l),
                        _ => None,
                    })
                    .collect();
                if lits.is_empty() {
                    value = Some(Term::False);
                }
                lits.sort_unstable();
                lits.dedup();
                Some(lits)
            }
        };
        if value.is_none() && conj.is_empty() && disj.is_none() {
            value = Some(Term::True);
        }
        if value.is_none() && !force {
            match (conj.as_slice(), disj.as_deref()) {
                ([l], None) | ([], Some([l])) => value = Some(Term::Lit(*l)),
                _ => {}
            }
        }
        let term = match value {
            Some(constant) if !force => constant,
            Some(constant) => {
                let v = Lit::pos(self.p.registry.add(atom.clone()));
                self.p
                    .cnf
                    .add_clause([if constant == Term::True { v } else { !v }]);
                Term::Lit(v)
            }
            None => {
                let v = Lit::pos(self.p.registry.add(atom.clone()));
                for &c in &conj {
                    self.p.cnf.add_clause([!v, c]);
                }
                let negated: Vec<Lit> = conj.iter().map(|&c| !c).collect();
                match &disj {
                    Some(ds) => {
                        self.p
                            .cnf
                            .add_clause(std::iter::once(!v).chain(ds.iter().copied()));
                        for &d in ds {
                            self.p
                                .cnf
                                .add_clause(negated.iter().copied().chain([!d, v]));
                        }
                    }
                    None => self.p.cnf.add_clause(negated.iter().copied().chain([v])),
                }
                Term::Lit(v)
            }
        };
        self.memo.insert(atom, term);
        term
    }

    fn targets_of(&self, exp: Option<usize>) -> &NodeSet {
        match exp {
            None => &self.no_targets,
            Some(i) => &self.obs[i].targets,
        }
    }

    /// `a` is an ancestor of `b` once the targets of `exp` are manipulated.
    fn ancestor(&mut self, a: usize, b: usize, exp: Option<usize>) -> Term {
        let atom = Atom::Ancestor(a, b, exp);
        if let Some(&t) = self.memo.get(&atom) {
            return t;
        }
        let bound = if self.config.full_ancestry {
            None
        } else {
            self.config.mpl
        };
        let targets = self.targets_of(exp).clone();
        let paths =
            enumerate_possible_paths(&self.p.search, a, b, PathMode::Ancestral(&targets), bound);
        let mut options = Vec::with_capacity(paths.len());
        for path in paths {
            let conj = path
                .windows(2)
                .flat_map(|w| {
                    [
                        self.edge(w[0], w[1]),
                        self.tail(w[1], w[0]),
                        self.arrow(w[0], w[1]),
                    ]
                })
                .collect();
            options.push(self.define(Atom::Ancestral(path, exp), conj, None, false));
        }
        self.define(atom, Vec::new(), Some(options), false)
    }

    /// Endpoint at `v` of the edge from `a` is a tail once dataset `i`'s
    /// targets are manipulated; a manipulated `a` keeps only edges out of it.
    fn tail_after(&self, a: usize, v: usize, i: usize) -> Term {
        if self.obs[i].targets.contains(&a) {
            Term::False
        } else {
            self.tail(a, v)
        }
    }

    /// The inner node `v` of `<z, v, w>` on a path between `x` and `y`
    /// does not block the path as an inducing path in dataset `i`.
    fn unblocked(&mut self, z: usize, v: usize, w: usize, x: usize, y: usize, i: usize) -> Term {
        let atom = Atom::Unblocked(z, v, w, x, y, i);
        if let Some(&t) = self.memo.get(&atom) {
            return t;
        }
        let exp = self.exp_of[i];
        let ax = self.ancestor(v, x, exp);
        let ay = self.ancestor(v, y, exp);
        if self.obs[i].observes(v) {
            // measured: a collider that is an ancestor of an endpoint
            let conj = vec![self.arrow(z, v), self.arrow(w, v)];
            self.define(atom, conj, Some(vec![ax, ay]), false)
        } else {
            // latent: a non-collider, or an ancestor of an endpoint
            let disj = vec![self.tail_after(z, v, i), self.tail_after(w, v, i), ax, ay];
            self.define(atom, Vec::new(), Some(disj), false)
        }
    }

    fn inducing(&mut self, path: &[usize], i: usize) -> Term {
        let atom = Atom::Inducing(path.to_vec(), i);
        if let Some(&t) = self.memo.get(&atom) {
            return t;
        }
        let m = path.len() - 1;
        let (x, y) = (path[0], path[m]);
        let mut conj: Vec<Term> = path.windows(2).map(|w| self.edge(w[0], w[1])).collect();
        if self.obs[i].targets.contains(&x) {
            conj.push(self.tail(path[1], x));
        }
        if self.obs[i].targets.contains(&y) {
            conj.push(self.tail(path[m - 1], y));
        }
        for j in 1..m {
            conj.push(self.unblocked(path[j - 1], path[j], path[j + 1], x, y, i));
        }
        self.define(atom, conj, None, false)
    }

    fn adjacent(&mut self, x: usize, y: usize, i: usize) -> Term {
        let (x, y) = (x.min(y), x.max(y));
        let atom = Atom::Adjacent(x, y, i);
        if let Some(&t) = self.memo.get(&atom) {
            return t;
        }
        let targets = self.obs[i].targets.clone();
        let paths = enumerate_possible_paths(
            &self.p.search,
            x,
            y,
            PathMode::Inducing(&targets),
            self.config.mpl,
        );
        let options = paths.iter().map(|p| self.inducing(p, i)).collect();
        self.define(atom, Vec::new(), Some(options), true)
    }

    fn lit_of(t: Term) -> Lit {
        match t {
            Term::Lit(l) => l,
            _ => unreachable!("forced atoms always have a variable"),
        }
    }

    /// A fresh selector implying every term of `conj` and, when given, at
    /// least one term of `disj`.
    fn selector(&mut self, conj: Vec<Term>, disj: Option<Vec<Term>>) -> Lit {
        let k = self.p.soft.len();
        let s = Lit::pos(self.p.registry.add(Atom::Soft(k)));
        for c in conj {
            self.clause(&[Term::Lit(!s), c]);
        }
        if let Some(ds) = disj {
            let mut terms = vec![Term::Lit(!s)];
            terms.extend(ds);
            self.clause(&terms);
        }
        s
    }

    fn dataset(&mut self, i: usize) {
        let o = &self.obs[i];
        let (vars, fci) = (o.vars.clone(), &o.fci);
        let exp = self.exp_of[i];
        let k = vars.len();
        // (non)adjacencies, pairs in global order
        let mut pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .collect();
        pairs.sort_by_key(|&(a, b)| (vars[a].min(vars[b]), vars[a].max(vars[b])));
        for (a, b) in pairs {
            let (x, y) = (vars[a].min(vars[b]), vars[a].max(vars[b]));
            let adj = Self::lit_of(self.adjacent(x, y, i));
            let seen = fci.pag.adjacent(a, b);
            self.p.soft.push(SoftLiteral {
                kind: if seen {
                    LiteralKind::Adjacent
                } else {
                    LiteralKind::NonAdjacent
                },
                dataset: i,
                nodes: vec![x, y],
                discriminating: false,
                p_value: fci.max_p(a, b),
                score: None,
                lit: Some(if seen { adj } else { !adj }),
            });
        }
        for t in &fci.triples {
            let kind = match t.label {
                TripleLabel::Collider => LiteralKind::Collider,
                TripleLabel::Dnc => LiteralKind::Dnc,
                TripleLabel::Ambiguous => continue,
            };
            let (x, y, z) = (vars[t.x], vars[t.y], vars[t.z]);
            let mut conj = vec![
                self.adjacent(x, y, i),
                self.adjacent(y, z, i),
                !self.adjacent(x, z, i),
            ];
            let (yx, yz) = (self.ancestor(y, x, exp), self.ancestor(y, z, exp));
            let disj = if kind == LiteralKind::Collider {
                conj.extend([!yx, !yz]);
                None
            } else {
                Some(vec![yx, yz])
            };
            let s = self.selector(conj, disj);
            self.p.soft.push(SoftLiteral {
                kind,
                dataset: i,
                nodes: vec![x, y, z],
                discriminating: false,
                p_value: fci.max_p(t.x, t.z),
                score: None,
                lit: Some(s),
            });
        }
        for d in &fci.discriminating {
            let kind = match d.label {
                TripleLabel::Collider => LiteralKind::Collider,
                TripleLabel::Dnc => LiteralKind::Dnc,
                TripleLabel::Ambiguous => continue,
            };
            let path: Vec<usize> = d.path.iter().map(|&l| vars[l]).collect();
            let last = path.len() - 1;
            let (b, c) = (path[last - 1], path[last]);
            let mut conj = vec![!self.adjacent(path[0], c, i), self.adjacent(b, c, i)];
            for j in 1..last - 1 {
                let v = path[j];
                conj.push(self.adjacent(path[j - 1], v, i));
                conj.push(self.adjacent(v, path[j + 1], i));
                conj.push(self.adjacent(v, c, i));
                conj.push(self.ancestor(v, c, exp));
                conj.push(!self.ancestor(v, path[j - 1], exp));
                conj.push(!self.ancestor(v, path[j + 1], exp));
            }
            let (ba, bc) = (
                self.ancestor(b, path[last - 2], exp),
                self.ancestor(b, c, exp),
            );
            let disj = if kind == LiteralKind::Collider {
                conj.extend([!ba, !bc]);
                None
            } else {
                Some(vec![ba, bc])
            };
            let s = self.selector(conj, disj);
            self.p.soft.push(SoftLiteral {
                kind,
                dataset: i,
                nodes: path,
                discriminating: true,
                p_value: fci.max_p(d.first(), d.last()),
                score: None,
                lit: Some(s),
            });
        }
    }
}
