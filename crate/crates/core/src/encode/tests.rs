use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fci::{run_fci, FciConfig};
use crate::graph::manipulate;
use crate::solve::{check_sat, SolveResult, Solver};
use crate::stats::Oracle;
use crate::testkit::{
    all_smcms, consistent, oracle_observations, random_designs, random_smcm, Design,
};

fn set(items: &[usize]) -> NodeSet {
    items.iter().copied().collect()
}

fn unbounded() -> EncodeConfig {
    EncodeConfig {
        mpl: None,
        full_ancestry: true,
    }
}

fn problem_for(truth: &MixedGraph, designs: &[Design], config: &EncodeConfig) -> CnfProblem {
    let obs = oracle_observations(truth, designs);
    let h = initialize_search_graph(truth.names(), &obs).unwrap();
    build_constraints(&h, &obs, config).unwrap()
}

fn features(p: &CnfProblem) -> Vec<Lit> {
    p.soft.iter().map(SoftLiteral::literal).collect()
}

fn search_graph(n: usize, edges: &[(usize, usize, Mark, Mark)]) -> MixedGraph {
    let mut h = MixedGraph::with_size(n, GraphKind::Search);
    for &(x, y, mx, my) in edges {
        h.set_edge(x, y, mx, my);
    }
    h
}

#[test]
fn single_dataset_search_graph_copies_its_pag() {
    let mut truth = MixedGraph::new(["A", "B", "C"], GraphKind::Smcm);
    truth.add_directed(0, 1);
    truth.add_directed(2, 1);
    let designs = [Design {
        observed: vec![0, 1, 2],
        targets: NodeSet::new(),
    }];
    let obs = oracle_observations(&truth, &designs);
    let h = initialize_search_graph(truth.names(), &obs).unwrap();
    assert_eq!(h.kind(), GraphKind::Search);
    for x in 0..3 {
        for y in 0..3 {
            if x != y {
                assert_eq!(h.mark(x, y), obs[0].fci.pag.mark(x, y));
            }
        }
    }
}

#[test]
fn pairs_never_measured_together_are_open() {
    // A and C are never measured together: they may be joined by anything
    let truth = {
        let mut g = MixedGraph::new(["A", "B", "C"], GraphKind::Smcm);
        g.add_directed(0, 1);
        g.add_directed(1, 2);
        g
    };
    let designs = [
        Design {
            observed: vec![0, 1],
            targets: NodeSet::new(),
        },
        Design {
            observed: vec![1, 2],
            targets: NodeSet::new(),
        },
    ];
    let obs = oracle_observations(&truth, &designs);
    let h = initialize_search_graph(truth.names(), &obs).unwrap();
    assert!(h.adjacent(0, 2));
    assert_eq!(h.mark(0, 2), Mark::CIRCLE);
    assert_eq!(h.mark(2, 0), Mark::CIRCLE);
}

#[test]
fn manipulated_pair_without_adjacency_forbids_the_edge_out_of_the_target() {
    // A and B measured only with A manipulated and found independent: an
    // edge out of A would survive the manipulation, so only B -> A or a
    // confounder remain
    let truth = MixedGraph::new(["A", "B"], GraphKind::Smcm);
    let designs = [Design {
        observed: vec![0, 1],
        targets: set(&[0]),
    }];
    let obs = oracle_observations(&truth, &designs);
    let h = initialize_search_graph(truth.names(), &obs).unwrap();
    assert!(h.adjacent(0, 1));
    assert_eq!(h.mark(1, 0), Mark::ARROW);
    assert_eq!(h.mark(0, 1), Mark::CIRCLE);
}

#[test]
fn arrowhead_under_manipulation_of_the_other_end_is_kept() {
    // A -> B <- D with A manipulated: B -> A would be cut, but any path
    // leaving A that makes it adjacent to B puts B below A, so the arrow
    // still rules B -> A out
    let mut truth = MixedGraph::new(["A", "B", "D"], GraphKind::Smcm);
    truth.add_directed(0, 1);
    truth.add_directed(2, 1);
    let designs = [Design {
        observed: vec![0, 1, 2],
        targets: set(&[0]),
    }];
    let obs = oracle_observations(&truth, &designs);
    let h = initialize_search_graph(truth.names(), &obs).unwrap();
    assert_eq!(h.mark(0, 1), Mark::ARROW);
    assert_eq!(h.mark(2, 1), Mark::ARROW);
}

#[test]
fn path_enumeration_basics() {
    let none = NodeSet::new();
    let h = search_graph(4, &[(0, 1, Mark::CIRCLE, Mark::CIRCLE)]);
    assert!(enumerate_possible_paths(&h, 0, 2, PathMode::Inducing(&none), None).is_empty());
    let tri = search_graph(
        3,
        &[
            (0, 1, Mark::CIRCLE, Mark::CIRCLE),
            (1, 2, Mark::CIRCLE, Mark::CIRCLE),
            (0, 2, Mark::CIRCLE, Mark::CIRCLE),
        ],
    );
    let two = enumerate_possible_paths(&tri, 0, 2, PathMode::Inducing(&none), Some(2));
    assert_eq!(two, vec![vec![0, 1, 2], vec![0, 2]]);
    let one = enumerate_possible_paths(&tri, 0, 2, PathMode::Inducing(&none), Some(1));
    assert_eq!(one, vec![vec![0, 2]]);
    // a manipulated inner node blocks every path through it
    let t1 = set(&[1]);
    assert_eq!(
        enumerate_possible_paths(&tri, 0, 2, PathMode::Inducing(&t1), None),
        vec![vec![0, 2]]
    );
    assert_eq!(
        enumerate_possible_paths(&tri, 0, 2, PathMode::Ancestral(&t1), None),
        vec![vec![0, 2]]
    );
}

/// All simple paths from `x` to `y`, by brute force over node sequences.
fn all_simple_paths(h: &MixedGraph, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn go(h: &MixedGraph, y: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().unwrap();
        if cur == y {
            out.push(path.clone());
            return;
        }
        for next in 0..h.n() {
            if !path.contains(&next) && h.adjacent(cur, next) {
                path.push(next);
                go(h, y, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(h, y, &mut vec![x], &mut out);
    out
}

fn possibly_inducing(h: &MixedGraph, p: &[usize], targets: &NodeSet) -> bool {
    let m = p.len() - 1;
    p[1..m].iter().all(|v| !targets.contains(v))
        && !(targets.contains(&p[0]) && h.mark(p[1], p[0]) == Mark::ARROW)
        && !(targets.contains(&p[m]) && h.mark(p[m - 1], p[m]) == Mark::ARROW)
}

fn possibly_directed(h: &MixedGraph, p: &[usize], targets: &NodeSet) -> bool {
    p.windows(2)
        .all(|w| !targets.contains(&w[1]) && h.mark(w[1], w[0]) != Mark::ARROW)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn path_enumeration_matches_brute_force(seed in any::<u64>(), n in 2usize..=7, bound in proptest::option::of(1usize..=4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = MixedGraph::with_size(n, GraphKind::Search);
        let pick = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.3) { Mark::ARROW } else { Mark::CIRCLE };
        for x in 0..n {
            for y in x + 1..n {
                if rng.gen_bool(0.5) {
                    let (mx, my) = (pick(&mut rng), pick(&mut rng));
                    h.set_edge(x, y, mx, my);
                }
            }
        }
        let targets: NodeSet = (0..n).filter(|_| rng.gen_bool(0.25)).collect();
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        prop_assume!(x != y);
        let fits = |p: &Vec<usize>| bound.is_none_or(|b| p.len() - 1 <= b);
        let every = all_simple_paths(&h, x, y);
        let mut want: Vec<Vec<usize>> = every.iter().filter(|p| fits(p) && possibly_inducing(&h, p, &targets)).cloned().collect();
        want.sort();
        prop_assert_eq!(enumerate_possible_paths(&h, x, y, PathMode::Inducing(&targets), bound), want);
        let mut want: Vec<Vec<usize>> = every.iter().filter(|p| fits(p) && possibly_directed(&h, p, &targets)).cloned().collect();
        want.sort();
        prop_assert_eq!(enumerate_possible_paths(&h, x, y, PathMode::Ancestral(&targets), bound), want);
    }
}

#[test]
fn adjacency_to_a_manipulated_node_needs_an_edge_out_of_it() {
    // X14 and X15 measured with X15 manipulated and found dependent: the
    // only way is an edge out of X15
    let mut truth = MixedGraph::new(["X14", "X15"], GraphKind::Smcm);
    truth.add_directed(1, 0);
    let designs = [Design {
        observed: vec![0, 1],
        targets: set(&[1]),
    }];
    let p = problem_for(&truth, &designs, &EncodeConfig::default());
    let adj = Lit::pos(p.adjacent_var(0, 1, 0).unwrap());
    assert_eq!(p.soft[0].kind, LiteralKind::Adjacent);
    for s in all_smcms(2) {
        let mut lits = p.assignment_of(&s);
        lits.push(adj);
        let sat = check_sat(&p.cnf, &lits).unwrap().is_some();
        let out_of_x15 = s.adjacent(0, 1) && s.mark(0, 1).has_tail();
        assert_eq!(sat, out_of_x15, "{s:?}");
    }
}

#[test]
fn pair_without_candidate_paths_is_never_adjacent() {
    let truth = MixedGraph::new(["A", "B"], GraphKind::Smcm);
    let designs = [Design {
        observed: vec![0, 1],
        targets: NodeSet::new(),
    }];
    let p = problem_for(&truth, &designs, &EncodeConfig::default());
    assert!(!p.search.adjacent(0, 1));
    let adj = p.adjacent_var(0, 1, 0).unwrap();
    assert!(check_sat(&p.cnf, &[Lit::pos(adj)]).unwrap().is_none());
    assert!(check_sat(&p.cnf, &[Lit::neg(adj)]).unwrap().is_some());
    assert_eq!(p.soft[0].kind, LiteralKind::NonAdjacent);
    assert_eq!(p.soft[0].literal(), Lit::neg(adj));
}

#[test]
fn hard_clauses_admit_the_empty_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.gen_range(3..=5);
        let truth = random_smcm(&mut rng, n, 0.5);
        let designs = random_designs(&mut rng, n, 2);
        let p = problem_for(&truth, &designs, &EncodeConfig::default());
        let empty = MixedGraph::with_size(n, GraphKind::Smcm);
        assert!(check_sat(&p.cnf, &p.assignment_of(&empty))
            .unwrap()
            .is_some());
    }
}

#[test]
fn encoding_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = random_smcm(&mut rng, 5, 0.5);
    let designs = random_designs(&mut rng, 5, 3);
    let a = problem_for(&truth, &designs, &EncodeConfig::default());
    let b = problem_for(&truth, &designs, &EncodeConfig::default());
    assert_eq!(a.to_dimacs(), b.to_dimacs());
    assert_eq!(a.soft_json(), b.soft_json());
    assert_eq!(a.registry_json(), b.registry_json());
}

#[test]
fn sidecars_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = random_smcm(&mut rng, 4, 0.6);
    let designs = random_designs(&mut rng, 4, 2);
    let p = problem_for(&truth, &designs, &EncodeConfig::default());
    let soft: Vec<SoftLiteral> = serde_json::from_str(&p.soft_json()).unwrap();
    assert_eq!(soft, p.soft);
    let reg: serde_json::Value = serde_json::from_str(&p.registry_json()).unwrap();
    assert_eq!(
        reg["variables"].as_object().unwrap().len(),
        p.registry.len()
    );
    assert_eq!(reg["variables"]["1"], serde_json::json!({ "edge": [0, 1] }));
    let cnf = crate::solve::Cnf::parse_dimacs(&p.to_dimacs()).unwrap();
    assert_eq!(cnf.clauses(), p.cnf.clauses());
}

#[test]
fn decode_inverts_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = random_smcm(&mut rng, 4, 0.7);
    let designs = [Design {
        observed: vec![0, 1, 2, 3],
        targets: NodeSet::new(),
    }];
    let p = problem_for(&truth, &designs, &EncodeConfig::default());
    let model = check_sat(&p.cnf, &p.assignment_of(&truth))
        .unwrap()
        .unwrap();
    assert_eq!(p.decode(&model), truth);
}

#[test]
fn rejects_bad_input() {
    let h = MixedGraph::with_size(2, GraphKind::Smcm);
    assert!(build_constraints(&h, &[], &EncodeConfig::default()).is_err());
    let h = MixedGraph::with_size(2, GraphKind::Search);
    let zero = EncodeConfig {
        mpl: Some(0),
        full_ancestry: false,
    };
    assert!(build_constraints(&h, &[], &zero).is_err());
    let g = MixedGraph::new(["A", "B"], GraphKind::Dag);
    let fci = run_fci(&Oracle::full(g.clone()), g.names(), &FciConfig::default()).unwrap();
    let universe = vec!["A".to_string()];
    assert!(Observation::align(&universe, fci.clone(), &[]).is_err());
    let universe = vec!["A".to_string(), "B".to_string()];
    assert!(Observation::align(&universe, fci.clone(), &["C".to_string()]).is_err());
    let o = Observation::align(&universe, fci, &["B".to_string()]).unwrap();
    assert_eq!(o.targets, set(&[1]));
}

/// For every SMCM over the truth's nodes, the formula with all oracle
/// features and the SMCM's core assignment is satisfiable exactly when
/// the SMCM reproduces every dataset's separations.
fn check_exact(truth: &MixedGraph, designs: &[Design], candidates: &[MixedGraph]) {
    let p = problem_for(truth, designs, &unbounded());
    let f = features(&p);
    let mut solver = Solver::from_cnf(&p.cnf);
    let mut found = 0;
    for s in candidates {
        let want = consistent(s, truth, designs);
        let mut lits = f.clone();
        lits.extend(p.assignment_of(s));
        let got = solver.solve(&lits) == SolveResult::Sat;
        assert_eq!(
            got, want,
            "candidate {s:?}\ntruth {truth:?}\ndesigns {designs:?}"
        );
        found += usize::from(want);
    }
    assert!(found >= 1, "the truth is always consistent");
}

#[test]
fn satisfying_assignments_are_the_consistent_graphs_on_three_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let candidates = all_smcms(3);
    // two directed 3-cycles, each with any bidirected edges on top
    assert_eq!(candidates.len(), 216 - 2 * 8);
    for _ in 0..60 {
        let truth = random_smcm(&mut rng, 3, 0.7);
        let count = rng.gen_range(1..=3);
        let designs = random_designs(&mut rng, 3, count);
        check_exact(&truth, &designs, &candidates);
    }
}

#[test]
fn satisfying_assignments_are_the_consistent_graphs_on_four_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let candidates = all_smcms(4);
    for _ in 0..4 {
        let truth = random_smcm(&mut rng, 4, 0.6);
        let designs = random_designs(&mut rng, 4, 2);
        check_exact(&truth, &designs, &candidates);
    }
}

/// Inducing paths of `g` between `x` and `y` relative to `latent`, by brute
/// force over every choice of edge components.
fn inducing_paths(g: &MixedGraph, x: usize, y: usize, latent: &NodeSet) -> Vec<Vec<usize>> {
    let anc = g.ancestor_mask([x, y]);
    let mut out = Vec::new();
    for p in all_simple_paths(g, x, y) {
        let choices: Vec<Vec<(Mark, Mark)>> =
            p.windows(2).map(|w| g.simple_edges(w[0], w[1])).collect();
        let total: usize = choices.iter().map(Vec::len).product();
        let ok = (0..total).any(|mut code| {
            let picked: Vec<(Mark, Mark)> = choices
                .iter()
                .map(|c| {
                    let e = c[code % c.len()];
                    code /= c.len();
                    e
                })
                .collect();
            (1..p.len() - 1).all(|j| {
                let v = p[j];
                let collider = picked[j - 1].1 == Mark::ARROW && picked[j].0 == Mark::ARROW;
                if latent.contains(&v) {
                    !collider || anc[v]
                } else {
                    collider && anc[v]
                }
            })
        });
        if ok {
            out.push(p);
        }
    }
    out
}

fn directed_paths(g: &MixedGraph, a: usize, b: usize) -> Vec<Vec<usize>> {
    all_simple_paths(g, a, b)
        .into_iter()
        .filter(|p| p.windows(2).all(|w| g.is_parent(w[0], w[1])))
        .collect()
}

#[test]
fn every_path_of_a_consistent_graph_is_a_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let candidates = all_smcms(4);
    for _ in 0..3 {
        let truth = random_smcm(&mut rng, 4, 0.6);
        let designs = random_designs(&mut rng, 4, 2);
        let obs = oracle_observations(&truth, &designs);
        let h = initialize_search_graph(truth.names(), &obs).unwrap();
        for s in candidates
            .iter()
            .filter(|s| consistent(s, &truth, &designs))
        {
            for d in &designs {
                let g = manipulate(s, &d.targets).unwrap();
                let latent: NodeSet = (0..4).filter(|v| !d.observed.contains(v)).collect();
                for (a, &x) in d.observed.iter().enumerate() {
                    for &y in &d.observed[a + 1..] {
                        let have = enumerate_possible_paths(
                            &h,
                            x,
                            y,
                            PathMode::Inducing(&d.targets),
                            None,
                        );
                        for p in inducing_paths(&g, x, y, &latent) {
                            assert!(have.contains(&p), "missing inducing path {p:?} of {s:?}");
                        }
                    }
                }
                for a in 0..4 {
                    for b in (0..4).filter(|&b| b != a) {
                        let have = enumerate_possible_paths(
                            &h,
                            a,
                            b,
                            PathMode::Ancestral(&d.targets),
                            None,
                        );
                        for p in directed_paths(&g, a, b) {
                            assert!(have.contains(&p), "missing directed path {p:?} of {s:?}");
                        }
                    }
                }
            }
        }
    }
}
