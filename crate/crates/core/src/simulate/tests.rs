use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::*;
use crate::pipeline::run_pipeline;
use crate::stats::FisherZ;
use crate::summary::SummaryEdge;

#[test]
fn random_dags_are_acyclic_and_bounded() {
    for seed in 0..50 {
        let g = random_dag(12, 3, seed);
        assert_eq!(g.kind(), GraphKind::Dag);
        assert_eq!(g.names()[0], "X1");
        assert!(!g.has_directed_cycle());
        assert!((0..12).all(|v| g.parents(v).count() <= 3));
        assert_eq!(topological_order(&g).len(), 12);
        assert_eq!(random_dag(12, 3, seed), g);
    }
    assert_eq!(random_dag(0, 3, 1).n(), 0);
    assert_eq!(random_dag(5, 0, 1).edge_count(), 0);
}

#[test]
fn parent_counts_are_uniform_per_position() {
    // position 4 of 6 with at most 3 parents: counts uniform on 0..=3
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 4];
    let mut picked = [0usize; 4];
    let draws = 8000;
    for _ in 0..draws {
        let (g, order) = random_dag_with(&mut rng, 6, 3);
        let parents: Vec<usize> = g.parents(order[4]).collect();
        counts[parents.len()] += 1;
        for p in parents {
            picked[order.iter().position(|&v| v == p).unwrap()] += 1;
        }
    }
    let expected = draws as f64 / 4.0;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(ChiSquared::new(3.0).unwrap().sf(stat) > 1e-3, "{counts:?}");
    // each predecessor is picked equally often
    let total: usize = picked.iter().sum();
    let expected = total as f64 / 4.0;
    let stat: f64 = picked
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(ChiSquared::new(3.0).unwrap().sf(stat) > 1e-3, "{picked:?}");
}

#[test]
fn every_parent_keeps_the_partial_correlation_floor() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dag, _) = random_dag_with(&mut rng, 10, 4);
        let model = LinearGaussian::random(&dag, &mut rng).unwrap();
        let cov = model.covariance();
        for c in 0..10 {
            let parents: Vec<usize> = dag.parents(c).collect();
            for &p in &parents {
                assert!(partial_correlation(&cov, c, &parents, p).abs() >= MIN_PARTIAL_CORRELATION);
            }
        }
        assert_eq!(model.edges.len(), dag.edge_count());
    }
}

fn dataset(model: &LinearGaussian, rows: usize, targets: &NodeSet, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = model.sample(rows, targets, &mut rng);
    Dataset::new(
        model.names.clone(),
        cols,
        targets.clone(),
        ValueKind::Continuous,
    )
    .unwrap()
}

#[test]
fn samples_match_the_implied_partial_correlations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (dag, _) = random_dag_with(&mut rng, 6, 3);
    let model = LinearGaussian::random(&dag, &mut rng).unwrap();
    let cov = model.covariance();
    let d = dataset(&model, 20000, &NodeSet::new(), 12);
    let fz = FisherZ::new(&d).unwrap();
    for c in 0..6 {
        let parents: Vec<usize> = dag.parents(c).collect();
        for &p in &parents {
            let rest: Vec<usize> = parents.iter().copied().filter(|&q| q != p).collect();
            let empirical = fz.partial_correlation(c, p, &rest).unwrap();
            assert!((empirical - partial_correlation(&cov, c, &parents, p)).abs() < 0.05);
        }
    }
}

#[test]
fn manipulated_variables_are_standard_normal_and_cut_off() {
    // X1 -> X2 -> X3 and X1 -> X3, with X2 set by intervention
    let mut dag = MixedGraph::new(variable_names(3), GraphKind::Dag);
    dag.add_directed(0, 1);
    dag.add_directed(1, 2);
    dag.add_directed(0, 2);
    let model = LinearGaussian::random(&dag, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let targets: NodeSet = [1].into_iter().collect();
    let d = dataset(&model, 20000, &targets, 4);
    let col = d.column(1);
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.03 && (sd - 1.0).abs() < 0.03, "{mean} {sd}");
    let fz = FisherZ::new(&d).unwrap();
    assert!(fz.partial_correlation(1, 0, &[]).unwrap().abs() < 0.03);
    // the child still listens to its manipulated parent
    assert!(fz.partial_correlation(2, 1, &[0]).unwrap().abs() > 0.1);
}

fn small_config() -> StudyConfig {
    StudyConfig {
        n_datasets: 3,
        max_latent: 2,
        max_manip: 2,
        n_rows: 300,
    }
}

#[test]
fn studies_respect_their_caps() {
    for seed in 0..30 {
        let dag = random_dag(7, 3, seed);
        let s = sample_study(&dag, &small_config(), seed).unwrap();
        assert!(is_conservative(7, &s.designs));
        assert_eq!(s.truth.kind(), GraphKind::Smcm);
        assert_eq!(s.truth.n(), 7);
        for (design, data) in s.designs.iter().zip(&s.datasets) {
            assert!(design.latent.len() <= 2 && design.targets.len() <= 2);
            assert!(design.targets.is_disjoint(&design.latent));
            assert_eq!(design.observed.len() + design.latent.len(), 7);
            assert_eq!(data.rows(), 300);
            let names: Vec<&str> = design.observed.iter().map(|&v| dag.name(v)).collect();
            assert_eq!(data.names(), names.as_slice());
            assert_eq!(data.targets().len(), design.targets.len());
        }
        assert_eq!(sample_study(&dag, &small_config(), seed).unwrap(), s);
    }
}

#[test]
fn infeasible_studies_are_rejected() {
    let dag = random_dag(4, 2, 0);
    let bad = |c: StudyConfig| sample_study(&dag, &c, 0).is_err();
    assert!(bad(StudyConfig {
        max_latent: 3,
        ..small_config()
    }));
    assert!(bad(StudyConfig {
        max_manip: 5,
        ..small_config()
    }));
    assert!(bad(StudyConfig {
        n_datasets: 0,
        ..small_config()
    }));
    assert!(bad(StudyConfig {
        n_rows: 1,
        ..small_config()
    }));
    let cyclic = MixedGraph::new(["A"], GraphKind::Smcm);
    assert!(sample_study(&cyclic, &small_config(), 0).is_err());
}

#[test]
fn written_studies_load_as_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let dag = random_dag(5, 2, 9);
    let s = sample_study(&dag, &small_config(), 9).unwrap();
    let path = s.write(dir.path()).unwrap();
    let manifest = Manifest::load(&path).unwrap();
    assert_eq!(manifest.entries.len(), 3);
    let loaded = manifest.read_datasets().unwrap();
    for (a, b) in loaded.iter().zip(&s.datasets) {
        assert_eq!(a.names(), b.names());
        assert_eq!(a.targets(), b.targets());
        for j in 0..a.n_vars() {
            assert_eq!(a.column(j), b.column(j));
        }
    }
    let truth =
        MixedGraph::from_json(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth, s.truth);
    let doc: StudyDoc =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("study.json")).unwrap())
            .unwrap();
    assert_eq!(doc.designs, s.designs);
    let out = run_pipeline(&manifest, &RunConfig::default()).unwrap();
    assert_eq!(out.summary.nodes.len(), 5);
}

fn edge(x: &str, y: &str, status: EdgeStatus, mx: EndMark, my: EndMark) -> SummaryEdge {
    SummaryEdge {
        x: x.into(),
        y: y.into(),
        status,
        mark_at_x: mx,
        mark_at_y: my,
    }
}

#[test]
fn scores_of_a_hand_built_summary() {
    // truth A -> B -> C -> D
    let mut g = MixedGraph::new(["A", "B", "C", "D"], GraphKind::Smcm);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_directed(2, 3);
    use EdgeStatus::*;
    use EndMark::*;
    let h = SummaryGraph {
        nodes: vec!["D".into(), "C".into(), "B".into(), "A".into()],
        edges: vec![
            edge("A", "B", Solid, Tail, Arrow),
            edge("B", "C", Solid, Circle, Circle),
            edge("D", "C", Solid, Arrow, Circle),
            edge("A", "D", Solid, Circle, Arrow),
            edge("A", "C", Dashed, Circle, Circle),
        ],
    };
    let r = score_summary(&h, &g).unwrap();
    assert_eq!(r.s_precision, Some(0.75));
    assert_eq!(r.s_recall, Some(1.0));
    // four fixed endpoints on solid edges: both of A-B and the arrow at D
    // are right, the arrow at D on the absent A-D is not
    assert_eq!(r.o_precision, Some(0.75));
    assert_eq!(r.o_recall, Some(0.5));
    assert_eq!(r.dashed_edge_fraction, Some(0.2));
    assert_eq!(r.dashed_endpoint_fraction, Some(0.6));

    let all_dashed = SummaryGraph {
        nodes: h.nodes.clone(),
        edges: vec![edge("A", "B", Dashed, Circle, Circle)],
    };
    let r = score_summary(&all_dashed, &g).unwrap();
    assert_eq!((r.s_precision, r.o_precision), (None, None));
    assert_eq!((r.s_recall, r.o_recall), (Some(0.0), Some(0.0)));

    let empty = MixedGraph::new(["A", "B", "C", "D"], GraphKind::Smcm);
    let r = score_summary(&SummaryGraph::empty(h.nodes.clone()), &empty).unwrap();
    assert_eq!(r.s_recall, None);
    assert_eq!(r.dashed_edge_fraction, None);

    let other = MixedGraph::new(["A", "B", "C", "E"], GraphKind::Smcm);
    assert!(score_summary(&h, &other).is_err());
}

#[test]
fn a_perfect_summary_scores_one() {
    let dag = random_dag(8, 3, 4).with_kind(GraphKind::Smcm);
    let r = score_summary(&SummaryGraph::of_graph(&dag), &dag).unwrap();
    if dag.edge_count() > 0 {
        assert_eq!((r.s_precision, r.s_recall), (Some(1.0), Some(1.0)));
        assert_eq!((r.o_precision, r.o_recall), (Some(1.0), Some(1.0)));
        assert_eq!(r.dashed_edge_fraction, Some(0.0));
    }
}

#[test]
fn medians() {
    assert_eq!(median([Some(3.0), None, Some(1.0), Some(2.0)]), Some(2.0));
    assert_eq!(median([Some(4.0), Some(1.0)]), Some(2.5));
    assert_eq!(median([None]), None);
}

#[test]
fn one_repetition_end_to_end() {
    let study = StudyConfig {
        n_datasets: 2,
        max_latent: 1,
        max_manip: 1,
        n_rows: 500,
    };
    let r = experiment(5, 2, &study, &RunConfig::default(), 1).unwrap();
    assert_eq!(
        experiment(5, 2, &study, &RunConfig::default(), 1).unwrap(),
        r
    );
    for v in [r.s_precision, r.s_recall, r.o_precision, r.o_recall]
        .into_iter()
        .flatten()
    {
        assert!((0.0..=1.0).contains(&v));
    }
}
