//! Random causal models, interventional samples drawn from them, and the
//! scores of a learned summary against the generating graph.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::graph::{latent_projection, GraphDoc, GraphKind, MixedGraph, NodeSet};
use crate::pipeline::{run_on_datasets, Manifest, ManifestEntry, RunConfig};
use crate::stats::{Dataset, ValueKind};
use crate::summary::{EdgeStatus, EndMark, SummaryGraph};
use crate::Error;

/// Smallest absolute partial correlation of a child with each parent given
/// its other parents.
pub const MIN_PARTIAL_CORRELATION: f64 = 0.2;
const COEFFICIENT_RANGE: (f64, f64) = (0.1, 1.0);
const MAX_DRAWS: usize = 1000;

fn variable_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// Random DAG over `X1..Xn`: nodes are put in a shuffled order, each draws a
/// parent count uniformly from `0..=min(max_parents, position)` and that
/// many parents uniformly from its predecessors.
pub fn random_dag(n: usize, max_parents: usize, seed: u64) -> MixedGraph {
    random_dag_with(&mut ChaCha8Rng::seed_from_u64(seed), n, max_parents).0
}

/// The DAG and its generating order.
fn random_dag_with(rng: &mut impl Rng, n: usize, max_parents: usize) -> (MixedGraph, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = MixedGraph::new(variable_names(n), GraphKind::Dag);
    for pos in 0..n {
        let k = rng.gen_range(0..=max_parents.min(pos));
        for i in index::sample(rng, pos, k) {
            g.add_directed(order[i], order[pos]);
        }
    }
    (g, order)
}

/// A topological order of a DAG.
fn topological_order(dag: &MixedGraph) -> Vec<usize> {
    let n = dag.n();
    let mut indegree: Vec<usize> = (0..n).map(|v| dag.parents(v).count()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        out.push(v);
        for c in dag.children(v) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    out
}

/// Linear structural equations with unit-variance Gaussian noise on a DAG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussian {
    pub names: Vec<String>,
    /// `(parent, child, coefficient)` per edge.
    pub edges: Vec<(usize, usize, f64)>,
}

impl LinearGaussian {
    /// Coefficients of random sign and magnitude in `[0.1, 1]`, redrawn per
    /// child until every parent keeps a partial correlation of at least 0.2
    /// with it given the other parents.
    pub fn random(dag: &MixedGraph, rng: &mut impl Rng) -> Result<LinearGaussian> {
        if dag.kind() != GraphKind::Dag {
            return input("linear Gaussian models need a DAG");
        }
        let n = dag.n();
        let mut w = DMatrix::<f64>::zeros(n, n);
        for c in topological_order(dag) {
            let parents: Vec<usize> = dag.parents(c).collect();
            if parents.is_empty() {
                continue;
            }
            let mut accepted = false;
            for _ in 0..MAX_DRAWS {
                for &p in &parents {
                    let size = rng.gen_range(COEFFICIENT_RANGE.0..=COEFFICIENT_RANGE.1);
                    w[(p, c)] = if rng.gen() { size } else { -size };
                }
                let cov = covariance(&w);
                if parents.iter().all(|&p| {
                    partial_correlation(&cov, c, &parents, p).abs() >= MIN_PARTIAL_CORRELATION
                }) {
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                return Err(Error::Degenerate(format!(
                    "no coefficients for {} reach the partial correlation floor",
                    dag.name(c)
                )));
            }
        }
        let mut edges = Vec::new();
        for c in 0..n {
            for p in dag.parents(c) {
                edges.push((p, c, w[(p, c)]));
            }
        }
        edges.sort_by_key(|&(p, c, _)| (p, c));
        Ok(LinearGaussian {
            names: dag.names().to_vec(),
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn weights(&self) -> DMatrix<f64> {
        let mut w = DMatrix::<f64>::zeros(self.n(), self.n());
        for &(p, c, b) in &self.edges {
            w[(p, c)] = b;
        }
        w
    }

    /// Covariance of all variables without interventions.
    pub fn covariance(&self) -> DMatrix<f64> {
        covariance(&self.weights())
    }

    /// `rows` joint samples, column per variable, with each target set to
    /// independent standard normal noise.
    pub fn sample(&self, rows: usize, targets: &NodeSet, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut dag = MixedGraph::new(self.names.iter().cloned(), GraphKind::Dag);
        for &(p, c, _) in &self.edges {
            dag.add_directed(p, c);
        }
        let order = topological_order(&dag);
        let w = self.weights();
        let mut cols: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(rows)).collect();
        let mut row = vec![0.0; n];
        for _ in 0..rows {
            for &v in &order {
                let noise: f64 = StandardNormal.sample(rng);
                row[v] = if targets.contains(&v) {
                    noise
                } else {
                    noise + dag.parents(v).map(|p| w[(p, v)] * row[p]).sum::<f64>()
                };
            }
            for (col, &x) in cols.iter_mut().zip(&row) {
                col.push(x);
            }
        }
        cols
    }
}

/// `Cov(x)` for `x = W^T x + e` with unit-variance independent noise.
fn covariance(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let a = (DMatrix::<f64>::identity(n, n) - w.transpose())
        .try_inverse()
        .expect("weights of a DAG give an invertible system");
    &a * a.transpose()
}

/// Partial correlation of `c` and `p` given the rest of `parents`.
pub fn partial_correlation(cov: &DMatrix<f64>, c: usize, parents: &[usize], p: usize) -> f64 {
    let vars: Vec<usize> = std::iter::once(c).chain(parents.iter().copied()).collect();
    let k = vars.len();
    let sub = DMatrix::from_fn(k, k, |i, j| cov[(vars[i], vars[j])]);
    let prec = sub.try_inverse().expect("positive definite covariance");
    let j = 1 + parents.iter().position(|&q| q == p).expect("p is a parent");
    -prec[(0, j)] / (prec[(0, 0)] * prec[(j, j)]).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_datasets: usize,
    pub max_latent: usize,
    pub max_manip: usize,
    pub n_rows: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_datasets: 5,
            max_latent: 3,
            max_manip: 2,
            n_rows: 1000,
        }
    }
}

/// Latent, manipulated and measured variables of one dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimDesign {
    pub observed: Vec<usize>,
    pub targets: NodeSet,
    pub latent: NodeSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedStudy {
    pub dag: MixedGraph,
    pub model: LinearGaussian,
    /// The SMCM over the variables measured in some dataset.
    pub truth: MixedGraph,
    pub designs: Vec<SimDesign>,
    pub datasets: Vec<Dataset>,
    pub seed: u64,
}

/// What `study.json` records about a generated study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyDoc {
    pub dag: GraphDoc,
    pub model: LinearGaussian,
    pub designs: Vec<SimDesign>,
    pub seed: u64,
}

/// Every variable is measured unmanipulated in some dataset.
pub fn is_conservative(n: usize, designs: &[SimDesign]) -> bool {
    (0..n).all(|v| {
        designs
            .iter()
            .any(|d| d.observed.contains(&v) && !d.targets.contains(&v))
    })
}

fn draw_designs(rng: &mut impl Rng, n: usize, config: &StudyConfig) -> Vec<SimDesign> {
    (0..config.n_datasets)
        .map(|_| {
            let mut vars: Vec<usize> = (0..n).collect();
            vars.shuffle(rng);
            let l = rng.gen_range(0..=config.max_latent);
            let latent: NodeSet = vars[..l].iter().copied().collect();
            let m = rng.gen_range(0..=config.max_manip).min(n - l);
            let targets: NodeSet = vars[l..l + m].iter().copied().collect();
            let observed = (0..n).filter(|v| !latent.contains(v)).collect();
            SimDesign {
                observed,
                targets,
                latent,
            }
        })
        .collect()
}

/// Draws a linear Gaussian model on `dag` and one dataset per design: up to
/// `max_latent` variables hidden and up to `max_manip` of the rest set by
/// intervention, designs redrawn until the family is conservative.
pub fn sample_study(dag: &MixedGraph, config: &StudyConfig, seed: u64) -> Result<GeneratedStudy> {
    let n = dag.n();
    if config.n_datasets == 0 || config.n_rows < 2 {
        return input("a study needs at least one dataset of two rows");
    }
    if config.max_latent + 2 > n || config.max_manip > n {
        return input(format!(
            "caps of {} latent and {} manipulated do not fit {n} variables",
            config.max_latent, config.max_manip
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = LinearGaussian::random(dag, &mut rng)?;
    let designs = loop {
        let d = draw_designs(&mut rng, n, config);
        if is_conservative(n, &d) {
            break d;
        }
    };
    let mut datasets = Vec::with_capacity(designs.len());
    for d in &designs {
        let cols = model.sample(config.n_rows, &d.targets, &mut rng);
        let names = d
            .observed
            .iter()
            .map(|&v| dag.name(v).to_string())
            .collect();
        let columns = d.observed.iter().map(|&v| cols[v].clone()).collect();
        let targets = d
            .observed
            .iter()
            .enumerate()
            .filter(|(_, v)| d.targets.contains(v))
            .map(|(i, _)| i)
            .collect();
        datasets.push(Dataset::new(
            names,
            columns,
            targets,
            ValueKind::Continuous,
        )?);
    }
    let never: NodeSet = (0..n)
        .filter(|v| designs.iter().all(|d| !d.observed.contains(v)))
        .collect();
    let truth = latent_projection(&dag.clone().with_kind(GraphKind::Smcm), &never)?;
    Ok(GeneratedStudy {
        dag: dag.clone(),
        model,
        truth,
        designs,
        datasets,
        seed,
    })
}

impl GeneratedStudy {
    /// Writes `dataset_<i>.csv` files, their `manifest.json`, the generating
    /// graph as `truth.json` and the study itself as `study.json`. Returns
    /// the manifest path.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for (i, d) in self.datasets.iter().enumerate() {
            let file = format!("dataset_{i}.csv");
            d.write_csv(dir.join(&file))?;
            entries.push(ManifestEntry {
                csv_path: file.into(),
                intervention_targets: d.target_names(),
                value_kind: ValueKind::Continuous,
            });
        }
        let manifest = Manifest {
            base: dir.to_path_buf(),
            entries,
        };
        let path = dir.join("manifest.json");
        manifest.save(&path)?;
        std::fs::write(dir.join("truth.json"), self.truth.to_json())?;
        std::fs::write(
            dir.join("study.json"),
            serde_json::to_string_pretty(&StudyDoc {
                dag: GraphDoc::from_graph(&self.dag),
                model: self.model.clone(),
                designs: self.designs.clone(),
                seed: self.seed,
            })?,
        )?;
        Ok(path)
    }
}

/// Precision and recall of the solid features of a summary against the
/// generating SMCM. Ratios with a zero denominator are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub s_precision: Option<f64>,
    pub s_recall: Option<f64>,
    pub o_precision: Option<f64>,
    pub o_recall: Option<f64>,
    pub dashed_edge_fraction: Option<f64>,
    pub dashed_endpoint_fraction: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Scores `h` against `g`. Only solid edges and their fixed endpoints count
/// towards precision and recall.
pub fn score_summary(h: &SummaryGraph, g: &MixedGraph) -> Result<QualityReport> {
    let mut a: Vec<&String> = h.nodes.iter().collect();
    let mut b: Vec<&String> = g.names().iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return input("summary and graph have different variables");
    }
    let g_edges = g.edge_count();
    let (mut solid, mut solid_hits) = (0, 0);
    let (mut oriented, mut orient_hits) = (0, 0);
    let (mut dashed, mut circles) = (0, 0);
    for e in &h.edges {
        circles += [e.mark_at_x, e.mark_at_y]
            .iter()
            .filter(|&&m| m == EndMark::Circle)
            .count();
        if e.status == EdgeStatus::Dashed {
            dashed += 1;
            continue;
        }
        solid += 1;
        let (x, y) = (g.index_of(&e.x)?, g.index_of(&e.y)?);
        let present = g.adjacent(x, y);
        solid_hits += usize::from(present);
        for (mark, at, other) in [(e.mark_at_x, x, y), (e.mark_at_y, y, x)] {
            if mark == EndMark::Circle {
                continue;
            }
            oriented += 1;
            orient_hits += usize::from(present && EndMark::of(g.mark(other, at)) == mark);
        }
    }
    Ok(QualityReport {
        s_precision: ratio(solid_hits, solid),
        s_recall: ratio(solid_hits, g_edges),
        o_precision: ratio(orient_hits, oriented),
        o_recall: ratio(orient_hits, 2 * g_edges),
        dashed_edge_fraction: ratio(dashed, h.edges.len()),
        dashed_endpoint_fraction: ratio(circles, 2 * h.edges.len()),
    })
}

/// One repetition of the simulation protocol: random DAG, study, learning
/// from the samples, and the scores of the result.
pub fn experiment(
    n_vars: usize,
    max_parents: usize,
    study: &StudyConfig,
    run: &RunConfig,
    seed: u64,
) -> Result<QualityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dag, _) = random_dag_with(&mut rng, n_vars, max_parents);
    let s = sample_study(&dag, study, rng.gen())?;
    let out = run_on_datasets(&s.datasets, run)?;
    score_summary(&out.summary, &s.truth)
}

/// Median of the defined values.
pub fn median(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().flatten().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

#[cfg(test)]
mod tests;
