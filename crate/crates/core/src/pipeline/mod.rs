//! End-to-end learning: per-dataset searches, the combined formula,
//! conflict resolution and the summary of all consistent SMCMs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{
    build_constraints, initialize_search_graph, CnfProblem, EncodeConfig, Observation,
};
use crate::error::{input, Result};
use crate::fci::{run_fci, FciConfig, FciResult};
use crate::graph::{manipulate, GraphDoc, MixedGraph, NodeSet};
use crate::resolve::{
    accept_all, pooled_pvalues, select_consistent_literals, BetaMixtureFit, Resolution,
};
use crate::solve::check_sat;
use crate::stats::{CiTest, Dataset, FisherZ, Oracle, ValueKind, G2};
use crate::summary::SummaryGraph;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    FisherZ,
    G2,
}

impl FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<TestKind> {
        match s {
            "fisher_z" | "fisher-z" => Ok(TestKind::FisherZ),
            "g2" => Ok(TestKind::G2),
            _ => input(format!("unknown test '{s}', expected fisher_z or g2")),
        }
    }
}

/// How conflicting features are reconciled before the backbone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Rank by maximum MAP ratio and keep a consistent prefix.
    Mmr,
    /// Keep every feature; conflicting input is an error.
    None,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "mmr" => Ok(Strategy::Mmr),
            "none" => Ok(Strategy::None),
            _ => input(format!("unknown strategy '{s}', expected mmr or none")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub max_k: usize,
    /// Longest candidate path in edges; `None` for no bound.
    pub mpl: Option<usize>,
    pub full_ancestry: bool,
    pub test: TestKind,
    pub strategy: Strategy,
    /// Run the Possible-D-Sep stage of each search.
    pub pds: bool,
    /// Recorded for reproducibility; learning itself draws no random numbers.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.1,
            max_k: 5,
            mpl: Some(3),
            full_ancestry: false,
            test: TestKind::FisherZ,
            strategy: Strategy::Mmr,
            pds: true,
            seed: 0,
        }
    }
}

impl RunConfig {
    fn fci(&self) -> FciConfig {
        FciConfig {
            alpha: self.alpha,
            max_k: self.max_k,
            pds: self.pds,
        }
    }

    fn encode(&self) -> EncodeConfig {
        EncodeConfig {
            mpl: self.mpl,
            full_ancestry: self.full_ancestry,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths are taken from the manifest's directory.
    pub csv_path: PathBuf,
    #[serde(default)]
    pub intervention_targets: Vec<String>,
    #[serde(default)]
    pub value_kind: ValueKind,
}

/// Datasets to learn from, each with its manipulated variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub base: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
        if entries.is_empty() {
            return input("manifest lists no datasets");
        }
        Ok(Manifest {
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.entries)?)?;
        Ok(())
    }

    pub fn read_datasets(&self) -> Result<Vec<Dataset>> {
        self.entries
            .iter()
            .map(|e| {
                Dataset::from_csv(
                    self.base.join(&e.csv_path),
                    &e.intervention_targets,
                    e.value_kind,
                )
            })
            .collect()
    }
}

/// Variables of all datasets in order of first appearance.
pub fn universe<'a>(var_lists: impl IntoIterator<Item = &'a [String]>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for list in var_lists {
        for v in list {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// Per-dataset part of the diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub variables: Vec<String>,
    pub targets: Vec<String>,
    pub pag: GraphDoc,
    pub tests: usize,
    pub triples: usize,
    pub discriminating_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub config: RunConfig,
    pub variables: Vec<String>,
    pub datasets: Vec<DatasetReport>,
    pub search_graph: GraphDoc,
    pub formula_variables: u32,
    pub formula_clauses: usize,
    pub soft_literals: usize,
    pub resolution: Resolution,
    pub backbone_solver_calls: usize,
    /// Wall-clock milliseconds per stage.
    pub timings_ms: BTreeMap<String, f64>,
}

impl Diagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }
}

pub struct RunOutput {
    pub summary: SummaryGraph,
    pub diagnostics: Diagnostics,
    pub problem: CnfProblem,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Combines searches already placed in the universe `names` into a summary.
pub fn learn(names: &[String], obs: Vec<Observation>, config: &RunConfig) -> Result<RunOutput> {
    learn_timed(names, obs, config, BTreeMap::new())
}

fn learn_timed(
    names: &[String],
    obs: Vec<Observation>,
    config: &RunConfig,
    mut timings: BTreeMap<String, f64>,
) -> Result<RunOutput> {
    if obs.is_empty() {
        return input("no datasets to learn from");
    }
    let t = Instant::now();
    let h = initialize_search_graph(names, &obs)?;
    let problem = build_constraints(&h, &obs, &config.encode())?;
    timings.insert("encode".into(), millis(t));
    let t = Instant::now();
    let resolution = match config.strategy {
        Strategy::None => {
            let r = accept_all(&problem);
            if check_sat(&problem.cnf, &r.accepted())?.is_none() {
                return Err(Error::Degenerate(
                    "the observed features conflict; use the mmr strategy to resolve them".into(),
                ));
            }
            r
        }
        Strategy::Mmr => {
            let pooled = pooled_pvalues(&problem);
            let fit = if pooled.is_empty() {
                BetaMixtureFit::fit(&[1.0])?
            } else {
                BetaMixtureFit::fit(&pooled)?
            };
            select_consistent_literals(&problem, &fit)?
        }
    };
    timings.insert("resolve".into(), millis(t));
    let t = Instant::now();
    let (summary, calls) = SummaryGraph::from_backbone(&problem, &resolution.accepted())?;
    timings.insert("backbone".into(), millis(t));
    let datasets = obs
        .iter()
        .map(|o| DatasetReport {
            variables: o.vars.iter().map(|&v| names[v].clone()).collect(),
            targets: o.targets.iter().map(|&v| names[v].clone()).collect(),
            pag: GraphDoc::from_graph(&o.fci.pag),
            tests: o.fci.cache.len(),
            triples: o.fci.triples.len(),
            discriminating_paths: o.fci.discriminating.len(),
        })
        .collect();
    let diagnostics = Diagnostics {
        config: *config,
        variables: names.to_vec(),
        datasets,
        search_graph: GraphDoc::from_graph(&h),
        formula_variables: problem.cnf.n_vars(),
        formula_clauses: problem.cnf.clauses().len(),
        soft_literals: problem.soft.len(),
        resolution,
        backbone_solver_calls: calls,
        timings_ms: timings,
    };
    Ok(RunOutput {
        summary,
        diagnostics,
        problem,
    })
}

fn searches(
    inputs: Vec<(Box<dyn CiTest + Send>, Vec<String>)>,
    config: &RunConfig,
) -> Result<Vec<FciResult>> {
    let cfg = config.fci();
    inputs
        .into_par_iter()
        .map(|(test, vars)| run_fci(test.as_ref(), &vars, &cfg))
        .collect()
}

/// Learns from the datasets of a manifest.
pub fn run_pipeline(manifest: &Manifest, config: &RunConfig) -> Result<RunOutput> {
    let t = Instant::now();
    let data = manifest.read_datasets()?;
    run_datasets(&data, config, t)
}

/// Learns from datasets already in memory.
pub fn run_on_datasets(data: &[Dataset], config: &RunConfig) -> Result<RunOutput> {
    run_datasets(data, config, Instant::now())
}

fn run_datasets(data: &[Dataset], config: &RunConfig, start: Instant) -> Result<RunOutput> {
    if data.is_empty() {
        return input("no datasets to learn from");
    }
    let names = universe(data.iter().map(Dataset::names));
    let mut inputs: Vec<(Box<dyn CiTest + Send>, Vec<String>)> = Vec::new();
    for d in data {
        let test: Box<dyn CiTest + Send> = match config.test {
            TestKind::FisherZ => Box::new(FisherZ::new(d)?),
            TestKind::G2 => Box::new(G2::new(d)?),
        };
        inputs.push((test, d.names().to_vec()));
    }
    let mut timings = BTreeMap::new();
    timings.insert("load".into(), millis(start));
    let t = Instant::now();
    let results = searches(inputs, config)?;
    timings.insert("search".into(), millis(t));
    let obs = results
        .into_iter()
        .zip(data)
        .map(|(fci, d)| Observation::align(&names, fci, &d.target_names()))
        .collect::<Result<Vec<_>>>()?;
    learn_timed(&names, obs, config, timings)
}

/// Measured variables and intervention targets of one simulated dataset,
/// by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub observed: Vec<String>,
    #[serde(default)]
    pub targets: Vec<String>,
}

/// Learns with every independence answered by m-separation in the
/// manipulated `truth`, the universe being the measured variables.
pub fn run_oracle(
    truth: &MixedGraph,
    designs: &[DesignSpec],
    config: &RunConfig,
) -> Result<RunOutput> {
    if designs.is_empty() {
        return input("no datasets to learn from");
    }
    let names = universe(designs.iter().map(|d| d.observed.as_slice()));
    let mut inputs: Vec<(Box<dyn CiTest + Send>, Vec<String>)> = Vec::new();
    for d in designs {
        let map = d
            .observed
            .iter()
            .map(|v| truth.index_of(v))
            .collect::<Result<Vec<_>>>()?;
        let targets = d
            .targets
            .iter()
            .map(|v| truth.index_of(v))
            .collect::<Result<NodeSet>>()?;
        let g = manipulate(truth, &targets)?;
        inputs.push((Box::new(Oracle::new(g, map)?), d.observed.clone()));
    }
    let t = Instant::now();
    let results = searches(inputs, config)?;
    let mut timings = BTreeMap::new();
    timings.insert("search".into(), millis(t));
    let obs = results
        .into_iter()
        .zip(designs)
        .map(|(fci, d)| Observation::align(&names, fci, &d.targets))
        .collect::<Result<Vec<_>>>()?;
    learn_timed(&names, obs, config, timings)
}
