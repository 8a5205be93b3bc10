//! Satisfiability under assumptions and backbone extraction.

mod cnf;
mod external;
mod solver;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::Error;

pub use cnf::{Cnf, Lit, Var};
pub use external::ExternalSolver;
pub use solver::{SolveResult, Solver};

/// Anything that can decide the formula it was built from under assumptions.
pub trait SatBackend {
    /// A model if the formula plus `assumptions` is satisfiable.
    fn solve_with(&mut self, assumptions: &[Lit]) -> Result<Option<Vec<bool>>>;
}

impl SatBackend for Solver {
    fn solve_with(&mut self, assumptions: &[Lit]) -> Result<Option<Vec<bool>>> {
        Ok(match self.solve(assumptions) {
            SolveResult::Sat => Some(self.model().to_vec()),
            SolveResult::Unsat => None,
        })
    }
}

/// Decides `cnf` under `assumptions`, returning a model when satisfiable.
pub fn check_sat(cnf: &Cnf, assumptions: &[Lit]) -> Result<Option<Vec<bool>>> {
    cnf.check_lits(assumptions)?;
    Solver::from_cnf(cnf).solve_with(assumptions)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    ForcedTrue,
    ForcedFalse,
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackboneReport {
    pub atoms: BTreeMap<Var, Polarity>,
    pub solver_calls: usize,
}

impl BackboneReport {
    pub fn get(&self, v: Var) -> Option<Polarity> {
        self.atoms.get(&v).copied()
    }
}

/// Classifies each candidate as true in every model of `cnf ∧ fixed`, false
/// in every model, or free.
///
/// One query per candidate at most: a candidate is forced when flipping its
/// value in the first model is unsatisfiable, and every candidate that
/// differs between two models found along the way is free without a query.
pub fn compute_backbone(cnf: &Cnf, fixed: &[Lit], candidates: &[Var]) -> Result<BackboneReport> {
    cnf.check_lits(fixed)?;
    let cand_lits: Vec<Lit> = candidates.iter().map(|&v| Lit::pos(v)).collect();
    cnf.check_lits(&cand_lits)?;
    backbone_with(&mut Solver::from_cnf(cnf), fixed, candidates)
}

pub fn backbone_with<B: SatBackend>(
    backend: &mut B,
    fixed: &[Lit],
    candidates: &[Var],
) -> Result<BackboneReport> {
    let mut calls = 1;
    let first = backend.solve_with(fixed)?.ok_or_else(|| {
        Error::Precondition("formula is unsatisfiable under the fixed literals".into())
    })?;
    let mut assumptions = fixed.to_vec();
    let mut free: HashSet<Var> = HashSet::new();
    let mut atoms = BTreeMap::new();
    for &v in candidates {
        if atoms.contains_key(&v) || free.contains(&v) {
            continue;
        }
        let value = first[v as usize];
        assumptions.push(Lit::new(v, !value));
        calls += 1;
        let result = backend.solve_with(&assumptions)?;
        assumptions.pop();
        match result {
            None => {
                atoms.insert(
                    v,
                    if value {
                        Polarity::ForcedTrue
                    } else {
                        Polarity::ForcedFalse
                    },
                );
                assumptions.push(Lit::new(v, value));
            }
            Some(model) => {
                for &u in candidates {
                    if model[u as usize] != first[u as usize] {
                        free.insert(u);
                    }
                }
            }
        }
    }
    for v in free {
        atoms.insert(v, Polarity::Free);
    }
    Ok(BackboneReport {
        atoms,
        solver_calls: calls,
    })
}
