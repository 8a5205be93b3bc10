use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use super::{Cnf, Lit, SatBackend};
use crate::error::Result;
use crate::Error;

static SEQ: AtomicU64 = AtomicU64::new(0);

/// A SAT solver run as a subprocess on a DIMACS file.
///
/// Assumptions are written as unit clauses. The process must print
/// `s SATISFIABLE` / `s UNSATISFIABLE` (or bare `SAT` / `UNSAT`) and, when
/// satisfiable, `v` lines with the model.
pub struct ExternalSolver {
    program: PathBuf,
    args: Vec<String>,
    cnf: Cnf,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>, cnf: Cnf) -> ExternalSolver {
        ExternalSolver {
            program: program.into(),
            args,
            cnf,
        }
    }
}

impl SatBackend for ExternalSolver {
    fn solve_with(&mut self, assumptions: &[Lit]) -> Result<Option<Vec<bool>>> {
        self.cnf.check_lits(assumptions)?;
        let mut cnf = self.cnf.clone();
        for &a in assumptions {
            cnf.add_clause([a]);
        }
        let path = std::env::temp_dir().join(format!(
            "causal-sat-{}-{}.cnf",
            std::process::id(),
            SEQ.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, cnf.to_dimacs())?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(&path)
            .output();
        let _ = std::fs::remove_file(&path);
        let output = output?;
        parse_output(
            &String::from_utf8_lossy(&output.stdout),
            cnf.n_vars() as usize,
        )
    }
}

fn parse_output(text: &str, n_vars: usize) -> Result<Option<Vec<bool>>> {
    let mut status = None;
    let mut model = vec![false; n_vars];
    for line in text.lines().map(str::trim) {
        let body = line.strip_prefix("s ").unwrap_or(line);
        match body {
            "SATISFIABLE" | "SAT" => status = Some(true),
            "UNSATISFIABLE" | "UNSAT" => status = Some(false),
            _ => {}
        }
        if let Some(values) = line.strip_prefix("v ").or_else(|| line.strip_prefix("v\t")) {
            for tok in values.split_whitespace() {
                let d: i64 = tok.parse().map_err(|_| {
                    Error::Input(format!("bad model token '{tok}' from external solver"))
                })?;
                if d != 0 {
                    let l = Lit::from_dimacs(d)?;
                    if let Some(slot) = model.get_mut(l.var() as usize) {
                        *slot = !l.is_neg();
                    }
                }
            }
        }
    }
    match status {
        Some(true) => Ok(Some(model)),
        Some(false) => Ok(None),
        None => Err(Error::Input(
            "external solver printed no SAT/UNSAT status".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{backbone_with, compute_backbone};

    #[test]
    fn parses_competition_output() {
        let m = parse_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3)
            .unwrap()
            .unwrap();
        assert_eq!(m, vec![true, false, true]);
        assert_eq!(parse_output("UNSAT\n", 2).unwrap(), None);
        assert!(parse_output("nothing\n", 2).is_err());
    }

    const BRUTE: &str = r#"
import sys, itertools
cls, n = [], 0
for line in open(sys.argv[1]):
    t = line.split()
    if not t or t[0] in ('c', 'p'):
        if t and t[0] == 'p': n = int(t[2])
        continue
    cls.append([int(x) for x in t if x != '0'])
for bits in itertools.product([False, True], repeat=n):
    if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in cls):
        print('s SATISFIABLE')
        print('v ' + ' '.join(str(i + 1 if b else -(i + 1)) for i, b in enumerate(bits)) + ' 0')
        sys.exit(10)
print('s UNSATISFIABLE')
sys.exit(20)
"#;

    #[test]
    fn external_backend_agrees_with_embedded() {
        if Command::new("python3").arg("--version").output().is_err() {
            eprintln!("python3 not available; skipping");
            return;
        }
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("brute.py");
        std::fs::write(&script, BRUTE).unwrap();
        let mut cnf = Cnf::with_vars(4);
        cnf.add_clause([Lit::pos(0), Lit::pos(1)]);
        cnf.add_clause([Lit::neg(0)]);
        cnf.add_clause([Lit::neg(2), Lit::pos(3)]);
        let mut ext =
            ExternalSolver::new("python3", vec![script.display().to_string()], cnf.clone());
        let got = backbone_with(&mut ext, &[], &[0, 1, 2, 3]).unwrap();
        assert_eq!(
            got.atoms,
            compute_backbone(&cnf, &[], &[0, 1, 2, 3]).unwrap().atoms
        );
    }
}
