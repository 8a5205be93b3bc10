use std::fmt;
use std::fmt::Write as _;
use std::ops::Not;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{input, Result};

/// Zero-based propositional variable.
pub type Var = u32;

/// A literal, packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn pos(v: Var) -> Lit {
        Lit(v << 1)
    }
    #[inline]
    pub fn neg(v: Var) -> Lit {
        Lit(v << 1 | 1)
    }
    #[inline]
    pub fn new(v: Var, positive: bool) -> Lit {
        if positive {
            Lit::pos(v)
        } else {
            Lit::neg(v)
        }
    }
    #[inline]
    pub fn var(self) -> Var {
        self.0 >> 1
    }
    #[inline]
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS form: one-based, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(d: i64) -> Result<Lit> {
        if d == 0 || d.unsigned_abs() > u32::MAX as u64 / 2 {
            return input(format!("invalid DIMACS literal {d}"));
        }
        let v = (d.unsigned_abs() - 1) as Var;
        Ok(Lit::new(v, d > 0))
    }

    /// Truth value of this literal under a full assignment.
    #[inline]
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var() as usize] != self.is_neg()
    }
}

impl Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl Serialize for Lit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.to_dimacs())
    }
}

impl<'de> Deserialize<'de> for Lit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Lit, D::Error> {
        let v = i64::deserialize(d)?;
        Lit::from_dimacs(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A formula in conjunctive normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    n_vars: u32,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Cnf {
        Cnf::default()
    }

    pub fn with_vars(n_vars: u32) -> Cnf {
        Cnf {
            n_vars,
            clauses: Vec::new(),
        }
    }

    pub fn new_var(&mut self) -> Var {
        self.n_vars += 1;
        self.n_vars - 1
    }

    /// Grows the variable count to at least `n`.
    pub fn ensure_vars(&mut self, n: u32) {
        self.n_vars = self.n_vars.max(n);
    }

    pub fn n_vars(&self) -> u32 {
        self.n_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Adds a clause, growing the variable count if needed.
    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) {
        let clause: Vec<Lit> = lits.into_iter().collect();
        for l in &clause {
            self.n_vars = self.n_vars.max(l.var() + 1);
        }
        self.clauses.push(clause);
    }

    pub fn check_lits(&self, lits: &[Lit]) -> Result<()> {
        match lits.iter().find(|l| l.var() >= self.n_vars) {
            Some(l) => input(format!("literal {l:?} refers to an unknown variable")),
            None => Ok(()),
        }
    }

    /// Whether `model` satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(model)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<Cnf> {
        let mut cnf = Cnf::new();
        let mut declared: Option<(u32, usize)> = None;
        let mut current = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                match parts.as_slice() {
                    ["cnf", v, c] => {
                        let v: u32 = v
                            .parse()
                            .map_err(|_| crate::Error::Input("bad DIMACS header".into()))?;
                        let c: usize = c
                            .parse()
                            .map_err(|_| crate::Error::Input("bad DIMACS header".into()))?;
                        declared = Some((v, c));
                        cnf.n_vars = v;
                    }
                    _ => return input(format!("bad DIMACS header '{line}'")),
                }
                continue;
            }
            for tok in line.split_whitespace() {
                let d: i64 = tok
                    .parse()
                    .map_err(|_| crate::Error::Input(format!("bad DIMACS token '{tok}'")))?;
                if d == 0 {
                    cnf.add_clause(std::mem::take(&mut current));
                } else {
                    current.push(Lit::from_dimacs(d)?);
                }
            }
        }
        if !current.is_empty() {
            cnf.add_clause(current);
        }
        if let Some((v, c)) = declared {
            if cnf.n_vars > v {
                return input(format!("DIMACS literal exceeds the declared {v} variables"));
            }
            if cnf.clauses.len() != c {
                return input(format!(
                    "DIMACS header declares {c} clauses, found {}",
                    cnf.clauses.len()
                ));
            }
        }
        Ok(cnf)
    }
}
