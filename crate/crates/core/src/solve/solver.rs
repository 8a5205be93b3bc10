//! Conflict-driven clause learning with two watched literals, first-UIP
//! learning, VSIDS branching, phase saving, Luby restarts and incremental
//! solving under assumptions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::cnf::{Cnf, Lit, Var};

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

type CRef = u32;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: Lit,
}

#[derive(Clone, Copy, PartialEq)]
struct Scored(f64, Var);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
}

pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<CRef>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: BinaryHeap<Scored>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    n_learnts: usize,
    max_learnts: f64,
    solves: usize,
    conflicts: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            order: BinaryHeap::new(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            n_learnts: 0,
            max_learnts: 0.0,
            solves: 0,
            conflicts: 0,
        }
    }

    pub fn from_cnf(cnf: &Cnf) -> Solver {
        let mut s = Solver::new();
        s.reserve_vars(cnf.n_vars());
        for c in cnf.clauses() {
            s.add_clause(c);
        }
        s
    }

    pub fn n_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    /// Number of `solve` calls so far.
    pub fn solve_calls(&self) -> usize {
        self.solves
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn reserve_vars(&mut self, n: u32) {
        while self.n_vars() < n {
            let v = self.n_vars();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(None);
            self.activity.push(0.0);
            self.phase.push(false);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.order.push(Scored(0.0, v));
        }
    }

    /// Model of the last satisfiable call, one value per variable.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var() as usize];
        if l.is_neg() {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a permanent clause. Returns `false` once the formula is known to
    /// be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        if let Some(max) = lits.iter().map(|l| l.var()).max() {
            self.reserve_vars(max + 1);
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        for w in c.windows(2) {
            if w[0] == !w[1] {
                return true;
            }
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return true;
        }
        c.retain(|&l| self.value(l) != FALSE);
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(c, false);
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> CRef {
        let cref = self.clauses.len() as CRef;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        if learnt {
            self.n_learnts += 1;
        }
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<CRef>) {
        let v = l.var() as usize;
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if l.is_neg() { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<CRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let clause = &mut self.clauses[cref as usize];
                if clause.deleted {
                    continue;
                }
                if clause.lits[0] == false_lit {
                    clause.lits.swap(0, 1);
                }
                let first = clause.lits[0];
                let first_val = {
                    let a = self.assigns[first.var() as usize];
                    if first.is_neg() {
                        -a
                    } else {
                        a
                    }
                };
                if first != w.blocker && first_val == TRUE {
                    ws[j] = Watcher {
                        cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.lits.len() {
                    let l = clause.lits[k];
                    let a = self.assigns[l.var() as usize];
                    let val = if l.is_neg() { -a } else { a };
                    if val != FALSE {
                        clause.lits.swap(1, k);
                        let new_watch = clause.lits[1];
                        self.watches[new_watch.code()].push(Watcher {
                            cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref,
                    blocker: first,
                };
                j += 1;
                if first_val == FALSE {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Some(cref));
                }
            }
            ws.truncate(j);
            // clauses may have been pushed onto this list while it was taken out
            let pushed = std::mem::replace(&mut self.watches[false_lit.code()], ws);
            self.watches[false_lit.code()].extend(pushed);
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for idx in (lim..self.trail.len()).rev() {
            let l = self.trail[idx];
            let v = l.var() as usize;
            self.phase[v] = !l.is_neg();
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.order.push(Scored(self.activity[v], l.var()));
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn bump_var(&mut self, v: Var) {
        let a = &mut self.activity[v as usize];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in self.activity.iter_mut() {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.rebuild_order();
        } else if self.assigns[v as usize] == UNDEF {
            self.order.push(Scored(*a, v));
        }
    }

    fn rebuild_order(&mut self) {
        self.order = (0..self.n_vars())
            .filter(|&v| self.assigns[v as usize] == UNDEF)
            .map(|v| Scored(self.activity[v as usize], v))
            .collect();
    }

    fn bump_clause(&mut self, cref: CRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the level to backtrack to.
    fn analyze(&mut self, mut confl: CRef) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::pos(0)];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            self.bump_clause(confl);
            let lits = self.clauses[confl as usize].lits.clone();
            let start = if p.is_some() { 1 } else { 0 };
            for &q in &lits[start..] {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(q.var());
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict involves the current level");

        // drop literals implied by others already in the clause
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                i == 0
                    || match self.reason[l.var() as usize] {
                        None => true,
                        Some(r) => self.clauses[r as usize].lits[1..].iter().any(|&q| {
                            !self.seen[q.var() as usize] && self.level[q.var() as usize] > 0
                        }),
                    }
            })
            .collect();
        for &l in &learnt {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter(|&(_, k)| k)
            .map(|(l, _)| l)
            .collect();

        let mut back = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[max_i].var() as usize] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            back = self.level[learnt[1].var() as usize];
        }
        (learnt, back)
    }

    fn locked(&self, cref: CRef) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.value(l) == TRUE && self.reason[l.var() as usize] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<CRef> = (0..self.clauses.len() as CRef)
            .filter(|&c| {
                let cl = &self.clauses[c as usize];
                cl.learnt && !cl.deleted
            })
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .total_cmp(&self.clauses[b as usize].activity)
        });
        let half = learnts.len() / 2;
        for &c in &learnts[..half] {
            if self.clauses[c as usize].lits.len() > 2 && !self.locked(c) {
                let cl = &mut self.clauses[c as usize];
                cl.deleted = true;
                cl.lits = Vec::new();
                self.n_learnts -= 1;
            }
        }
        let clauses = &self.clauses;
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(Scored(act, v)) = self.order.pop() {
            if self.assigns[v as usize] == UNDEF && act == self.activity[v as usize] {
                return Some(Lit::new(v, self.phase[v as usize]));
            }
        }
        // stale heap entries only; fall back to a scan
        (0..self.n_vars())
            .find(|&v| self.assigns[v as usize] == UNDEF)
            .map(|v| Lit::new(v, self.phase[v as usize]))
    }

    /// Solves the formula together with `assumptions`, which hold for this
    /// call only.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.solves += 1;
        if !self.ok {
            return SolveResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var()).max() {
            self.reserve_vars(max + 1);
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let base = self
            .clauses
            .iter()
            .filter(|c| !c.learnt && !c.deleted)
            .count() as f64;
        self.max_learnts = self.max_learnts.max(base / 3.0 + 1000.0);
        let mut restart = 0u32;
        loop {
            let budget = 100.0 * luby(2.0, restart);
            match self.search(budget as u64, assumptions) {
                Some(r) => {
                    self.cancel_until(0);
                    return r;
                }
                None => restart += 1,
            }
        }
    }

    fn search(&mut self, budget: u64, assumptions: &[Lit]) -> Option<SolveResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, back) = self.analyze(confl);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(asserting, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                continue;
            }
            if conflicts >= budget {
                self.cancel_until(0);
                return None;
            }
            if self.n_learnts as f64 - self.trail.len() as f64 >= self.max_learnts {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    TRUE => self.trail_lim.push(self.trail.len()),
                    FALSE => return Some(SolveResult::Unsat),
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let decision = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                        return Some(SolveResult::Sat);
                    }
                },
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(decision, None);
        }
    }
}

/// Luby restart sequence scaled by `y`.
fn luby(y: f64, mut x: u32) -> f64 {
    let (mut size, mut seq) = (1u32, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq as i32)
}
