//! Conflict resolution by maximum MAP ratio: fit a uniform plus Beta(ξ, 1)
//! mixture to the pooled p-values, score every soft literal by how strongly
//! its p-value favours one explanation, and accept literals greedily in score
//! order while they stay consistent with the hard clauses.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::encode::{CnfProblem, LiteralKind, SoftLiteral};
use crate::error::{input, Result};
use crate::solve::{Lit, SolveResult, Solver};
use crate::Error;

/// Fewer p-values than this give no usable mixture fit.
pub const MIN_PVALUES: usize = 20;
/// Mixture used when there are too few p-values to fit one.
pub const FALLBACK_PI0: f64 = 0.5;
pub const FALLBACK_XI: f64 = 0.5;
/// Smallest p-value used in any likelihood.
pub const P_FLOOR: f64 = 1e-300;
/// Upper cap on the null proportion wherever `1 - pi0` divides.
pub const PI0_CAP: f64 = 1.0 - 1e-3;
const PI0_FLOOR: f64 = 0.01;
const XI_BOUNDS: (f64, f64) = (1e-4, 1.0 - 1e-4);
const XI_TOL: f64 = 1e-6;

/// Null proportion and alternative shape of the p-value mixture
/// `pi0 * U(0, 1) + (1 - pi0) * Beta(xi, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaMixtureFit {
    pub pi0_hat: f64,
    pub xi_hat: f64,
    /// Number of p-values the fit was made from.
    pub n_pvalues: usize,
    /// The fixed fallback was used instead of a fit.
    pub fallback: bool,
}

impl BetaMixtureFit {
    /// Estimates the null proportion, then the shape that minimizes the
    /// negative log-likelihood given it. Too few p-values give the fallback.
    pub fn fit(pvalues: &[f64]) -> Result<BetaMixtureFit> {
        check_pvalues(pvalues)?;
        if pvalues.len() < MIN_PVALUES {
            return Ok(BetaMixtureFit {
                pi0_hat: FALLBACK_PI0,
                xi_hat: FALLBACK_XI,
                n_pvalues: pvalues.len(),
                fallback: true,
            });
        }
        let pi0_hat = estimate_pi0(pvalues)?;
        Ok(BetaMixtureFit {
            pi0_hat,
            xi_hat: fit_xi(pvalues, pi0_hat.min(PI0_CAP)),
            n_pvalues: pvalues.len(),
            fallback: false,
        })
    }
}

fn check_pvalues(pvalues: &[f64]) -> Result<()> {
    if pvalues.is_empty() {
        return input("no p-values to fit");
    }
    if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return input(format!("p-value {p} outside [0, 1]"));
    }
    Ok(())
}

/// Storey's estimate of the proportion of true nulls: the tail ratio
/// `#{p > l} / (n (1 - l))` on the grid `l = 0.05, ..., 0.90`, smoothed by a
/// least-squares line and read off at `l = 0.90`, clamped to `[0.01, 1]`.
pub fn estimate_pi0(pvalues: &[f64]) -> Result<f64> {
    check_pvalues(pvalues)?;
    let n = pvalues.len() as f64;
    let grid: Vec<f64> = (1..=18).map(|k| k as f64 * 0.05).collect();
    let ratios: Vec<f64> = grid
        .iter()
        .map(|&l| pvalues.iter().filter(|&&p| p > l).count() as f64 / (n * (1.0 - l)))
        .collect();
    let m = grid.len() as f64;
    let (mx, my) = (grid.iter().sum::<f64>() / m, ratios.iter().sum::<f64>() / m);
    let sxy: f64 = grid
        .iter()
        .zip(&ratios)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = grid.iter().map(|x| (x - mx) * (x - mx)).sum();
    let at = my + sxy / sxx * (0.90 - mx);
    Ok(at.clamp(PI0_FLOOR, 1.0))
}

/// Negative log-likelihood of the mixture with shape `xi` and null
/// proportion `pi0`.
pub fn neg_log_likelihood(pvalues: &[f64], xi: f64, pi0: f64) -> f64 {
    -pvalues
        .iter()
        .map(|&p| (pi0 + (1.0 - pi0) * xi * p.max(P_FLOOR).powf(xi - 1.0)).ln())
        .sum::<f64>()
}

/// Shape minimizing the negative log-likelihood on `(1e-4, 1 - 1e-4)`, by
/// golden-section search.
pub fn fit_xi(pvalues: &[f64], pi0: f64) -> f64 {
    let f = |xi: f64| neg_log_likelihood(pvalues, xi, pi0);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = XI_BOUNDS;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > XI_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / 2.0;
    // a flat or monotone objective can leave the optimum at a bound
    [XI_BOUNDS.0, mid, XI_BOUNDS.1]
        .into_iter()
        .min_by(|x, y| f(*x).partial_cmp(&f(*y)).unwrap_or(Ordering::Equal))
        .expect("three candidates")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Independence,
    Dependence,
}

/// Posterior odds of the null over the alternative for one p-value.
pub fn null_odds(p: f64, fit: &BetaMixtureFit) -> f64 {
    let pi0 = fit.pi0_hat.min(PI0_CAP);
    let xi = fit.xi_hat;
    pi0 / (xi * p.clamp(P_FLOOR, 1.0).powf(xi - 1.0) * (1.0 - pi0))
}

/// The better supported explanation of `p` and its odds over the other.
pub fn mmr_score(p: f64, fit: &BetaMixtureFit) -> (Direction, f64) {
    let e0 = null_odds(p, fit);
    let e1 = 1.0 / e0;
    if e0 > e1 {
        (Direction::Independence, e0)
    } else {
        (Direction::Dependence, e1)
    }
}

/// P-values the mixture is fitted to: the largest p-value of every pair of
/// every dataset.
pub fn pooled_pvalues(problem: &CnfProblem) -> Vec<f64> {
    problem
        .soft
        .iter()
        .filter(|s| matches!(s.kind, LiteralKind::Adjacent | LiteralKind::NonAdjacent))
        .filter_map(|s| s.p_value)
        .collect()
}

/// One soft literal as ranked and judged by the greedy pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Position in the problem's soft literal list.
    pub index: usize,
    /// The literal as asserted, after any change of direction.
    pub literal: SoftLiteral,
    pub direction: Option<Direction>,
    /// The (non)adjacency was reversed because its p-value favoured the
    /// other explanation.
    pub flipped: bool,
    pub accepted: bool,
}

/// Outcome of a resolution strategy, decisions in the order visited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub fit: Option<BetaMixtureFit>,
    pub decisions: Vec<Decision>,
}

impl Resolution {
    pub fn accepted(&self) -> Vec<Lit> {
        self.decisions
            .iter()
            .filter(|d| d.accepted)
            .map(|d| d.literal.literal())
            .collect()
    }

    pub fn skipped(&self) -> usize {
        self.decisions.iter().filter(|d| !d.accepted).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("resolution serializes")
    }
}

/// Scores of a pair's (non)adjacency, used for every literal ranked by it.
fn scored(lit: &SoftLiteral, fit: &BetaMixtureFit) -> (Option<Direction>, f64) {
    match lit.p_value {
        Some(p) => {
            let (dir, score) = mmr_score(p, fit);
            (Some(dir), score)
        }
        // an untested pair carries no evidence either way
        None => (None, 1.0),
    }
}

/// Adjacency literals follow the direction their p-value favours; triple
/// and path literals keep their labels and take the score of the pair that
/// ranks them. Literals are then visited by decreasing score and accepted
/// while the hard clauses and everything accepted so far stay satisfiable.
pub fn select_consistent_literals(
    problem: &CnfProblem,
    fit: &BetaMixtureFit,
) -> Result<Resolution> {
    let mut decisions: Vec<Decision> = problem
        .soft
        .iter()
        .enumerate()
        .map(|(index, lit)| {
            let (direction, score) = scored(lit, fit);
            let mut literal = lit.clone();
            literal.score = Some(score);
            let pair = matches!(lit.kind, LiteralKind::Adjacent | LiteralKind::NonAdjacent);
            let want = match direction {
                Some(Direction::Independence) => LiteralKind::NonAdjacent,
                Some(Direction::Dependence) => LiteralKind::Adjacent,
                None => lit.kind,
            };
            let flipped = pair && want != lit.kind;
            if flipped {
                literal.kind = want;
                literal.lit = Some(!lit.literal());
            }
            Decision {
                index,
                literal,
                direction,
                flipped,
                accepted: false,
            }
        })
        .collect();
    let names = &problem.names;
    decisions.sort_by(|a, b| {
        let (la, lb) = (&a.literal, &b.literal);
        let (sa, sb) = (la.score.unwrap_or(1.0), lb.score.unwrap_or(1.0));
        sb.partial_cmp(&sa)
            .unwrap_or(Ordering::Equal)
            .then(la.dataset.cmp(&lb.dataset))
            .then_with(|| {
                let na = la.nodes.iter().map(|&v| names[v].as_str());
                let nb = lb.nodes.iter().map(|&v| names[v].as_str());
                na.cmp(nb)
            })
            .then(la.kind.cmp(&lb.kind))
            .then(a.index.cmp(&b.index))
    });
    greedy(problem, &mut decisions)?;
    Ok(Resolution {
        fit: Some(*fit),
        decisions,
    })
}

/// Accepts every literal as observed, without ranking or checking.
pub fn accept_all(problem: &CnfProblem) -> Resolution {
    let decisions = problem
        .soft
        .iter()
        .enumerate()
        .map(|(index, lit)| Decision {
            index,
            literal: lit.clone(),
            direction: None,
            flipped: false,
            accepted: true,
        })
        .collect();
    Resolution {
        fit: None,
        decisions,
    }
}

fn greedy(problem: &CnfProblem, decisions: &mut [Decision]) -> Result<()> {
    let mut solver = Solver::from_cnf(&problem.cnf);
    if solver.solve(&[]) == SolveResult::Unsat {
        return Err(Error::Internal("hard clauses are unsatisfiable".into()));
    }
    let mut accepted: Vec<Lit> = Vec::new();
    for d in decisions.iter_mut() {
        accepted.push(d.literal.literal());
        if solver.solve(&accepted) == SolveResult::Sat {
            d.accepted = true;
        } else {
            accepted.pop();
        }
    }
    Ok(())
}
