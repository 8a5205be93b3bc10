use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use super::{Dataset, ValueKind};
use crate::error::{input, Result};
use crate::graph::{m_separated, MixedGraph, NodeSet};
use crate::Error;

/// A conditional independence test over the variables of one dataset.
///
/// `Ok(None)` means the test could not be carried out (no degrees of
/// freedom); callers treat it as independence not established.
pub trait CiTest: Sync {
    fn n_vars(&self) -> usize;
    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<Option<f64>>;
}

/// Fisher z-test on the sample partial correlation.
pub struct FisherZ {
    corr: DMatrix<f64>,
    rows: usize,
}

impl FisherZ {
    pub fn new(d: &Dataset) -> Result<FisherZ> {
        if d.kind() != ValueKind::Continuous {
            return input("Fisher z-test needs continuous data");
        }
        let (p, n) = (d.n_vars(), d.rows());
        let mut centered = DMatrix::zeros(n, p);
        for j in 0..p {
            let col = d.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt();
            if sd <= f64::EPSILON * n as f64 * mean.abs().max(1.0) {
                return Err(Error::Degenerate(format!(
                    "variable '{}' is constant",
                    d.names()[j]
                )));
            }
            for i in 0..n {
                centered[(i, j)] = (col[i] - mean) / sd;
            }
        }
        let corr = centered.transpose() * &centered;
        Ok(FisherZ { corr, rows: n })
    }

    /// Sample partial correlation of `x` and `y` given `z`.
    pub fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> Result<f64> {
        if z.is_empty() {
            return Ok(self.corr[(x, y)].clamp(-1.0, 1.0));
        }
        let k = z.len();
        let szz = DMatrix::from_fn(k, k, |a, b| self.corr[(z[a], z[b])]);
        let chol = szz
            .cholesky()
            .filter(|c| c.l().diagonal().iter().all(|&d| d > 1e-7))
            .ok_or_else(|| {
                Error::Degenerate("singular covariance of the conditioning set".into())
            })?;
        let szx = DVector::from_fn(k, |a, _| self.corr[(z[a], x)]);
        let szy = DVector::from_fn(k, |a, _| self.corr[(z[a], y)]);
        let ax = chol.solve(&szx);
        let ay = chol.solve(&szy);
        let vxx = 1.0 - szx.dot(&ax);
        let vyy = 1.0 - szy.dot(&ay);
        let vxy = self.corr[(x, y)] - szx.dot(&ay);
        if vxx <= 1e-12 || vyy <= 1e-12 {
            return Err(Error::Degenerate(
                "variable determined by the conditioning set".into(),
            ));
        }
        Ok((vxy / (vxx * vyy).sqrt()).clamp(-1.0, 1.0))
    }
}

impl CiTest for FisherZ {
    fn n_vars(&self) -> usize {
        self.corr.nrows()
    }

    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<Option<f64>> {
        if self.rows <= z.len() + 3 {
            return input(format!(
                "{} rows are too few to condition on {} variables",
                self.rows,
                z.len()
            ));
        }
        let r = self.partial_correlation(x, y, z)?;
        if r.abs() >= 1.0 {
            return Ok(Some(0.0));
        }
        let stat = ((self.rows - z.len() - 3) as f64).sqrt() * r.atanh();
        Ok(Some(
            erfc(stat.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0),
        ))
    }
}

/// G² likelihood-ratio test on discrete data.
pub struct G2 {
    codes: Vec<Vec<u32>>,
    levels: Vec<usize>,
}

impl G2 {
    pub fn new(d: &Dataset) -> Result<G2> {
        if d.kind() != ValueKind::Discrete {
            return input("G2 test needs discrete data");
        }
        let codes = (0..d.n_vars())
            .map(|j| d.column(j).iter().map(|&v| v as u32).collect())
            .collect();
        Ok(G2 {
            codes,
            levels: d.levels().to_vec(),
        })
    }

    /// The statistic and its degrees of freedom. Empty strata contribute
    /// neither.
    pub fn statistic(&self, x: usize, y: usize, z: &[usize]) -> Result<(f64, usize)> {
        let (kx, ky) = (self.levels[x], self.levels[y]);
        let mut radix = 1u64;
        for &v in z {
            radix = radix
                .checked_mul(self.levels[v] as u64)
                .ok_or_else(|| Error::Input("too many conditioning strata".into()))?;
        }
        let rows = self.codes[x].len();
        let mut strata: HashMap<u64, Vec<f64>> = HashMap::new();
        for r in 0..rows {
            let mut key = 0u64;
            for &v in z {
                key = key * self.levels[v] as u64 + self.codes[v][r] as u64;
            }
            let cell = self.codes[x][r] as usize * ky + self.codes[y][r] as usize;
            strata.entry(key).or_insert_with(|| vec![0.0; kx * ky])[cell] += 1.0;
        }
        let mut g2 = 0.0;
        for table in strata.values() {
            let total: f64 = table.iter().sum();
            let row_sums: Vec<f64> = (0..kx)
                .map(|a| table[a * ky..(a + 1) * ky].iter().sum())
                .collect();
            let col_sums: Vec<f64> = (0..ky)
                .map(|b| (0..kx).map(|a| table[a * ky + b]).sum())
                .collect();
            for a in 0..kx {
                for b in 0..ky {
                    let o = table[a * ky + b];
                    if o > 0.0 {
                        g2 += o * (o * total / (row_sums[a] * col_sums[b])).ln();
                    }
                }
            }
        }
        let df = (kx.saturating_sub(1)) * (ky.saturating_sub(1)) * strata.len();
        Ok(((2.0 * g2).max(0.0), df))
    }
}

impl CiTest for G2 {
    fn n_vars(&self) -> usize {
        self.codes.len()
    }

    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<Option<f64>> {
        let (g2, df) = self.statistic(x, y, z)?;
        if df == 0 {
            return Ok(None);
        }
        let chi = ChiSquared::new(df as f64).map_err(|e| Error::Internal(e.to_string()))?;
        Ok(Some(chi.sf(g2).clamp(0.0, 1.0)))
    }
}

/// Answers independence queries by m-separation in a known graph:
/// p = 1 when separated, 0 otherwise.
///
/// `map[i]` is the graph node of the test's variable `i`, so a manipulated
/// SMCM over all variables can serve a dataset that observes only some.
pub struct Oracle {
    graph: MixedGraph,
    map: Vec<usize>,
}

impl Oracle {
    pub fn new(graph: MixedGraph, map: Vec<usize>) -> Result<Oracle> {
        for &v in &map {
            graph.check_node(v)?;
        }
        Ok(Oracle { graph, map })
    }

    /// Oracle over every node of `graph`, in order.
    pub fn full(graph: MixedGraph) -> Oracle {
        let map = (0..graph.n()).collect();
        Oracle { graph, map }
    }
}

impl CiTest for Oracle {
    fn n_vars(&self) -> usize {
        self.map.len()
    }

    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<Option<f64>> {
        let zs: NodeSet = z.iter().map(|&v| self.map[v]).collect();
        let sep = m_separated(&self.graph, self.map[x], self.map[y], &zs)?;
        Ok(Some(if sep { 1.0 } else { 0.0 }))
    }
}

pub fn fisher_z_test(d: &Dataset, x: usize, y: usize, z: &NodeSet) -> Result<f64> {
    check_query(d, x, y, z)?;
    let z: Vec<usize> = z.iter().copied().collect();
    Ok(FisherZ::new(d)?
        .p_value(x, y, &z)?
        .expect("Fisher z always yields a p-value"))
}

/// `None` when no degrees of freedom remain.
pub fn g2_test(d: &Dataset, x: usize, y: usize, z: &NodeSet) -> Result<Option<f64>> {
    check_query(d, x, y, z)?;
    let z: Vec<usize> = z.iter().copied().collect();
    G2::new(d)?.p_value(x, y, &z)
}

fn check_query(d: &Dataset, x: usize, y: usize, z: &NodeSet) -> Result<()> {
    let n = d.n_vars();
    if x >= n || y >= n || z.iter().any(|&v| v >= n) {
        return input("variable index out of range");
    }
    if x == y || z.contains(&x) || z.contains(&y) {
        return input("test variables must be distinct and outside the conditioning set");
    }
    Ok(())
}
