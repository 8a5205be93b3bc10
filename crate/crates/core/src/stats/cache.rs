use std::collections::HashMap;

/// Every p-value computed during one analysis, keyed by dataset, unordered
/// pair and sorted conditioning set, plus the running maximum per pair.
#[derive(Clone, Debug, Default)]
pub struct PValueCache {
    entries: HashMap<Key, f64>,
    max: HashMap<(usize, usize, usize), (f64, Vec<usize>)>,
}

type Key = (usize, usize, usize, Vec<usize>);

fn key(dataset: usize, x: usize, y: usize, z: &[usize]) -> Key {
    let mut z = z.to_vec();
    z.sort_unstable();
    (dataset, x.min(y), x.max(y), z)
}

impl PValueCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, dataset: usize, x: usize, y: usize, z: &[usize]) -> Option<f64> {
        self.entries.get(&key(dataset, x, y, z)).copied()
    }

    /// Records a p-value. An existing entry is kept unchanged.
    pub fn insert(&mut self, dataset: usize, x: usize, y: usize, z: &[usize], p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p), "p-value {p} out of range");
        let k = key(dataset, x, y, z);
        if let Some(&old) = self.entries.get(&k) {
            return old;
        }
        let pair = (k.0, k.1, k.2);
        let better = self.max.get(&pair).is_none_or(|(m, _)| p > *m);
        if better {
            self.max.insert(pair, (p, k.3.clone()));
        }
        self.entries.insert(k, p);
        p
    }

    /// Highest p-value seen for the pair and the conditioning set achieving it.
    pub fn max_p(&self, dataset: usize, x: usize, y: usize) -> Option<(f64, &[usize])> {
        self.max
            .get(&(dataset, x.min(y), x.max(y)))
            .map(|(p, z)| (*p, z.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
