//! Goodness-of-fit helpers shared by the simulation checks.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    pub fn from_stat(statistic: f64, dof: usize) -> ChiSquare {
        let p_value = if !statistic.is_finite() {
            0.0
        } else if dof == 0 {
            1.0
        } else {
            let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
            1.0 - dist.cdf(statistic)
        };
        ChiSquare {
            statistic,
            dof,
            p_value,
        }
    }

    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// Pearson test of observed counts against cell probabilities. Observed
/// mass in a zero-probability cell makes the statistic infinite.
pub fn chi_square_gof(observed: &[f64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n: f64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p > 0.0 {
            let e = n * p;
            stat += (o - e) * (o - e) / e;
            cells += 1;
        } else if o > 0.0 {
            stat = f64::INFINITY;
        }
    }
    ChiSquare::from_stat(stat, cells.saturating_sub(1))
}

/// Pearson test that several count vectors over the same cells share one
/// law. Each map is a histogram; the union of keys forms the cells.
pub fn chi_square_homogeneity<K: Ord + Clone>(samples: &[&BTreeMap<K, u64>]) -> ChiSquare {
    let mut cells: BTreeMap<K, u64> = BTreeMap::new();
    for s in samples {
        for (k, &c) in s.iter() {
            *cells.entry(k.clone()).or_default() += c;
        }
    }
    let total: u64 = cells.values().sum();
    if total == 0 {
        return ChiSquare::from_stat(0.0, 0);
    }
    let mut stat = 0.0;
    for s in samples {
        let n: u64 = s.values().sum();
        for (k, &col) in &cells {
            let e = n as f64 * col as f64 / total as f64;
            let o = *s.get(k).unwrap_or(&0) as f64;
            if e > 0.0 {
                stat += (o - e) * (o - e) / e;
            }
        }
    }
    let rows = samples
        .iter()
        .filter(|s| s.values().sum::<u64>() > 0)
        .count();
    let dof = rows.saturating_sub(1) * cells.len().saturating_sub(1);
    ChiSquare::from_stat(stat, dof)
}

/// Merges cells whose expected count is below `min_expected` into one
/// pooled cell, so Pearson's approximation stays usable on heavy tails.
pub fn pool_sparse_cells(
    observed: &[f64],
    probs: &[f64],
    min_expected: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n: f64 = observed.iter().sum();
    let mut obs = Vec::new();
    let mut pr = Vec::new();
    let (mut pooled_o, mut pooled_p) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        if n * p >= min_expected {
            obs.push(o);
            pr.push(p);
        } else {
            pooled_o += o;
            pooled_p += p;
        }
    }
    if pooled_p > 0.0 || pooled_o > 0.0 {
        obs.push(pooled_o);
        pr.push(pooled_p);
    }
    (obs, pr)
}

/// Total-variation distance between an empirical histogram and a law.
pub fn total_variation<K: Ord>(
    counts: &BTreeMap<K, u64>,
    law: impl Fn(&K) -> f64,
    law_keys: &[K],
) -> f64 {
    let n: u64 = counts.values().sum();
    let n = n.max(1) as f64;
    let mut diff = 0.0;
    let mut covered = 0.0;
    for k in law_keys {
        let p = law(k);
        let q = *counts.get(k).unwrap_or(&0) as f64 / n;
        diff += (p - q).abs();
        covered += q;
    }
    let outside = (1.0 - covered).max(0.0);
    let law_rest = (1.0 - law_keys.iter().map(&law).sum::<f64>()).max(0.0);
    0.5 * (diff + outside + law_rest)
}
