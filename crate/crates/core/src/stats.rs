//! Pearson and Spearman correlation with a two-sided t-test p-value.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::event::NodeId;

pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationFlag {
    TooFewPairs,
    DegenerateVariance,
}

impl CorrelationFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationFlag::TooFewPairs => "too_few_pairs",
            CorrelationFlag::DegenerateVariance => "degenerate_variance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    /// Two-sided p-value of the Pearson coefficient.
    pub p_value: Option<f64>,
    pub n_pairs: usize,
    pub flag: Option<CorrelationFlag>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Product-moment coefficient, or `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties assigned their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Two-sided p-value for H0: ρ = 0 from t = r·√((n−2)/(1−r²)).
pub fn pearson_p_value(r: f64, n: usize) -> Option<f64> {
    if n < MIN_PAIRS {
        return None;
    }
    if r.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * dist.cdf(-t.abs())).min(1.0))
}

pub fn correlate_pairs(x: &[f64], y: &[f64]) -> Correlation {
    let n = x.len();
    let absent = |flag| Correlation {
        pearson_r: None,
        spearman_rho: None,
        p_value: None,
        n_pairs: n,
        flag: Some(flag),
    };
    if n < MIN_PAIRS {
        return absent(CorrelationFlag::TooFewPairs);
    }
    let Some(r) = pearson(x, y) else {
        return absent(CorrelationFlag::DegenerateVariance);
    };
    Correlation {
        pearson_r: Some(r),
        spearman_rho: spearman(x, y),
        p_value: pearson_p_value(r, n),
        n_pairs: n,
        flag: None,
    }
}

/// Correlates two per-node value maps over `surviving`, keeping only nodes
/// defined on both sides (pairwise deletion).
pub fn correlate(
    full: &BTreeMap<NodeId, f64>,
    reduced: &BTreeMap<NodeId, f64>,
    surviving: &BTreeSet<NodeId>,
) -> Correlation {
    let (x, y): (Vec<f64>, Vec<f64>) = surviving
        .iter()
        .filter_map(|id| Some((*full.get(id)?, *reduced.get(id)?)))
        .unzip();
    correlate_pairs(&x, &y)
}
