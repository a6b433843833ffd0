//! k-medoids over a precomputed dissimilarity matrix.
//!
//! Seeding follows k-means++ (first medoid uniform, then proportional to the
//! squared distance to the nearest chosen medoid); refinement is the PAM swap
//! phase, taking the single best (medoid, non-medoid) exchange per iteration.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

const SWAP_GAIN_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 300;

/// Symmetric, zero-diagonal, nonnegative dissimilarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty distance matrix".into()));
        }
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "distance matrix must be square".into(),
            ));
        }
        let mut entries = entries;
        for i in 0..n {
            for j in 0..n {
                let x = entries[i][j];
                if !x.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite distance at ({i}, {j})"
                    )));
                }
                if x < -1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "negative distance {x} at ({i}, {j})"
                    )));
                }
                if (x - entries[j][i]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
            if entries[i][i].abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
        }
        for row in entries.iter_mut() {
            for x in row.iter_mut() {
                *x = x.max(0.0);
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds the matrix from a pairwise function evaluated on `i < j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let values: Vec<f64> = pairs.par_iter().map(|&(i, j)| f(i, j)).collect();
        let mut entries = vec![vec![0.0; n]; n];
        for (&(i, j), v) in pairs.iter().zip(values) {
            entries[i][j] = v;
            entries[j][i] = v;
        }
        Self::new(entries)
    }

    /// Fallible variant of [`DistanceMatrix::from_fn`].
    pub fn try_from_fn(n: usize, f: impl Fn(usize, usize) -> Result<f64> + Sync) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let values: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| f(i, j))
            .collect::<Result<_>>()?;
        let mut entries = vec![vec![0.0; n]; n];
        for (&(i, j), v) in pairs.iter().zip(values) {
            entries[i][j] = v;
            entries[j][i] = v;
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Reorders points: entry `(i, j)` of the result is `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(
            perm.iter()
                .map(|&i| perm.iter().map(|&j| self.entries[i][j]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub medoids: Vec<usize>,
    pub cost: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Total cost after seeding and after every accepted swap.
    pub cost_history: Vec<f64>,
}

fn check_k(d: &DistanceMatrix, k: usize) -> Result<()> {
    if k == 0 || k > d.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            d.len()
        )));
    }
    Ok(())
}

/// k-means++ seeding with squared-distance weights.
pub fn kmeanspp_seed(d: &DistanceMatrix, k: usize, rng: &mut RandomStream) -> Result<Vec<usize>> {
    check_k(d, k)?;
    let n = d.len();
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.index(n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| d.get(i, first)).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if is_chosen[i] {
                    0.0
                } else {
                    nearest[i] * nearest[i]
                }
            })
            .collect();
        // duplicates of chosen points leave zero weight everywhere: lowest free index
        let next = rng
            .categorical(&weights)
            .unwrap_or_else(|| (0..n).find(|&i| !is_chosen[i]).expect("k <= n"));
        chosen.push(next);
        is_chosen[next] = true;
        for i in 0..n {
            nearest[i] = nearest[i].min(d.get(i, next));
        }
    }
    Ok(chosen)
}

/// Assignment of every point to its nearest medoid (lowest slot wins ties),
/// plus the total cost.
fn assign(d: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut labels = vec![0; d.len()];
    let mut cost = 0.0;
    for i in 0..d.len() {
        let mut best = (0, f64::INFINITY);
        for (slot, &m) in medoids.iter().enumerate() {
            let x = d.get(i, m);
            if x < best.1 {
                best = (slot, x);
            }
        }
        labels[i] = best.0;
        cost += best.1;
    }
    // a medoid is always in its own cluster, even with zero-distance duplicates
    for (slot, &m) in medoids.iter().enumerate() {
        labels[m] = slot;
    }
    (labels, cost)
}

/// Nearest and second-nearest medoid distance of every point.
fn nearest_two(d: &DistanceMatrix, medoids: &[usize]) -> Vec<(usize, f64, f64)> {
    (0..d.len())
        .map(|i| {
            let (mut s1, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
            for (slot, &m) in medoids.iter().enumerate() {
                let x = d.get(i, m);
                if x < d1 {
                    d2 = d1;
                    d1 = x;
                    s1 = slot;
                } else if x < d2 {
                    d2 = x;
                }
            }
            (s1, d1, d2)
        })
        .collect()
}

/// PAM swap phase from the given medoids.
pub fn pam_swap(
    d: &DistanceMatrix,
    mut medoids: Vec<usize>,
    max_iters: usize,
    seed: u64,
) -> ClusterResult {
    let n = d.len();
    let (_, mut cost) = assign(d, &medoids);
    let mut history = vec![cost];
    let mut iterations = 0;
    while iterations < max_iters {
        let near = nearest_two(d, &medoids);
        let mut is_medoid = vec![false; n];
        for &m in &medoids {
            is_medoid[m] = true;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..medoids.len() {
            for h in 0..n {
                if is_medoid[h] {
                    continue;
                }
                let mut new_cost = 0.0;
                for (o, &(s1, d1, d2)) in near.iter().enumerate() {
                    let keep = if s1 == slot { d2 } else { d1 };
                    new_cost += keep.min(d.get(o, h));
                }
                let gain = cost - new_cost;
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((slot, h, gain));
                }
            }
        }
        match best {
            Some((slot, h, gain)) if gain > SWAP_GAIN_TOL => {
                medoids[slot] = h;
                cost = assign(d, &medoids).1;
                history.push(cost);
                iterations += 1;
            }
            _ => break,
        }
    }
    let (labels, cost) = assign(d, &medoids);
    ClusterResult {
        labels,
        medoids,
        cost,
        iterations,
        seed,
        cost_history: history,
    }
}

pub fn kmedoids(
    d: &DistanceMatrix,
    k: usize,
    rng: &mut RandomStream,
    max_iters: usize,
) -> Result<ClusterResult> {
    let seeds = kmeanspp_seed(d, k, rng)?;
    Ok(pam_swap(d, seeds, max_iters, rng.seed()))
}

/// Runs `restarts` independent k-medoids fits on split streams (restart `r`
/// uses `rng.split(r)`) and keeps the cheapest; earlier restarts win ties.
pub fn best_of_restarts(
    d: &DistanceMatrix,
    k: usize,
    restarts: usize,
    rng: &RandomStream,
) -> Result<ClusterResult> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    check_k(d, k)?;
    let runs: Vec<ClusterResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng.split(r as u64);
            kmedoids(d, k, &mut stream, DEFAULT_MAX_ITERS)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.cost < runs[best].cost {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).expect("restarts >= 1"))
}

/// Fraction of points that belong to the majority truth class of their
/// cluster.
pub fn purity(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels vs {} truth entries",
            labels.len(),
            truth.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument(
            "purity of an empty labelling".into(),
        ));
    }
    let mut counts: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&l, &t) in labels.iter().zip(truth) {
        *counts.entry(l).or_default().entry(t).or_default() += 1;
    }
    let hit: usize = counts
        .values()
        .map(|c| c.values().copied().max().unwrap_or(0))
        .sum();
    Ok(hit as f64 / labels.len() as f64)
}
