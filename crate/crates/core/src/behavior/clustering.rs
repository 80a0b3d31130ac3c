use serde::{Deserialize, Serialize};

use super::InteractionMatrix;
use crate::atoms::{dissimilarity_matrix, DissimilarityMatrix, DistanceMetric};
use crate::error::{Error, Result};

/// One agglomeration step. Leaves are `0..n`; merge `i` creates cluster
/// `n + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeTree {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

/// Agglomerative clustering where the distance between clusters is the
/// largest distance between their members. Ties go to the pair with the
/// smallest `(a, b)` cluster ids.
pub fn complete_linkage(d: &DissimilarityMatrix) -> MergeTree {
    let n = d.n;
    let mut dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d.get(i, j)).collect()).collect();
    // Active slots hold the id of the cluster currently stored there.
    let mut ids: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut sizes = vec![1usize; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = ids[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = ids[j] else { continue };
                let (lo, hi) = (ci.min(cj), ci.max(cj));
                let cand = (dist[i][j], lo, hi, i, j);
                if best.is_none_or(|b| (cand.0, cand.1, cand.2) < (b.0, b.1, b.2)) {
                    best = Some(cand);
                }
            }
        }
        let (h, lo, hi, i, j) = best.expect("at least two active clusters");
        for k in 0..n {
            if ids[k].is_some() && k != i && k != j {
                let m = dist[i][k].max(dist[j][k]);
                dist[i][k] = m;
                dist[k][i] = m;
            }
        }
        sizes[i] += sizes[j];
        ids[i] = Some(n + step);
        ids[j] = None;
        merges.push(Merge { a: lo, b: hi, height: h, size: sizes[i] });
    }
    MergeTree { n_leaves: n, merges }
}

/// Flat cluster labels for leaves, joining every merge at height `<= cut`.
/// Labels are numbered by first leaf appearance.
pub fn cut_tree(tree: &MergeTree, cut: f64) -> Vec<usize> {
    let n = tree.n_leaves;
    let mut parent: Vec<usize> = (0..n + tree.merges.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, m) in tree.merges.iter().enumerate() {
        if m.height <= cut {
            let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
            parent[ra] = n + i;
            parent[rb] = n + i;
        }
    }
    let mut labels = vec![0; n];
    let mut seen: Vec<usize> = Vec::new();
    for (leaf, label) in labels.iter_mut().enumerate() {
        let r = find(&mut parent, leaf);
        *label = seen.iter().position(|&s| s == r).unwrap_or_else(|| {
            seen.push(r);
            seen.len() - 1
        });
    }
    labels
}

/// Zero mean, unit population standard deviation. Undefined cells take the
/// mean of the defined ones, so they become zero. `None` when the defined
/// cells are constant or absent.
pub fn standardize(values: &[Option<f64>]) -> Option<Vec<f64>> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return None;
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let filled: Vec<f64> = values.iter().map(|v| v.unwrap_or(mean)).collect();
    let n = filled.len() as f64;
    let sd = (filled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    (sd > 0.0).then(|| filled.iter().map(|v| (v - mean) / sd).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    /// Indices of the clustered agents; the tree's leaves follow this order.
    pub used: Vec<usize>,
    /// Agents dropped for a constant or empty matrix.
    pub excluded: Vec<usize>,
    pub distances: DissimilarityMatrix,
    pub tree: MergeTree,
    pub labels: Vec<usize>,
}

pub fn standardize_and_cluster(matrices: &[InteractionMatrix], cut: f64) -> Result<ClusterOutput> {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    let mut vectors = Vec::new();
    for (i, m) in matrices.iter().enumerate() {
        match standardize(&m.values) {
            Some(v) => {
                used.push(i);
                vectors.push(v);
            }
            None => excluded.push(i),
        }
    }
    if vectors.len() < 2 {
        return Err(match excluded.first() {
            Some(&agent) if matrices.len() >= 2 => Error::ZeroVariance { agent },
            _ => Error::Validation("clustering needs at least two usable matrices".into()),
        });
    }
    let distances = dissimilarity_matrix(&vectors, DistanceMetric::Correlation)?;
    let tree = complete_linkage(&distances);
    let labels = cut_tree(&tree, cut);
    Ok(ClusterOutput { used, excluded, distances, tree, labels })
}
