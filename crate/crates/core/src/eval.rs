//! Labeling and misclassification error.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::PreferenceMatrix;
use crate::solver::ModelSelection;

/// Label of points no selected model explains.
pub const UNASSIGNED: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<i64>,
    /// Cluster id to selected model index.
    pub cluster_models: BTreeMap<i64, usize>,
}

/// Cluster `c` is the `c`-th selected model. A point covered by several
/// selected models goes to the one with the smallest residual (lowest
/// index when tied or when no geometry is attached).
pub fn label_points(p: &PreferenceMatrix, sel: &ModelSelection) -> Result<Labeling> {
    if let Some(&j) = sel.selected.iter().find(|&&j| j >= p.m()) {
        return Err(Error::IndexOutOfRange { index: j, m: p.m() });
    }
    let mut order: Vec<(usize, i64)> = sel
        .selected
        .iter()
        .enumerate()
        .map(|(c, &j)| (j, c as i64))
        .collect();
    order.sort_unstable();
    let labels = (0..p.n())
        .map(|i| {
            let mut best: Option<(f64, i64)> = None;
            for &(j, cluster) in &order {
                if !p.get(i, j) {
                    continue;
                }
                let r = p.residual(i, j).unwrap_or(0.0);
                if best.is_none_or(|(br, _)| r < br) {
                    best = Some((r, cluster));
                }
            }
            best.map_or(UNASSIGNED, |(_, c)| c)
        })
        .collect();
    let cluster_models = sel
        .selected
        .iter()
        .enumerate()
        .map(|(c, &j)| (c as i64, j))
        .collect();
    Ok(Labeling {
        labels,
        cluster_models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub misclassification_error: f64,
    /// `(predicted cluster, ground-truth cluster)` pairs of the matching.
    pub matched_pairs: Vec<(i64, i64)>,
    pub predicted_clusters: Vec<i64>,
    pub gt_clusters: Vec<i64>,
    /// `confusion[r][c]`: points in predicted cluster `r` with GT cluster `c`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

/// Error under the one-to-one cluster matching that maximizes the number of
/// agreeing points. Unassigned predictions are never matched; a ground-truth
/// `-1` counts as correct only when predicted `-1`.
pub fn misclassification(pred: &[i64], gt: &[i64]) -> Result<EvalReport> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidSpec(
            "cannot evaluate an empty labeling".into(),
        ));
    }
    let pc: Vec<i64> = pred
        .iter()
        .filter(|&&l| l >= 0)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let gc: Vec<i64> = gt
        .iter()
        .filter(|&&l| l >= 0)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut confusion = vec![vec![0usize; gc.len()]; pc.len()];
    let mut agree_outliers = 0usize;
    for (&a, &b) in pred.iter().zip(gt) {
        match (a >= 0, b >= 0) {
            (true, true) => {
                let r = pc.binary_search(&a).unwrap();
                let c = gc.binary_search(&b).unwrap();
                confusion[r][c] += 1;
            }
            (false, false) => agree_outliers += 1,
            _ => {}
        }
    }
    let assignment = max_weight_matching(&confusion);
    let mut matched = agree_outliers;
    let mut matched_pairs = Vec::new();
    for (r, c) in assignment.into_iter().enumerate() {
        if let Some(c) = c {
            matched += confusion[r][c];
            matched_pairs.push((pc[r], gc[c]));
        }
    }
    let n = pred.len();
    Ok(EvalReport {
        misclassification_error: 100.0 * (n - matched) as f64 / n as f64,
        matched_pairs,
        predicted_clusters: pc,
        gt_clusters: gc,
        confusion,
        n,
    })
}

/// Assignment of rows to distinct columns maximizing total weight.
/// `result[r]` is the column matched to row `r`, if any.
pub fn max_weight_matching(weights: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let top = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |r: usize, c: usize| -> i64 {
        if r < rows && c < cols {
            top - weights[r][c] as i64
        } else {
            top
        }
    };
    // Hungarian algorithm (potentials form), 1-based with a dummy column 0.
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut way = vec![0usize; size + 1];
    let mut row_of = vec![0usize; size + 1];
    for r in 1..=size {
        row_of[0] = r;
        let mut c0 = 0usize;
        let mut minv = vec![i64::MAX; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[c0] = true;
            let r0 = row_of[c0];
            let mut delta = i64::MAX;
            let mut c1 = 0usize;
            for c in 1..=size {
                if used[c] {
                    continue;
                }
                let cur = cost(r0 - 1, c - 1) - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = c0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    c1 = c;
                }
            }
            for c in 0..=size {
                if used[c] {
                    u[row_of[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            c0 = c1;
            if row_of[c0] == 0 {
                break;
            }
        }
        loop {
            let c1 = way[c0];
            row_of[c0] = row_of[c1];
            c0 = c1;
            if c0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![None; rows];
    for (c, &r) in row_of.iter().enumerate().skip(1) {
        if (1..=rows).contains(&r) && c <= cols {
            result[r - 1] = Some(c - 1);
        }
    }
    result
}

/// Percent of points whose inlier/outlier status disagrees with ground truth.
pub fn single_model_error(
    inliers: &[usize],
    outliers: &[usize],
    gt_inliers: &[usize],
) -> Result<f64> {
    let n = inliers.len() + outliers.len();
    let ids: HashSet<usize> = inliers.iter().chain(outliers).copied().collect();
    if ids.len() != n || (0..n).any(|i| !ids.contains(&i)) {
        return Err(Error::LengthMismatch {
            left: n,
            right: ids.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidSpec(
            "cannot evaluate an empty point set".into(),
        ));
    }
    if let Some(&bad) = gt_inliers.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, m: n });
    }
    let gt: HashSet<usize> = gt_inliers.iter().copied().collect();
    let wrong = inliers.iter().filter(|i| !gt.contains(i)).count()
        + outliers.iter().filter(|i| gt.contains(i)).count();
    Ok(100.0 * wrong as f64 / n as f64)
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "dataset,method,seed,m,n,k,error_percent";

    /// One-line CSV record for aggregation across trials.
    pub fn csv_record(&self, dataset: &str, method: &str, seed: u64, m: usize, k: usize) -> String {
        format!(
            "{dataset},{method},{seed},{m},{},{k},{}",
            self.n, self.misclassification_error
        )
    }
}
