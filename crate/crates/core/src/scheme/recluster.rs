use super::{min_cluster_size, min_workers};
use crate::error::{Error, Result};

/// Exponential moving average of each worker's response time.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseTimeTracker {
    smoothing: f64,
    estimates: Vec<Option<f64>>,
}

impl ResponseTimeTracker {
    pub fn new(n: usize, smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing <= 1.0) {
            return Err(Error::Config(format!("smoothing must lie in (0, 1], got {smoothing}")));
        }
        Ok(Self {
            smoothing,
            estimates: vec![None; n],
        })
    }

    pub fn observe(&mut self, worker: usize, time: f64) {
        let slot = &mut self.estimates[worker];
        *slot = Some(match *slot {
            Some(old) => self.smoothing * time + (1.0 - self.smoothing) * old,
            None => time,
        });
    }

    pub fn estimate(&self, worker: usize) -> Option<f64> {
        self.estimates[worker]
    }

    /// `None` before any observation. Workers never observed are ranked
    /// with the slowest observed time.
    pub fn estimates(&self) -> Option<Vec<f64>> {
        let slowest = self.estimates.iter().flatten().copied().reduce(f64::max)?;
        Some(self.estimates.iter().map(|e| e.unwrap_or(slowest)).collect())
    }
}

/// Groups workers with similar estimated response times.
///
/// Without history every worker lands in one cluster. Otherwise workers are
/// sorted by estimate and cut into `clusters` contiguous groups, fastest
/// first, minimizing the within-group sum of squared deviations subject to
/// the minimum cluster sizes. Ties go to the more balanced partition.
pub fn recluster(
    estimates: Option<&[f64]>,
    n: usize,
    z: usize,
    clusters: usize,
) -> Result<Vec<Vec<usize>>> {
    let Some(times) = estimates else {
        if n < min_cluster_size(z, 0) {
            return Err(Error::ClusterConstraint {
                cluster: 0,
                detail: format!("{n} workers, need at least {}", min_cluster_size(z, 0)),
            });
        }
        return Ok(vec![(0..n).collect()]);
    };
    if times.len() != n {
        return Err(Error::Dimension(format!("{} estimates for {n} workers", times.len())));
    }
    if clusters == 0 || n < min_workers(z, clusters) {
        return Err(Error::ClusterConstraint {
            cluster: clusters.saturating_sub(1),
            detail: format!(
                "{clusters} clusters need at least {} workers, have {n}",
                min_workers(z, clusters)
            ),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&w| times[w]).collect();

    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, &t) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + t;
        prefix_sq[i + 1] = prefix_sq[i] + t * t;
    }
    let sse = |a: usize, b: usize| {
        let len = (b - a) as f64;
        let sum = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a] - sum * sum / len).max(0.0)
    };

    #[derive(Clone, Copy)]
    struct Cell {
        cost: f64,
        balance: usize,
        cut: usize,
    }
    let better = |a: &Cell, b: &Cell| {
        let tol = 1e-9 * (1.0 + a.cost.abs().max(b.cost.abs()));
        if (a.cost - b.cost).abs() > tol {
            a.cost < b.cost
        } else {
            a.balance < b.balance
        }
    };

    // best[g][i]: first i sorted workers split into g + 1 groups.
    let mut best: Vec<Vec<Option<Cell>>> = vec![vec![None; n + 1]; clusters];
    for i in min_cluster_size(z, 0)..=n {
        best[0][i] = Some(Cell {
            cost: sse(0, i),
            balance: i * i,
            cut: 0,
        });
    }
    for g in 1..clusters {
        let min = min_cluster_size(z, g);
        for i in 0..=n {
            let mut cell: Option<Cell> = None;
            // Scan cuts from the largest so earlier groups win exact ties.
            for j in (0..=i.saturating_sub(min)).rev() {
                let Some(prev) = best[g - 1][j] else { continue };
                let size = i - j;
                let cand = Cell {
                    cost: prev.cost + sse(j, i),
                    balance: prev.balance + size * size,
                    cut: j,
                };
                if cell.as_ref().is_none_or(|c| better(&cand, c)) {
                    cell = Some(cand);
                }
            }
            best[g][i] = cell;
        }
    }

    let mut groups = Vec::with_capacity(clusters);
    let mut end = n;
    for g in (0..clusters).rev() {
        let cell = best[g][end].expect("feasibility checked above");
        let mut members = order[cell.cut..end].to_vec();
        members.sort_unstable();
        groups.push(members);
        end = cell.cut;
    }
    groups.reverse();
    Ok(groups)
}
