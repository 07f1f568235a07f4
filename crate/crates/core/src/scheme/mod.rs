//! Master-side orchestration of one multiplication job.
//!
//! Clusters are indexed from zero; cluster 0 is the fastest and is the only
//! one that must also recover the mask evaluations `H(alpha_1..alpha_z)`.
//! Later clusters reuse those evaluations and need `z` fewer responses.

mod decode;
mod encode;
mod masks;
mod plan;
mod recluster;

pub use decode::{decode_cluster, decode_cluster_excluding, ClusterDecode, LagrangeForm};
pub use encode::{encode_tasks, partition_inputs, ClusterEncoding, EncodedRound, Task};
pub use masks::recover_masks_from_tasks;
pub use plan::{plan_round, RoundPlan};
pub use recluster::{recluster, ResponseTimeTracker};

use crate::error::{Error, Result};
use crate::field::PrimeModulus;
use crate::fountain::SolitonParams;
use crate::matgf::FqMatrix;

/// Static geometry of a job. `r x s` and `s x l` are the block shapes of A
/// and B after they are split into `m` row blocks and `k` column blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParams {
    pub n: usize,
    pub z: usize,
    pub clusters: usize,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub s: usize,
    pub l: usize,
    pub q: PrimeModulus,
    pub soliton: SolitonParams,
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("z", self.z),
            ("clusters", self.clusters),
            ("m", self.m),
            ("k", self.k),
            ("r", self.r),
            ("s", self.s),
            ("l", self.l),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        let needed = min_workers(self.z, self.clusters);
        if self.n < needed {
            return Err(Error::Config(format!(
                "{} clusters with z = {} need at least {needed} workers, have {}",
                self.clusters, self.z, self.n
            )));
        }
        self.soliton.validate()
    }
}

/// Smallest worker count that admits `clusters` valid clusters.
pub fn min_workers(z: usize, clusters: usize) -> usize {
    min_cluster_size(z, 0) + clusters.saturating_sub(1) * min_cluster_size(z, 1)
}

pub fn min_cluster_size(z: usize, cluster: usize) -> usize {
    if cluster == 0 {
        2 * z + 1
    } else {
        z + 1
    }
}

/// Largest number of coded products cluster `cluster` can carry with `n_u`
/// workers.
pub fn max_cluster_degree(n_u: usize, z: usize, cluster: usize) -> Result<usize> {
    let min = min_cluster_size(z, cluster);
    if z == 0 || n_u < min {
        return Err(Error::ClusterConstraint {
            cluster,
            detail: format!("{n_u} workers, need at least {min} for z = {z}"),
        });
    }
    Ok(if cluster == 0 {
        (n_u - 2 * z + 1) / 2
    } else {
        (n_u - z + 1) / 2
    })
}

/// Responses a cluster needs when cluster 0's mask evaluations are
/// available to it. Cluster 0 never has them.
pub fn required_responses(cluster: usize, degree: usize, z: usize) -> usize {
    if cluster == 0 {
        2 * degree + 2 * z - 1
    } else {
        2 * degree + z - 1
    }
}

/// Per-cluster degrees: the maximum minus `slack`, never below one.
pub fn default_degrees(clusters: &[Vec<usize>], z: usize, slack: usize) -> Result<Vec<usize>> {
    clusters
        .iter()
        .enumerate()
        .map(|(u, members)| Ok(max_cluster_degree(members.len(), z, u)?.saturating_sub(slack).max(1)))
        .collect()
}

/// Response of worker `worker` to its task.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerResponse {
    pub worker: usize,
    pub round: usize,
    pub cluster: usize,
    pub h_eval: FqMatrix,
    pub arrival_time: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_examples() {
        assert_eq!(max_cluster_degree(3, 1, 0), Ok(1));
        for z in 1..6 {
            assert_eq!(max_cluster_degree(2 * z + 1, z, 0), Ok(1));
        }
        assert_eq!(max_cluster_degree(100, 1, 0), Ok(49));
        assert_eq!(max_cluster_degree(2, 1, 1), Ok(1));
        assert_eq!(max_cluster_degree(5, 1, 1), Ok(2));
        assert!(max_cluster_degree(2, 1, 0).is_err());
        assert!(max_cluster_degree(1, 1, 1).is_err());
    }

    #[test]
    fn response_examples() {
        assert_eq!(required_responses(0, 1, 1), 3);
        assert_eq!(required_responses(1, 1, 1), 2);
        assert_eq!(required_responses(0, 49, 1), 99);
    }

    #[test]
    fn response_count_fits_cluster() {
        for z in 1..5 {
            for n_u in 1..40 {
                for u in 0..2 {
                    if let Ok(d) = max_cluster_degree(n_u, z, u) {
                        assert!(required_responses(u, d, z) <= n_u, "z={z} n={n_u} u={u}");
                        // One more coded product would not fit.
                        assert!(required_responses(u, d + 1, z) > n_u);
                    }
                }
            }
        }
    }

    #[test]
    fn slack_lowers_degrees() {
        let clusters = vec![(0..9).collect(), (9..14).collect()];
        assert_eq!(default_degrees(&clusters, 1, 0).unwrap(), vec![4, 2]);
        assert_eq!(default_degrees(&clusters, 1, 1).unwrap(), vec![3, 1]);
        assert_eq!(default_degrees(&clusters, 1, 5).unwrap(), vec![1, 1]);
    }

    #[test]
    fn params_feasibility() {
        let mut p = SchemeParams {
            n: 5,
            z: 1,
            clusters: 2,
            m: 1,
            k: 1,
            r: 1,
            s: 1,
            l: 1,
            q: PrimeModulus::new(11).unwrap(),
            soliton: SolitonParams::default(),
        };
        assert!(p.validate().is_ok());
        p.n = 4;
        assert!(p.validate().is_err());
        p.n = 5;
        p.s = 0;
        assert!(p.validate().is_err());
    }
}
