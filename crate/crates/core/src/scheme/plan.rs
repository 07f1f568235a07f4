use std::collections::HashSet;

use rand::Rng;

use super::{max_cluster_degree, SchemeParams};
use crate::error::{Error, Result};
use crate::field::{sample_distinct, FieldElement};
use crate::fountain::{sample_spec, FountainSymbolSpec};
use crate::matgf::{random_matrix, FqMatrix};

/// The master's secret randomness for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundPlan {
    round: usize,
    clusters: Vec<Vec<usize>>,
    cluster_of: Vec<usize>,
    degrees: Vec<usize>,
    alphas: Vec<FieldElement>,
    betas: Vec<FieldElement>,
    masks_r: Vec<FqMatrix>,
    masks_s: Vec<FqMatrix>,
    specs: Vec<Vec<FountainSymbolSpec>>,
    z: usize,
}

impl RoundPlan {
    /// Assembles a plan from explicit parts, checking every structural
    /// invariant. `betas[w]` belongs to worker `w`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: &SchemeParams,
        round: usize,
        clusters: Vec<Vec<usize>>,
        degrees: Vec<usize>,
        alphas: Vec<FieldElement>,
        betas: Vec<FieldElement>,
        masks_r: Vec<FqMatrix>,
        masks_s: Vec<FqMatrix>,
        specs: Vec<Vec<FountainSymbolSpec>>,
    ) -> Result<Self> {
        let cluster_of = check_partition(&clusters, params.n)?;
        if degrees.len() != clusters.len() || specs.len() != clusters.len() {
            return Err(Error::Dimension("one degree and spec list per cluster".into()));
        }
        for (u, (members, &d)) in clusters.iter().zip(&degrees).enumerate() {
            let max = max_cluster_degree(members.len(), params.z, u)?;
            if d == 0 || d > max {
                return Err(Error::DegreeBound {
                    cluster: u,
                    degree: d,
                    max,
                });
            }
            if specs[u].len() != d {
                return Err(Error::Dimension(format!(
                    "cluster {u} has {} specs for degree {d}",
                    specs[u].len()
                )));
            }
        }
        let d_max = degrees.iter().copied().max().unwrap_or(0);
        if alphas.len() != d_max + params.z || betas.len() != params.n {
            return Err(Error::Dimension(format!(
                "expected {} alphas and {} betas",
                d_max + params.z,
                params.n
            )));
        }
        let mut seen = HashSet::new();
        for x in alphas.iter().chain(&betas) {
            if x.modulus() != params.q {
                return Err(Error::ModulusMismatch(params.q.value(), x.modulus().value()));
            }
            if !seen.insert(x.value()) {
                return Err(Error::DuplicateNode(x.value()));
            }
        }
        if masks_r.len() != params.z || masks_s.len() != params.z {
            return Err(Error::Dimension("need z masks on each side".into()));
        }
        for (mask, shape) in masks_r
            .iter()
            .map(|m| (m, (params.r, params.s)))
            .chain(masks_s.iter().map(|m| (m, (params.s, params.l))))
        {
            if mask.shape() != shape || mask.modulus() != params.q {
                return Err(Error::Dimension("mask shape or field mismatch".into()));
            }
        }
        for list in &specs {
            for spec in list {
                if spec.a_set().iter().any(|&i| i >= params.m) || spec.b_set().iter().any(|&j| j >= params.k) {
                    return Err(Error::Dimension("symbol spec outside the block grid".into()));
                }
            }
        }
        Ok(Self {
            round,
            clusters,
            cluster_of,
            degrees,
            alphas,
            betas,
            masks_r,
            masks_s,
            specs,
            z: params.z,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn cluster_of(&self, worker: usize) -> Option<usize> {
        self.cluster_of.get(worker).copied()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn d_max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// All `d_max + z` alphas; mask points come first.
    pub fn alphas(&self) -> &[FieldElement] {
        &self.alphas
    }

    /// The `z + d_u` interpolation points of cluster `u`.
    pub fn cluster_alphas(&self, u: usize) -> &[FieldElement] {
        &self.alphas[..self.z + self.degrees[u]]
    }

    pub fn betas(&self) -> &[FieldElement] {
        &self.betas
    }

    pub fn beta(&self, worker: usize) -> FieldElement {
        self.betas[worker]
    }

    pub fn masks_r(&self) -> &[FqMatrix] {
        &self.masks_r
    }

    pub fn masks_s(&self) -> &[FqMatrix] {
        &self.masks_s
    }

    pub fn specs(&self, u: usize) -> &[FountainSymbolSpec] {
        &self.specs[u]
    }
}

fn check_partition(clusters: &[Vec<usize>], n: usize) -> Result<Vec<usize>> {
    if clusters.is_empty() {
        return Err(Error::Config("at least one cluster is required".into()));
    }
    let mut owner = vec![usize::MAX; n];
    for (u, members) in clusters.iter().enumerate() {
        for &w in members {
            if w >= n {
                return Err(Error::IndexOutOfRange { index: w, len: n });
            }
            if owner[w] != usize::MAX {
                return Err(Error::ClusterConstraint {
                    cluster: u,
                    detail: format!("worker {w} assigned twice"),
                });
            }
            owner[w] = u;
        }
    }
    if let Some(w) = owner.iter().position(|&u| u == usize::MAX) {
        return Err(Error::Config(format!("worker {w} belongs to no cluster")));
    }
    Ok(owner)
}

/// Draws fresh alphas, betas, masks and fountain specs for one round.
pub fn plan_round<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SchemeParams,
    round: usize,
    clusters: Vec<Vec<usize>>,
    degrees: Vec<usize>,
) -> Result<RoundPlan> {
    params.validate()?;
    let d_max = degrees.iter().copied().max().unwrap_or(0);
    let points = d_max + params.z + params.n;
    if (params.q.value() as u128) <= points as u128 {
        return Err(Error::FieldTooSmall {
            needed: points as u128 + 1,
            available: params.q.value(),
        });
    }
    // Validate geometry before spending randomness on it.
    check_partition(&clusters, params.n)?;
    for (u, (members, &d)) in clusters.iter().zip(&degrees).enumerate() {
        let max = max_cluster_degree(members.len(), params.z, u)?;
        if d == 0 || d > max {
            return Err(Error::DegreeBound {
                cluster: u,
                degree: d,
                max,
            });
        }
    }
    let mut all = sample_distinct(rng, params.q, points, &[])?;
    let betas = all.split_off(d_max + params.z);
    let alphas = all;
    let masks_r = (0..params.z)
        .map(|_| random_matrix(rng, params.r, params.s, params.q))
        .collect::<Result<Vec<_>>>()?;
    let masks_s = (0..params.z)
        .map(|_| random_matrix(rng, params.s, params.l, params.q))
        .collect::<Result<Vec<_>>>()?;
    let specs = degrees
        .iter()
        .map(|&d| {
            (0..d)
                .map(|_| sample_spec(rng, params.m, params.k, params.soliton))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    RoundPlan::new(params, round, clusters, degrees, alphas, betas, masks_r, masks_s, specs)
}
