use std::collections::HashSet;

use super::{required_responses, RoundPlan, WorkerResponse};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::matgf::FqMatrix;
use crate::polymat::{interpolate, InterpolationNodes, MatrixPolynomial};

/// A polynomial held as its values on a node set.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangeForm {
    nodes: InterpolationNodes,
    values: Vec<FqMatrix>,
}

impl LagrangeForm {
    pub fn new(nodes: InterpolationNodes, values: Vec<FqMatrix>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} nodes",
                values.len(),
                nodes.len()
            )));
        }
        Ok(Self { nodes, values })
    }

    pub fn nodes(&self) -> &InterpolationNodes {
        &self.nodes
    }

    pub fn values(&self) -> &[FqMatrix] {
        &self.values
    }

    pub fn evaluate(&self, x: FieldElement) -> Result<FqMatrix> {
        let basis = self.nodes.basis_values(x)?;
        let refs: Vec<&FqMatrix> = self.values.iter().collect();
        FqMatrix::linear_combination(&basis, &refs)
    }

    pub fn polynomial(&self) -> Result<MatrixPolynomial> {
        interpolate(&self.nodes, &self.values)
    }
}

/// Result of decoding one cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDecode {
    pub cluster: usize,
    pub h: LagrangeForm,
    /// `H(alpha_{z+j})`, which equals `A~_j B~_j` when every used response
    /// is correct.
    pub c_tildes: Vec<FqMatrix>,
    /// `H(alpha_1..alpha_z)`, handed to later clusters.
    pub mask_evals: Vec<FqMatrix>,
    /// Workers whose responses were interpolated, fastest first.
    pub used_workers: Vec<usize>,
}

/// Interpolates cluster `u`'s product polynomial from its fastest
/// responses. With `shared_mask_evals` the cluster needs `z` fewer
/// responses; without them it needs `2 d_u + 2z - 1`.
pub fn decode_cluster(
    plan: &RoundPlan,
    u: usize,
    responses: &[WorkerResponse],
    shared_mask_evals: Option<&[FqMatrix]>,
) -> Result<ClusterDecode> {
    decode_inner(plan, u, responses, &HashSet::new(), shared_mask_evals)
}

/// As [`decode_cluster`] but ignoring responses from `excluded`.
pub fn decode_cluster_excluding(
    plan: &RoundPlan,
    u: usize,
    responses: &[WorkerResponse],
    excluded: &HashSet<usize>,
    shared_mask_evals: Option<&[FqMatrix]>,
) -> Result<ClusterDecode> {
    decode_inner(plan, u, responses, excluded, shared_mask_evals).map_err(|e| match e {
        Error::ClusterStarved { available, needed } if !excluded.is_empty() => {
            Error::ClusterStarvedAfterExclusion { available, needed }
        }
        e => e,
    })
}

fn decode_inner(
    plan: &RoundPlan,
    u: usize,
    responses: &[WorkerResponse],
    excluded: &HashSet<usize>,
    shared: Option<&[FqMatrix]>,
) -> Result<ClusterDecode> {
    let z = plan.z();
    let degree = *plan
        .degrees()
        .get(u)
        .ok_or(Error::IndexOutOfRange {
            index: u,
            len: plan.degrees().len(),
        })?;
    if let Some(evals) = shared {
        if evals.len() != z {
            return Err(Error::Dimension(format!("expected {z} shared mask evaluations")));
        }
    }
    let needed = match shared {
        Some(_) => required_responses(1, degree, z),
        None => required_responses(0, degree, z),
    };

    let mut seen = HashSet::new();
    let mut usable: Vec<&WorkerResponse> = Vec::with_capacity(responses.len());
    for resp in responses {
        if resp.round != plan.round() || plan.cluster_of(resp.worker) != Some(u) || resp.cluster != u {
            return Err(Error::Config(format!(
                "response from worker {} (round {}, cluster {}) does not belong to cluster {u} of round {}",
                resp.worker,
                resp.round,
                resp.cluster,
                plan.round()
            )));
        }
        if !seen.insert(resp.worker) {
            return Err(Error::Config(format!("duplicate response from worker {}", resp.worker)));
        }
        if !excluded.contains(&resp.worker) {
            usable.push(resp);
        }
    }
    if usable.len() < needed {
        return Err(Error::ClusterStarved {
            available: usable.len(),
            needed,
        });
    }
    usable.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.worker.cmp(&b.worker)));
    usable.truncate(needed);

    let mask_alphas = &plan.alphas()[..z];
    let mut points: Vec<FieldElement> = Vec::with_capacity(needed + z);
    let mut values: Vec<FqMatrix> = Vec::with_capacity(needed + z);
    if let Some(evals) = shared {
        points.extend_from_slice(mask_alphas);
        values.extend_from_slice(evals);
    }
    for resp in &usable {
        points.push(plan.beta(resp.worker));
        values.push(resp.h_eval.clone());
    }
    let h = LagrangeForm::new(InterpolationNodes::new(&points)?, values)?;
    let c_tildes = plan.cluster_alphas(u)[z..]
        .iter()
        .map(|&a| h.evaluate(a))
        .collect::<Result<Vec<_>>>()?;
    let mask_evals = match shared {
        Some(evals) => evals.to_vec(),
        None => mask_alphas.iter().map(|&a| h.evaluate(a)).collect::<Result<Vec<_>>>()?,
    };
    Ok(ClusterDecode {
        cluster: u,
        h,
        c_tildes,
        mask_evals,
        used_workers: usable.iter().map(|r| r.worker).collect(),
    })
}
