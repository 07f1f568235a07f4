use super::RoundPlan;
use crate::error::{Error, Result};
use crate::fountain::encode_block_sum;
use crate::matgf::FqMatrix;
use crate::polymat::{interpolate, InterpolationNodes, MatrixPolynomial};

/// What worker `worker` receives in round `round`.
#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub worker: usize,
    pub round: usize,
    pub cluster: usize,
    pub f_eval: FqMatrix,
    pub g_eval: FqMatrix,
}

/// Master-side encoding state of one cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterEncoding {
    pub f: MatrixPolynomial,
    pub g: MatrixPolynomial,
    pub a_tildes: Vec<FqMatrix>,
    pub b_tildes: Vec<FqMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedRound {
    /// Indexed by worker.
    pub tasks: Vec<Task>,
    pub clusters: Vec<ClusterEncoding>,
}

/// Splits `a` into `m` row blocks and `b` into `k` column blocks, padding
/// with zero rows or columns when the dimensions do not divide evenly.
pub fn partition_inputs(
    a: &FqMatrix,
    b: &FqMatrix,
    m: usize,
    k: usize,
) -> Result<(Vec<FqMatrix>, Vec<FqMatrix>)> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok((a.split_rows(m)?, b.split_cols(k)?))
}

pub fn encode_tasks(
    plan: &RoundPlan,
    a_blocks: &[FqMatrix],
    b_blocks: &[FqMatrix],
) -> Result<EncodedRound> {
    let (r, s) = plan.masks_r()[0].shape();
    let l = plan.masks_s()[0].cols();
    if a_blocks.iter().any(|a| a.shape() != (r, s)) || b_blocks.iter().any(|b| b.shape() != (s, l)) {
        return Err(Error::Dimension(format!(
            "blocks must be {r}x{s} and {s}x{l}"
        )));
    }
    let mut tasks: Vec<Option<Task>> = vec![None; plan.betas().len()];
    let mut clusters = Vec::with_capacity(plan.clusters().len());
    for (u, members) in plan.clusters().iter().enumerate() {
        let specs = plan.specs(u);
        let a_tildes = specs
            .iter()
            .map(|sp| encode_block_sum(a_blocks, sp.a_set()))
            .collect::<Result<Vec<_>>>()?;
        let b_tildes = specs
            .iter()
            .map(|sp| encode_block_sum(b_blocks, sp.b_set()))
            .collect::<Result<Vec<_>>>()?;
        let nodes = InterpolationNodes::new(plan.cluster_alphas(u))?;
        let f_vals: Vec<FqMatrix> = plan.masks_r().iter().chain(&a_tildes).cloned().collect();
        let g_vals: Vec<FqMatrix> = plan.masks_s().iter().chain(&b_tildes).cloned().collect();
        let f = interpolate(&nodes, &f_vals)?;
        let g = interpolate(&nodes, &g_vals)?;
        for &w in members {
            let beta = plan.beta(w);
            tasks[w] = Some(Task {
                worker: w,
                round: plan.round(),
                cluster: u,
                f_eval: f.evaluate(beta)?,
                g_eval: g.evaluate(beta)?,
            });
        }
        clusters.push(ClusterEncoding {
            f,
            g,
            a_tildes,
            b_tildes,
        });
    }
    let tasks = tasks
        .into_iter()
        .map(|t| t.expect("every worker belongs to a cluster"))
        .collect();
    Ok(EncodedRound { tasks, clusters })
}
