use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::errors::error_terms;
use super::{ErrorModel, TrialStats};
use crate::error::{Error, Result};
use crate::field::PrimeModulus;
use crate::fountain::SolitonParams;
use crate::matgf::random_matrix;
use crate::rng::SeededRng;
use crate::scheme::{decode_cluster, encode_tasks, max_cluster_degree, plan_round, required_responses, SchemeParams, WorkerResponse};
use crate::security::{check_points, cluster_check};

/// One cell of a missed-detection sweep: a single cluster of `n_u` workers
/// with the largest admissible degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub q: u64,
    pub n_u: usize,
    pub z: usize,
    pub r: usize,
    pub s: usize,
    pub l: usize,
    pub model: ErrorModel,
    pub eta: usize,
    pub trials: u64,
    pub seed: u64,
}

impl DetectionConfig {
    fn scheme_params(&self) -> Result<SchemeParams> {
        Ok(SchemeParams {
            n: self.n_u,
            z: self.z,
            clusters: 1,
            m: 1,
            k: 1,
            r: self.r,
            s: self.s,
            l: self.l,
            q: PrimeModulus::new(self.q)?,
            soliton: SolitonParams::default(),
        })
    }

    pub fn degree(&self) -> Result<usize> {
        max_cluster_degree(self.n_u, self.z, 0)
    }

    /// Degree of the product polynomial the check works against.
    pub fn deg_h(&self) -> Result<usize> {
        Ok(2 * self.degree()? + 2 * self.z - 2)
    }
}

/// Runs `trials` independent rounds, each with a fresh plan and inputs,
/// corrupting the used responses per `model` and recording whether the
/// cluster check at `eta` points misses it.
///
/// Every trial draws from its own stream of `seed`, so the result does not
/// depend on the thread count.
pub fn run_detection_experiment(cfg: &DetectionConfig) -> Result<TrialStats> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let params = cfg.scheme_params()?;
    params.validate()?;
    let degree = cfg.degree()?;
    // Validate eta and field size once, up front.
    {
        let mut rng = SeededRng::stream(cfg.seed, u64::MAX);
        let plan = plan_round(&mut rng, &params, 0, vec![(0..cfg.n_u).collect()], vec![degree])?;
        check_points(&plan, 0, cfg.eta, &mut rng)?;
    }
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &params, degree, t))
        .try_reduce(TrialStats::default, |a, b| Ok(a.merge(b)))
}

fn run_trial(cfg: &DetectionConfig, params: &SchemeParams, degree: usize, t: u64) -> Result<TrialStats> {
    let mut rng = SeededRng::stream(cfg.seed, t);
    let q = params.q;
    let plan = plan_round(&mut rng, params, 0, vec![(0..cfg.n_u).collect()], vec![degree])?;
    let a = random_matrix(&mut rng, cfg.r, cfg.s, q)?;
    let b = random_matrix(&mut rng, cfg.s, cfg.l, q)?;
    let enc = encode_tasks(&plan, &[a], &[b])?;

    let used = required_responses(0, degree, cfg.z);
    let errors = error_terms(cfg.model, used, cfg.r, cfg.l, q, &mut rng)?;
    let responses = enc.tasks[..used]
        .iter()
        .zip(&errors)
        .map(|(task, err)| {
            let mut h = task.f_eval.matmul(&task.g_eval)?;
            if let Some(e) = err {
                h.add_assign(e)?;
            }
            Ok(WorkerResponse {
                worker: task.worker,
                round: 0,
                cluster: 0,
                h_eval: h,
                arrival_time: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decode = decode_cluster(&plan, 0, &responses, None)?;
    let outcome = cluster_check(&plan, &enc.clusters[0], &decode, cfg.eta, &mut rng)?;

    let corrupted = cfg.model != ErrorModel::Honest;
    Ok(TrialStats {
        trials: 1,
        corrupted_rounds: u64::from(corrupted),
        missed_detections: u64::from(corrupted && outcome.passed),
        false_positives: u64::from(!corrupted && !outcome.passed),
        ..Default::default()
    })
}
