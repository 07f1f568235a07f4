use serde::{Deserialize, Serialize};

use super::thread_cpu_time;
use crate::error::{Error, Result};
use crate::field::PrimeModulus;
use crate::fountain::SolitonParams;
use crate::matgf::random_matrix;
use crate::rng::SeededRng;
use crate::scheme::{
    decode_cluster, encode_tasks, max_cluster_degree, plan_round, required_responses, SchemeParams, WorkerResponse,
};
use crate::security::{cluster_check, identify_malicious};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadConfig {
    pub q: u64,
    /// Square block size: `r = s = l = dims`.
    pub dims: usize,
    pub cluster_sizes: Vec<usize>,
    pub z: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub n_u: usize,
    pub dims: usize,
    pub per_cluster_ratio: f64,
    pub per_worker_ratio: f64,
    /// Median CPU seconds for encoding plus decoding one cluster.
    pub coding_time: f64,
    pub cluster_check_time: f64,
    pub worker_check_time: f64,
}

/// Shortest span timed in one measurement; quick operations are repeated
/// until the batch takes at least this long.
const MIN_BATCH_SECONDS: f64 = 2e-3;

fn time_op(mut op: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut batch = 1usize;
    loop {
        let start = thread_cpu_time();
        for _ in 0..batch {
            op()?;
        }
        let elapsed = thread_cpu_time() - start;
        if elapsed >= MIN_BATCH_SECONDS {
            return Ok(elapsed / batch as f64);
        }
        batch *= 2;
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// CPU time of the per-cluster check and of per-worker checks on every used
/// response, each relative to the time spent encoding and decoding the
/// cluster's polynomials. Medians over `reps` repetitions.
pub fn run_overhead_experiment(cfg: &OverheadConfig) -> Result<Vec<OverheadRow>> {
    if cfg.reps == 0 || cfg.dims == 0 {
        return Err(Error::Config("reps and dims must be positive".into()));
    }
    let q = PrimeModulus::new(cfg.q)?;
    cfg.cluster_sizes
        .iter()
        .map(|&n_u| {
            let degree = max_cluster_degree(n_u, cfg.z, 0)?;
            let params = SchemeParams {
                n: n_u,
                z: cfg.z,
                clusters: 1,
                m: 1,
                k: 1,
                r: cfg.dims,
                s: cfg.dims,
                l: cfg.dims,
                q,
                soliton: SolitonParams::default(),
            };
            let used = required_responses(0, degree, cfg.z);
            let (mut coding, mut cluster, mut worker) = (Vec::new(), Vec::new(), Vec::new());
            for rep in 0..cfg.reps {
                let mut rng = SeededRng::stream(cfg.seed, (n_u as u64) << 32 | rep as u64);
                let plan = plan_round(&mut rng, &params, 0, vec![(0..n_u).collect()], vec![degree])?;
                let a = random_matrix(&mut rng, cfg.dims, cfg.dims, q)?;
                let b = random_matrix(&mut rng, cfg.dims, cfg.dims, q)?;
                let enc = encode_tasks(&plan, std::slice::from_ref(&a), std::slice::from_ref(&b))?;
                let responses = enc.tasks[..used]
                    .iter()
                    .map(|t| {
                        Ok(WorkerResponse {
                            worker: t.worker,
                            round: 0,
                            cluster: 0,
                            h_eval: t.f_eval.matmul(&t.g_eval)?,
                            arrival_time: t.worker as f64,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let decode = decode_cluster(&plan, 0, &responses, None)?;

                coding.push(time_op(|| {
                    let e = encode_tasks(&plan, std::slice::from_ref(&a), std::slice::from_ref(&b))?;
                    let d = decode_cluster(&plan, 0, &responses, None)?;
                    std::hint::black_box((e, d));
                    Ok(())
                })?);
                cluster.push(time_op(|| {
                    let out = cluster_check(&plan, &enc.clusters[0], &decode, 1, &mut rng)?;
                    if !out.passed {
                        return Err(Error::Config("honest cluster failed its check".into()));
                    }
                    Ok(())
                })?);
                worker.push(time_op(|| {
                    let flagged = identify_malicious(&enc.tasks, &responses, &mut rng)?;
                    if !flagged.is_empty() {
                        return Err(Error::Config("honest worker flagged".into()));
                    }
                    Ok(())
                })?);
            }
            let coding_time = median(coding);
            let cluster_check_time = median(cluster);
            let worker_check_time = median(worker);
            Ok(OverheadRow {
                n_u,
                dims: cfg.dims,
                per_cluster_ratio: cluster_check_time / coding_time,
                per_worker_ratio: worker_check_time / coding_time,
                coding_time,
                cluster_check_time,
                worker_check_time,
            })
        })
        .collect()
}
