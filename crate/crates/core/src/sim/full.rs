use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::workers::{BehaviorKind, WorkerProfile};
use super::{evaluation_point_attack, thread_cpu_time, AttackKnowledge, TrialStats};
use crate::error::{Error, Result};
use crate::field::{sample_uniform, PrimeModulus};
use crate::fountain::{PeelingDecoderState, SolitonParams};
use crate::matgf::{random_nonzero_matrix, random_rank1_matrix, FqMatrix};
use crate::rng::SeededRng;
use crate::scheme::{
    decode_cluster_excluding, default_degrees, encode_tasks, min_cluster_size, min_workers, partition_inputs,
    plan_round, recluster, required_responses, ClusterDecode, EncodedRound, ResponseTimeTracker, RoundPlan,
    SchemeParams, WorkerResponse,
};
use crate::security::{cluster_check, identify_malicious, max_eta};

/// One end-to-end job. The worker count is `profiles.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullRunConfig {
    pub q: u64,
    pub z: usize,
    /// Target cluster count; fewer are used while history is missing or
    /// too few workers remain.
    pub clusters: usize,
    pub m: usize,
    pub k: usize,
    #[serde(default)]
    pub soliton: SolitonParams,
    pub profiles: Vec<WorkerProfile>,
    /// Round budget.
    pub rounds: usize,
    pub eta: usize,
    /// Responses slower than this never arrive.
    #[serde(default)]
    pub timeout: Option<f64>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    /// Subtracted from each cluster's maximum degree.
    #[serde(default)]
    pub slack: usize,
    pub seed: u64,
}

fn default_smoothing() -> f64 {
    0.5
}

impl FullRunConfig {
    /// All-honest workers with the given mean response times.
    pub fn honest(q: u64, z: usize, clusters: usize, m: usize, k: usize, means: &[f64], seed: u64) -> Self {
        Self {
            q,
            z,
            clusters,
            m,
            k,
            soliton: SolitonParams::default(),
            profiles: means.iter().map(|&t| WorkerProfile::honest(t)).collect(),
            rounds: 200,
            eta: 1,
            timeout: None,
            smoothing: default_smoothing(),
            slack: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PrimeModulus::new(self.q)?;
        self.soliton.validate()?;
        if self.z == 0 || self.clusters == 0 || self.m == 0 || self.k == 0 || self.eta == 0 {
            return Err(Error::Config("z, clusters, m, k and eta must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("round budget must be positive".into()));
        }
        if self.profiles.len() < min_cluster_size(self.z, 0) {
            return Err(Error::Config(format!(
                "{} workers cannot form a cluster with z = {}",
                self.profiles.len(),
                self.z
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Config(format!("smoothing must lie in (0, 1], got {}", self.smoothing)));
        }
        if let Some(t) = self.timeout {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::Config(format!("timeout must be positive, got {t}")));
            }
        }
        self.profiles.iter().try_for_each(WorkerProfile::validate)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullRunReport {
    /// `A * B`, present once the fountain decoder completes.
    pub product: Option<FqMatrix>,
    pub rounds_used: usize,
    /// Cluster checks that failed.
    pub detections: u64,
    pub flagged_workers: BTreeSet<usize>,
    /// Per worker: rounds in which one of its corrupted responses was used
    /// for decoding, up to and including the round it was flagged.
    pub corrupted_rounds_used: BTreeMap<usize, u64>,
    /// Rounds whose symbols contradicted earlier ones and were dropped.
    pub quarantined_rounds: u64,
    /// Rounds in which no cluster produced a verified result.
    pub empty_rounds: u64,
    pub recovered_blocks: usize,
    pub total_blocks: usize,
    /// `trials` counts rounds, `corrupted_rounds` and `missed_detections`
    /// count cluster decodes that used a corrupted response.
    pub stats: TrialStats,
}

#[derive(Debug, thiserror::Error)]
pub enum FullRunError {
    #[error("round budget exhausted with {}/{} blocks recovered", .report.recovered_blocks, .report.total_blocks)]
    BudgetExhausted { report: Box<FullRunReport> },
    #[error(transparent)]
    Scheme(#[from] Error),
}

struct SimulatedResponse {
    response: WorkerResponse,
    corrupted: bool,
}

/// Runs rounds until the fountain decoder recovers every block of `a * b`
/// or the budget runs out. Workers caught by a per-worker check are dropped
/// from all later rounds.
pub fn run_full_scheme(
    cfg: &FullRunConfig,
    a: &FqMatrix,
    b: &FqMatrix,
) -> std::result::Result<FullRunReport, FullRunError> {
    cfg.validate()?;
    let q = PrimeModulus::new(cfg.q)?;
    if a.modulus() != q || b.modulus() != q {
        return Err(Error::ModulusMismatch(a.modulus().value(), cfg.q).into());
    }
    let (a_blocks, b_blocks) = partition_inputs(a, b, cfg.m, cfg.k)?;
    let n = cfg.profiles.len();
    let mut rng = SeededRng::new(cfg.seed);
    let mut tracker = ResponseTimeTracker::new(n, cfg.smoothing)?;
    let mut decoder = PeelingDecoderState::new(cfg.m, cfg.k)?;
    let mut report = FullRunReport {
        product: None,
        rounds_used: 0,
        detections: 0,
        flagged_workers: BTreeSet::new(),
        corrupted_rounds_used: BTreeMap::new(),
        quarantined_rounds: 0,
        empty_rounds: 0,
        recovered_blocks: 0,
        total_blocks: cfg.m * cfg.k,
        stats: TrialStats::default(),
    };

    for round in 0..cfg.rounds {
        let active: Vec<usize> = (0..n).filter(|w| !report.flagged_workers.contains(w)).collect();
        if active.len() < min_cluster_size(cfg.z, 0) {
            report.rounds_used = round;
            report.recovered_blocks = decoder.recovered_count();
            return Err(FullRunError::BudgetExhausted { report: Box::new(report) });
        }
        report.rounds_used = round + 1;
        report.stats.trials += 1;

        let clusters = form_clusters(cfg, &tracker, &active)?;
        let degrees = default_degrees(&clusters, cfg.z, cfg.slack)?;
        let params = SchemeParams {
            n: active.len(),
            z: cfg.z,
            clusters: clusters.len(),
            m: cfg.m,
            k: cfg.k,
            r: a_blocks[0].rows(),
            s: a_blocks[0].cols(),
            l: b_blocks[0].cols(),
            q,
            soliton: cfg.soliton,
        };

        let t0 = thread_cpu_time();
        let plan = plan_round(&mut rng, &params, round, clusters, degrees)?;
        let encoded = encode_tasks(&plan, &a_blocks, &b_blocks)?;
        report.stats.coding_time += thread_cpu_time() - t0;

        let arrived = simulate_responses(cfg, &plan, &encoded, &active, round, &mut tracker, &mut rng)?;
        let symbols = verify_clusters(cfg, &plan, &encoded, &active, arrived, &mut report, &mut rng)?;

        if symbols.is_empty() {
            report.empty_rounds += 1;
            continue;
        }
        match decoder.feed_batch(symbols) {
            Ok(()) => {}
            Err(Error::DecoderInconsistency) => report.quarantined_rounds += 1,
            Err(e) => return Err(e.into()),
        }
        if decoder.is_complete() {
            let full = decoder.decoded_product()?;
            report.product = Some(full.window(0, 0, a.rows(), b.cols())?);
            report.recovered_blocks = decoder.recovered_count();
            return Ok(report);
        }
    }
    report.recovered_blocks = decoder.recovered_count();
    Err(FullRunError::BudgetExhausted { report: Box::new(report) })
}

/// Partition of the local indices `0..active.len()`.
fn form_clusters(cfg: &FullRunConfig, tracker: &ResponseTimeTracker, active: &[usize]) -> Result<Vec<Vec<usize>>> {
    let Some(all) = tracker.estimates() else {
        return recluster(None, active.len(), cfg.z, 1);
    };
    let est: Vec<f64> = active.iter().map(|&w| all[w]).collect();
    let mut c = cfg.clusters;
    while c > 1 && min_workers(cfg.z, c) > active.len() {
        c -= 1;
    }
    recluster(Some(&est), active.len(), cfg.z, c)
}

/// Arrived responses per cluster, with malicious behaviors applied.
fn simulate_responses(
    cfg: &FullRunConfig,
    plan: &RoundPlan,
    encoded: &EncodedRound,
    active: &[usize],
    round: usize,
    tracker: &mut ResponseTimeTracker,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<SimulatedResponse>>> {
    let q = plan.alphas()[0].modulus();
    let mut per_cluster: Vec<Vec<SimulatedResponse>> = plan.clusters().iter().map(|_| Vec::new()).collect();
    let mut firing = vec![false; active.len()];
    for (local, &global) in active.iter().enumerate() {
        let profile = &cfg.profiles[global];
        firing[local] = profile.behavior.participation.fires(round, rng);
        let time = profile.sample_time(round, firing[local], rng);
        let arrives = cfg.timeout.is_none_or(|t| time <= t);
        tracker.observe(global, cfg.timeout.map_or(time, |t| time.min(t)));
        if !arrives {
            continue;
        }
        let task = &encoded.tasks[local];
        per_cluster[task.cluster].push(SimulatedResponse {
            response: WorkerResponse {
                worker: local,
                round,
                cluster: task.cluster,
                h_eval: task.f_eval.matmul(&task.g_eval)?,
                arrival_time: time,
            },
            corrupted: false,
        });
    }

    for (u, responses) in per_cluster.iter_mut().enumerate() {
        responses.sort_by(|x, y| {
            x.response
                .arrival_time
                .total_cmp(&y.response.arrival_time)
                .then(x.response.worker.cmp(&y.response.worker))
        });
        let Some(first) = responses.first() else { continue };
        let (rows, cols) = first.response.h_eval.shape();
        let shared = random_rank1_matrix(rng, rows, cols, q)?;
        let mut colluders = Vec::new();
        let mut revealed = true;
        for resp in responses.iter_mut() {
            let local = resp.response.worker;
            if !firing[local] {
                continue;
            }
            let err = match cfg.profiles[active[local]].behavior.kind {
                BehaviorKind::Honest | BehaviorKind::Straggler { .. } => None,
                BehaviorKind::SingleRandomError | BehaviorKind::AllRandomError => {
                    Some(random_nonzero_matrix(rng, rows, cols, q)?)
                }
                BehaviorKind::SingleRank1Error | BehaviorKind::AllRank1Error => {
                    Some(random_rank1_matrix(rng, rows, cols, q)?)
                }
                BehaviorKind::CoordinatedRank1Error => Some(shared.scale(sample_uniform(rng, q))?),
                BehaviorKind::EvaluationPointAttack { revealed_points } => {
                    revealed &= revealed_points;
                    colluders.push(local);
                    None
                }
            };
            if let Some(e) = err {
                resp.corrupted |= !e.is_zero();
                resp.response.h_eval.add_assign(&e)?;
            }
        }
        apply_collusion(plan, u, responses, colluders, revealed, rng)?;
    }
    Ok(per_cluster)
}

/// Colluders are assumed to know which responses the master will use when
/// it has the mask evaluations from cluster 0 (or, for cluster 0, without).
fn apply_collusion(
    plan: &RoundPlan,
    u: usize,
    responses: &mut [SimulatedResponse],
    colluders: Vec<usize>,
    revealed: bool,
    rng: &mut SeededRng,
) -> Result<()> {
    let z = plan.z();
    let d = plan.degrees()[u];
    let needed = required_responses(u.min(1), d, z);
    let used: Vec<usize> = responses.iter().take(needed).map(|r| r.response.worker).collect();
    let slots = d - 1 + z + 1;
    let colluders: Vec<usize> = colluders.into_iter().filter(|c| used.contains(c)).take(slots).collect();
    if colluders.len() < 2 {
        return Ok(());
    }
    let knowledge = if revealed {
        AttackKnowledge::Leaked
    } else {
        AttackKnowledge::Guessed
    };
    for (w, e) in evaluation_point_attack(plan, u, &used, &colluders, knowledge, rng)? {
        let resp = responses.iter_mut().find(|r| r.response.worker == w).expect("colluder responded");
        resp.corrupted |= !e.is_zero();
        resp.response.h_eval.add_assign(&e)?;
    }
    Ok(())
}

/// Decodes and checks every cluster, flagging workers whose clusters fail.
/// Returns the verified fountain symbols of the round.
fn verify_clusters(
    cfg: &FullRunConfig,
    plan: &RoundPlan,
    encoded: &EncodedRound,
    active: &[usize],
    arrived: Vec<Vec<SimulatedResponse>>,
    report: &mut FullRunReport,
    rng: &mut SeededRng,
) -> Result<Vec<(crate::fountain::FountainSymbolSpec, FqMatrix)>> {
    let mut shared: Option<Vec<FqMatrix>> = None;
    let mut symbols = Vec::new();
    for (u, cluster) in arrived.into_iter().enumerate() {
        let corrupted: HashSet<usize> = cluster.iter().filter(|r| r.corrupted).map(|r| r.response.worker).collect();
        let responses: Vec<WorkerResponse> = cluster.into_iter().map(|r| r.response).collect();
        let mut excluded = HashSet::new();
        let eta = cfg.eta.min(max_eta(plan, u));
        loop {
            let t0 = thread_cpu_time();
            let decoded = try_decode(plan, u, &responses, &excluded, shared.as_deref())?;
            report.stats.coding_time += thread_cpu_time() - t0;
            let Some(decoded) = decoded else { break };

            let t0 = thread_cpu_time();
            let outcome = cluster_check(plan, &encoded.clusters[u], &decoded, eta, rng)?;
            report.stats.check_time += thread_cpu_time() - t0;

            let used_bad: Vec<usize> = decoded.used_workers.iter().copied().filter(|w| corrupted.contains(w)).collect();
            for &w in &used_bad {
                *report.corrupted_rounds_used.entry(active[w]).or_default() += 1;
            }
            if !used_bad.is_empty() {
                report.stats.corrupted_rounds += 1;
            }
            if outcome.passed {
                if !used_bad.is_empty() {
                    report.stats.missed_detections += 1;
                }
                if u == 0 {
                    shared = Some(decoded.mask_evals.clone());
                }
                symbols.extend(plan.specs(u).iter().cloned().zip(decoded.c_tildes));
                break;
            }
            if used_bad.is_empty() {
                report.stats.false_positives += 1;
            }
            report.detections += 1;

            let t0 = thread_cpu_time();
            let pending: Vec<WorkerResponse> =
                responses.iter().filter(|r| !excluded.contains(&r.worker)).cloned().collect();
            let flagged = identify_malicious(&encoded.tasks, &pending, rng)?;
            report.stats.check_time += thread_cpu_time() - t0;
            if flagged.is_empty() {
                break;
            }
            for w in flagged {
                excluded.insert(w);
                let global = active[w];
                report.flagged_workers.insert(global);
                *report.stats.per_worker_flags.entry(global).or_default() += 1;
                if !cfg.profiles[global].behavior.kind.is_malicious() {
                    report.stats.false_positives += 1;
                }
            }
        }
    }
    Ok(symbols)
}

/// `None` when the cluster lacks responses this round. Later clusters fall
/// back to a full decode when cluster 0 produced no mask evaluations.
fn try_decode(
    plan: &RoundPlan,
    u: usize,
    responses: &[WorkerResponse],
    excluded: &HashSet<usize>,
    shared: Option<&[FqMatrix]>,
) -> Result<Option<ClusterDecode>> {
    let shared = if u == 0 { None } else { shared };
    match decode_cluster_excluding(plan, u, responses, excluded, shared) {
        Ok(d) => Ok(Some(d)),
        Err(Error::ClusterStarved { .. } | Error::ClusterStarvedAfterExclusion { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
