//! Simulated workers, error injection and experiment drivers.

mod attack;
mod detection;
mod errors;
mod full;
mod overhead;
mod workers;

pub use attack::{evaluation_point_attack, AttackKnowledge};
pub use detection::{run_detection_experiment, DetectionConfig};
pub use errors::{apply_error_model, ErrorModel};
pub use full::{run_full_scheme, FullRunConfig, FullRunError, FullRunReport};
pub use overhead::{run_overhead_experiment, OverheadConfig, OverheadRow};
pub use workers::{BehaviorKind, BehaviorSpec, Participation, WorkerProfile};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Aggregated outcome of a batch of simulated rounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    /// Rounds in which an error model or malicious behavior fired on a
    /// response the master used.
    pub corrupted_rounds: u64,
    /// Corrupted rounds whose cluster check passed anyway.
    pub missed_detections: u64,
    /// Honest workers flagged, or honest clusters failing their check.
    pub false_positives: u64,
    pub per_worker_flags: BTreeMap<usize, u64>,
    pub coding_time: f64,
    pub check_time: f64,
}

impl TrialStats {
    pub fn miss_rate(&self) -> f64 {
        if self.corrupted_rounds == 0 {
            0.0
        } else {
            self.missed_detections as f64 / self.corrupted_rounds as f64
        }
    }

    pub fn merge(mut self, other: TrialStats) -> TrialStats {
        self.trials += other.trials;
        self.corrupted_rounds += other.corrupted_rounds;
        self.missed_detections += other.missed_detections;
        self.false_positives += other.false_positives;
        for (w, c) in other.per_worker_flags {
            *self.per_worker_flags.entry(w).or_default() += c;
        }
        self.coding_time += other.coding_time;
        self.check_time += other.check_time;
        self
    }
}

/// CPU time consumed by the calling thread, in seconds.
pub fn thread_cpu_time() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "thread CPU clock unavailable");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}
