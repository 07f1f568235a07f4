use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a worker does with its task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BehaviorKind {
    Honest,
    /// Correct results, response time multiplied by `delay_factor`.
    Straggler { delay_factor: f64 },
    /// Adds a uniform nonzero matrix.
    SingleRandomError,
    /// Adds a uniform nonzero matrix; meant to be set on every worker.
    AllRandomError,
    /// Adds a uniform rank-one matrix.
    SingleRank1Error,
    /// Adds a uniform rank-one matrix; meant to be set on every worker.
    AllRank1Error,
    /// All such workers of a cluster add scalar multiples of one shared
    /// rank-one matrix.
    CoordinatedRank1Error,
    /// All such workers of a cluster collude on an interpolated error that
    /// vanishes at the first data point.
    EvaluationPointAttack { revealed_points: bool },
}

impl BehaviorKind {
    pub fn is_malicious(self) -> bool {
        !matches!(self, BehaviorKind::Honest | BehaviorKind::Straggler { .. })
    }
}

/// Rounds in which a behavior fires; outside them the worker is honest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Participation {
    pub start_round: usize,
    pub end_round: Option<usize>,
    /// Chance of firing within the active range.
    pub probability: f64,
}

impl Default for Participation {
    fn default() -> Self {
        Self {
            start_round: 0,
            end_round: None,
            probability: 1.0,
        }
    }
}

impl Participation {
    pub fn fires<R: Rng + ?Sized>(&self, round: usize, rng: &mut R) -> bool {
        let in_range = round >= self.start_round && self.end_round.is_none_or(|e| round < e);
        in_range && (self.probability >= 1.0 || rng.gen_bool(self.probability.clamp(0.0, 1.0)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    #[serde(flatten)]
    pub kind: BehaviorKind,
    #[serde(default)]
    pub participation: Participation,
}

impl BehaviorSpec {
    pub fn honest() -> Self {
        Self {
            kind: BehaviorKind::Honest,
            participation: Participation::default(),
        }
    }

    pub fn always(kind: BehaviorKind) -> Self {
        Self {
            kind,
            participation: Participation::default(),
        }
    }
}

/// Timing and behavior of one simulated worker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerProfile {
    pub mean_response: f64,
    #[serde(default)]
    pub jitter: f64,
    /// Multiplies the mean once per round.
    #[serde(default = "unit_drift")]
    pub drift_per_round: f64,
    #[serde(default = "BehaviorSpec::honest")]
    pub behavior: BehaviorSpec,
}

fn unit_drift() -> f64 {
    1.0
}

impl WorkerProfile {
    pub fn honest(mean_response: f64) -> Self {
        Self {
            mean_response,
            jitter: 0.0,
            drift_per_round: 1.0,
            behavior: BehaviorSpec::honest(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mean_response > 0.0
            && self.mean_response.is_finite()
            && self.jitter >= 0.0
            && self.drift_per_round > 0.0
            && (0.0..=1.0).contains(&self.behavior.participation.probability);
        if !ok {
            return Err(Error::Config(format!("invalid worker profile {self:?}")));
        }
        if let BehaviorKind::Straggler { delay_factor } = self.behavior.kind {
            if delay_factor.is_nan() || delay_factor < 1.0 {
                return Err(Error::Config(format!("straggler delay factor {delay_factor} below 1")));
            }
        }
        Ok(())
    }

    /// Shifted exponential with shift half the (drifted) mean, plus uniform
    /// jitter; stragglers are slowed by their delay factor when they fire.
    pub fn sample_time<R: Rng + ?Sized>(&self, round: usize, straggling: bool, rng: &mut R) -> f64 {
        let mean = self.mean_response * self.drift_per_round.powi(round as i32);
        let shift = 0.5 * mean;
        let tail = Exp::new(1.0 / (mean - shift)).expect("positive rate").sample(rng);
        let jitter = if self.jitter > 0.0 { rng.gen_range(0.0..self.jitter) } else { 0.0 };
        let base = shift + tail + jitter;
        match self.behavior.kind {
            BehaviorKind::Straggler { delay_factor } if straggling => base * delay_factor,
            _ => base,
        }
    }
}
