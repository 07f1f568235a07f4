use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::sample_uniform;
use crate::matgf::{random_nonzero_matrix, random_rank1_matrix, FqMatrix};

/// How the used responses of a cluster are corrupted in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    Honest,
    /// One response gets a uniform nonzero error.
    SingleRandom,
    /// Every response gets an independent uniform nonzero error.
    AllRandom,
    /// One response gets a uniform rank-one error.
    SingleRank1,
    /// Every response gets an independent rank-one error.
    AllRank1,
    /// Every response gets `lambda_i u v^T` for one shared rank-one `u v^T`
    /// and independent uniform scalars `lambda_i`.
    CoordinatedRank1,
}

impl ErrorModel {
    pub const ALL: [ErrorModel; 6] = [
        ErrorModel::Honest,
        ErrorModel::SingleRandom,
        ErrorModel::AllRandom,
        ErrorModel::SingleRank1,
        ErrorModel::AllRank1,
        ErrorModel::CoordinatedRank1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorModel::Honest => "honest",
            ErrorModel::SingleRandom => "single-random",
            ErrorModel::AllRandom => "all-random",
            ErrorModel::SingleRank1 => "single-rank1",
            ErrorModel::AllRank1 => "all-rank1",
            ErrorModel::CoordinatedRank1 => "coordinated-rank1",
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ErrorModel::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown error model {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Additive errors for `count` responses of shape `rows x cols`; `None`
/// leaves a response untouched.
pub(crate) fn error_terms<R: Rng + ?Sized>(
    model: ErrorModel,
    count: usize,
    rows: usize,
    cols: usize,
    q: crate::field::PrimeModulus,
    rng: &mut R,
) -> Result<Vec<Option<FqMatrix>>> {
    let mut out = vec![None; count];
    if count == 0 {
        return Ok(out);
    }
    match model {
        ErrorModel::Honest => {}
        ErrorModel::SingleRandom | ErrorModel::SingleRank1 => {
            let i = rng.gen_range(0..count);
            out[i] = Some(if model == ErrorModel::SingleRandom {
                random_nonzero_matrix(rng, rows, cols, q)?
            } else {
                random_rank1_matrix(rng, rows, cols, q)?
            });
        }
        ErrorModel::AllRandom => {
            for slot in &mut out {
                *slot = Some(random_nonzero_matrix(rng, rows, cols, q)?);
            }
        }
        ErrorModel::AllRank1 => {
            for slot in &mut out {
                *slot = Some(random_rank1_matrix(rng, rows, cols, q)?);
            }
        }
        ErrorModel::CoordinatedRank1 => {
            let shared = random_rank1_matrix(rng, rows, cols, q)?;
            for slot in &mut out {
                let lambda = sample_uniform(rng, q);
                *slot = Some(shared.scale(lambda)?);
            }
        }
    }
    Ok(out)
}

/// Returns `honest_evals` with `model`'s errors added.
pub fn apply_error_model<R: Rng + ?Sized>(
    model: ErrorModel,
    honest_evals: &[FqMatrix],
    rng: &mut R,
) -> Result<Vec<FqMatrix>> {
    let first = honest_evals.first().ok_or(Error::EmptySubset)?;
    let (rows, cols) = first.shape();
    let terms = error_terms(model, honest_evals.len(), rows, cols, first.modulus(), rng)?;
    honest_evals
        .iter()
        .zip(terms)
        .map(|(h, e)| match e {
            Some(e) => h.add(&e),
            None => Ok(h.clone()),
        })
        .collect()
}
