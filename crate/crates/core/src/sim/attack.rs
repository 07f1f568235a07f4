use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sample_distinct, FieldElement};
use crate::matgf::{random_nonzero_matrix, FqMatrix};
use crate::polymat::{interpolate, InterpolationNodes};
use crate::scheme::RoundPlan;

/// What the colluders know about the round's evaluation points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKnowledge {
    /// The true alphas and betas have leaked.
    Leaked,
    /// The colluders guess every point uniformly at random.
    Guessed,
}

/// Colluding workers add `P(beta_i)` to their results, where `P` vanishes at
/// the first data point and at every honest used worker's beta, and takes a
/// random nonzero value at `w - 1` further target points: the remaining
/// data points, then the mask points. The decoded product polynomial shifts
/// by exactly `P`, so a check at the first data point cannot see it while
/// every targeted slot is corrupted.
///
/// Returns the additive error for each colluder.
pub fn evaluation_point_attack<R: Rng + ?Sized>(
    plan: &RoundPlan,
    u: usize,
    used_workers: &[usize],
    colluders: &[usize],
    knowledge: AttackKnowledge,
    rng: &mut R,
) -> Result<Vec<(usize, FqMatrix)>> {
    let z = plan.z();
    let d = plan.degrees()[u];
    let w = colluders.len();
    if w < 2 {
        return Err(Error::Config("the attack needs at least two colluders".into()));
    }
    let used: HashSet<usize> = used_workers.iter().copied().collect();
    let distinct: HashSet<usize> = colluders.iter().copied().collect();
    if distinct.len() != w || !colluders.iter().all(|c| used.contains(c)) {
        return Err(Error::Config("colluders must be distinct used workers".into()));
    }
    if w - 1 > d - 1 + z {
        return Err(Error::Config(format!(
            "{w} colluders exceed the {} attackable slots",
            d - 1 + z
        )));
    }
    let honest: Vec<usize> = used_workers.iter().copied().filter(|x| !distinct.contains(x)).collect();
    let alphas = plan.cluster_alphas(u);
    let targets: Vec<FieldElement> = alphas[z + 1..]
        .iter()
        .chain(&alphas[..z])
        .take(w - 1)
        .copied()
        .collect();

    let q = alphas[0].modulus();
    let (anchor, targets, honest_betas, colluder_betas) = match knowledge {
        AttackKnowledge::Leaked => (
            alphas[z],
            targets,
            honest.iter().map(|&i| plan.beta(i)).collect::<Vec<_>>(),
            colluders.iter().map(|&i| plan.beta(i)).collect::<Vec<_>>(),
        ),
        AttackKnowledge::Guessed => {
            let mut pts = sample_distinct(rng, q, 1 + targets.len() + honest.len() + w, &[])?;
            let colluder_betas = pts.split_off(pts.len() - w);
            let honest_betas = pts.split_off(1 + targets.len());
            let targets = pts.split_off(1);
            (pts[0], targets, honest_betas, colluder_betas)
        }
    };

    let rows = plan.masks_r()[0].rows();
    let cols = plan.masks_s()[0].cols();
    let zero = FqMatrix::zeros(rows, cols, q)?;
    let mut points = vec![anchor];
    let mut values = vec![zero.clone()];
    for &t in &targets {
        points.push(t);
        values.push(random_nonzero_matrix(rng, rows, cols, q)?);
    }
    for &b in &honest_betas {
        points.push(b);
        values.push(zero.clone());
    }
    let p = interpolate(&InterpolationNodes::new(&points)?, &values)?;
    colluders
        .iter()
        .zip(colluder_betas)
        .map(|(&c, beta)| Ok((c, p.evaluate(beta)?)))
        .collect()
}
