use std::collections::HashSet;

use super::{RoundPlan, Task};
use crate::error::{Error, Result};
use crate::matgf::{solve_scalar_system, FqMatrix};
use crate::polymat::InterpolationNodes;

/// Recovers the masks from the tasks of any `z` distinct workers, given the
/// evaluation points and every cluster's coded blocks.
///
/// Each task satisfies `F(beta) = sum_i l_i(beta) R_i + sum_j l_{z+j}(beta) A~_j`,
/// so subtracting the known coded part leaves a `z x z` system in the masks.
pub fn recover_masks_from_tasks(
    plan: &RoundPlan,
    tasks: &[Task],
    a_tildes: &[Vec<FqMatrix>],
    b_tildes: &[Vec<FqMatrix>],
) -> Result<(Vec<FqMatrix>, Vec<FqMatrix>)> {
    let z = plan.z();
    if tasks.len() != z {
        return Err(Error::Dimension(format!("need exactly {z} tasks, got {}", tasks.len())));
    }
    let distinct: HashSet<usize> = tasks.iter().map(|t| t.worker).collect();
    if distinct.len() != z {
        return Err(Error::Config("tasks must come from distinct workers".into()));
    }
    let q = plan.alphas()[0].modulus();
    let mut coeffs = Vec::with_capacity(z);
    let mut rhs_r = Vec::with_capacity(z);
    let mut rhs_s = Vec::with_capacity(z);
    for t in tasks {
        let u = t.cluster;
        if plan.cluster_of(t.worker) != Some(u) {
            return Err(Error::Config(format!("worker {} is not in cluster {u}", t.worker)));
        }
        let (at, bt) = (&a_tildes[u], &b_tildes[u]);
        if at.len() != plan.degrees()[u] || bt.len() != plan.degrees()[u] {
            return Err(Error::Dimension(format!("cluster {u} needs {} coded blocks", plan.degrees()[u])));
        }
        let nodes = InterpolationNodes::new(plan.cluster_alphas(u))?;
        let basis = nodes.basis_values(plan.beta(t.worker))?;
        let (mask_part, coded_part) = basis.split_at(z);
        let mut fr = t.f_eval.clone();
        let mut gr = t.g_eval.clone();
        for ((&l, a), b) in coded_part.iter().zip(at).zip(bt) {
            fr.sub_assign(&a.scale(q.reduce(l))?)?;
            gr.sub_assign(&b.scale(q.reduce(l))?)?;
        }
        coeffs.push(mask_part.to_vec());
        rhs_r.push(fr);
        rhs_s.push(gr);
    }
    let masks_r = solve_scalar_system(coeffs.clone(), rhs_r)?;
    let masks_s = solve_scalar_system(coeffs, rhs_s)?;
    Ok((masks_r, masks_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use crate::fountain::SolitonParams;
    use crate::matgf::random_matrix;
    use crate::polymat::lagrange_basis_at;
    use crate::rng::SeededRng;
    use crate::scheme::{encode_tasks, plan_round, EncodedRound, SchemeParams};

    fn setup(seed: u64, z: usize, q: u64, clusters: Vec<Vec<usize>>, degrees: Vec<usize>) -> (RoundPlan, EncodedRound) {
        let q = PrimeModulus::new(q).unwrap();
        let params = SchemeParams {
            n: clusters.iter().map(Vec::len).sum(),
            z,
            clusters: clusters.len(),
            m: 2,
            k: 2,
            r: 2,
            s: 3,
            l: 2,
            q,
            soliton: SolitonParams::default(),
        };
        let mut rng = SeededRng::new(seed);
        let plan = plan_round(&mut rng, &params, 0, clusters, degrees).unwrap();
        let a: Vec<FqMatrix> = (0..2).map(|_| random_matrix(&mut rng, 2, 3, q).unwrap()).collect();
        let b: Vec<FqMatrix> = (0..2).map(|_| random_matrix(&mut rng, 3, 2, q).unwrap()).collect();
        let enc = encode_tasks(&plan, &a, &b).unwrap();
        (plan, enc)
    }

    fn tildes(enc: &EncodedRound) -> (Vec<Vec<FqMatrix>>, Vec<Vec<FqMatrix>>) {
        (
            enc.clusters.iter().map(|c| c.a_tildes.clone()).collect(),
            enc.clusters.iter().map(|c| c.b_tildes.clone()).collect(),
        )
    }

    #[test]
    fn z1_direct_formula() {
        let (plan, enc) = setup(1, 1, 101, vec![vec![0, 1, 2]], vec![1]);
        let t = &enc.tasks[1];
        let nodes = InterpolationNodes::new(plan.cluster_alphas(0)).unwrap();
        let beta = plan.beta(1);
        let l1 = lagrange_basis_at(&nodes, 0, beta).unwrap();
        let l2 = lagrange_basis_at(&nodes, 1, beta).unwrap();
        let r1 = t
            .f_eval
            .sub(&enc.clusters[0].a_tildes[0].scale(l2).unwrap())
            .unwrap()
            .scale(l1.inverse().unwrap())
            .unwrap();
        assert_eq!(r1, plan.masks_r()[0]);
        let (at, bt) = tildes(&enc);
        let (rs, ss) = recover_masks_from_tasks(&plan, std::slice::from_ref(t), &at, &bt).unwrap();
        assert_eq!(rs, vec![r1]);
        assert_eq!(ss, plan.masks_s().to_vec());
    }

    #[test]
    fn z2_two_by_two_system() {
        let (plan, enc) = setup(2, 2, 11, vec![vec![0, 1, 2, 3, 4]], vec![1]);
        let (at, bt) = tildes(&enc);
        let (rs, ss) = recover_masks_from_tasks(&plan, &enc.tasks[2..4], &at, &bt).unwrap();
        assert_eq!(rs, plan.masks_r().to_vec());
        assert_eq!(ss, plan.masks_s().to_vec());
    }

    #[test]
    fn recovered_masks_reproduce_f() {
        let (plan, enc) = setup(3, 1, 101, vec![vec![0, 1, 2], vec![3, 4]], vec![1, 1]);
        let (at, bt) = tildes(&enc);
        let (rs, _) = recover_masks_from_tasks(&plan, &enc.tasks[4..5], &at, &bt).unwrap();
        let nodes = InterpolationNodes::new(plan.cluster_alphas(0)).unwrap();
        let vals: Vec<FqMatrix> = rs.iter().chain(&at[0]).cloned().collect();
        let f = crate::polymat::interpolate(&nodes, &vals).unwrap();
        assert_eq!(f, enc.clusters[0].f);
    }

    #[test]
    fn wrong_task_count_rejected() {
        let (plan, enc) = setup(4, 1, 101, vec![vec![0, 1, 2]], vec![1]);
        let (at, bt) = tildes(&enc);
        assert!(recover_masks_from_tasks(&plan, &enc.tasks[..2], &at, &bt).is_err());
        let (plan, enc) = setup(5, 2, 101, vec![vec![0, 1, 2, 3, 4]], vec![1]);
        let (at, bt) = tildes(&enc);
        let same = vec![enc.tasks[0].clone(), enc.tasks[0].clone()];
        assert!(recover_masks_from_tasks(&plan, &same, &at, &bt).is_err());
    }
}
