//! Freivalds-style integrity checks and their missed-detection bounds.

mod bounds;

pub use bounds::{
    bound_public_gamma, bound_repeated_distinct, bound_repeated_iid, bound_single, bound_single_raw, BoundParams,
};

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{sample_distinct, sample_uniform, FieldElement};
use crate::matgf::FqMatrix;
use crate::scheme::{ClusterDecode, ClusterEncoding, LagrangeForm, RoundPlan, Task, WorkerResponse};

/// Whether `x1 (x2 nu) == x3 nu` for the given vector.
pub fn freivalds_with_vector(x1: &FqMatrix, x2: &FqMatrix, x3: &FqMatrix, nu: &[u64]) -> Result<bool> {
    if x1.cols() != x2.rows() || x3.shape() != (x1.rows(), x2.cols()) {
        return Err(Error::Dimension(format!(
            "cannot check {}x{} * {}x{} against {}x{}",
            x1.rows(),
            x1.cols(),
            x2.rows(),
            x2.cols(),
            x3.rows(),
            x3.cols()
        )));
    }
    let lhs = x1.matvec_raw(&x2.matvec_raw(nu)?)?;
    Ok(lhs == x3.matvec_raw(nu)?)
}

/// Randomized test of `x1 x2 == x3` with three matrix-vector products.
/// Never rejects a correct product; accepts a wrong one with probability
/// at most `1/q`.
pub fn freivalds<R: Rng + ?Sized>(x1: &FqMatrix, x2: &FqMatrix, x3: &FqMatrix, rng: &mut R) -> Result<bool> {
    let q = x1.modulus();
    let nu: Vec<u64> = (0..x2.cols()).map(|_| sample_uniform(rng, q).value()).collect();
    freivalds_with_vector(x1, x2, x3, &nu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub repetitions_used: usize,
    /// Evaluation points in the order they were checked.
    pub gammas: Vec<FieldElement>,
}

/// Where one repetition of the cluster check evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckPoint {
    /// `alpha_{z+j}`: coded blocks and their decoded product are reused.
    Data(usize),
    /// `alpha_i` for `i < z`: masks are known, `H` is evaluated afresh.
    Mask(usize),
    /// A point outside the cluster's nodes: `F`, `G`, `H` are all evaluated.
    Fresh(FieldElement),
}

/// Largest repetition count cluster `u` supports: every field element except
/// the cluster's own worker points.
pub fn max_eta(plan: &RoundPlan, u: usize) -> usize {
    let q = plan.alphas()[0].modulus().value();
    (q as u128 - plan.clusters()[u].len() as u128).min(usize::MAX as u128) as usize
}

/// Evaluation points for `eta` repetitions, drawn without replacement: the
/// data points first, then the mask points, then uniformly chosen points
/// avoiding every node already in play.
pub fn check_points<R: Rng + ?Sized>(plan: &RoundPlan, u: usize, eta: usize, rng: &mut R) -> Result<Vec<CheckPoint>> {
    let max = max_eta(plan, u);
    if eta == 0 || eta > max {
        return Err(Error::EtaOutOfRange { eta, max });
    }
    let z = plan.z();
    let d = plan.degrees()[u];
    let mut points: Vec<CheckPoint> = (0..d.min(eta)).map(CheckPoint::Data).collect();
    points.extend((0..z.min(eta.saturating_sub(d))).map(CheckPoint::Mask));
    let extra = eta.saturating_sub(d + z);
    if extra > 0 {
        let mut exclude: Vec<FieldElement> = plan.cluster_alphas(u).to_vec();
        exclude.extend(plan.clusters()[u].iter().map(|&w| plan.beta(w)));
        let q = plan.alphas()[0].modulus();
        points.extend(sample_distinct(rng, q, extra, &exclude)?.into_iter().map(CheckPoint::Fresh));
    }
    Ok(points)
}

/// Per-cluster check: compares the decoded product polynomial against the
/// encoding polynomials at `eta` points, stopping at the first failure.
/// An honest cluster always passes.
pub fn cluster_check<R: Rng + ?Sized>(
    plan: &RoundPlan,
    encoding: &ClusterEncoding,
    decode: &ClusterDecode,
    eta: usize,
    rng: &mut R,
) -> Result<CheckOutcome> {
    let u = decode.cluster;
    let points = check_points(plan, u, eta, rng)?;
    let z = plan.z();
    let mut gammas = Vec::with_capacity(points.len());
    for (rep, point) in points.into_iter().enumerate() {
        let ok = match point {
            CheckPoint::Data(j) => {
                gammas.push(plan.alphas()[z + j]);
                freivalds(&encoding.a_tildes[j], &encoding.b_tildes[j], &decode.c_tildes[j], rng)?
            }
            CheckPoint::Mask(i) => {
                let alpha = plan.alphas()[i];
                gammas.push(alpha);
                let h = decode.h.evaluate(alpha)?;
                freivalds(&plan.masks_r()[i], &plan.masks_s()[i], &h, rng)?
            }
            CheckPoint::Fresh(x) => {
                gammas.push(x);
                freivalds(&encoding.f.evaluate(x)?, &encoding.g.evaluate(x)?, &decode.h.evaluate(x)?, rng)?
            }
        };
        if !ok {
            return Ok(CheckOutcome {
                passed: false,
                repetitions_used: rep + 1,
                gammas,
            });
        }
    }
    Ok(CheckOutcome {
        passed: true,
        repetitions_used: gammas.len(),
        gammas,
    })
}

/// Check at a uniformly random point, usable when the evaluation points may
/// have leaked.
pub fn cluster_check_public_gamma<R: Rng + ?Sized>(
    encoding: &ClusterEncoding,
    h: &LagrangeForm,
    rng: &mut R,
) -> Result<CheckOutcome> {
    let q = encoding.f.modulus();
    let gamma = sample_uniform(rng, q);
    let passed = freivalds(&encoding.f.evaluate(gamma)?, &encoding.g.evaluate(gamma)?, &h.evaluate(gamma)?, rng)?;
    Ok(CheckOutcome {
        passed,
        repetitions_used: 1,
        gammas: vec![gamma],
    })
}

/// Checks one worker's returned product against its own task.
pub fn worker_check<R: Rng + ?Sized>(task: &Task, response: &WorkerResponse, rng: &mut R) -> Result<bool> {
    if task.worker != response.worker || task.round != response.round {
        return Err(Error::Config(format!(
            "response of worker {} round {} checked against task of worker {} round {}",
            response.worker, response.round, task.worker, task.round
        )));
    }
    freivalds(&task.f_eval, &task.g_eval, &response.h_eval, rng)
}

/// Workers whose responses fail [`worker_check`]. `tasks` is indexed by
/// worker.
pub fn identify_malicious<R: Rng + ?Sized>(
    tasks: &[Task],
    responses: &[WorkerResponse],
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    let mut flagged = BTreeSet::new();
    for resp in responses {
        let task = tasks.get(resp.worker).ok_or(Error::IndexOutOfRange {
            index: resp.worker,
            len: tasks.len(),
        })?;
        if !worker_check(task, resp, rng)? {
            flagged.insert(resp.worker);
        }
    }
    Ok(flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeModulus;
    use crate::fountain::SolitonParams;
    use crate::matgf::{random_matrix, random_nonzero_matrix, random_rank1_matrix};
    use crate::rng::SeededRng;
    use crate::scheme::{decode_cluster, encode_tasks, plan_round, EncodedRound, SchemeParams};

    fn q(v: u64) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    /// Rank over F_q, kept local so the nullspace count is independent of
    /// the code under test.
    fn rank(m: &FqMatrix) -> usize {
        let p = m.modulus();
        let mut rows: Vec<Vec<u64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        let mut r = 0;
        for c in 0..m.cols() {
            let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
            rows.swap(r, pr);
            let inv = p.inv(rows[r][c]).unwrap();
            let pivot = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && row[c] != 0 {
                    let f = p.mul(row[c], inv);
                    for (x, &y) in row.iter_mut().zip(&pivot) {
                        *x = p.sub(*x, p.mul(f, y));
                    }
                }
            }
            r += 1;
        }
        r
    }

    fn all_vectors(len: usize, p: u64) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..p).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn completeness() {
        let mut rng = SeededRng::new(1);
        for _ in 0..10_000 {
            let m = q(101);
            let a = random_matrix(&mut rng, 3, 2, m).unwrap();
            let b = random_matrix(&mut rng, 2, 4, m).unwrap();
            let c = a.matmul(&b).unwrap();
            assert!(freivalds(&a, &b, &c, &mut rng).unwrap());
        }
    }

    #[test]
    fn scalar_gf2_exhaustive() {
        let m = q(2);
        let one = FqMatrix::from_rows(&[vec![1]], m).unwrap();
        let zero = FqMatrix::from_rows(&[vec![0]], m).unwrap();
        let passes: Vec<bool> = (0..2)
            .map(|nu| freivalds_with_vector(&one, &one, &zero, &[nu]).unwrap())
            .collect();
        assert_eq!(passes, vec![true, false]);
    }

    #[test]
    fn exhaustive_nullspace_count() {
        // Every error E and every nu: pass iff E nu = 0, so the pass
        // fraction for fixed E is q^(l - rank E) / q^l.
        for p in [2u64, 3] {
            let m = q(p);
            for (rows, cols) in [(1usize, 1usize), (1, 2), (2, 2)] {
                let zero_a = FqMatrix::zeros(rows, 1, m).unwrap();
                let zero_b = FqMatrix::zeros(1, cols, m).unwrap();
                for e in all_vectors(rows * cols, p) {
                    let err = FqMatrix::from_raw(rows, cols, e, m).unwrap();
                    let passes = all_vectors(cols, p)
                        .iter()
                        .filter(|nu| freivalds_with_vector(&zero_a, &zero_b, &err, nu).unwrap())
                        .count();
                    let expected = p.pow((cols - rank(&err)) as u32) as usize;
                    assert_eq!(passes, expected, "q={p} E={err:?}");
                }
            }
        }
    }

    #[test]
    fn rank1_error_false_pass_rate() {
        let m = q(101);
        let mut rng = SeededRng::new(2);
        let a = random_matrix(&mut rng, 10, 10, m).unwrap();
        let b = random_matrix(&mut rng, 10, 10, m).unwrap();
        let trials = 100_000;
        let mut pass = 0;
        for _ in 0..trials {
            let c = a.matmul(&b).unwrap().add(&random_rank1_matrix(&mut rng, 10, 10, m).unwrap()).unwrap();
            if freivalds(&a, &b, &c, &mut rng).unwrap() {
                pass += 1;
            }
        }
        let p = 1.0 / 101.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((pass as f64 / trials as f64) <= p + 3.0 * sigma);
    }

    #[test]
    fn shape_errors() {
        let m = q(7);
        let a = FqMatrix::zeros(2, 3, m).unwrap();
        let mut rng = SeededRng::new(3);
        assert!(freivalds(&a, &a, &a, &mut rng).is_err());
    }

    struct Fixture {
        plan: RoundPlan,
        enc: EncodedRound,
    }

    fn fixture(seed: u64, p: u64, sizes: &[usize], degrees: Vec<usize>) -> Fixture {
        let m = q(p);
        let n: usize = sizes.iter().sum();
        let mut start = 0;
        let clusters: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&s| {
                let c = (start..start + s).collect();
                start += s;
                c
            })
            .collect();
        let params = SchemeParams {
            n,
            z: 1,
            clusters: sizes.len(),
            m: 2,
            k: 2,
            r: 2,
            s: 2,
            l: 2,
            q: m,
            soliton: SolitonParams::default(),
        };
        let mut rng = SeededRng::new(seed);
        let plan = plan_round(&mut rng, &params, 0, clusters, degrees).unwrap();
        let a: Vec<FqMatrix> = (0..2).map(|_| random_matrix(&mut rng, 2, 2, m).unwrap()).collect();
        let b: Vec<FqMatrix> = (0..2).map(|_| random_matrix(&mut rng, 2, 2, m).unwrap()).collect();
        let enc = encode_tasks(&plan, &a, &b).unwrap();
        Fixture { plan, enc }
    }

    fn responses(f: &Fixture, u: usize) -> Vec<WorkerResponse> {
        f.plan.clusters()[u]
            .iter()
            .map(|&w| {
                let t = &f.enc.tasks[w];
                WorkerResponse {
                    worker: w,
                    round: 0,
                    cluster: u,
                    h_eval: t.f_eval.matmul(&t.g_eval).unwrap(),
                    arrival_time: w as f64,
                }
            })
            .collect()
    }

    #[test]
    fn honest_cluster_passes_every_eta() {
        let mut rng = SeededRng::new(4);
        for seed in 0..50 {
            let f = fixture(seed, 31, &[5, 3], vec![2, 1]);
            let r0 = responses(&f, 0);
            let d0 = decode_cluster(&f.plan, 0, &r0, None).unwrap();
            let d1 = decode_cluster(&f.plan, 1, &responses(&f, 1), Some(&d0.mask_evals)).unwrap();
            for eta in [1, 2, 3, 6, 20] {
                let out = cluster_check(&f.plan, &f.enc.clusters[0], &d0, eta, &mut rng).unwrap();
                assert!(out.passed);
                assert_eq!(out.repetitions_used, eta);
                let distinct: BTreeSet<u64> = out.gammas.iter().map(|g| g.value()).collect();
                assert_eq!(distinct.len(), eta);
                assert!(cluster_check(&f.plan, &f.enc.clusters[1], &d1, eta, &mut rng).unwrap().passed);
            }
            assert!(cluster_check_public_gamma(&f.enc.clusters[0], &d0.h, &mut rng).unwrap().passed);
            assert!(identify_malicious(&f.enc.tasks, &r0, &mut rng).unwrap().is_empty());
        }
    }

    #[test]
    fn check_point_order() {
        let f = fixture(5, 31, &[5], vec![2]);
        let mut rng = SeededRng::new(5);
        let pts = check_points(&f.plan, 0, 5, &mut rng).unwrap();
        assert_eq!(&pts[..3], &[CheckPoint::Data(0), CheckPoint::Data(1), CheckPoint::Mask(0)]);
        for p in &pts[3..] {
            let CheckPoint::Fresh(x) = p else { panic!("expected fresh point") };
            assert!(!f.plan.cluster_alphas(0).contains(x));
            assert!(!f.plan.betas()[..5].contains(x));
        }
        assert_eq!(max_eta(&f.plan, 0), 26);
        assert!(check_points(&f.plan, 0, 27, &mut rng).is_err());
        assert!(check_points(&f.plan, 0, 0, &mut rng).is_err());
        assert_eq!(check_points(&f.plan, 0, 26, &mut rng).unwrap().len(), 26);
    }

    #[test]
    fn corrupted_cluster_single_check_rate() {
        // Three workers, z = 1, d = 1, one corrupted response.
        let mut rng = SeededRng::new(6);
        let trials = 20_000;
        let mut missed = 0;
        for t in 0..trials {
            let f = fixture(1000 + t, 7, &[3], vec![1]);
            let mut r = responses(&f, 0);
            let e = random_nonzero_matrix(&mut rng, 2, 2, q(7)).unwrap();
            r[1].h_eval.add_assign(&e).unwrap();
            let d = decode_cluster(&f.plan, 0, &r, None).unwrap();
            if cluster_check(&f.plan, &f.enc.clusters[0], &d, 1, &mut rng).unwrap().passed {
                missed += 1;
            }
        }
        let bound = bound_single(7, 2).unwrap();
        let rate = missed as f64 / trials as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(rate <= bound + 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn public_gamma_rate_within_bound() {
        let mut rng = SeededRng::new(7);
        let trials = 20_000;
        let mut missed = 0;
        let f = fixture(7, 101, &[3], vec![1]);
        let clean = responses(&f, 0);
        for _ in 0..trials {
            let mut r = clean.clone();
            let e = random_nonzero_matrix(&mut rng, 2, 2, q(101)).unwrap();
            r[0].h_eval.add_assign(&e).unwrap();
            let d = decode_cluster(&f.plan, 0, &r, None).unwrap();
            if cluster_check_public_gamma(&f.enc.clusters[0], &d.h, &mut rng).unwrap().passed {
                missed += 1;
            }
        }
        let bound = bound_public_gamma(101, 2);
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!((missed as f64 / trials as f64) <= bound + 3.0 * sigma);
    }

    #[test]
    fn public_gamma_audit_trail_varies() {
        let f = fixture(8, 101, &[3], vec![1]);
        let d = decode_cluster(&f.plan, 0, &responses(&f, 0), None).unwrap();
        let gammas: BTreeSet<u64> = (0..20)
            .map(|s| {
                cluster_check_public_gamma(&f.enc.clusters[0], &d.h, &mut SeededRng::new(s))
                    .unwrap()
                    .gammas[0]
                    .value()
            })
            .collect();
        assert!(gammas.len() > 1);
    }

    #[test]
    fn worker_checks() {
        let f = fixture(9, 101, &[3], vec![1]);
        let mut rng = SeededRng::new(9);
        let clean = responses(&f, 0);
        let trials = 10_000;
        let mut flagged = 0;
        for _ in 0..trials {
            let mut r = clean.clone();
            let e = random_nonzero_matrix(&mut rng, 2, 2, q(101)).unwrap();
            r[1].h_eval.add_assign(&e).unwrap();
            let set = identify_malicious(&f.enc.tasks, &r, &mut rng).unwrap();
            assert!(!set.contains(&0) && !set.contains(&2));
            flagged += set.len();
        }
        assert!(flagged as f64 >= trials as f64 * (1.0 - 1.0 / 101.0) - 3.0 * (trials as f64 / 101.0).sqrt());

        let mut r = clean[0].clone();
        r.worker = 1;
        assert!(worker_check(&f.enc.tasks[0], &r, &mut rng).is_err());
    }
}
