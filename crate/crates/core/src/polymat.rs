//! Polynomials with matrix coefficients over F_q.
//!
//! Interpolation is the classical quadratic Lagrange construction: the
//! scalar basis polynomials are expanded into coefficient form once, then
//! each output coefficient is a lazy linear combination of the sample
//! matrices.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeModulus};
use crate::matgf::FqMatrix;

/// Pairwise distinct evaluation points with precomputed barycentric weights
/// `w_i = 1 / prod_{j != i} (x_i - x_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolationNodes {
    points: Vec<u64>,
    weights: Vec<u64>,
    modulus: PrimeModulus,
}

impl InterpolationNodes {
    pub fn new(points: &[FieldElement]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Dimension("no interpolation nodes".into()))?;
        let q = first.modulus();
        let mut seen = HashSet::with_capacity(points.len());
        for p in points {
            if p.modulus() != q {
                return Err(Error::ModulusMismatch(q.value(), p.modulus().value()));
            }
            if !seen.insert(p.value()) {
                return Err(Error::DuplicateNode(p.value()));
            }
        }
        let raw: Vec<u64> = points.iter().map(|p| p.value()).collect();
        let weights = raw
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let denom = raw
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(1, |acc, (_, &xj)| q.mul(acc, q.sub(xi, xj)));
                q.inv(denom)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points: raw,
            weights,
            modulus: q,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn point(&self, i: usize) -> FieldElement {
        self.modulus.reduce(self.points[i])
    }

    /// All basis values `l_0(x), ..., l_{n-1}(x)` in linear time.
    pub fn basis_values(&self, x: FieldElement) -> Result<Vec<u64>> {
        let q = self.modulus;
        if x.modulus() != q {
            return Err(Error::ModulusMismatch(q.value(), x.modulus().value()));
        }
        let x = x.value();
        if let Some(hit) = self.points.iter().position(|&p| p == x) {
            let mut out = vec![0; self.points.len()];
            out[hit] = 1;
            return Ok(out);
        }
        let diffs: Vec<u64> = self.points.iter().map(|&p| q.sub(x, p)).collect();
        let n = diffs.len();
        // prefix[i] = prod_{j < i}, suffix[i] = prod_{j > i}
        let mut prefix = vec![1u64; n];
        for i in 1..n {
            prefix[i] = q.mul(prefix[i - 1], diffs[i - 1]);
        }
        let mut out = vec![0u64; n];
        let mut suffix = 1u64;
        for i in (0..n).rev() {
            out[i] = q.mul(q.mul(prefix[i], suffix), self.weights[i]);
            suffix = q.mul(suffix, diffs[i]);
        }
        Ok(out)
    }
}

/// `l_i(x)` for the Lagrange basis on `nodes`.
pub fn lagrange_basis_at(
    nodes: &InterpolationNodes,
    i: usize,
    x: FieldElement,
) -> Result<FieldElement> {
    if i >= nodes.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: nodes.len(),
        });
    }
    Ok(nodes.modulus.reduce(nodes.basis_values(x)?[i]))
}

/// Polynomial `sum_k coeffs[k] x^k` with uniformly shaped matrix
/// coefficients. Trailing zero coefficients are trimmed, so the zero
/// polynomial has no coefficients and no degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixPolynomial {
    coeffs: Vec<FqMatrix>,
    rows: usize,
    cols: usize,
    modulus: PrimeModulus,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<FqMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Dimension("use MatrixPolynomial::zero for no coefficients".into()))?;
        let (rows, cols, modulus) = (first.rows(), first.cols(), first.modulus());
        for c in &coeffs {
            if c.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus.value(), c.modulus().value()));
            }
            if c.shape() != (rows, cols) {
                return Err(Error::Dimension("coefficient shapes differ".into()));
            }
        }
        let mut p = Self {
            coeffs,
            rows,
            cols,
            modulus,
        };
        p.trim();
        Ok(p)
    }

    pub fn zero(rows: usize, cols: usize, modulus: PrimeModulus) -> Result<Self> {
        FqMatrix::zeros(rows, cols, modulus)?;
        Ok(Self {
            coeffs: Vec::new(),
            rows,
            cols,
            modulus,
        })
    }

    pub fn constant(c: FqMatrix) -> Self {
        let mut p = Self {
            rows: c.rows(),
            cols: c.cols(),
            modulus: c.modulus(),
            coeffs: vec![c],
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(FqMatrix::is_zero) {
            self.coeffs.pop();
        }
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[FqMatrix] {
        &self.coeffs
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    /// Evaluates at `x`. Equivalent to Horner's rule; the powers of `x` are
    /// formed first so the matrix work is a single lazy combination.
    pub fn evaluate(&self, x: FieldElement) -> Result<FqMatrix> {
        let q = self.modulus;
        if x.modulus() != q {
            return Err(Error::ModulusMismatch(q.value(), x.modulus().value()));
        }
        if self.coeffs.is_empty() {
            return FqMatrix::zeros(self.rows, self.cols, q);
        }
        let mut powers = Vec::with_capacity(self.coeffs.len());
        let mut p = 1u64;
        for _ in 0..self.coeffs.len() {
            powers.push(p);
            p = q.mul(p, x.value());
        }
        let refs: Vec<&FqMatrix> = self.coeffs.iter().collect();
        FqMatrix::linear_combination(&powers, &refs)
    }
}

/// Evaluates `p` at `x`.
pub fn evaluate(p: &MatrixPolynomial, x: FieldElement) -> Result<FqMatrix> {
    p.evaluate(x)
}

/// Coefficients of `prod_i (x - points_i)`, lowest degree first.
fn vanishing_poly(points: &[u64], q: PrimeModulus) -> Vec<u64> {
    let mut poly = vec![1u64];
    for &a in points {
        let mut next = vec![0u64; poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            next[k + 1] = q.add(next[k + 1], c);
            next[k] = q.sub(next[k], q.mul(c, a));
        }
        poly = next;
    }
    poly
}

/// The unique polynomial of degree `< nodes.len()` through
/// `(nodes[i], values[i])`.
pub fn interpolate(nodes: &InterpolationNodes, values: &[FqMatrix]) -> Result<MatrixPolynomial> {
    let n = nodes.len();
    if values.len() != n {
        return Err(Error::Dimension(format!(
            "{} values for {n} nodes",
            values.len()
        )));
    }
    let q = nodes.modulus;
    let (rows, cols) = values[0].shape();
    for v in values {
        if v.modulus() != q {
            return Err(Error::ModulusMismatch(q.value(), v.modulus().value()));
        }
        if v.shape() != (rows, cols) {
            return Err(Error::Dimension("interpolation values differ in shape".into()));
        }
    }
    let master = vanishing_poly(&nodes.points, q);
    // basis[i][k]: coefficient k of l_i(x) = w_i * master(x) / (x - x_i)
    let mut basis = vec![vec![0u64; n]; n];
    for (i, &xi) in nodes.points.iter().enumerate() {
        // Synthetic division of master by (x - xi).
        let mut carry = 0u64;
        for k in (0..n).rev() {
            carry = q.add(master[k + 1], q.mul(carry, xi));
            basis[i][k] = q.mul(carry, nodes.weights[i]);
        }
    }
    let refs: Vec<&FqMatrix> = values.iter().collect();
    let mut column = vec![0u64; n];
    let coeffs = (0..n)
        .map(|k| {
            for i in 0..n {
                column[i] = basis[i][k];
            }
            FqMatrix::linear_combination(&column, &refs)
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::new(coeffs)
}

/// `f(x) * g(x)` without forming the product polynomial.
pub fn poly_product_evals(
    f: &MatrixPolynomial,
    g: &MatrixPolynomial,
    x: FieldElement,
) -> Result<FqMatrix> {
    if f.cols != g.rows {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{} polynomials",
            f.rows, f.cols, g.rows, g.cols
        )));
    }
    f.evaluate(x)?.matmul(&g.evaluate(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_distinct;
    use crate::matgf::random_matrix;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn q(v: u64) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    fn nodes(p: u64, xs: &[u64]) -> InterpolationNodes {
        let m = q(p);
        let pts: Vec<FieldElement> = xs.iter().map(|&x| m.element(x).unwrap()).collect();
        InterpolationNodes::new(&pts).unwrap()
    }

    fn random_poly(rng: &mut SeededRng, deg: usize, rows: usize, cols: usize, p: u64) -> Vec<FqMatrix> {
        (0..=deg).map(|_| random_matrix(rng, rows, cols, q(p)).unwrap()).collect()
    }

    #[test]
    fn basis_examples() {
        let ns = nodes(5, &[1, 2]);
        let at = |x| lagrange_basis_at(&ns, 0, q(5).element(x).unwrap()).unwrap().value();
        assert_eq!(at(1), 1);
        assert_eq!(at(2), 0);
        // (3 - 2) / (1 - 2) = 1 / 4 = 4 mod 5
        assert_eq!(at(3), 4);
        assert!(lagrange_basis_at(&ns, 2, q(5).one()).is_err());
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let m = q(5);
        let pts = [m.element(1).unwrap(), m.element(1).unwrap()];
        assert_eq!(InterpolationNodes::new(&pts), Err(Error::DuplicateNode(1)));
    }

    #[test]
    fn partition_of_unity_exhaustive() {
        for p in [2u64, 3, 5, 7, 11] {
            let m = q(p);
            for size in 1..=p.min(4) {
                let ns = nodes(p, &(0..size).collect::<Vec<_>>());
                for x in 0..p {
                    let vals = ns.basis_values(m.element(x).unwrap()).unwrap();
                    let sum = vals.iter().fold(0, |acc, &v| m.add(acc, v));
                    assert_eq!(sum, 1, "q={p} size={size} x={x}");
                }
            }
        }
    }

    #[test]
    fn single_node_gives_constant() {
        let mut rng = SeededRng::new(1);
        let v = random_matrix(&mut rng, 2, 3, q(11)).unwrap();
        let p = interpolate(&nodes(11, &[4]), std::slice::from_ref(&v)).unwrap();
        assert_eq!(p, MatrixPolynomial::constant(v));
    }

    #[test]
    fn equal_values_give_constant() {
        let mut rng = SeededRng::new(2);
        let v = random_matrix(&mut rng, 2, 2, q(11)).unwrap();
        let p = interpolate(&nodes(11, &[3, 8]), &[v.clone(), v.clone()]).unwrap();
        assert_eq!(p.degree(), if v.is_zero() { None } else { Some(0) });
        assert_eq!(p.coeffs(), &[v]);
    }

    #[test]
    fn degree3_round_trip() {
        let mut rng = SeededRng::new(3);
        let coeffs = random_poly(&mut rng, 3, 2, 2, 11);
        let poly = MatrixPolynomial::new(coeffs.clone()).unwrap();
        let ns = nodes(11, &[1, 5, 7, 10]);
        let vals: Vec<FqMatrix> = (0..4).map(|i| poly.evaluate(ns.point(i)).unwrap()).collect();
        assert_eq!(interpolate(&ns, &vals).unwrap(), poly);
    }

    #[test]
    fn interpolate_rejects_mismatch() {
        let mut rng = SeededRng::new(4);
        let a = random_matrix(&mut rng, 2, 2, q(11)).unwrap();
        let b = random_matrix(&mut rng, 2, 3, q(11)).unwrap();
        assert!(interpolate(&nodes(11, &[1, 2]), std::slice::from_ref(&a)).is_err());
        assert!(interpolate(&nodes(11, &[1, 2]), &[a, b]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let m = q(7);
        let mut rng = SeededRng::new(5);
        let c = random_matrix(&mut rng, 2, 2, m).unwrap();
        let constant = MatrixPolynomial::constant(c.clone());
        for x in 0..7 {
            assert_eq!(constant.evaluate(m.element(x).unwrap()).unwrap(), c);
        }
        let zero = FqMatrix::zeros(3, 3, m).unwrap();
        let id = FqMatrix::identity(3, m).unwrap();
        let x_times_i = MatrixPolynomial::new(vec![zero, id.clone()]).unwrap();
        let three = m.element(3).unwrap();
        assert_eq!(x_times_i.evaluate(three).unwrap(), id.scale(three).unwrap());
    }

    #[test]
    fn evaluate_matches_horner() {
        let m = q(101);
        let mut rng = SeededRng::new(6);
        let coeffs = random_poly(&mut rng, 5, 2, 3, 101);
        let p = MatrixPolynomial::new(coeffs.clone()).unwrap();
        for x in [0u64, 1, 17, 100] {
            let xe = m.element(x).unwrap();
            let mut acc = FqMatrix::zeros(2, 3, m).unwrap();
            for c in coeffs.iter().rev() {
                acc = acc.scale(xe).unwrap().add(c).unwrap();
            }
            assert_eq!(p.evaluate(xe).unwrap(), acc);
        }
    }

    #[test]
    fn product_evals_examples() {
        let m = q(11);
        let mut rng = SeededRng::new(7);
        let a = random_matrix(&mut rng, 2, 3, m).unwrap();
        let b = random_matrix(&mut rng, 3, 2, m).unwrap();
        let f = MatrixPolynomial::constant(a.clone());
        let g = MatrixPolynomial::constant(b.clone());
        assert_eq!(poly_product_evals(&f, &g, m.element(4).unwrap()).unwrap(), a.matmul(&b).unwrap());

        let zero = MatrixPolynomial::zero(2, 3, m).unwrap();
        for x in 0..11 {
            assert!(poly_product_evals(&zero, &g, m.element(x).unwrap()).unwrap().is_zero());
        }
        assert!(poly_product_evals(&g, &g, m.one()).is_err());
    }

    #[test]
    fn product_of_linear_polys_matches_convolution() {
        let m = q(11);
        let mut rng = SeededRng::new(8);
        let f = random_poly(&mut rng, 1, 2, 3, 11);
        let g = random_poly(&mut rng, 1, 3, 2, 11);
        let fp = MatrixPolynomial::new(f.clone()).unwrap();
        let gp = MatrixPolynomial::new(g.clone()).unwrap();
        let ns = nodes(11, &[0, 2, 6, 9]);
        let vals: Vec<FqMatrix> = (0..4)
            .map(|i| poly_product_evals(&fp, &gp, ns.point(i)).unwrap())
            .collect();
        let h = interpolate(&ns, &vals).unwrap();
        // Convolution oracle: h_k = sum_{i+j=k} f_i g_j.
        let mut expected = vec![FqMatrix::zeros(2, 2, m).unwrap(); 3];
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                expected[i + j].add_assign(&fi.matmul(gj).unwrap()).unwrap();
            }
        }
        assert!(h.degree().is_none_or(|d| d <= 2));
        assert_eq!(h, MatrixPolynomial::new(expected).unwrap());
    }

    proptest! {
        #[test]
        fn interpolation_round_trip(
            seed in any::<u64>(),
            p in prop::sample::select(vec![5u64, 11, 101]),
            rows in 1usize..4,
            cols in 1usize..4,
            deg in 0usize..4,
        ) {
            let m = q(p);
            let mut rng = SeededRng::new(seed);
            let poly = MatrixPolynomial::new(random_poly(&mut rng, deg, rows, cols, p))?;
            let pts = sample_distinct(&mut rng, m, deg + 1, &[])?;
            let ns = InterpolationNodes::new(&pts)?;
            let vals: Vec<FqMatrix> = pts.iter().map(|&x| poly.evaluate(x)).collect::<Result<_>>()?;
            let back = interpolate(&ns, &vals)?;
            prop_assert!(back.degree().is_none_or(|d| d <= deg));
            prop_assert_eq!(back, poly);
        }

        #[test]
        fn interpolant_degree_bounded(seed in any::<u64>(), n in 1usize..8) {
            let m = q(101);
            let mut rng = SeededRng::new(seed);
            let pts = sample_distinct(&mut rng, m, n, &[])?;
            let ns = InterpolationNodes::new(&pts)?;
            let vals: Vec<FqMatrix> = (0..n).map(|_| random_matrix(&mut rng, 2, 2, m)).collect::<Result<_>>()?;
            let h = interpolate(&ns, &vals)?;
            prop_assert!(h.degree().is_none_or(|d| d < n));
            for (x, v) in pts.iter().zip(&vals) {
                prop_assert_eq!(&h.evaluate(*x)?, v);
            }
        }
    }
}
