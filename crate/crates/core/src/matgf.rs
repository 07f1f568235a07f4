//! Dense matrices over F_q.
//!
//! Entries are stored row-major as reduced `u64` values. Inner products
//! accumulate unreduced `u128` partial sums and reduce only when the
//! modulus-dependent headroom runs out, which keeps the hot loops free of
//! per-term divisions.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeModulus};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    modulus: PrimeModulus,
}

fn check_same_modulus(a: PrimeModulus, b: PrimeModulus) -> Result<()> {
    if a != b {
        return Err(Error::ModulusMismatch(a.value(), b.value()));
    }
    Ok(())
}

impl FqMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: PrimeModulus) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0; rows * cols],
            modulus,
        })
    }

    pub fn identity(size: usize, modulus: PrimeModulus) -> Result<Self> {
        let mut m = Self::zeros(size, size, modulus)?;
        for i in 0..size {
            m.data[i * size + i] = 1;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major raw values, each of which must be reduced.
    pub fn from_raw(
        rows: usize,
        cols: usize,
        data: Vec<u64>,
        modulus: PrimeModulus,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(&value) = data.iter().find(|&&v| v >= modulus.value()) {
            return Err(Error::Unreduced {
                value,
                modulus: modulus.value(),
            });
        }
        Ok(Self {
            rows,
            cols,
            data,
            modulus,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>], modulus: PrimeModulus) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_raw(rows.len(), cols, rows.concat(), modulus)
    }

    pub fn from_elements(
        rows: usize,
        cols: usize,
        entries: &[FieldElement],
        modulus: PrimeModulus,
    ) -> Result<Self> {
        for e in entries {
            check_same_modulus(modulus, e.modulus())?;
        }
        Self::from_raw(rows, cols, entries.iter().map(|e| e.value()).collect(), modulus)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn raw(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.modulus.reduce(self.data[i * self.cols + j])
    }

    pub fn get_raw(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: FieldElement) -> Result<()> {
        check_same_modulus(self.modulus, value.modulus())?;
        self.data[i * self.cols + j] = value.value();
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        check_same_modulus(self.modulus, other.modulus)?;
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let q = self.modulus;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| q.add(a, b))
            .collect();
        Ok(self.with_data(data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let q = self.modulus;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| q.sub(a, b))
            .collect();
        Ok(self.with_data(data))
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        let q = self.modulus;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = q.add(*a, b);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        let q = self.modulus;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = q.sub(*a, b);
        }
        Ok(())
    }

    pub fn scale(&self, factor: FieldElement) -> Result<Self> {
        check_same_modulus(self.modulus, factor.modulus())?;
        let q = self.modulus;
        let s = factor.value();
        let data = self.data.iter().map(|&a| q.mul(a, s)).collect();
        Ok(self.with_data(data))
    }

    fn with_data(&self, data: Vec<u64>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
            modulus: self.modulus,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_same_modulus(self.modulus, other.modulus)?;
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let q = self.modulus;
        let budget = q.lazy_budget();
        let (n, inner) = (other.cols, self.cols);
        let mut out = vec![0u64; self.rows * n];
        let mut acc = vec![0u128; n];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            let mut pending = 0;
            for t in 0..inner {
                let a = self.data[i * inner + t] as u128;
                if a == 0 {
                    continue;
                }
                let row = &other.data[t * n..(t + 1) * n];
                for (slot, &b) in acc.iter_mut().zip(row) {
                    *slot += a * b as u128;
                }
                pending += 1;
                if pending == budget {
                    acc.iter_mut().for_each(|s| *s %= q.value() as u128);
                    pending = 0;
                }
            }
            for (o, &s) in out[i * n..(i + 1) * n].iter_mut().zip(&acc) {
                *o = q.reduce_wide(s);
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: n,
            data: out,
            modulus: q,
        })
    }

    /// Matrix-vector product on raw reduced values.
    pub fn matvec_raw(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let q = self.modulus;
        let budget = q.lazy_budget();
        Ok((0..self.rows)
            .map(|i| dot_lazy(self.row(i), v, q, budget))
            .collect())
    }

    pub fn matvec(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        for e in v {
            check_same_modulus(self.modulus, e.modulus())?;
        }
        let raw: Vec<u64> = v.iter().map(|e| e.value()).collect();
        Ok(self
            .matvec_raw(&raw)?
            .into_iter()
            .map(|x| self.modulus.reduce(x))
            .collect())
    }

    /// `sum_i coeffs[i] * mats[i]` with lazy reduction.
    pub fn linear_combination(coeffs: &[u64], mats: &[&FqMatrix]) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::Dimension("empty linear combination".into()))?;
        if coeffs.len() != mats.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} matrices",
                coeffs.len(),
                mats.len()
            )));
        }
        for m in &mats[1..] {
            first.check_same_shape(m)?;
        }
        let q = first.modulus;
        let budget = q.lazy_budget();
        let mut acc = vec![0u128; first.data.len()];
        let mut pending = 0;
        for (&c, m) in coeffs.iter().zip(mats) {
            if c == 0 {
                continue;
            }
            let c = c as u128;
            for (slot, &v) in acc.iter_mut().zip(&m.data) {
                *slot += c * v as u128;
            }
            pending += 1;
            if pending == budget {
                acc.iter_mut().for_each(|s| *s %= q.value() as u128);
                pending = 0;
            }
        }
        Ok(Self {
            rows: first.rows,
            cols: first.cols,
            data: acc.into_iter().map(|s| q.reduce_wide(s)).collect(),
            modulus: q,
        })
    }

    /// Stacks blocks vertically.
    pub fn vstack(blocks: &[FqMatrix]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::Dimension("nothing to stack".into()))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            check_same_modulus(first.modulus, b.modulus)?;
            if b.cols != first.cols {
                return Err(Error::Dimension("column count differs".into()));
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Self::from_raw(rows, first.cols, data, first.modulus)
    }

    /// Copies the `rows x cols` window starting at (`row0`, `col0`), padding
    /// with zeros past the edge.
    pub fn window(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Result<Self> {
        let mut out = Self::zeros(rows, cols, self.modulus)?;
        for i in 0..rows {
            for j in 0..cols {
                let (si, sj) = (row0 + i, col0 + j);
                if si < self.rows && sj < self.cols {
                    out.data[i * cols + j] = self.data[si * self.cols + sj];
                }
            }
        }
        Ok(out)
    }

    /// Splits into `parts` row blocks of equal height, zero-padding the last.
    pub fn split_rows(&self, parts: usize) -> Result<Vec<Self>> {
        if parts == 0 {
            return Err(Error::Dimension("zero row blocks".into()));
        }
        let h = self.rows.div_ceil(parts);
        (0..parts).map(|p| self.window(p * h, 0, h, self.cols)).collect()
    }

    /// Splits into `parts` column blocks of equal width, zero-padding the last.
    pub fn split_cols(&self, parts: usize) -> Result<Vec<Self>> {
        if parts == 0 {
            return Err(Error::Dimension("zero column blocks".into()));
        }
        let w = self.cols.div_ceil(parts);
        (0..parts).map(|p| self.window(0, p * w, self.rows, w)).collect()
    }

    /// Serializes to the text format: `rows cols q`, then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.data.len() * 4 + 32);
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.modulus);
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            line: line + 1,
            message,
        };
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(hl, format!("expected `rows cols q`, got {header:?}")));
        }
        let num = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|e| parse_err(hl, format!("bad {what} {s:?}: {e}")))
        };
        let rows = num(fields[0], "row count")? as usize;
        let cols = num(fields[1], "column count")? as usize;
        let q = PrimeModulus::new(num(fields[2], "modulus")?)
            .map_err(|e| parse_err(hl, e.to_string()))?;
        if rows == 0 || cols == 0 {
            return Err(parse_err(hl, "dimensions must be positive".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse_err(hl + r + 1, format!("missing row {}", r + 1)))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: u64 = tok
                    .parse()
                    .map_err(|e| parse_err(ln, format!("bad entry {tok:?}: {e}")))?;
                if v >= q.value() {
                    return Err(parse_err(ln, format!("entry {v} not in [0, {q})")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(parse_err(
                    ln,
                    format!("expected {cols} entries, found {}", data.len() - before),
                ));
            }
        }
        if let Some((ln, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(ln, format!("trailing content {line:?}")));
        }
        Self::from_raw(rows, cols, data, q)
    }
}

pub(crate) fn dot_lazy(a: &[u64], b: &[u64], q: PrimeModulus, budget: usize) -> u64 {
    let mut acc = 0u128;
    let mut pending = 0;
    for (&x, &y) in a.iter().zip(b) {
        acc += x as u128 * y as u128;
        pending += 1;
        if pending == budget {
            acc %= q.value() as u128;
            pending = 0;
        }
    }
    q.reduce_wide(acc)
}

pub fn random_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    q: PrimeModulus,
) -> Result<FqMatrix> {
    let mut m = FqMatrix::zeros(rows, cols, q)?;
    for v in &mut m.data {
        *v = rng.gen_range(0..q.value());
    }
    Ok(m)
}

/// Uniform over nonzero matrices (rejection on the all-zero draw).
pub fn random_nonzero_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    q: PrimeModulus,
) -> Result<FqMatrix> {
    loop {
        let m = random_matrix(rng, rows, cols, q)?;
        if !m.is_zero() {
            return Ok(m);
        }
    }
}

fn random_nonzero_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, q: PrimeModulus) -> Vec<u64> {
    loop {
        let v: Vec<u64> = (0..len).map(|_| rng.gen_range(0..q.value())).collect();
        if v.iter().any(|&x| x != 0) {
            return v;
        }
    }
}

/// `u v^T` for independent uniform nonzero `u`, `v`; rank exactly one.
pub fn random_rank1_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    q: PrimeModulus,
) -> Result<FqMatrix> {
    let mut m = FqMatrix::zeros(rows, cols, q)?;
    let u = random_nonzero_vector(rng, rows, q);
    let v = random_nonzero_vector(rng, cols, q);
    for i in 0..rows {
        for j in 0..cols {
            m.data[i * cols + j] = q.mul(u[i], v[j]);
        }
    }
    Ok(m)
}

/// Solves `coeffs * X = rhs` where `coeffs` is a square scalar matrix and
/// each unknown and right-hand side is a matrix.
pub fn solve_scalar_system(
    coeffs: Vec<Vec<u64>>,
    rhs: Vec<FqMatrix>,
) -> Result<Vec<FqMatrix>> {
    let n = coeffs.len();
    if rhs.len() != n || coeffs.iter().any(|r| r.len() != n) || n == 0 {
        return Err(Error::Dimension("system must be square and nonempty".into()));
    }
    let q = rhs[0].modulus;
    let mut a = coeffs;
    let mut b = rhs;
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| a[r][col] != 0)
            .ok_or(Error::SingularSystem)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = q.inv(a[col][col])?;
        for v in a[col].iter_mut() {
            *v = q.mul(*v, inv);
        }
        b[col] = b[col].scale(q.reduce(inv))?;
        for r in 0..n {
            if r == col || a[r][col] == 0 {
                continue;
            }
            let factor = a[r][col];
            for c in 0..n {
                let t = q.mul(factor, a[col][c]);
                a[r][c] = q.sub(a[r][c], t);
            }
            let scaled = b[col].scale(q.reduce(factor))?;
            b[r].sub_assign(&scaled)?;
        }
    }
    Ok(b)
}
