//! Factored fountain code over the `m x k` grid of product blocks.
//!
//! A symbol pairs an A-side subset with a B-side subset. The product of the
//! two block sums is the sum of every grid cell in their cartesian product,
//! so a peeling decoder over cells recovers `C = A B` block by block.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgf::FqMatrix;

/// Robust soliton parameters shared by both sides of the code.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonParams {
    pub c: f64,
    pub delta: f64,
}

impl Default for SolitonParams {
    fn default() -> Self {
        Self { c: 0.1, delta: 0.5 }
    }
}

impl SolitonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("soliton c must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "soliton delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Robust soliton pmf over degrees `1..=k`; entry `d - 1` is `P(d)`.
pub fn robust_soliton_pmf(k: usize, params: SolitonParams) -> Vec<f64> {
    if k <= 1 {
        return vec![1.0; k];
    }
    let kf = k as f64;
    let r = params.c * (kf / params.delta).ln() * kf.sqrt();
    let pivot = ((kf / r).floor() as usize).max(1);
    let mut mu: Vec<f64> = (1..=k)
        .map(|d| {
            let ideal = if d == 1 { 1.0 / kf } else { 1.0 / (d * (d - 1)) as f64 };
            let tau = if d < pivot {
                r / (d as f64 * kf)
            } else if d == pivot {
                (r * (r / params.delta).ln() / kf).max(0.0)
            } else {
                0.0
            };
            ideal + tau
        })
        .collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|p| *p /= total);
    mu
}

/// Neighbor sets of one symbol; indices are zero-based and sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FountainSymbolSpec {
    a_set: Vec<usize>,
    b_set: Vec<usize>,
}

impl FountainSymbolSpec {
    pub fn new(mut a_set: Vec<usize>, mut b_set: Vec<usize>, m: usize, k: usize) -> Result<Self> {
        for (set, bound) in [(&mut a_set, m), (&mut b_set, k)] {
            if set.is_empty() {
                return Err(Error::EmptySubset);
            }
            set.sort_unstable();
            set.dedup();
            if let Some(&bad) = set.iter().find(|&&i| i >= bound) {
                return Err(Error::IndexOutOfRange { index: bad, len: bound });
            }
        }
        Ok(Self { a_set, b_set })
    }

    pub fn a_set(&self) -> &[usize] {
        &self.a_set
    }

    pub fn b_set(&self) -> &[usize] {
        &self.b_set
    }
}

fn sample_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, params: SolitonParams) -> Vec<usize> {
    let pmf = robust_soliton_pmf(n, params);
    let degree = WeightedIndex::new(&pmf)
        .expect("robust soliton pmf is a valid weight vector")
        .sample(rng)
        + 1;
    let mut set = index::sample(rng, n, degree).into_vec();
    set.sort_unstable();
    set
}

pub fn sample_spec<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    k: usize,
    params: SolitonParams,
) -> Result<FountainSymbolSpec> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension("fountain grid must be at least 1x1".into()));
    }
    params.validate()?;
    let a_set = sample_subset(rng, m, params);
    let b_set = sample_subset(rng, k, params);
    Ok(FountainSymbolSpec { a_set, b_set })
}

/// Sum of `blocks[i]` over `subset`.
pub fn encode_block_sum(blocks: &[FqMatrix], subset: &[usize]) -> Result<FqMatrix> {
    let (&first, rest) = subset.split_first().ok_or(Error::EmptySubset)?;
    let pick = |i: usize| {
        blocks.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: blocks.len(),
        })
    };
    let mut acc = pick(first)?.clone();
    for &i in rest {
        acc.add_assign(pick(i)?)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
struct Pending {
    unknown: Vec<usize>,
    residual: FqMatrix,
}

/// Peeling decoder over grid cells `i * k + j`.
#[derive(Clone, Debug)]
pub struct PeelingDecoderState {
    m: usize,
    k: usize,
    recovered: Vec<Option<FqMatrix>>,
    recovered_count: usize,
    pending: Vec<Option<Pending>>,
    /// Pending symbol ids that still list each cell as unknown.
    watchers: Vec<Vec<usize>>,
    block_shape: Option<(usize, usize)>,
}

impl PeelingDecoderState {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Dimension("fountain grid must be at least 1x1".into()));
        }
        Ok(Self {
            m,
            k,
            recovered: vec![None; m * k],
            recovered_count: 0,
            pending: Vec::new(),
            watchers: vec![Vec::new(); m * k],
            block_shape: None,
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.m, self.k)
    }

    pub fn recovered_count(&self) -> usize {
        self.recovered_count
    }

    pub fn recovered(&self, i: usize, j: usize) -> Option<&FqMatrix> {
        self.recovered.get(i * self.k + j)?.as_ref()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.recovered_count == self.m * self.k
    }

    /// Feeds one symbol. On error the decoder is left unchanged.
    pub fn feed_symbol(&mut self, spec: &FountainSymbolSpec, value: FqMatrix) -> Result<()> {
        self.feed_batch(vec![(spec.clone(), value)])
    }

    /// Feeds symbols as one transaction: either all are absorbed or, on the
    /// first error, the decoder reverts to its state before the call.
    pub fn feed_batch(&mut self, symbols: Vec<(FountainSymbolSpec, FqMatrix)>) -> Result<()> {
        let mut next = self.clone();
        for (spec, value) in symbols {
            next.absorb(&spec, value)?;
        }
        *self = next;
        Ok(())
    }

    fn absorb(&mut self, spec: &FountainSymbolSpec, mut residual: FqMatrix) -> Result<()> {
        if let Some(&bad) = spec.a_set.iter().find(|&&i| i >= self.m) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.m });
        }
        if let Some(&bad) = spec.b_set.iter().find(|&&j| j >= self.k) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.k });
        }
        match self.block_shape {
            Some(shape) if shape != residual.shape() => {
                return Err(Error::Dimension(format!(
                    "symbol shape {:?} differs from earlier {:?}",
                    residual.shape(),
                    shape
                )));
            }
            _ => self.block_shape = Some(residual.shape()),
        }
        let mut unknown = Vec::new();
        for &i in &spec.a_set {
            for &j in &spec.b_set {
                let cell = i * self.k + j;
                match &self.recovered[cell] {
                    Some(block) => residual.sub_assign(block)?,
                    None => unknown.push(cell),
                }
            }
        }
        match unknown.len() {
            0 if residual.is_zero() => Ok(()),
            0 => Err(Error::DecoderInconsistency),
            1 => self.recover_cascade(unknown[0], residual),
            _ => {
                let id = self.pending.len();
                for &cell in &unknown {
                    self.watchers[cell].push(id);
                }
                self.pending.push(Some(Pending { unknown, residual }));
                Ok(())
            }
        }
    }

    fn recover_cascade(&mut self, cell: usize, block: FqMatrix) -> Result<()> {
        let mut queue = vec![(cell, block)];
        while let Some((cell, block)) = queue.pop() {
            if let Some(existing) = &self.recovered[cell] {
                if *existing != block {
                    return Err(Error::DecoderInconsistency);
                }
                continue;
            }
            for id in std::mem::take(&mut self.watchers[cell]) {
                let Some(p) = self.pending[id].as_mut() else {
                    continue;
                };
                p.residual.sub_assign(&block)?;
                p.unknown.retain(|&c| c != cell);
                match p.unknown.len() {
                    0 => {
                        let done = self.pending[id].take().expect("checked above");
                        if !done.residual.is_zero() {
                            return Err(Error::DecoderInconsistency);
                        }
                    }
                    1 => {
                        let done = self.pending[id].take().expect("checked above");
                        queue.push((done.unknown[0], done.residual));
                    }
                    _ => {}
                }
            }
            self.recovered[cell] = Some(block);
            self.recovered_count += 1;
        }
        Ok(())
    }

    /// Assembles the full product with block `(i, j)` at grid position `(i, j)`.
    pub fn decoded_product(&self) -> Result<FqMatrix> {
        if !self.is_complete() {
            return Err(Error::DecoderIncomplete {
                recovered: self.recovered_count,
                total: self.m * self.k,
            });
        }
        let blocks: Vec<&FqMatrix> = self.recovered.iter().flatten().collect();
        let (br, bc) = blocks[0].shape();
        let q = blocks[0].modulus();
        let mut data = vec![0u64; self.m * br * self.k * bc];
        let width = self.k * bc;
        for (cell, block) in blocks.iter().enumerate() {
            let (bi, bj) = (cell / self.k, cell % self.k);
            for r in 0..br {
                let start = (bi * br + r) * width + bj * bc;
                data[start..start + bc].copy_from_slice(block.row(r));
            }
        }
        FqMatrix::from_raw(self.m * br, width, data, q)
    }
}
