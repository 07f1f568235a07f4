//! Arithmetic in the prime field F_q for runtime-chosen `q < 2^62`.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bases that make Miller-Rabin deterministic for every 64-bit input.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Largest prime below 2^62 with 2^10 | q - 1.
pub const NTT_PRIME_62: u64 = 4_611_686_018_427_366_401;

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin primality test for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A verified prime modulus `q` with `2 <= q < 2^62`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub const MAX: u64 = (1 << 62) - 1;

    pub fn new(q: u64) -> Result<Self> {
        if !(2..=Self::MAX).contains(&q) {
            return Err(Error::ModulusOutOfRange(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self(q))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    /// Wraps `value`, rejecting unreduced input.
    pub fn element(self, value: u64) -> Result<FieldElement> {
        if value >= self.0 {
            return Err(Error::Unreduced {
                value,
                modulus: self.0,
            });
        }
        Ok(FieldElement {
            value,
            modulus: self,
        })
    }

    /// Wraps `value mod q`.
    pub fn reduce(self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.0,
            modulus: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        FieldElement {
            value: 0,
            modulus: self,
        }
    }

    pub fn one(self) -> FieldElement {
        FieldElement {
            value: 1,
            modulus: self,
        }
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod_u64(a, b, self.0)
    }

    #[inline]
    pub fn reduce_wide(self, x: u128) -> u64 {
        (x % self.0 as u128) as u64
    }

    pub fn pow(self, a: u64, exp: u64) -> u64 {
        pow_mod_u64(a, exp, self.0)
    }

    /// Inverse by the extended Euclidean algorithm.
    pub fn inv(self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let (mut old_r, mut r) = (a as i128, self.0 as i128);
        let (mut old_s, mut s) = (1i128, 0i128);
        while r != 0 {
            let quotient = old_r / r;
            (old_r, r) = (r, old_r - quotient * r);
            (old_s, s) = (s, old_s - quotient * s);
        }
        debug_assert_eq!(old_r, 1);
        Ok(old_s.rem_euclid(self.0 as i128) as u64)
    }

    /// How many products of two reduced elements fit in a `u128`
    /// accumulator that already holds one reduced value.
    pub fn lazy_budget(self) -> usize {
        let max_product = (self.0 as u128 - 1).pow(2).max(1);
        let budget = (u128::MAX - self.0 as u128) / max_product;
        budget.min(1 << 20) as usize
    }
}

impl TryFrom<u64> for PrimeModulus {
    type Error = Error;

    fn try_from(q: u64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(q: PrimeModulus) -> u64 {
        q.0
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of F_q, tagged with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: PrimeModulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: Self) -> Result<PrimeModulus> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(
                self.modulus.value(),
                other.modulus.value(),
            ));
        }
        Ok(self.modulus)
    }

    pub fn arith(self, other: Self, op: ArithOp) -> Result<Self> {
        let q = self.same_field(other)?;
        let value = match op {
            ArithOp::Add => q.add(self.value, other.value),
            ArithOp::Sub => q.sub(self.value, other.value),
            ArithOp::Mul => q.mul(self.value, other.value),
        };
        Ok(Self { value, modulus: q })
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Add)
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Sub)
    }

    pub fn checked_mul(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Mul)
    }

    pub fn neg(self) -> Self {
        Self {
            value: self.modulus.neg(self.value),
            modulus: self.modulus,
        }
    }

    pub fn pow(self, exp: u64) -> Self {
        Self {
            value: self.modulus.pow(self.value, exp),
            modulus: self.modulus,
        }
    }

    pub fn inverse(self) -> Result<Self> {
        Ok(Self {
            value: self.modulus.inv(self.value)?,
            modulus: self.modulus,
        })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Uniform element of F_q.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, q: PrimeModulus) -> FieldElement {
    FieldElement {
        value: rng.gen_range(0..q.value()),
        modulus: q,
    }
}

/// Uniform nonzero element of F_q.
pub fn sample_nonzero<R: Rng + ?Sized>(rng: &mut R, q: PrimeModulus) -> FieldElement {
    FieldElement {
        value: rng.gen_range(1..q.value()),
        modulus: q,
    }
}

/// `count` pairwise distinct elements, none in `exclude`, uniform over all
/// such ordered tuples.
pub fn sample_distinct<R: Rng + ?Sized>(
    rng: &mut R,
    q: PrimeModulus,
    count: usize,
    exclude: &[FieldElement],
) -> Result<Vec<FieldElement>> {
    let mut taken: HashSet<u64> = HashSet::with_capacity(count + exclude.len());
    for e in exclude {
        if e.modulus != q {
            return Err(Error::ModulusMismatch(q.value(), e.modulus.value()));
        }
        taken.insert(e.value);
    }
    let needed = count as u128 + taken.len() as u128;
    if needed > q.value() as u128 {
        return Err(Error::FieldTooSmall {
            needed,
            available: q.value(),
        });
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = rng.gen_range(0..q.value());
        if taken.insert(v) {
            out.push(FieldElement {
                value: v,
                modulus: q,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::{prop_assert_eq, proptest};
    use rand::RngCore;

    fn f(q: u64, v: u64) -> FieldElement {
        PrimeModulus::new(q).unwrap().element(v).unwrap()
    }

    #[test]
    fn arith_examples() {
        assert_eq!(f(7, 3).arith(f(7, 5), ArithOp::Add).unwrap().value(), 1);
        assert_eq!(f(7, 6).arith(f(7, 6), ArithOp::Mul).unwrap().value(), 36 % 7);
        assert_eq!(f(7, 2).arith(f(7, 5), ArithOp::Sub).unwrap().value(), 4);
        for x in 0..7 {
            assert!(f(7, 0).checked_mul(f(7, x)).unwrap().is_zero());
        }
    }

    #[test]
    fn modulus_mismatch_rejected() {
        assert_eq!(
            f(7, 1).checked_add(f(11, 1)),
            Err(Error::ModulusMismatch(7, 11))
        );
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(f(7, 1).inverse().unwrap().value(), 1);
        let brute = (1..7).find(|b| 3 * b % 7 == 1).unwrap();
        assert_eq!(f(7, 3).inverse().unwrap().value(), brute);
        assert_eq!(f(7, 0).inverse(), Err(Error::ZeroInverse));
    }

    #[test]
    fn inverse_large_modulus() {
        let q = PrimeModulus::new(NTT_PRIME_62).unwrap();
        for a in [1u64, 2, 12345, NTT_PRIME_62 - 1] {
            let inv = q.inv(a).unwrap();
            assert_eq!(q.mul(a, inv), 1);
        }
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            small,
            [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(NTT_PRIME_62));
        assert_eq!((NTT_PRIME_62 - 1) % 1024, 0);
        // Strong pseudoprime to bases 2..=11.
        assert!(!is_prime(3_215_031_751));
        assert!(PrimeModulus::new(15).is_err());
        assert!(PrimeModulus::new(1).is_err());
        assert!(PrimeModulus::new((1 << 62) + 135).is_err());
    }

    #[test]
    fn fermat_exhaustive_small_fields() {
        for q in (2..=31).filter(|&q| is_prime(q)) {
            let m = PrimeModulus::new(q).unwrap();
            for a in 1..q {
                assert_eq!(m.pow(a, q - 1), 1, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn sample_uniform_deterministic() {
        let q = PrimeModulus::new(7).unwrap();
        let a = sample_uniform(&mut SeededRng::new(11), q);
        let b = sample_uniform(&mut SeededRng::new(11), q);
        assert_eq!(a, b);
    }

    #[test]
    fn sample_uniform_binary_frequency() {
        let q = PrimeModulus::new(2).unwrap();
        let mut rng = SeededRng::new(5);
        let ones = (0..10_000)
            .filter(|_| sample_uniform(&mut rng, q).value() == 1)
            .count();
        let freq = ones as f64 / 1e4;
        // 3 sigma of Binomial(10^4, 1/2) is 0.015.
        assert!((0.47..=0.53).contains(&freq), "freq {freq}");
    }

    /// Walks a counter through every 32-bit-aligned output state.
    struct CounterRng(u64);

    impl RngCore for CounterRng {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
            self.0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for chunk in dest.chunks_mut(8) {
                let bytes = self.next_u64().to_le_bytes();
                chunk.copy_from_slice(&bytes[..chunk.len()]);
            }
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn sample_uniform_covers_small_field() {
        let q = PrimeModulus::new(5).unwrap();
        let mut rng = CounterRng(0);
        let mut seen = [false; 5];
        for _ in 0..256 {
            seen[sample_uniform(&mut rng, q).value() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sample_distinct_examples() {
        let q5 = PrimeModulus::new(5).unwrap();
        let mut rng = SeededRng::new(1);
        let xs = sample_distinct(&mut rng, q5, 4, &[]).unwrap();
        let set: HashSet<u64> = xs.iter().map(|x| x.value()).collect();
        assert_eq!(set.len(), 4);

        let err = sample_distinct(&mut rng, q5, 5, &[q5.zero()]).unwrap_err();
        assert!(matches!(err, Error::FieldTooSmall { .. }));

        let q7 = PrimeModulus::new(7).unwrap();
        let exclude = [q7.element(1).unwrap(), q7.element(2).unwrap()];
        for _ in 0..10_000 {
            let xs = sample_distinct(&mut rng, q7, 3, &exclude).unwrap();
            assert!(xs.iter().all(|x| x.value() != 1 && x.value() != 2));
        }
    }

    #[test]
    fn sample_distinct_never_repeats() {
        let mut rng = SeededRng::new(99);
        let primes = [2u64, 3, 5, 7, 11, 13, 101];
        for trial in 0..100_000u64 {
            let q = PrimeModulus::new(primes[(trial % primes.len() as u64) as usize]).unwrap();
            let count = rng.gen_range(0..=q.value()) as usize;
            let xs = sample_distinct(&mut rng, q, count, &[]).unwrap();
            let set: HashSet<u64> = xs.iter().map(|x| x.value()).collect();
            assert_eq!(set.len(), count);
        }
    }

    proptest! {
        #[test]
        fn field_axioms(a in 0u64..1_000_003, b in 0u64..1_000_003, c in 0u64..1_000_003) {
            let q = PrimeModulus::new(1_000_003).unwrap();
            let (a, b, c) = (q.reduce(a), q.reduce(b), q.reduce(c));
            prop_assert_eq!(a.checked_add(b)?, b.checked_add(a)?);
            prop_assert_eq!(a.checked_mul(b)?, b.checked_mul(a)?);
            prop_assert_eq!(a.checked_add(b)?.checked_add(c)?, a.checked_add(b.checked_add(c)?)?);
            prop_assert_eq!(a.checked_mul(b)?.checked_mul(c)?, a.checked_mul(b.checked_mul(c)?)?);
            prop_assert_eq!(
                a.checked_mul(b.checked_add(c)?)?,
                a.checked_mul(b)?.checked_add(a.checked_mul(c)?)?
            );
            prop_assert_eq!(a.checked_sub(b)?.checked_add(b)?, a);
        }

        #[test]
        fn wide_modulus_mul_matches_u128(a in 0u64..NTT_PRIME_62, b in 0u64..NTT_PRIME_62) {
            let q = PrimeModulus::new(NTT_PRIME_62).unwrap();
            let expected = ((a as u128 * b as u128) % NTT_PRIME_62 as u128) as u64;
            prop_assert_eq!(q.mul(a, b), expected);
            if a != 0 {
                prop_assert_eq!(q.mul(a, q.inv(a)?), 1);
            }
        }
    }
}
