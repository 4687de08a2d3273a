//! The unconditional side: prime sieving, multiplicative order and residual
//! index of a rational base modulo p, and residue-class censuses used as
//! oracles for every density prediction.

use alloc::vec::Vec;
use core::fmt;

use crate::arith::{factorize, invmod, powmod, DecomposedBase, SpfSieve};

/// Largest supported sieve bound.
pub const MAX_SIEVE_BOUND: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmpiricalError {
    BoundTooLarge(u64),
    /// The prime divides the numerator or denominator of g.
    BadPrime(u64),
}

impl fmt::Display for EmpiricalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmpiricalError::BoundTooLarge(x) => {
                write!(f, "sieve bound {x} exceeds {MAX_SIEVE_BOUND}")
            }
            EmpiricalError::BadPrime(p) => write!(f, "nu_{p}(g) != 0; order undefined"),
        }
    }
}

/// Simple sieve of Eratosthenes, used for base primes and as the independent
/// cross-check of the segmented sieve.
pub fn simple_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = alloc::vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

const SEGMENT_SIZE: u64 = 1 << 18;

/// All primes in [lo, hi), by a segmented sieve with O(sqrt(hi) + segment)
/// memory.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_prime_in_range(lo, hi, |p| out.push(p));
    out
}

/// Visit every prime in [lo, hi) in increasing order.
pub fn for_each_prime_in_range(lo: u64, hi: u64, mut visit: impl FnMut(u64)) {
    if hi <= 2 || hi <= lo {
        return;
    }
    let lo = lo.max(2);
    let root = crate::fmath::sqrt(hi as f64) as u64 + 2;
    let base = simple_primes(root);
    let mut seg_lo = lo;
    let mut flags = alloc::vec![false; SEGMENT_SIZE as usize];
    while seg_lo < hi {
        let seg_hi = (seg_lo + SEGMENT_SIZE).min(hi);
        let len = (seg_hi - seg_lo) as usize;
        flags[..len].fill(false);
        for &p in &base {
            if p * p >= seg_hi {
                break;
            }
            let mut m = (seg_lo + p - 1) / p * p;
            if m < p * p {
                m = p * p;
            }
            while m < seg_hi {
                flags[(m - seg_lo) as usize] = true;
                m += p;
            }
        }
        for i in 0..len {
            if !flags[i] {
                visit(seg_lo + i as u64);
            }
        }
        seg_lo = seg_hi;
    }
}

/// Iterator over all primes up to and including `x`. Rejects bounds beyond
/// [`MAX_SIEVE_BOUND`].
pub fn sieve_primes(x: u64) -> Result<Vec<u64>, EmpiricalError> {
    if x > MAX_SIEVE_BOUND {
        return Err(EmpiricalError::BoundTooLarge(x));
    }
    Ok(primes_in_range(2, x + 1))
}

/// pi(x) by the segmented sieve.
pub fn prime_count(x: u64) -> u64 {
    let mut n = 0u64;
    for_each_prime_in_range(2, x + 1, |_| n += 1);
    n
}

/// The residue of g modulo p, for p dividing neither numerator nor
/// denominator.
pub fn residue_mod_p(base: &DecomposedBase, p: u64) -> Result<u64, EmpiricalError> {
    let num = base.numerator.rem_euclid(p as i64) as u64;
    let den = base.denominator % p;
    if num == 0 || den == 0 {
        return Err(EmpiricalError::BadPrime(p));
    }
    let inv = invmod(den, p).ok_or(EmpiricalError::BadPrime(p))?;
    Ok(num * inv % p)
}

/// Order of `a` in (Z/pZ)^* given the factorization of p-1: start from the
/// full group order and peel every prime off as far as possible.
pub fn order_from_factored(a: u64, p: u64, pm1_factors: &[(u64, u32)]) -> u64 {
    let mut order = p - 1;
    for &(q, k) in pm1_factors {
        order /= q.pow(k);
        let mut t = powmod(a, order, p);
        while t != 1 {
            t = powmod(t, q, p);
            order *= q;
        }
    }
    order
}

/// Least e >= 1 with g^e = 1 mod p.
pub fn multiplicative_order(base: &DecomposedBase, p: u64) -> Result<u64, EmpiricalError> {
    let a = residue_mod_p(base, p)?;
    let f = factorize(p - 1).expect("p-1 in range");
    Ok(order_from_factored(a, p, &f.factors))
}

/// (p - 1) / ord_g(p): the index of the subgroup generated by g in (Z/pZ)^*.
pub fn residual_index(base: &DecomposedBase, p: u64) -> Result<u64, EmpiricalError> {
    Ok((p - 1) / multiplicative_order(base, p)?)
}

/// A per-prime (order, p) stream for one base: everything any census view
/// needs. Both coordinates fit u32 for sieve bounds up to 10^9 (they equal
/// their residues mod lcm(1..24), which exceeds any supported bound).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueStream {
    pub x: u64,
    pub pairs: Vec<(u32, u32)>,
}

/// Compute (order, p) for every prime in [lo, hi) with nu_p(g) = 0.
///
/// `spf` must cover hi (it is used to factor p-1); pass a table built once
/// and share it across ranges. Ranges are disjoint and order-preserving, so
/// chunked results concatenate into the full stream.
pub fn residue_pairs_range(
    base: &DecomposedBase,
    lo: u64,
    hi: u64,
    spf: &SpfSieve,
) -> Vec<(u32, u32)> {
    assert!(hi as usize <= spf.limit() + 1, "spf table too small");
    let mut out = Vec::new();
    let mut factors: Vec<(u64, u32)> = Vec::with_capacity(16);
    for_each_prime_in_range(lo, hi, |p| {
        let Ok(a) = residue_mod_p(base, p) else {
            return;
        };
        spf.factor_into(p - 1, &mut factors);
        let ord = order_from_factored(a, p, &factors);
        out.push((ord as u32, p as u32));
    });
    out
}

pub fn residue_stream(base: &DecomposedBase, x: u64, spf: &SpfSieve) -> ResidueStream {
    ResidueStream {
        x,
        pairs: residue_pairs_range(base, 2, x + 1, spf),
    }
}

/// Like [`residue_pairs_range`] but without a smallest-factor table: p-1 is
/// factored adaptively (small trial primes, then a primality test, then the
/// general splitter). Slower per prime; intended for bounds where the table
/// would not fit in memory.
pub fn residue_pairs_range_nospf(base: &DecomposedBase, lo: u64, hi: u64) -> Vec<(u32, u32)> {
    let trial: Vec<u64> = simple_primes(4096);
    let mut out = Vec::new();
    let mut factors: Vec<(u64, u32)> = Vec::with_capacity(16);
    for_each_prime_in_range(lo, hi, |p| {
        let Ok(a) = residue_mod_p(base, p) else {
            return;
        };
        factors.clear();
        let mut m = p - 1;
        for &q in &trial {
            if q * q > m {
                break;
            }
            if m % q == 0 {
                let mut e = 0;
                while m % q == 0 {
                    m /= q;
                    e += 1;
                }
                factors.push((q, e));
            }
        }
        if m > 1 {
            if crate::arith::is_prime(m) {
                factors.push((m, 1));
            } else {
                // composite cofactor with all factors above the trial bound
                let extra = factorize(m).expect("p-1 in range").factors;
                factors.extend(extra);
            }
        }
        let ord = order_from_factored(a, p, &factors);
        out.push((ord as u32, p as u32));
    });
    out
}

/// Which residue the census classifies: the multiplicative order or the
/// residual index of g mod p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Order,
    Index,
}

impl CensusMode {
    #[inline]
    pub fn residue(self, order: u64, p: u64) -> u64 {
        match self {
            CensusMode::Order => order,
            CensusMode::Index => (p - 1) / order,
        }
    }
}

/// Counts of primes p <= x with nu_p(g) = 0 classified by order (or index)
/// mod d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCensus {
    pub g: DecomposedBase,
    pub x: u64,
    pub d: u64,
    pub mode: CensusMode,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EmpiricalCensus {
    /// Fraction of counted primes in class a.
    pub fn fraction(&self, a: u64) -> f64 {
        self.counts[(a % self.d) as usize] as f64 / self.total as f64
    }

    /// Collapse to a coarser modulus d2 | d.
    pub fn refine_to(&self, d2: u64) -> EmpiricalCensus {
        assert!(d2 >= 1 && self.d % d2 == 0);
        let mut counts = alloc::vec![0u64; d2 as usize];
        for (a, &c) in self.counts.iter().enumerate() {
            counts[a % d2 as usize] += c;
        }
        EmpiricalCensus {
            g: self.g.clone(),
            x: self.x,
            d: d2,
            mode: self.mode,
            counts,
            total: self.total,
        }
    }
}

/// Joint classification: p mod d1 against order-or-index mod d2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCensus {
    pub g: DecomposedBase,
    pub x: u64,
    pub d1: u64,
    pub d2: u64,
    pub mode: CensusMode,
    /// indexed by the residue of p, then the residue of the order or index.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl JointCensus {
    pub fn fraction(&self, a1: u64, a2: u64) -> f64 {
        self.counts[(a1 % self.d1) as usize][(a2 % self.d2) as usize] as f64 / self.total as f64
    }

    /// Marginal census over the order/index coordinate.
    pub fn order_marginal(&self) -> EmpiricalCensus {
        let mut counts = alloc::vec![0u64; self.d2 as usize];
        for row in &self.counts {
            for (a2, &c) in row.iter().enumerate() {
                counts[a2] += c;
            }
        }
        EmpiricalCensus {
            g: self.g.clone(),
            x: self.x,
            d: self.d2,
            mode: self.mode,
            counts,
            total: self.total,
        }
    }
}

impl ResidueStream {
    pub fn census_view(&self, base: &DecomposedBase, d: u64, mode: CensusMode) -> EmpiricalCensus {
        assert!(d >= 1);
        let mut counts = alloc::vec![0u64; d as usize];
        for &(ord, p) in &self.pairs {
            let r = mode.residue(ord as u64, p as u64);
            counts[(r % d) as usize] += 1;
        }
        EmpiricalCensus {
            g: base.clone(),
            x: self.x,
            d,
            mode,
            counts,
            total: self.pairs.len() as u64,
        }
    }

    pub fn joint_view(
        &self,
        base: &DecomposedBase,
        d1: u64,
        d2: u64,
        mode: CensusMode,
    ) -> JointCensus {
        assert!(d1 >= 1 && d2 >= 1);
        let mut counts = alloc::vec![alloc::vec![0u64; d2 as usize]; d1 as usize];
        for &(ord, p) in &self.pairs {
            let r = mode.residue(ord as u64, p as u64);
            counts[(p as u64 % d1) as usize][(r % d2) as usize] += 1;
        }
        JointCensus {
            g: base.clone(),
            x: self.x,
            d1,
            d2,
            mode,
            counts,
            total: self.pairs.len() as u64,
        }
    }
}

/// One-shot census; builds its own smallest-factor table. For repeated views
/// over the same (g, x) prefer [`residue_stream`].
pub fn census(
    base: &DecomposedBase,
    d: u64,
    x: u64,
    mode: CensusMode,
) -> Result<EmpiricalCensus, EmpiricalError> {
    if x > MAX_SIEVE_BOUND {
        return Err(EmpiricalError::BoundTooLarge(x));
    }
    let spf = SpfSieve::new(x as usize + 1);
    let stream = residue_stream(base, x, &spf);
    Ok(stream.census_view(base, d, mode))
}

pub fn joint_census(
    base: &DecomposedBase,
    d1: u64,
    d2: u64,
    x: u64,
    mode: CensusMode,
) -> Result<JointCensus, EmpiricalError> {
    if x > MAX_SIEVE_BOUND {
        return Err(EmpiricalError::BoundTooLarge(x));
    }
    let spf = SpfSieve::new(x as usize + 1);
    let stream = residue_stream(base, x, &spf);
    Ok(stream.joint_view(base, d1, d2, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{decompose, Rational};

    fn base(g: i64) -> DecomposedBase {
        decompose(Rational::from_integer(g)).unwrap()
    }

    #[test]
    fn small_primes() {
        assert_eq!(sieve_primes(10).unwrap(), alloc::vec![2, 3, 5, 7]);
        assert_eq!(prime_count(100), 25);
        assert!(sieve_primes(MAX_SIEVE_BOUND + 1).is_err());
    }

    #[test]
    fn segmented_matches_simple() {
        // independent cross-check of the segmented sieve
        let simple = simple_primes(300_000);
        let segmented = primes_in_range(2, 300_001);
        assert_eq!(simple, segmented);
        assert_eq!(prime_count(1_000_000), 78_498);
    }

    #[test]
    fn order_examples() {
        assert_eq!(multiplicative_order(&base(2), 7).unwrap(), 3);
        assert_eq!(multiplicative_order(&base(2), 3).unwrap(), 2);
        let half = decompose(Rational::new(1, 2)).unwrap();
        assert_eq!(multiplicative_order(&half, 7).unwrap(), 3);
        assert!(multiplicative_order(&base(2), 2).is_err());
        assert!(multiplicative_order(&half, 2).is_err());
    }

    #[test]
    fn index_examples() {
        assert_eq!(residual_index(&base(2), 7).unwrap(), 2);
        assert_eq!(residual_index(&base(3), 5).unwrap(), 1);
        assert_eq!(residual_index(&base(4), 7).unwrap(), 2);
    }

    #[test]
    fn order_divides_group_order() {
        let spf = SpfSieve::new(10_001);
        for g in [2i64, 3, -2, 10, -9] {
            let b = base(g);
            for (ord, p) in residue_pairs_range(&b, 2, 10_000, &spf) {
                let (ord, p) = (ord as u64, p as u64);
                assert_eq!((p - 1) % ord, 0);
                assert_eq!(powmod(residue_mod_p(&b, p).unwrap(), ord, p), 1);
                if ord > 1 {
                    // ord is minimal: no proper prime quotient works
                    for (q, _) in factorize(ord).unwrap().factors {
                        assert_ne!(powmod(residue_mod_p(&b, p).unwrap(), ord / q, p), 1);
                    }
                }
                assert_eq!(ord * ((p - 1) / ord), p - 1);
            }
        }
    }

    #[test]
    fn census_totals() {
        let c = census(&base(2), 1, 100, CensusMode::Order).unwrap();
        assert_eq!(c.total, 24); // pi(100) = 25 minus p = 2
        assert_eq!(c.counts, alloc::vec![24]);

        let c = census(&base(6), 1, 100, CensusMode::Order).unwrap();
        assert_eq!(c.total, 23); // excludes 2 and 3
    }

    #[test]
    fn census_partition_and_refinement() {
        let spf = SpfSieve::new(100_001);
        let b = base(2);
        let stream = residue_stream(&b, 100_000, &spf);
        for d in 1..=24u64 {
            let c = stream.census_view(&b, d, CensusMode::Order);
            assert_eq!(c.counts.iter().sum::<u64>(), c.total);
            for d2 in (1..=d).filter(|d2| d % d2 == 0) {
                let direct = stream.census_view(&b, d2, CensusMode::Order);
                assert_eq!(c.refine_to(d2).counts, direct.counts, "d={d} d2={d2}");
            }
        }
    }

    #[test]
    fn known_even_order_density() {
        // the classical density 17/24 of primes with even ord_2(p)
        let c = census(&base(2), 2, 1_000_000, CensusMode::Order).unwrap();
        let frac = c.fraction(0);
        assert!((frac - 17.0 / 24.0).abs() < 3e-3, "got {frac}");
    }

    #[test]
    fn joint_marginals_match() {
        let spf = SpfSieve::new(100_001);
        let b = base(3);
        let stream = residue_stream(&b, 100_000, &spf);
        for mode in [CensusMode::Order, CensusMode::Index] {
            let j = stream.joint_view(&b, 4, 6, mode);
            assert_eq!(j.order_marginal(), stream.census_view(&b, 6, mode));
            let row_sum: u64 = j.counts.iter().flatten().sum();
            assert_eq!(row_sum, j.total);
        }
    }
}
