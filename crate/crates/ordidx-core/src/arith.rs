//! Exact integer and rational primitives: factorization, multiplicative
//! functions, the Kronecker symbol, squarefree kernels, d-parts, fundamental
//! discriminants and the canonical decomposition `g = sign * g0^h` of a
//! rational base.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_rational::Ratio;

/// Rationals used throughout the crate. Always kept in lowest terms by
/// `num_rational`.
pub type Rational = Ratio<i64>;

/// Errors from the exact-arithmetic layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithError {
    /// `factorize` input outside `1..=2^63`.
    OutOfRange(u64),
    /// `decompose` called with g in {-1, 0, 1}.
    DegenerateBase(Rational),
    /// An operation required a fundamental discriminant.
    NotFundamental(i64),
    /// A rational string failed to parse.
    BadRational(String),
}

impl fmt::Display for ArithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithError::OutOfRange(n) => write!(f, "{n} is outside the supported range 1..=2^63"),
            ArithError::DegenerateBase(g) => write!(f, "base g = {g} must not be -1, 0 or 1"),
            ArithError::NotFundamental(d) => write!(f, "{d} is not a fundamental discriminant"),
            ArithError::BadRational(s) => write!(f, "cannot parse {s:?} as a rational p/q"),
        }
    }
}

/// A complete prime factorization of a positive 64-bit integer.
///
/// Factors are sorted by prime and every exponent is at least one, so the
/// representation is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factored {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factored {
    /// Number of distinct prime divisors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Euler totient of the factored value.
    pub fn phi(&self) -> u64 {
        let mut phi = self.value;
        for &(p, _) in &self.factors {
            phi = phi / p * (p - 1);
        }
        phi
    }

    /// Moebius value: 0 unless squarefree, else (-1)^omega.
    pub fn mobius(&self) -> i32 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// Squarefree kernel: product of the distinct primes.
    pub fn radical(&self) -> u64 {
        self.factors.iter().map(|&(p, _)| p).product()
    }

    /// Iterator-free list of all divisors, unsorted.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = alloc::vec![1u64];
        for &(p, e) in &self.factors {
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
        out
    }

    /// Squarefree divisors with their Moebius values `(d, mu(d))`.
    pub fn squarefree_divisors(&self) -> Vec<(u64, i32)> {
        let mut out = alloc::vec![(1u64, 1i32)];
        for &(p, _) in &self.factors {
            let len = out.len();
            for i in 0..len {
                let (d, mu) = out[i];
                out.push((d * p, -mu));
            }
        }
        out
    }
}

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a^e mod m` by binary exponentiation.
pub fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

/// Modular inverse of `a` mod `m`, when it exists.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut last_r, mut r) = (m as i128, (a % m) as i128);
    let (mut last_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = last_r / r;
        (last_r, r) = (r, last_r - q * r);
        (last_t, t) = (t, last_t - q * t);
    }
    if last_r != 1 {
        None
    } else {
        Some(last_t.rem_euclid(m as i128) as u64)
    }
}

/// Deterministic Miller-Rabin primality test for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    // this witness set is exact for all n < 2^64
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64, seed: u64) -> u64 {
    // Brent's cycle variant; n must be odd, composite, not a prime power issue
    let c = seed % n;
    let f = |x: u64| (mulmod(x, x, n) + c) % n;
    let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
    let mut count = 0u32;
    while d == 1 {
        x = f(x);
        y = f(f(y));
        d = x.abs_diff(y).gcd(&n);
        count += 1;
        if count > 1 << 22 {
            return 1;
        }
    }
    if d == n {
        1
    } else {
        d
    }
}

fn factor_into(n: u64, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push((n, 1));
        return;
    }
    let mut seed = 1u64;
    let mut d = pollard_rho(n, seed);
    while d == 1 {
        seed += 1;
        d = pollard_rho(n, seed);
    }
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Complete prime factorization by trial division up to 2^20, then a
/// deterministic primality test plus a rho splitter for the remainder.
pub fn factorize(n: u64) -> Result<Factored, ArithError> {
    if n == 0 || n > 1 << 63 {
        return Err(ArithError::OutOfRange(n));
    }
    let value = n;
    let mut n = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, n: &mut u64, factors: &mut Vec<(u64, u32)>| {
        let mut e = 0;
        while *n % p == 0 {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut n, &mut factors);
    push(3, &mut n, &mut factors);
    let mut p = 5u64;
    let mut step = 2u64;
    while p <= 1 << 20 && p * p <= n {
        push(p, &mut n, &mut factors);
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        if p * p > n {
            factors.push((n, 1));
        } else {
            let mut rest = Vec::new();
            factor_into(n, &mut rest);
            rest.sort_unstable();
            let mut it = rest.into_iter().peekable();
            while let Some((q, _)) = it.next() {
                let mut e = 1;
                while it.peek().map(|&(r, _)| r) == Some(q) {
                    it.next();
                    e += 1;
                }
                factors.push((q, e));
            }
        }
    }
    Ok(Factored { value, factors })
}

/// Moebius function.
pub fn mobius(n: u64) -> i32 {
    factorize(n).expect("mobius domain").mobius()
}

/// Euler totient.
pub fn euler_phi(n: u64) -> u64 {
    factorize(n).expect("euler_phi domain").phi()
}

/// Number of distinct prime divisors.
pub fn omega(n: u64) -> u32 {
    factorize(n).expect("omega domain").omega()
}

/// The squarefree kernel k(d) and its two 2-adjusted variants.
///
/// `k` is the product of the distinct primes of d; `k1 = k` for odd d and
/// `4k` otherwise; `k2 = k` for odd d and `gcd(4, d/2) * k` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernels {
    pub k: u64,
    pub k1: u64,
    pub k2: u64,
}

pub fn kernels(d: u64) -> Kernels {
    let k = factorize(d).expect("kernels domain").radical();
    if d % 2 == 1 {
        Kernels { k, k1: k, k2: k }
    } else {
        Kernels {
            k,
            k1: 4 * k,
            k2: (d / 2).gcd(&4) * k,
        }
    }
}

/// Largest divisor of `t` composed only of primes dividing `d`
/// (the gcd of t with the supernatural number d^infinity).
pub fn d_part(t: u64, d: u64) -> u64 {
    let mut r = 1u64;
    let mut t = t;
    let mut g = t.gcd(&d);
    while g > 1 {
        r *= g;
        t /= g;
        g = t.gcd(&g);
    }
    r
}

/// Kronecker symbol (a/n) on its full domain.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 {
            match a.rem_euclid(8) {
                3 | 5 => result = -result,
                _ => {}
            }
        }
        n >>= twos;
    }
    // n is now odd and positive; the Jacobi symbol is periodic mod n
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            match n % 8 {
                3 | 5 => result = -result,
                _ => {}
            }
        }
        core::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Signed squarefree part of the rational q = num/den: the unique squarefree
/// integer s with q = s * (rational square).
pub fn squarefree_part(q: Rational) -> i64 {
    assert!(*q.numer() != 0, "squarefree part of zero is undefined");
    let num = q.numer().unsigned_abs();
    let den = *q.denom() as u64;
    let mut s: i64 = if *q.numer() < 0 { -1 } else { 1 };
    for part in [num, den] {
        for (p, e) in factorize(part).expect("squarefree_part domain").factors {
            if e % 2 == 1 {
                s = s
                    .checked_mul(p as i64)
                    .expect("squarefree part exceeds i64");
            }
        }
    }
    s
}

/// Discriminant of the quadratic field Q(sqrt(q)); 1 when q is a rational
/// square. Always congruent to 0 or 1 mod 4.
pub fn fundamental_discriminant(q: Rational) -> i64 {
    let s = squarefree_part(q);
    if s.rem_euclid(4) == 1 {
        s
    } else {
        s.checked_mul(4).expect("discriminant exceeds i64")
    }
}

/// Whether `d` is the discriminant of some quadratic field (1 included).
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    if d.rem_euclid(4) == 1 {
        let f = factorize(d.unsigned_abs()).expect("discriminant domain");
        f.is_squarefree()
    } else if d % 4 == 0 {
        let m = d / 4;
        let r = m.rem_euclid(4);
        (r == 2 || r == 3) && factorize(m.unsigned_abs()).expect("discriminant domain").is_squarefree()
    } else {
        false
    }
}

/// Conductor of the quadratic field of fundamental discriminant `d`:
/// the absolute value of the discriminant.
pub fn conductor_of_discriminant(d: i64) -> Result<u64, ArithError> {
    if !is_fundamental_discriminant(d) {
        return Err(ArithError::NotFundamental(d));
    }
    Ok(d.unsigned_abs())
}

/// Parse a rational given as "p/q" or "p", reduced to lowest terms.
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let bad = || ArithError::BadRational(String::from(s));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (
            a.trim().parse::<i64>().map_err(|_| bad())?,
            b.trim().parse::<i64>().map_err(|_| bad())?,
        ),
        None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
    };
    if den == 0 {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Which branch of the case analysis produced the stored quantity `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MBranch {
    /// m = D(g0)/2.
    HalfDisc,
    /// m = lcm(2^(nu2(h)+2), D(g0)).
    Lcm,
}

/// A rational base g (not -1, 0 or 1) in its canonical form
/// `g = sign * g0^h` with g0 positive and not an exact power, together with
/// the discriminants and 2-adic data every field-degree computation needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposedBase {
    pub numerator: i64,
    pub denominator: u64,
    pub sign: i32,
    pub g0: Rational,
    pub h: u32,
    /// Discriminant of Q(sqrt(g0)); positive since g0 > 0 is not a square.
    pub d_g0: i64,
    /// Discriminant of Q(sqrt(g)).
    pub d_g: i64,
    /// Discriminant of Q(sqrt(-g0)).
    pub d_neg_g0: i64,
    /// Discriminant of Q(sqrt(2 g0)); 1 when 2 g0 is a square.
    pub d_two_g0: i64,
    /// |m| of the degree case analysis; only divisibility tests use it.
    pub m: u64,
    pub m_branch: MBranch,
    pub in_g: bool,
}

impl DecomposedBase {
    /// Decompose a rational base. Rejects g in {-1, 0, 1}.
    pub fn new(g: Rational) -> Result<Self, ArithError> {
        let one = Rational::from_integer(1);
        if g == one || g == -one || *g.numer() == 0 {
            return Err(ArithError::DegenerateBase(g));
        }
        let numerator = *g.numer();
        let denominator = *g.denom() as u64;
        let sign = if numerator < 0 { -1 } else { 1 };

        let num_f = factorize(numerator.unsigned_abs()).map_err(|_| ArithError::OutOfRange(0))?;
        let den_f = factorize(denominator).map_err(|_| ArithError::OutOfRange(0))?;
        let mut h = 0u32;
        for &(_, e) in num_f.factors.iter().chain(den_f.factors.iter()) {
            h = h.gcd(&e);
        }
        debug_assert!(h >= 1);
        let root = |f: &Factored| -> i64 {
            f.factors
                .iter()
                .map(|&(p, e)| (p as i64).pow(e / h))
                .product()
        };
        let g0 = Rational::new(root(&num_f), root(&den_f));
        let d_g0 = fundamental_discriminant(g0);
        let d_g = fundamental_discriminant(g);
        let d_neg_g0 = fundamental_discriminant(-g0);
        let d_two_g0 = if g0 == Rational::new(1, 2) || g0 == Rational::from_integer(2) {
            1
        } else {
            fundamental_discriminant(g0 * Rational::from_integer(2))
        };
        let nu2_h = nu2(h as u64);
        let (m, m_branch) = if (nu2_h == 0 && d_g0.rem_euclid(8) == 4)
            || (nu2_h == 1 && d_g0.rem_euclid(8) == 0)
        {
            ((d_g0 / 2) as u64, MBranch::HalfDisc)
        } else {
            (lcm_pow2(nu2_h + 2, d_g0 as u64), MBranch::Lcm)
        };
        Ok(DecomposedBase {
            numerator,
            denominator,
            sign,
            g0,
            h,
            d_g0,
            d_g,
            d_neg_g0,
            d_two_g0,
            m,
            m_branch,
            in_g: h == 1,
        })
    }

    pub fn value(&self) -> Rational {
        Rational::new(self.numerator, self.denominator as i64)
    }

    pub fn nu2_h(&self) -> u32 {
        nu2(self.h as u64)
    }

    /// The quantity n_r of the degree case analysis; depends on r only
    /// through nu2(r).
    pub fn n_r(&self, nu2_r: u32) -> u64 {
        if self.sign < 0 && nu2_r == 0 {
            self.m
        } else {
            lcm_pow2(self.nu2_h() + nu2_r + 1, self.d_g0 as u64)
        }
    }
}

/// Convenience wrapper over [`DecomposedBase::new`].
pub fn decompose(g: Rational) -> Result<DecomposedBase, ArithError> {
    DecomposedBase::new(g)
}

/// 2-adic valuation; nu2(0) is treated as +infinity by callers and must not
/// be requested here.
#[inline]
pub fn nu2(n: u64) -> u32 {
    debug_assert!(n != 0);
    n.trailing_zeros()
}

/// lcm(2^k, n) for positive n.
#[inline]
pub fn lcm_pow2(k: u32, n: u64) -> u64 {
    let t = nu2(n);
    if k > t {
        n << (k - t)
    } else {
        n
    }
}

/// Smallest-prime-factor sieve supporting repeated factorization of all
/// integers below its limit in O(log n) per call.
#[derive(Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: usize) -> Self {
        let mut spf: Vec<u32> = alloc::vec![0; limit.max(2)];
        for i in 2..spf.len() {
            if spf[i] == 0 {
                let mut j = i;
                while j < spf.len() {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        SpfSieve { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len()
    }

    #[inline]
    pub fn smallest_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Factor `n < limit` into the provided buffer, sorted by prime.
    #[inline]
    pub fn factor_into(&self, mut n: u64, out: &mut Vec<(u64, u32)>) {
        out.clear();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }

    pub fn factorize(&self, n: u64) -> Factored {
        let mut factors = Vec::new();
        self.factor_into(n, &mut factors);
        Factored { value: n, factors }
    }

    #[inline]
    pub fn mobius(&self, n: u64) -> i32 {
        let mut n = n;
        let mut mu = 1i32;
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        mu
    }

    #[inline]
    pub fn phi(&self, n: u64) -> u64 {
        let mut n = n;
        let mut phi = n;
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            phi = phi / p * (p - 1);
            while n % p == 0 {
                n /= p;
            }
        }
        phi
    }
}
