//! Evaluation of the density series with controlled truncation: the index
//! densities rho_g, the order densities delta_g and delta_g^(0), their
//! g-averages, modulus reductions, closeness bounds, genericity predicates
//! and the equidistributed joint classes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;

use crate::arith::{d_part, DecomposedBase, Rational, SpfSieve};
use crate::quadfields::{epsilon3_unchecked, gamma_g, is_exceptional, kummer_degree_with_phi};

pub const DEFAULT_T_MAX: u64 = 4096;
pub const DEFAULT_N_MAX: u64 = 4096;
pub const DEFAULT_W_MAX: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DensityError {
    /// rho_joint requires gcd(a, d) = 1.
    NotCoprime { a: u64, d: u64 },
    /// closeness bounds require g in G (h = 1).
    NotInG,
    /// The shared sieve context does not cover the requested truncation.
    ContextTooSmall { need: u64, have: u64 },
}

impl fmt::Display for DensityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityError::NotCoprime { a, d } => write!(f, "gcd({a}, {d}) must be 1"),
            DensityError::NotInG => write!(f, "base must satisfy h = 1 (g in G)"),
            DensityError::ContextTooSmall { need, have } => {
                write!(f, "sieve context covers {have} < required {need}")
            }
        }
    }
}

/// Kahan compensated accumulator; the alternating Moebius terms would lose
/// precision under naive summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let s = self.sum + y;
        self.carry = (s - self.sum) - y;
        self.sum = s;
    }

    #[inline]
    pub(crate) fn value(self) -> f64 {
        self.sum
    }
}

/// How a series was truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Double sums over t <= t_max, squarefree n <= n_max.
    Rect { t_max: u64, n_max: u64 },
    /// Double sums over all pairs with n t <= v_max (used for matched
    /// cross-evaluator comparisons).
    Ball { v_max: u64 },
    /// Single sums over w <= w_max.
    W { w_max: u64 },
}

impl Truncation {
    fn cutoff(self) -> u64 {
        match self {
            Truncation::Rect { t_max, n_max } => t_max.min(n_max),
            Truncation::Ball { v_max } => v_max,
            Truncation::W { w_max } => w_max,
        }
    }

    pub fn doubled(self) -> Truncation {
        match self {
            Truncation::Rect { t_max, n_max } => Truncation::Rect {
                t_max: 2 * t_max,
                n_max: 2 * n_max,
            },
            Truncation::Ball { v_max } => Truncation::Ball { v_max: 2 * v_max },
            Truncation::W { w_max } => Truncation::W { w_max: 2 * w_max },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DirectSeries,
    WForm,
    CharacterForm,
    ClosedForm,
    Reduced,
}

/// A truncated series value together with a rigorous bound on the discarded
/// tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
    pub tail_bound: f64,
    pub truncation: Truncation,
    pub method: Method,
}

impl DensityEstimate {
    fn scaled(self, scale: Rational) -> DensityEstimate {
        let s = *scale.numer() as f64 / *scale.denom() as f64;
        DensityEstimate {
            value: self.value * s,
            tail_bound: self.tail_bound * s,
            truncation: self.truncation,
            method: if scale == Rational::from_integer(1) {
                self.method
            } else {
                Method::Reduced
            },
        }
    }
}

/// Overestimate of `sum_{v > cutoff} 2^omega(v) / (v phi(v))`, the shared
/// majorant of every series tail. Validated against exact partial sums in
/// the test suite.
pub fn majorant_tail(cutoff: u64) -> f64 {
    let v = cutoff.max(2) as f64;
    8.0 * (crate::fmath::ln(v) + 2.0) / v
}

/// Tail bound for a base-specific series: every term is dominated by
/// 2h * 2^omega(v) / (v phi(v)).
pub fn series_tail(h: u32, trunc: Truncation) -> f64 {
    2.0 * h as f64 * majorant_tail(trunc.cutoff())
}

/// Tail bound for the g-averaged series (the h-factor is absent).
pub fn average_tail(trunc: Truncation) -> f64 {
    majorant_tail(trunc.cutoff())
}

/// Shared sieve tables for series evaluation: smallest prime factors and
/// totients up to a fixed limit.
pub struct DensityContext {
    spf: SpfSieve,
    phi: Vec<u32>,
}

impl DensityContext {
    pub fn new(limit: usize) -> Self {
        let spf = SpfSieve::new(limit + 1);
        let mut phi: Vec<u32> = (0..=limit as u64).map(|i| i as u32).collect();
        for p in 2..=limit {
            if spf.smallest_factor(p as u64) == p as u64 {
                let mut m = p;
                while m <= limit {
                    phi[m] -= phi[m] / p as u32;
                    m += p;
                }
            }
        }
        DensityContext { spf, phi }
    }

    pub fn limit(&self) -> u64 {
        (self.phi.len() - 1) as u64
    }

    #[inline]
    pub fn phi(&self, n: u64) -> u64 {
        self.phi[n as usize] as u64
    }

    pub fn spf(&self) -> &SpfSieve {
        &self.spf
    }

    fn check(&self, need: u64) -> Result<(), DensityError> {
        if need > self.limit() {
            Err(DensityError::ContextTooSmall {
                need,
                have: self.limit(),
            })
        } else {
            Ok(())
        }
    }
}

/// Which density family an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Delta,
    Delta0,
    DeltaAvg,
    RhoG,
    RhoAvg,
}

/// Result of peeling a modulus down to its smallest equivalent: the density
/// at (a, d) equals `scale` times the density at (a', d').
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reduction {
    pub a: u64,
    pub d: u64,
    pub scale: Rational,
}

/// Peel the modulus down to its smallest equivalent.
///
/// For the delta family: divide out odd primes q while q^2 | d (scale 1/q),
/// and halve while 16 | d (scale 1/2), both uniformly in a.
///
/// For the rho family no class-wise peeling exists: the index classes are
/// sums of per-index atoms that concentrate in single subclasses (the index
/// 1 atom alone carries the Artin constant), so rho_g(a, d) cannot equal a
/// fixed multiple of rho_g(a, d') for d' < d; the a = 0 column even scales
/// with 1/q^2 rather than 1/q. The reduction is therefore the identity,
/// which coincides with the k2 kernel on every squarefree-kernel modulus.
pub fn reduce_modulus(kind: DensityKind, a: u64, d: u64) -> Reduction {
    let mut d = d.max(1);
    let mut a = a % d;
    let mut scale = Rational::from_integer(1);
    if matches!(kind, DensityKind::RhoG | DensityKind::RhoAvg) {
        return Reduction { a, d, scale };
    }
    loop {
        let mut changed = false;
        let mut q = 3;
        while q * q <= d {
            if d % (q * q) == 0 && q % 2 == 1 && crate::arith::is_prime(q) {
                d /= q;
                a %= d;
                scale /= Rational::from_integer(q as i64);
                changed = true;
                continue;
            }
            q += 2;
        }
        if d % 16 == 0 {
            d /= 2;
            a %= d;
            scale /= Rational::from_integer(2);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Reduction { a, d, scale }
}

// ---------------------------------------------------------------------------
// rho (index) series in the w-form
// ---------------------------------------------------------------------------

/// Unreduced w-form profile: for each a mod d the partial sum over w <= w_max
/// of [ sum_{t | w, t = a mod d} mu(w/t) ] / [K_{w,w} : Q].
pub fn rho_g_profile_raw(
    base: &DecomposedBase,
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    ctx.check(w_max)?;
    let accs = w_form_accumulate(d, w_max, ctx, |w, phi_w| {
        1.0 / kummer_degree_with_phi(base, w, phi_w, w) as f64
    });
    let trunc = Truncation::W { w_max };
    let tail = series_tail(base.h, trunc);
    Ok(finishing(accs, tail, trunc, Method::WForm))
}

/// Unreduced w-form profile of the g-average rho(a, d).
pub fn rho_avg_profile_raw(
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    ctx.check(w_max)?;
    let accs = w_form_accumulate(d, w_max, ctx, |w, phi_w| 1.0 / (w * phi_w) as f64);
    let trunc = Truncation::W { w_max };
    Ok(finishing(accs, average_tail(trunc), trunc, Method::WForm))
}

fn w_form_accumulate(
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
    inv_weight: impl Fn(u64, u64) -> f64,
) -> Vec<Kahan> {
    let mut accs = alloc::vec![Kahan::default(); d as usize];
    let mut factors: Vec<(u64, u32)> = Vec::with_capacity(16);
    let mut sqfree: Vec<(u64, i32)> = Vec::with_capacity(256);
    for w in 1..=w_max {
        let inv = inv_weight(w, ctx.phi(w));
        ctx.spf.factor_into(w, &mut factors);
        sqfree.clear();
        sqfree.push((1, 1));
        for &(p, _) in &factors {
            let len = sqfree.len();
            for i in 0..len {
                let (s, mu) = sqfree[i];
                sqfree.push((s * p, -mu));
            }
        }
        for &(s, mu) in &sqfree {
            let t = w / s;
            accs[(t % d) as usize].add(mu as f64 * inv);
        }
    }
    accs
}

fn finishing(accs: Vec<Kahan>, tail: f64, trunc: Truncation, method: Method) -> Vec<DensityEstimate> {
    accs.into_iter()
        .map(|k| DensityEstimate {
            value: k.value(),
            tail_bound: tail,
            truncation: trunc,
            method,
        })
        .collect()
}

/// rho_g(a, d) for every a mod d, reduced first.
pub fn rho_g_profile(
    base: &DecomposedBase,
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    reduced_profile(DensityKind::RhoG, d, |d1| {
        rho_g_profile_raw(base, d1, w_max, ctx)
    })
}

/// rho(a, d) (the g-average) for every a mod d, reduced first.
pub fn rho_avg_profile(
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    reduced_profile(DensityKind::RhoAvg, d, |d1| rho_avg_profile_raw(d1, w_max, ctx))
}

pub fn rho_g_series(
    base: &DecomposedBase,
    a: u64,
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    Ok(rho_g_profile(base, d, w_max, ctx)?[(a % d) as usize])
}

pub fn rho_avg_series(
    a: u64,
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    Ok(rho_avg_profile(d, w_max, ctx)?[(a % d) as usize])
}

fn reduced_profile(
    kind: DensityKind,
    d: u64,
    mut raw: impl FnMut(u64) -> Result<Vec<DensityEstimate>, DensityError>,
) -> Result<Vec<DensityEstimate>, DensityError> {
    let mut cache: BTreeMap<u64, Vec<DensityEstimate>> = BTreeMap::new();
    let mut out = Vec::with_capacity(d as usize);
    for a in 0..d {
        let red = reduce_modulus(kind, a, d);
        if !cache.contains_key(&red.d) {
            let prof = raw(red.d)?;
            cache.insert(red.d, prof);
        }
        let est = cache[&red.d][red.a as usize].scaled(red.scale);
        out.push(est);
    }
    Ok(out)
}

/// Exact closed forms of the average rho: rho(0, d) = 1/(d phi(d)) and the
/// half-class rho(d', 2d') values. None when no closed form applies.
pub fn rho_closed_form(a: u64, d: u64) -> Option<Rational> {
    let a = a % d;
    let dphi = Rational::new(1, (d * crate::arith::euler_phi(d)) as i64);
    if a == 0 {
        Some(dphi)
    } else if d % 2 == 0 && a == d / 2 {
        // rho(d', 2d') with d' = d/2: equal to rho(0, d) for odd d',
        // three times it for even d'
        if (d / 2) % 2 == 1 {
            Some(dphi)
        } else {
            Some(Rational::from_integer(3) * dphi)
        }
    } else {
        None
    }
}

/// Exact forms of rho_g: rho_g(0, d) = 1/[K_{d,d}:Q] and
/// rho_g(d', 2d') = 1/[K_{d',d'}:Q] - 1/[K_{2d',2d'}:Q].
pub fn rho_g_closed_form(base: &DecomposedBase, a: u64, d: u64) -> Option<Rational> {
    let a = a % d;
    let deg = |m: u64| crate::quadfields::kummer_degree(base, m, m).expect("m | m") as i64;
    if a == 0 {
        Some(Rational::new(1, deg(d)))
    } else if d % 2 == 0 && a == d / 2 {
        Some(Rational::new(1, deg(d / 2)) - Rational::new(1, deg(d)))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// delta (order) series
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeltaKind {
    /// delta_g: Moebius times the 0/1 splitting coefficient.
    Full,
    /// delta_g^(0): the coefficient replaced by 1.
    Plain,
    /// delta(a, d): degree replaced by phi([d,n] t) n t.
    Average,
}

struct NData {
    n: u64,
    mu: i32,
    gcd_nd: u64,
    lcm_dn: u64,
    /// distinct primes of [d, n], sorted
    primes_dn: Vec<u64>,
}

fn build_n_data(d: u64, n_max: u64, ctx: &DensityContext) -> Vec<NData> {
    let mut out = Vec::new();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let d_primes: Vec<u64> = {
        ctx.spf.factor_into(d, &mut factors);
        factors.iter().map(|&(p, _)| p).collect()
    };
    for n in 1..=n_max {
        let mu = ctx.spf.mobius(n);
        if mu == 0 {
            continue;
        }
        ctx.spf.factor_into(n, &mut factors);
        let mut primes_dn = d_primes.clone();
        for &(p, _) in &factors {
            if !primes_dn.contains(&p) {
                primes_dn.push(p);
            }
        }
        primes_dn.sort_unstable();
        out.push(NData {
            n,
            mu,
            gcd_nd: n.gcd(&d),
            lcm_dn: d.lcm(&n),
            primes_dn,
        });
    }
    out
}

struct DeltaEngine<'a> {
    kind: DeltaKind,
    base: Option<&'a DecomposedBase>,
    d: u64,
    acc: Vec<Kahan>,
    kron_tables: BTreeMap<i64, Vec<i8>>,
    t_factors: Vec<(u64, u32)>,
    b_ok: Vec<bool>,
    cur_t: u64,
    cur_td: u64,
}

impl<'a> DeltaEngine<'a> {
    fn new(kind: DeltaKind, base: Option<&'a DecomposedBase>, d: u64) -> Self {
        DeltaEngine {
            kind,
            base,
            d,
            acc: alloc::vec![Kahan::default(); d as usize],
            kron_tables: BTreeMap::new(),
            t_factors: Vec::with_capacity(16),
            b_ok: alloc::vec![false; d as usize],
            cur_t: 0,
            cur_td: 1,
        }
    }

    fn set_t(&mut self, t: u64, ctx: &DensityContext) {
        self.cur_t = t;
        self.cur_td = d_part(t, self.d);
        ctx.spf.factor_into(t, &mut self.t_factors);
        let d = self.d;
        for a in 0..d {
            let b = (1 + (t % d) * a) % d;
            self.b_ok[a as usize] = b.gcd(&d) == 1;
        }
    }

    fn kron_value(&mut self, gamma: i64, b: u64) -> i32 {
        if gamma == 1 {
            return 1;
        }
        let m = gamma.unsigned_abs();
        let table = self.kron_tables.entry(gamma).or_insert_with(|| {
            (0..m)
                .map(|r| crate::arith::kronecker(gamma, r as i64) as i8)
                .collect()
        });
        table[(b % m) as usize] as i32
    }

    /// Add the contributions of the pair (cur_t, n) for every residue class.
    fn term(&mut self, nd: &NData) {
        let t = self.cur_t;
        let d = self.d;
        let s = nd.lcm_dn * t;
        // phi(s) over the distinct primes of [d,n] and t
        let mut phi = s;
        let mut ti = 0;
        for &p in &nd.primes_dn {
            while ti < self.t_factors.len() && self.t_factors[ti].0 < p {
                let q = self.t_factors[ti].0;
                phi = phi / q * (q - 1);
                ti += 1;
            }
            if ti < self.t_factors.len() && self.t_factors[ti].0 == p {
                ti += 1;
            }
            phi = phi / p * (p - 1);
        }
        while ti < self.t_factors.len() {
            let q = self.t_factors[ti].0;
            phi = phi / q * (q - 1);
            ti += 1;
        }

        let k = nd.n * t;
        let weight = match self.kind {
            DeltaKind::Average => 1.0 / (phi as f64 * k as f64),
            DeltaKind::Plain | DeltaKind::Full => {
                1.0 / kummer_degree_with_phi(self.base.expect("base"), s, phi, k) as f64
            }
        };
        let signed = nd.mu as f64 * weight;

        match self.kind {
            DeltaKind::Average | DeltaKind::Plain => {
                for a in 0..d {
                    if self.b_ok[a as usize] && a % nd.gcd_nd == 0 {
                        self.acc[a as usize].add(signed);
                    }
                }
            }
            DeltaKind::Full => {
                let base = self.base.expect("base");
                let f = d * self.cur_td;
                let v = k;
                let gamma = gamma_g(base, f, v);
                let exceptional = is_exceptional(base, f, v);
                let gfv = f.gcd(&v);
                for a in 0..d {
                    if !self.b_ok[a as usize] || a % nd.gcd_nd != 0 {
                        continue;
                    }
                    let b = 1 + t * a;
                    let mut sign = self.kron_value(gamma, b);
                    if exceptional && ((t * a) / gfv) % 2 == 1 {
                        sign = -sign;
                    }
                    debug_assert_eq!(
                        sign,
                        epsilon3_unchecked(base, b, f, v) * crate::arith::kronecker(gamma, b as i64)
                    );
                    if sign > 0 {
                        self.acc[a as usize].add(signed);
                    }
                }
            }
        }
    }
}

fn delta_profile_impl(
    kind: DeltaKind,
    base: Option<&DecomposedBase>,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<Kahan>, DensityError> {
    let mut engine = DeltaEngine::new(kind, base, d);
    match trunc {
        Truncation::Rect { t_max, n_max } => {
            ctx.check(t_max.max(n_max))?;
            let n_data = build_n_data(d, n_max, ctx);
            for t in 1..=t_max {
                engine.set_t(t, ctx);
                for nd in &n_data {
                    engine.term(nd);
                }
            }
        }
        Truncation::Ball { v_max } => {
            ctx.check(v_max)?;
            let n_data = build_n_data(d, v_max, ctx);
            let mut index = alloc::vec![usize::MAX; v_max as usize + 1];
            for (i, nd) in n_data.iter().enumerate() {
                index[nd.n as usize] = i;
            }
            let mut factors: Vec<(u64, u32)> = Vec::new();
            let mut divs: Vec<u64> = Vec::with_capacity(256);
            for v in 1..=v_max {
                ctx.spf.factor_into(v, &mut factors);
                divs.clear();
                divs.push(1);
                for &(p, _) in &factors {
                    let len = divs.len();
                    for i in 0..len {
                        divs.push(divs[i] * p);
                    }
                }
                for &n in &divs {
                    let nd = &n_data[index[n as usize]];
                    engine.set_t(v / n, ctx);
                    engine.term(nd);
                }
            }
        }
        Truncation::W { .. } => panic!("delta series use Rect or Ball truncation"),
    }
    Ok(engine.acc)
}

fn delta_profile_family(
    kind: DeltaKind,
    base: Option<&DecomposedBase>,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    let tail = match kind {
        DeltaKind::Average => average_tail(trunc),
        _ => series_tail(base.expect("base").h, trunc),
    };
    let method = Method::DirectSeries;
    let density_kind = match kind {
        DeltaKind::Full => DensityKind::Delta,
        DeltaKind::Plain => DensityKind::Delta0,
        DeltaKind::Average => DensityKind::DeltaAvg,
    };
    reduced_profile(density_kind, d, |d1| {
        let accs = delta_profile_impl(kind, base, d1, trunc, ctx)?;
        Ok(finishing(accs, tail, trunc, method))
    })
}

/// delta_g(a, d) for every a mod d (reduced first).
pub fn delta_g_profile(
    base: &DecomposedBase,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    delta_profile_family(DeltaKind::Full, Some(base), d, trunc, ctx)
}

/// delta_g^(0)(a, d) for every a mod d (reduced first).
pub fn delta0_g_profile(
    base: &DecomposedBase,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    delta_profile_family(DeltaKind::Plain, Some(base), d, trunc, ctx)
}

/// delta(a, d), the g-average, for every a mod d (reduced first).
pub fn delta_avg_profile(
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    delta_profile_family(DeltaKind::Average, None, d, trunc, ctx)
}

/// Unreduced single-modulus profiles, used by the scaling-law checks.
pub fn delta_g_profile_raw(
    base: &DecomposedBase,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    let accs = delta_profile_impl(DeltaKind::Full, Some(base), d, trunc, ctx)?;
    Ok(finishing(
        accs,
        series_tail(base.h, trunc),
        trunc,
        Method::DirectSeries,
    ))
}

pub fn delta0_g_profile_raw(
    base: &DecomposedBase,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    let accs = delta_profile_impl(DeltaKind::Plain, Some(base), d, trunc, ctx)?;
    Ok(finishing(
        accs,
        series_tail(base.h, trunc),
        trunc,
        Method::DirectSeries,
    ))
}

pub fn delta_avg_profile_raw(
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<Vec<DensityEstimate>, DensityError> {
    let accs = delta_profile_impl(DeltaKind::Average, None, d, trunc, ctx)?;
    Ok(finishing(accs, average_tail(trunc), trunc, Method::DirectSeries))
}

/// Partial unreduced profile over a t-block of the Rect truncation, as raw
/// per-class sums. Blocks over a fixed partition of 1..=t_max recombine by
/// element-wise addition into the full profile, independently of worker
/// count or merge order up to the usual f64 reassociation.
pub fn delta_partial_profile(
    kind: DensityKind,
    base: Option<&DecomposedBase>,
    d: u64,
    t_lo: u64,
    t_hi: u64,
    n_max: u64,
    ctx: &DensityContext,
) -> Result<Vec<f64>, DensityError> {
    let kind = match kind {
        DensityKind::Delta => DeltaKind::Full,
        DensityKind::Delta0 => DeltaKind::Plain,
        DensityKind::DeltaAvg => DeltaKind::Average,
        _ => panic!("delta_partial_profile expects a delta-family kind"),
    };
    ctx.check(t_hi.max(n_max))?;
    let n_data = build_n_data(d, n_max, ctx);
    let mut engine = DeltaEngine::new(kind, base, d);
    for t in t_lo..=t_hi {
        engine.set_t(t, ctx);
        for nd in &n_data {
            engine.term(nd);
        }
    }
    Ok(engine.acc.into_iter().map(Kahan::value).collect())
}

/// Partial unreduced w-form profile over a w-block; same merge contract as
/// [`delta_partial_profile`].
pub fn rho_partial_profile(
    kind: DensityKind,
    base: Option<&DecomposedBase>,
    d: u64,
    w_lo: u64,
    w_hi: u64,
    ctx: &DensityContext,
) -> Result<Vec<f64>, DensityError> {
    ctx.check(w_hi)?;
    let mut accs = alloc::vec![Kahan::default(); d as usize];
    let mut factors: Vec<(u64, u32)> = Vec::with_capacity(16);
    let mut sqfree: Vec<(u64, i32)> = Vec::with_capacity(256);
    for w in w_lo..=w_hi {
        let inv = match kind {
            DensityKind::RhoG => {
                1.0 / kummer_degree_with_phi(base.expect("base"), w, ctx.phi(w), w) as f64
            }
            DensityKind::RhoAvg => 1.0 / (w * ctx.phi(w)) as f64,
            _ => panic!("rho_partial_profile expects a rho-family kind"),
        };
        ctx.spf.factor_into(w, &mut factors);
        sqfree.clear();
        sqfree.push((1, 1));
        for &(p, _) in &factors {
            let len = sqfree.len();
            for i in 0..len {
                let (s, mu) = sqfree[i];
                sqfree.push((s * p, -mu));
            }
        }
        for &(s, mu) in &sqfree {
            accs[((w / s) % d) as usize].add(mu as f64 * inv);
        }
    }
    Ok(accs.into_iter().map(Kahan::value).collect())
}

pub fn delta_g_series(
    base: &DecomposedBase,
    a: u64,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    Ok(delta_g_profile(base, d, trunc, ctx)?[(a % d) as usize])
}

pub fn delta0_g_series(
    base: &DecomposedBase,
    a: u64,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    Ok(delta0_g_profile(base, d, trunc, ctx)?[(a % d) as usize])
}

pub fn delta_avg_series(
    a: u64,
    d: u64,
    trunc: Truncation,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    Ok(delta_avg_profile(d, trunc, ctx)?[(a % d) as usize])
}

// ---------------------------------------------------------------------------
// closeness bounds and genericity
// ---------------------------------------------------------------------------

/// Explicit bounds on how far a base-specific density can sit from its
/// g-average, for g in G: |delta_g^(0) - delta| < 2^(omega(D1)+2)/(phi(D1) D1)
/// with D1 = |D(g)/(D(g), d)|, delta_g three times that, and rho_g the
/// analogue with D2 = [2, D(g)].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosenessBounds {
    pub delta0: Rational,
    pub delta: Rational,
    pub rho: Rational,
}

pub fn closeness_bounds(base: &DecomposedBase, d: u64) -> Result<ClosenessBounds, DensityError> {
    if !base.in_g {
        return Err(DensityError::NotInG);
    }
    let abs_dg = base.d_g.unsigned_abs();
    let bound = |m: u64| {
        let f = crate::arith::factorize(m).expect("bound domain");
        Rational::new(1 << (f.omega() + 2), (f.phi() * m) as i64)
    };
    let d1 = abs_dg / abs_dg.gcd(&d);
    let d2 = abs_dg.lcm(&2);
    let b0 = bound(d1);
    Ok(ClosenessBounds {
        delta0: b0,
        delta: Rational::from_integer(3) * b0,
        rho: bound(d2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericityKind {
    Delta0,
    Delta,
    Rho,
}

/// Sufficient conditions under which the base-specific density provably
/// equals its g-average: true implies *_g(a, d) = *(a, d).
pub fn genericity_check(kind: GenericityKind, base: &DecomposedBase, a: u64, d: u64) -> bool {
    if !base.in_g {
        return false;
    }
    let a = a % d;
    let dg_primes: Vec<u64> = crate::arith::factorize(base.d_g.unsigned_abs())
        .expect("discriminant domain")
        .factors
        .iter()
        .map(|&(p, _)| p)
        .collect();
    let kernels = crate::arith::kernels(d);
    match kind {
        GenericityKind::Rho => {
            let alpha = if a == 0 { d } else { a.gcd(&d) };
            let d1 = d / alpha;
            dg_primes
                .iter()
                .any(|&p| p % d1 == 1 % d1 && alpha % p != 0)
        }
        GenericityKind::Delta0 => {
            let d1 = d / if a == 0 { d } else { a.gcd(&d) };
            dg_primes
                .iter()
                .any(|&p| d % p != 0 && (p % d1 == 1 % d1 || p % kernels.k2 == 1 % kernels.k2))
        }
        GenericityKind::Delta => dg_primes
            .iter()
            .any(|&p| d % p != 0 && p % kernels.k1 == 1 % kernels.k1),
    }
}

// ---------------------------------------------------------------------------
// joint (prime class, index class) series
// ---------------------------------------------------------------------------

/// The series attached to the joint class {k(d) divides the index, order in
/// a prescribed class mod d} (2k(d) for even d); its value is the same for
/// every unit class a mod d, which is the equidistribution being tested.
pub fn rho_joint_series(
    base: &DecomposedBase,
    d: u64,
    a: u64,
    t_max: u64,
    n_max: u64,
    ctx: &DensityContext,
) -> Result<DensityEstimate, DensityError> {
    if a.gcd(&d) != 1 {
        return Err(DensityError::NotCoprime { a, d });
    }
    ctx.check(t_max.max(n_max))?;
    let k = crate::arith::kernels(d).k;
    let step = if d % 2 == 0 { 2 * k } else { k };
    let mut acc = Kahan::default();
    let mut t_factors: Vec<(u64, u32)> = Vec::new();
    let n_data: Vec<NData> = build_n_data(d, n_max, ctx)
        .into_iter()
        .filter(|nd| nd.gcd_nd == 1)
        .collect();
    let mut kron_tables: BTreeMap<i64, Vec<i8>> = BTreeMap::new();
    let mut t = step;
    while t <= t_max {
        let td = d_part(t, d);
        let f = d * td;
        ctx.spf.factor_into(t, &mut t_factors);
        for nd in &n_data {
            let s = nd.lcm_dn * t;
            let mut phi = s;
            let mut ti = 0;
            for &p in &nd.primes_dn {
                while ti < t_factors.len() && t_factors[ti].0 < p {
                    let q = t_factors[ti].0;
                    phi = phi / q * (q - 1);
                    ti += 1;
                }
                if ti < t_factors.len() && t_factors[ti].0 == p {
                    ti += 1;
                }
                phi = phi / p * (p - 1);
            }
            while ti < t_factors.len() {
                let q = t_factors[ti].0;
                phi = phi / q * (q - 1);
                ti += 1;
            }
            let v = nd.n * t;
            let deg = kummer_degree_with_phi(base, s, phi, v);
            let gamma = gamma_g(base, f, v);
            let b = 1 + t * a;
            debug_assert_eq!(b.gcd(&(d * t)), 1);
            let m = gamma.unsigned_abs();
            let table = kron_tables.entry(gamma).or_insert_with(|| {
                (0..m)
                    .map(|r| crate::arith::kronecker(gamma, r as i64) as i8)
                    .collect()
            });
            let mut sign = table[(b % m) as usize] as i32;
            if is_exceptional(base, f, v) && ((t * a) / f.gcd(&v)) % 2 == 1 {
                sign = -sign;
            }
            if d % 2 == 1 {
                // for odd d the coefficient is provably 1 on every term
                debug_assert_eq!(sign, 1, "t={t} n={} d={d}", nd.n);
            }
            if sign > 0 {
                acc.add(nd.mu as f64 / deg as f64);
            }
        }
        t += step;
    }
    let trunc = Truncation::Rect { t_max, n_max };
    Ok(DensityEstimate {
        value: acc.value(),
        tail_bound: series_tail(base.h, trunc),
        truncation: trunc,
        method: Method::DirectSeries,
    })
}

// ---------------------------------------------------------------------------
// high-precision average rho by the multiplicative form
// ---------------------------------------------------------------------------

/// F(t): the average density of primes with residual index exactly t, via
/// the exact local summation of the Moebius sum:
/// F(t) = A * prod_{p | t} theta_p / (t phi(t)) where
/// theta_p = (p^2-1)(p-1) / (p (p^2 - p - 1)) and A is the Artin constant.
/// The caller supplies A (an Euler product it can compute independently).
#[inline]
fn theta_p(p: u64) -> f64 {
    let p = p as f64;
    ((p * p - 1.0) * (p - 1.0)) / (p * (p * p - p - 1.0))
}

/// Accumulate F(t) for t <= t_limit into residue classes mod `modulus`,
/// using a segmented totient sieve. Returns the per-class sums and a bound
/// on the discarded tail of the total.
pub fn rho_avg_multiplicative_profile(
    modulus: u64,
    t_limit: u64,
    artin: f64,
) -> (Vec<f64>, f64) {
    rho_avg_multiplicative_range(modulus, 1, t_limit + 1, artin)
}

/// The [lo, hi) block of the accumulation, for parallel drivers; merge by
/// element-wise addition.
pub fn rho_avg_multiplicative_range(
    modulus: u64,
    lo: u64,
    hi: u64,
    artin: f64,
) -> (Vec<f64>, f64) {
    let mut acc = alloc::vec![Kahan::default(); modulus as usize];
    let lo = lo.max(1);
    let root = crate::fmath::sqrt(hi as f64) as u64 + 2;
    let base_primes = crate::empirical::simple_primes(root);
    const SEG: u64 = 1 << 16;
    let mut rem = alloc::vec![0u64; SEG as usize];
    let mut phi = alloc::vec![0u64; SEG as usize];
    let mut theta = alloc::vec![0f64; SEG as usize];
    let mut seg_lo = lo;
    while seg_lo < hi {
        let seg_hi = (seg_lo + SEG).min(hi);
        let len = (seg_hi - seg_lo) as usize;
        for i in 0..len {
            rem[i] = seg_lo + i as u64;
            phi[i] = 1;
            theta[i] = 1.0;
        }
        for &p in &base_primes {
            if p * p >= seg_hi {
                break;
            }
            let mut m = (seg_lo + p - 1) / p * p;
            while m < seg_hi {
                let i = (m - seg_lo) as usize;
                let mut e = 0u32;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    e += 1;
                }
                phi[i] *= (p - 1) * p.pow(e - 1);
                theta[i] *= theta_p(p);
                m += p;
            }
        }
        for i in 0..len {
            let t = seg_lo + i as u64;
            if t == 0 {
                continue;
            }
            let (phi_t, theta_t) = if rem[i] > 1 {
                // a single prime factor above sqrt(hi) remains
                (phi[i] * (rem[i] - 1), theta[i] * theta_p(rem[i]))
            } else {
                (phi[i], theta[i])
            };
            let f_t = artin * theta_t / (t as f64 * phi_t as f64);
            acc[(t % modulus) as usize].add(f_t);
        }
        seg_lo = seg_hi;
    }
    // tail beyond hi: F(t) <= 1.7 A/(t phi(t)) with prod theta_p < 1.7,
    // and sum_{t >= T} 1/(t phi(t)) < 5.75/T from t/phi(t) < 5.75 there
    (
        acc.into_iter().map(Kahan::value).collect(),
        1.7 * artin * 5.75 / hi as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{decompose, euler_phi};
    use crate::quadfields::kummer_degree;
    use alloc::vec::Vec;

    fn base(g: i64) -> DecomposedBase {
        decompose(Rational::from_integer(g)).unwrap()
    }

    fn ctx() -> DensityContext {
        DensityContext::new(1 << 16)
    }

    fn rat_f64(r: Rational) -> f64 {
        *r.numer() as f64 / *r.denom() as f64
    }

    #[test]
    fn majorant_dominates_exact_tail() {
        // exact partial sums of sum 2^omega(v)/(v phi(v)) up to 10^7,
        // cross-checked against the closed overestimate
        let limit = 10_000_000usize;
        let c = DensityContext::new(limit);
        let mut suffix = alloc::vec![0.0f64; limit + 2];
        for v in (2..=limit as u64).rev() {
            let f = c.spf().factorize(v);
            let term = (1u64 << f.omega()) as f64 / (v as f64 * c.phi(v) as f64);
            suffix[v as usize] = suffix[v as usize + 1] + term;
        }
        for cut in [256u64, 1024, 4096, 1 << 14, 1 << 16, 1 << 18, 1 << 21] {
            let exact_tail = suffix[cut as usize + 1];
            // the part beyond 10^6 is tiny compared to the slack
            assert!(
                exact_tail + majorant_tail(limit as u64) * 0.5 < majorant_tail(cut),
                "cut={cut}: exact {exact_tail} vs bound {}",
                majorant_tail(cut)
            );
        }
    }

    #[test]
    fn reduce_modulus_examples() {
        let r = reduce_modulus(DensityKind::Delta, 1, 9);
        assert_eq!((r.a, r.d, r.scale), (1, 3, Rational::new(1, 3)));
        let r = reduce_modulus(DensityKind::Delta, 1, 16);
        assert_eq!((r.a, r.d, r.scale), (1, 8, Rational::new(1, 2)));
        let r = reduce_modulus(DensityKind::Delta, 5, 27);
        assert_eq!((r.a, r.d, r.scale), (2, 3, Rational::new(1, 9)));
        let r = reduce_modulus(DensityKind::RhoG, 0, 12);
        assert_eq!((r.a, r.d, r.scale), (0, 12, Rational::from_integer(1)));
        // no class-wise rho peeling exists; see reduce_modulus
        for (a, d) in [(0u64, 9u64), (1, 9), (8, 16), (4, 16), (1, 18)] {
            let r = reduce_modulus(DensityKind::RhoG, a, d);
            assert_eq!((r.a, r.d, r.scale), (a, d, Rational::from_integer(1)));
        }
    }

    #[test]
    fn rho_g_zero_class_is_exact() {
        // the w-form coefficient vanishes away from w = d when a = 0, so the
        // partial sum equals 1/[K_{d,d}:Q] exactly
        let c = ctx();
        for g in [2i64, 3, 5, -2, -4, 8] {
            let b = base(g);
            for d in 1..=12u64 {
                let est = rho_g_series(&b, 0, d, 4096, &c).unwrap();
                let expect = rat_f64(rho_g_closed_form(&b, 0, d).unwrap());
                assert_eq!(expect, 1.0 / kummer_degree(&b, d, d).unwrap() as f64);
                assert!(
                    (est.value - expect).abs() < 1e-14,
                    "g={g} d={d}: {} vs {expect}",
                    est.value
                );
                // half-class form: rho_g(d, 2d) = 1/[K_dd] - 1/[K_2d,2d]
                let half = rho_g_closed_form(&b, d, 2 * d).unwrap();
                let est = rho_g_series(&b, d, 2 * d, 1 << 14, &c).unwrap();
                assert!(
                    (est.value - rat_f64(half)).abs() <= est.tail_bound,
                    "half-class g={g} d={d}"
                );
            }
        }
        assert_eq!(
            rho_g_closed_form(&base(2), 0, 2),
            Some(Rational::new(1, 2))
        );
        assert_eq!(rho_g_closed_form(&base(2), 1, 4), None);
    }

    #[test]
    fn rho_closed_forms_match_series() {
        let c = ctx();
        for d in 1..=12u64 {
            let est = rho_avg_series(0, d, 4096, &c).unwrap();
            let cf = rat_f64(rho_closed_form(0, d).unwrap());
            assert!((est.value - cf).abs() <= est.tail_bound);
            assert!((est.value - cf).abs() < 1e-14, "d={d}");
        }
        assert_eq!(rho_closed_form(3, 6), Some(Rational::new(1, 12)));
        assert_eq!(rho_closed_form(0, 4), Some(Rational::new(1, 8)));
        assert_eq!(rho_closed_form(2, 4), Some(Rational::new(3, 8)));
        assert_eq!(rho_closed_form(1, 4), None);
        // the half-class series value agrees with the closed form
        for d in [3u64, 4, 5, 6] {
            let est = rho_avg_series(d, 2 * d, 1 << 14, &c).unwrap();
            let cf = rat_f64(rho_closed_form(d, 2 * d).unwrap());
            assert!(
                (est.value - cf).abs() <= est.tail_bound,
                "d={d}: {} vs {cf}",
                est.value
            );
        }
    }

    #[test]
    fn zero_class_square_scaling() {
        // rho(0, q d1) = rho(0, d1) / q^2 for odd primes q | d1
        for (m, q) in [(1u64, 3u64), (2, 3), (1, 5)] {
            let d1 = q * m;
            let lhs = rat_f64(rho_closed_form(0, q * d1).unwrap());
            let rhs = rat_f64(rho_closed_form(0, d1).unwrap()) / (q * q) as f64;
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_even_order_density_for_two() {
        let c = ctx();
        let b = base(2);
        let t = Truncation::Rect {
            t_max: 2048,
            n_max: 2048,
        };
        let prof = delta_g_profile(&b, 2, t, &c).unwrap();
        assert!(
            (prof[0].value - 17.0 / 24.0).abs() < 2e-3,
            "delta_2(0,2) = {}",
            prof[0].value
        );
        assert!((prof[1].value - 7.0 / 24.0).abs() < 2e-3);
    }

    #[test]
    fn delta0_equals_delta_on_zero_class() {
        let c = ctx();
        let t = Truncation::Rect {
            t_max: 512,
            n_max: 512,
        };
        for g in [2i64, -2, 5, -4] {
            let b = base(g);
            for d in 1..=8u64 {
                let full = delta_g_profile(&b, d, t, &c).unwrap();
                let plain = delta0_g_profile(&b, d, t, &c).unwrap();
                assert_eq!(full[0].value, plain[0].value, "g={g} d={d}");
            }
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let c = ctx();
        let t = Truncation::Rect {
            t_max: 1024,
            n_max: 1024,
        };
        for g in [2i64, -4] {
            let b = base(g);
            for d in [2u64, 3, 4, 6] {
                let prof = delta_g_profile(&b, d, t, &c).unwrap();
                let sum: f64 = prof.iter().map(|e| e.value).sum();
                let tails: f64 = prof.iter().map(|e| e.tail_bound).sum();
                assert!((sum - 1.0).abs() <= tails, "delta g={g} d={d}: {sum}");
                assert!((sum - 1.0).abs() < 0.02, "delta g={g} d={d}: {sum}");

                let prof = rho_g_profile(&b, d, 1 << 16, &c).unwrap();
                let sum: f64 = prof.iter().map(|e| e.value).sum();
                assert!((sum - 1.0).abs() < 0.01, "rho g={g} d={d}: {sum}");
            }
        }
    }

    #[test]
    fn modulus_peeling_between_raw_evaluations() {
        let c = ctx();
        let t = Truncation::Rect {
            t_max: 512,
            n_max: 512,
        };
        for g in [2i64, -2, 3] {
            let b = base(g);
            let nine = delta_g_profile_raw(&b, 9, t, &c).unwrap();
            let three = delta_g_profile_raw(&b, 3, t, &c).unwrap();
            for a in 0..9u64 {
                let lhs = nine[a as usize].value;
                let rhs = three[(a % 3) as usize].value / 3.0;
                let tol = nine[a as usize].tail_bound + three[(a % 3) as usize].tail_bound;
                assert!((lhs - rhs).abs() <= tol, "g={g} a={a}: {lhs} vs {rhs}");
                // the law is in fact term-exact at matched truncation
                assert!((lhs - rhs).abs() < 1e-3, "g={g} a={a}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn rho_reduction_consistency() {
        // the public (reduce-first) evaluator must agree with the raw series
        let c = ctx();
        for g in [2i64, 3, -2] {
            let b = base(g);
            for d in [8u64, 12, 16, 18] {
                let raw = rho_g_profile_raw(&b, d, 1 << 16, &c).unwrap();
                let public = rho_g_profile(&b, d, 1 << 16, &c).unwrap();
                for a in 0..d as usize {
                    assert_eq!(raw[a].value, public[a].value, "g={g} a={a} d={d}");
                }
            }
        }
    }

    #[test]
    fn rho_subclasses_defeat_naive_scaling() {
        // the index-1 atom (the Artin-type density) lies in a single
        // subclass, so rho_2(1, 16) is close to rho_2(1, 8), not to half
        // of it; this is why no rho modulus peeling is performed
        let c = ctx();
        let b = base(2);
        let r16 = rho_g_series(&b, 1, 16, 1 << 16, &c).unwrap().value;
        let r8 = rho_g_series(&b, 1, 8, 1 << 16, &c).unwrap().value;
        assert!((r16 - r8 / 2.0).abs() > 0.15);
        assert!((r16 - r8).abs() < 0.02);
    }

    #[test]
    fn convergence_under_doubling() {
        let c = ctx();
        let b = base(-4);
        let t1 = Truncation::Rect {
            t_max: 256,
            n_max: 256,
        };
        let t2 = t1.doubled();
        for d in [2u64, 8] {
            let p1 = delta_g_profile(&b, d, t1, &c).unwrap();
            let p2 = delta_g_profile(&b, d, t2, &c).unwrap();
            for a in 0..d as usize {
                assert!((p1[a].value - p2[a].value).abs() <= p1[a].tail_bound);
            }
        }
        let r1 = rho_g_series(&b, 1, 8, 1 << 14, &c).unwrap();
        let r2 = rho_g_series(&b, 1, 8, 1 << 15, &c).unwrap();
        assert!((r1.value - r2.value).abs() <= r1.tail_bound);
    }

    #[test]
    fn closeness_bounds_example() {
        let b = base(2);
        let cb = closeness_bounds(&b, 3).unwrap();
        assert_eq!(cb.delta0, Rational::new(1, 4));
        assert_eq!(cb.delta, Rational::new(3, 4));
        // D2 = [2, 8] = 8: same bound as delta0 here
        assert_eq!(cb.rho, Rational::new(1, 4));
        assert!(closeness_bounds(&base(-4), 3).is_err());
    }

    #[test]
    fn closeness_bounds_hold_numerically() {
        let c = ctx();
        let b = base(2);
        let t = Truncation::Rect {
            t_max: 1024,
            n_max: 1024,
        };
        let cb = closeness_bounds(&b, 3).unwrap();
        let d0 = delta0_g_profile(&b, 3, t, &c).unwrap();
        let avg = delta_avg_profile(3, t, &c).unwrap();
        for a in 0..3usize {
            let diff = (d0[a].value - avg[a].value).abs();
            assert!(diff < rat_f64(cb.delta0), "a={a}: {diff}");
        }
    }

    #[test]
    fn genericity_examples() {
        let seven = base(7);
        assert!(genericity_check(GenericityKind::Rho, &seven, 1, 3));
        let two = base(2);
        for d in 3..=12u64 {
            assert!(!genericity_check(GenericityKind::Delta, &two, 1, d));
        }
        // genericity implies numerical equality within tails
        let c = ctx();
        let t = Truncation::Rect {
            t_max: 1024,
            n_max: 1024,
        };
        assert!(genericity_check(GenericityKind::Delta0, &seven, 1, 3));
        let d0 = delta0_g_profile(&seven, 3, t, &c).unwrap();
        let avg = delta_avg_profile(3, t, &c).unwrap();
        assert!((d0[1].value - avg[1].value).abs() <= d0[1].tail_bound + avg[1].tail_bound);
        assert!((d0[1].value - avg[1].value).abs() < 1e-3);
    }

    #[test]
    fn rho_joint_equal_across_units() {
        let c = ctx();
        for g in [2i64, -4] {
            let b = base(g);
            for d in [3u64, 4, 5, 8] {
                let units: Vec<u64> = (1..d).filter(|a| a.gcd(&d) == 1).collect();
                let vals: Vec<f64> = units
                    .iter()
                    .map(|&a| rho_joint_series(&b, d, a, 2048, 512, &c).unwrap().value)
                    .collect();
                for w in vals.windows(2) {
                    assert!((w[0] - w[1]).abs() < 1e-6, "g={g} d={d}: {vals:?}");
                }
                assert!(vals[0] > 0.0);
            }
        }
        assert!(rho_joint_series(&base(2), 4, 2, 64, 64, &ctx()).is_err());
    }

    #[test]
    fn multiplicative_form_matches_moebius_sum() {
        // independent oracle: brute truncation of sum_n mu(n)/(n t phi(n t))
        let limit = 200_000usize;
        let c = DensityContext::new(limit);
        let artin: f64 = {
            let primes = crate::empirical::simple_primes(100_000);
            primes
                .iter()
                .map(|&p| 1.0 - 1.0 / (p as f64 * (p - 1) as f64))
                .product()
        };
        let (profile, _) = rho_avg_multiplicative_profile(840, 150_000, artin);
        for t in [1u64, 2, 3, 4, 6, 10, 12] {
            let mut brute = Kahan::default();
            let n_cap = (limit as u64) / t;
            for n in 1..=n_cap {
                let mu = c.spf().mobius(n);
                if mu != 0 {
                    brute.add(mu as f64 / ((n * t) as f64 * c.phi(n * t) as f64));
                }
            }
            // isolate F(t) from the profile: recompute a single term
            let (single, _) = rho_avg_multiplicative_range(1, t, t + 1, artin);
            assert!(
                (single[0] - brute.value()).abs() < 5e-5 / t as f64,
                "t={t}: {} vs {}",
                single[0],
                brute.value()
            );
            let _ = &profile;
        }
        // and the class sums reproduce the exact closed form 1/(d phi(d))
        for d in [3u64, 4, 5, 8] {
            let mut class0 = 0.0;
            for (r, &v) in profile.iter().enumerate() {
                if r as u64 % d == 0 {
                    class0 += v;
                }
            }
            let expect = 1.0 / (d * euler_phi(d)) as f64;
            assert!((class0 - expect).abs() < 1e-4, "d={d}: {class0} vs {expect}");
        }
    }

    #[test]
    fn ball_and_rect_agree_in_the_limit() {
        let c = ctx();
        let b = base(-4);
        let rect = delta_g_profile_raw(
            &b,
            8,
            Truncation::Rect {
                t_max: 1024,
                n_max: 1024,
            },
            &c,
        )
        .unwrap();
        let ball = delta_g_profile_raw(&b, 8, Truncation::Ball { v_max: 4096 }, &c).unwrap();
        for a in 0..8usize {
            assert!(
                (rect[a].value - ball[a].value).abs()
                    <= rect[a].tail_bound + ball[a].tail_bound
            );
        }
    }
}
