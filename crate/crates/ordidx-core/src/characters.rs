//! Dirichlet character groups represented exactly on unit-group generators,
//! the convolution h_chi = chi * mu, the Euler-product constants A_chi, the
//! character-sum form of delta_g^(0), and the numerical verification of the
//! decomposition of the average index density over the A_chi basis.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_integer::Integer;

use crate::arith::{d_part, euler_phi, factorize, powmod, DecomposedBase, Rational};
use crate::densities::{DensityContext, DensityEstimate, Kahan, Method, Truncation};
use crate::empirical::for_each_prime_in_range;
use crate::quadfields::kummer_degree_with_phi;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharacterError {
    /// The requested modulus must divide the precomputed table modulus.
    IncompatibleModulus { d: u64, table: u64 },
}

impl fmt::Display for CharacterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharacterError::IncompatibleModulus { d, table } => {
                write!(f, "modulus {d} does not divide the table modulus {table}")
            }
        }
    }
}

/// e^(2 pi i k / lambda) evaluated so that conjugate exponents give exactly
/// conjugate floats (the k and lambda-k branches share their cos/sin calls).
fn root_of_unity(k: u64, lambda: u64) -> Complex64 {
    let k = k % lambda;
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * k == lambda {
        return Complex64::new(-1.0, 0.0);
    }
    let (kk, sign) = if 2 * k > lambda {
        (lambda - k, -1.0)
    } else {
        (k, 1.0)
    };
    if 4 * kk == lambda {
        return Complex64::new(0.0, sign);
    }
    let theta = core::f64::consts::TAU * kk as f64 / lambda as f64;
    Complex64::new(crate::fmath::cos(theta), sign * crate::fmath::sin(theta))
}

/// Generators of (Z/mZ)^*: one per odd prime power, plus {-1, 5} for the
/// 2-power part (3 for modulus 4).
#[derive(Debug, Clone)]
pub struct UnitGroup {
    pub modulus: u64,
    pub generators: Vec<u64>,
    pub orders: Vec<u64>,
    /// lcm of the generator orders: the exponent of the group.
    pub exponent: u64,
    /// discrete logarithms: for each residue class a coprime to m, the
    /// exponent vector of a over the generators
    logs: Vec<Option<Vec<u32>>>,
}

fn primitive_root_mod_prime_power(p: u64, k: u32) -> u64 {
    let pk = p.pow(k);
    let phi_p = p - 1;
    let qs: Vec<u64> = factorize(phi_p)
        .expect("p-1 in range")
        .factors
        .iter()
        .map(|&(q, _)| q)
        .collect();
    let mut g = 2u64;
    loop {
        if g % p != 0 && qs.iter().all(|&q| powmod(g, phi_p / q, p) != 1) {
            break;
        }
        g += 1;
    }
    if k == 1 {
        return g;
    }
    // lift: g stays primitive mod p^k unless g^(p-1) = 1 mod p^2
    if powmod(g, p - 1, p * p) == 1 {
        g += p;
    }
    g % pk
}

impl UnitGroup {
    pub fn new(m: u64) -> Self {
        // explicit tables are built per residue class and per character
        assert!(
            (1..=65_536).contains(&m),
            "character groups are tabulated explicitly; modulus {m} is out of range"
        );
        let mut generators: Vec<u64> = Vec::new();
        let mut orders: Vec<u64> = Vec::new();
        for (p, k) in factorize(m).expect("modulus in range").factors {
            let pk = p.pow(k);
            let rest = m / pk;
            // CRT lift: x = g mod p^k, x = 1 mod m/p^k
            let lift = |g: u64| -> u64 {
                if rest == 1 {
                    return g % m;
                }
                let inv_rest = crate::arith::invmod(rest % pk, pk).expect("coprime parts");
                let inv_pk = crate::arith::invmod(pk % rest, rest).expect("coprime parts");
                let first = g as u128 * rest as u128 % m as u128 * inv_rest as u128 % m as u128;
                let second = pk as u128 * inv_pk as u128 % m as u128;
                ((first + second) % m as u128) as u64
            };
            if p == 2 {
                match k {
                    1 => {}
                    2 => {
                        generators.push(lift(3));
                        orders.push(2);
                    }
                    _ => {
                        generators.push(lift(pk - 1));
                        orders.push(2);
                        generators.push(lift(5));
                        orders.push(pk / 4);
                    }
                }
            } else {
                generators.push(lift(primitive_root_mod_prime_power(p, k)));
                orders.push(pk / p * (p - 1));
            }
        }
        let exponent = orders.iter().fold(1u64, |acc, &o| acc.lcm(&o));
        // enumerate the group once to fill the discrete-log table
        let mut logs: Vec<Option<Vec<u32>>> = alloc::vec![None; m.max(2) as usize];
        let r = generators.len();
        let mut exps = alloc::vec![0u32; r];
        loop {
            let mut x = 1u64;
            for i in 0..r {
                for _ in 0..exps[i] {
                    x = x * generators[i] % m;
                }
            }
            if m == 1 {
                logs[0] = Some(exps.clone());
                break;
            }
            logs[(x % m) as usize] = Some(exps.clone());
            // odometer increment
            let mut i = 0;
            loop {
                if i == r {
                    break;
                }
                exps[i] += 1;
                if (exps[i] as u64) < orders[i] {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
            if i == r {
                break;
            }
        }
        UnitGroup {
            modulus: m,
            generators,
            orders,
            exponent,
            logs,
        }
    }

    pub fn phi(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn log(&self, x: u64) -> Option<&[u32]> {
        if self.modulus == 1 {
            return self.logs[0].as_deref();
        }
        self.logs[(x % self.modulus) as usize].as_deref()
    }
}

/// A Dirichlet character mod m, held as exact root-of-unity exponents: the
/// value at x is zeta_lambda to the stored exponent, lambda the group exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCharacter {
    pub modulus: u64,
    /// group exponent: common denominator of all angle numerators
    pub lambda: u64,
    /// order of the character in the dual group
    pub order: u64,
    pub is_principal: bool,
    /// images of the unit-group generators as exponents of zeta_lambda
    pub generator_images: Vec<(u64, u64)>,
    /// per-residue exponent of zeta_lambda; None on non-units
    table: Vec<Option<u64>>,
}

impl DirichletCharacter {
    /// chi(x) as a complex number (0 on non-units).
    pub fn value(&self, x: u64) -> Complex64 {
        match self.angle_numerator(x) {
            Some(k) => root_of_unity(k, self.lambda),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// The exponent k with chi(x) = zeta_lambda^k.
    pub fn angle_numerator(&self, x: u64) -> Option<u64> {
        if self.modulus == 1 {
            return Some(0);
        }
        self.table[(x % self.modulus) as usize]
    }

    /// The exact angle of chi(x) as a reduced fraction of a full turn.
    pub fn angle(&self, x: u64) -> Option<Rational> {
        self.angle_numerator(x)
            .map(|k| Rational::new(k as i64, self.lambda as i64))
    }

    pub fn conjugate(&self) -> DirichletCharacter {
        let lambda = self.lambda;
        DirichletCharacter {
            modulus: self.modulus,
            lambda,
            order: self.order,
            is_principal: self.is_principal,
            generator_images: self
                .generator_images
                .iter()
                .map(|&(g, k)| (g, (lambda - k) % lambda))
                .collect(),
            table: self
                .table
                .iter()
                .map(|v| v.map(|k| (lambda - k) % lambda))
                .collect(),
        }
    }

    /// Pointwise product with a character of the same modulus.
    pub fn compose(&self, other: &DirichletCharacter) -> DirichletCharacter {
        assert_eq!(self.modulus, other.modulus);
        let lambda = self.lambda;
        let table: Vec<Option<u64>> = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => Some((x + y) % lambda),
                _ => None,
            })
            .collect();
        let generator_images: Vec<(u64, u64)> = self
            .generator_images
            .iter()
            .zip(&other.generator_images)
            .map(|(&(g, x), &(_, y))| (g, (x + y) % lambda))
            .collect();
        let (order, is_principal) = order_from_images(lambda, &generator_images);
        DirichletCharacter {
            modulus: self.modulus,
            lambda,
            order,
            is_principal,
            generator_images,
            table,
        }
    }
}

fn order_from_images(lambda: u64, images: &[(u64, u64)]) -> (u64, bool) {
    let g = images.iter().fold(lambda, |acc, &(_, k)| acc.gcd(&k));
    (lambda / g.gcd(&lambda), images.iter().all(|&(_, k)| k == 0))
}

/// All phi(d) Dirichlet characters mod d, principal character first.
pub fn enumerate_characters(d: u64) -> Vec<DirichletCharacter> {
    let group = UnitGroup::new(d);
    let lambda = group.exponent.max(1);
    let r = group.generators.len();
    let mut chars = Vec::with_capacity(group.phi() as usize);
    let mut image_exps = alloc::vec![0u64; r];
    loop {
        // character sending generator i to zeta_{o_i}^{image_exps[i]}
        let gen_images: Vec<(u64, u64)> = (0..r)
            .map(|i| {
                (
                    group.generators[i],
                    image_exps[i] * (lambda / group.orders[i]) % lambda,
                )
            })
            .collect();
        let mut table: Vec<Option<u64>> = alloc::vec![None; d.max(2) as usize];
        if d == 1 {
            table[0] = Some(0);
        } else {
            for x in 0..d {
                if let Some(log) = group.log(x) {
                    let mut k = 0u64;
                    for i in 0..r {
                        k = (k + log[i] as u64 * gen_images[i].1) % lambda;
                    }
                    table[x as usize] = Some(k);
                }
            }
        }
        let (order, is_principal) = order_from_images(lambda, &gen_images);
        chars.push(DirichletCharacter {
            modulus: d,
            lambda,
            order,
            is_principal,
            generator_images: gen_images,
            table,
        });
        let mut i = 0;
        loop {
            if i == r {
                break;
            }
            image_exps[i] += 1;
            if image_exps[i] < group.orders[i] {
                break;
            }
            image_exps[i] = 0;
            i += 1;
        }
        if i == r {
            break;
        }
    }
    chars
}

/// The Dirichlet convolution (chi * mu)(v): multiplicative with
/// h(p^e) = chi(p^e) - chi(p^(e-1)).
pub fn h_chi(chi: &DirichletCharacter, v: u64) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for (p, e) in factorize(v).expect("v in range").factors {
        let hi = chi.value(powmod(p, e as u64, chi.modulus.max(1)));
        let lo = chi.value(powmod(p, e as u64 - 1, chi.modulus.max(1)));
        out *= hi - lo;
        if out.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// A truncated Euler product with an error wedge validated by doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerProductValue {
    pub value: Complex64,
    pub prime_bound: u64,
    pub error_estimate: f64,
}

/// The Pappalardi constant A_chi as a truncated Euler product over the
/// primes with chi(p) != 0, in the normalization where the trivial
/// character gives the Artin constant: each local factor carries the Artin
/// local (1 - 1/(p(p-1))) times (1 + (chi(p)-1) p / ((p^2-chi(p)) (p-1))),
/// so the principal character mod d gives A / prod_{p|d} (1 - 1/(p(p-1))).
pub fn a_chi(chi: &DirichletCharacter, prime_bound: u64) -> EulerProductValue {
    let mut value = Complex64::new(1.0, 0.0);
    for_each_prime_in_range(2, prime_bound + 1, |p| {
        let c = chi.value(p);
        if c.norm_sqr() == 0.0 {
            return;
        }
        let pf = p as f64;
        let artin_local = 1.0 - 1.0 / (pf * (pf - 1.0));
        let chi_local = Complex64::new(1.0, 0.0) + (c - 1.0) * pf / ((pf * pf - c) * (pf - 1.0));
        value *= chi_local * artin_local;
    });
    // |log factor| <= 3.1/p^2 for p >= 2; sum_{p > P} p^-2 < 1/P
    EulerProductValue {
        value,
        prime_bound,
        error_estimate: 4.0 / prime_bound as f64,
    }
}

/// The Artin constant: A_chi for the trivial character.
pub fn artin_constant(prime_bound: u64) -> f64 {
    let trivial = &enumerate_characters(1)[0];
    a_chi(trivial, prime_bound).value.re
}

/// delta_g^(0)(a, d) evaluated through the character-sum identity: classes
/// t = t1 mod d are resolved by characters mod d/(t1,d), and the inner sums
/// run over chi(v_d) h_chi(v1) / [K_{d (t1,d) v, (t1,d) alpha v} : Q].
///
/// With the inner v-sums truncated at floor(v_limit / (alpha (t1,d))) this
/// recombines exactly the pairs n t <= v_limit of the direct series, so it
/// can be compared to the Ball-truncated evaluator at machine precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterFormEstimate {
    pub estimate: DensityEstimate,
    pub imag_part: f64,
}

pub fn delta0_character_form(
    base: &DecomposedBase,
    a: u64,
    d: u64,
    v_limit: u64,
    ctx: &DensityContext,
) -> CharacterFormEstimate {
    let a = a % d;
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let mut char_cache: alloc::collections::BTreeMap<u64, Vec<DirichletCharacter>> =
        alloc::collections::BTreeMap::new();
    let gcd_ad = if a == 0 { d } else { a.gcd(&d) };
    let alphas: Vec<(u64, i32)> = factorize(gcd_ad)
        .expect("modulus in range")
        .squarefree_divisors();
    let mut t_factors: Vec<(u64, u32)> = Vec::new();
    let mut v_factors: Vec<(u64, u32)> = Vec::new();
    for t1 in 1..=d {
        if (1 + t1 * a).gcd(&d) != 1 {
            continue;
        }
        let tau = t1.gcd(&d);
        let beta = d / tau;
        let chars = char_cache
            .entry(beta)
            .or_insert_with(|| enumerate_characters(beta));
        let inv_phi_beta = 1.0 / euler_phi(beta) as f64;
        let dtau = d * tau;
        ctx.spf().factor_into(dtau, &mut t_factors);
        let dtau_primes: Vec<u64> = t_factors.iter().map(|&(p, _)| p).collect();
        for chi in chars.iter() {
            let weight = chi.value(t1 / tau).conj() * inv_phi_beta;
            if weight.norm_sqr() == 0.0 {
                continue;
            }
            for &(alpha, mu_alpha) in &alphas {
                let cap = v_limit / (alpha * tau);
                for v in 1..=cap {
                    let vd = d_part(v, d);
                    let chi_vd = chi.value(vd % chi.modulus.max(1));
                    if chi_vd.norm_sqr() == 0.0 {
                        continue;
                    }
                    // h_chi(v1) by the spf table
                    let mut hv = Complex64::new(1.0, 0.0);
                    ctx.spf().factor_into(v / vd, &mut v_factors);
                    for &(p, e) in &v_factors {
                        let hi = chi.value(powmod(p, e as u64, chi.modulus.max(1)));
                        let lo = chi.value(powmod(p, e as u64 - 1, chi.modulus.max(1)));
                        hv *= hi - lo;
                        if hv.norm_sqr() == 0.0 {
                            break;
                        }
                    }
                    if hv.norm_sqr() == 0.0 {
                        continue;
                    }
                    let s = dtau * v;
                    let mut phi = s;
                    ctx.spf().factor_into(v, &mut v_factors);
                    let mut vi = 0;
                    for &p in &dtau_primes {
                        while vi < v_factors.len() && v_factors[vi].0 < p {
                            let q = v_factors[vi].0;
                            phi = phi / q * (q - 1);
                            vi += 1;
                        }
                        if vi < v_factors.len() && v_factors[vi].0 == p {
                            vi += 1;
                        }
                        phi = phi / p * (p - 1);
                    }
                    while vi < v_factors.len() {
                        let q = v_factors[vi].0;
                        phi = phi / q * (q - 1);
                        vi += 1;
                    }
                    let deg = kummer_degree_with_phi(base, s, phi, tau * alpha * v);
                    let term = weight * chi_vd * hv * (mu_alpha as f64 / deg as f64);
                    re.add(term.re);
                    im.add(term.im);
                }
            }
        }
    }
    let trunc = Truncation::Ball { v_max: v_limit };
    CharacterFormEstimate {
        estimate: DensityEstimate {
            value: re.value(),
            tail_bound: crate::densities::series_tail(base.h, trunc),
            truncation: trunc,
            method: Method::CharacterForm,
        },
        imag_part: im.value(),
    }
}

/// Per-class partial sums of the average index density, tabulated once by
/// the multiplicative form so that every (a, d) with d | modulus can be
/// served from one sieve pass.
#[derive(Debug, Clone)]
pub struct RhoAvgTable {
    pub modulus: u64,
    pub class_sums: Vec<f64>,
    pub tail: f64,
    pub artin: f64,
}

pub fn rho_avg_table(modulus: u64, t_limit: u64, artin: f64) -> RhoAvgTable {
    let (class_sums, tail) =
        crate::densities::rho_avg_multiplicative_profile(modulus, t_limit, artin);
    RhoAvgTable {
        modulus,
        class_sums,
        tail,
        artin,
    }
}

impl RhoAvgTable {
    /// rho(a, d) for d | modulus.
    pub fn rho(&self, a: u64, d: u64) -> f64 {
        assert!(self.modulus % d == 0);
        let a = a % d;
        self.class_sums
            .iter()
            .enumerate()
            .filter(|(r, _)| *r as u64 % d == a)
            .map(|(_, &v)| v)
            .sum()
    }
}

/// Continued-fraction rational reconstruction with bounded denominator.
fn snap_to_rational(x: f64, max_den: u64) -> (i64, u64) {
    let neg = x < 0.0;
    let mut x = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1u64, 1i64, 0u64);
    for _ in 0..64 {
        let a = crate::fmath::floor(x);
        let p2 = a as i64 * p1 + p0;
        let q2 = a as u64 * q1 + q0;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - a;
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    (if neg { -p1 } else { p1 }, q1)
}

/// One coefficient of the decomposition rho(alpha b, d) =
/// sum_chi conj(chi(b)) z_chi A_chi over characters mod d1 = d/(a, d).
///
/// In the Artin-normalized A_chi convention the products z_chi * A (A the
/// Artin constant) are cyclotomic rationals; `recognized` holds their
/// reconstructed coordinates in the basis {1, zeta_order}.
#[derive(Debug, Clone)]
pub struct FittedCoefficient {
    pub order: u64,
    pub coefficient: Complex64,
    pub recognized: ((i64, u64), (i64, u64)),
    pub residual: f64,
}

/// Numerical verification of the decomposition of rho(a, d) over the A_chi
/// basis at level d1 = d/(a, d): solve for the coefficients by character
/// orthogonality, then certify that each lies in Q(zeta_{o_chi}) by rational
/// reconstruction of its coordinates (exact for phi(o_chi) <= 2, which
/// covers every d1 <= 8).
#[derive(Debug, Clone)]
pub struct DecompositionFit {
    pub a: u64,
    pub d: u64,
    pub d1: u64,
    pub coefficients: Vec<FittedCoefficient>,
    /// max over characters of recognition distance plus reconstruction error
    pub residual: f64,
}

pub fn decomposition_fit(
    table: &RhoAvgTable,
    a: u64,
    d: u64,
    prime_bound: u64,
) -> Result<DecompositionFit, CharacterError> {
    if table.modulus % d != 0 {
        return Err(CharacterError::IncompatibleModulus {
            d,
            table: table.modulus,
        });
    }
    let a = a % d;
    let alpha = if a == 0 { d } else { a.gcd(&d) };
    let d1 = d / alpha;
    let chars = enumerate_characters(d1);
    let units: Vec<u64> = (0..d1.max(1))
        .filter(|b| b.gcd(&d1) == 1 || d1 == 1)
        .collect();
    let values: Vec<f64> = units.iter().map(|&b| table.rho(alpha * b % d, d)).collect();
    let phi_d1 = units.len() as f64;
    let constants: Vec<Complex64> = chars.iter().map(|chi| a_chi(chi, prime_bound).value).collect();

    let mut coefficients = Vec::with_capacity(chars.len());
    let mut worst = 0.0f64;
    for (chi, &aval) in chars.iter().zip(&constants) {
        let mut s = Complex64::new(0.0, 0.0);
        for (&b, &v) in units.iter().zip(&values) {
            s += chi.value(b.max(1)) * v;
        }
        let z = s / (phi_d1 * aval);
        // z times the Artin constant lies in Q(zeta_{o_chi}); recognize its
        // coordinates in the basis {1, zeta}, exact when phi(o_chi) <= 2
        let xi = z * table.artin;
        let (x, y) = if chi.order <= 2 {
            (xi.re, 0.0)
        } else {
            let zeta = root_of_unity(1, chi.order);
            let y = xi.im / zeta.im;
            (xi.re - y * zeta.re, y)
        };
        let rx = snap_to_rational(x, 20_000);
        let ry = snap_to_rational(y, 20_000);
        let back = {
            let zeta = root_of_unity(1, chi.order.max(1));
            Complex64::new(rx.0 as f64 / rx.1 as f64, 0.0)
                + zeta * (ry.0 as f64 / ry.1 as f64)
        };
        let mut residual = (xi - back).norm();
        if chi.order <= 2 {
            residual = residual.max(xi.im.abs());
        }
        worst = worst.max(residual);
        coefficients.push(FittedCoefficient {
            order: chi.order,
            coefficient: z,
            recognized: (rx, ry),
            residual,
        });
    }
    // reconstruction: the fitted combination must reproduce the values
    for (&b, &v) in units.iter().zip(&values) {
        let mut back = Complex64::new(0.0, 0.0);
        for ((chi, fc), &aval) in chars.iter().zip(&coefficients).zip(&constants) {
            back += chi.value(b.max(1)).conj() * fc.coefficient * aval;
        }
        worst = worst.max((back.re - v).abs()).max(back.im.abs());
    }
    Ok(DecompositionFit {
        a,
        d,
        d1,
        coefficients,
        residual: worst,
    })
}
