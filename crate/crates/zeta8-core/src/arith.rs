//! Multiplicative arithmetic: divisor-count sieves, Mobius/totient/omega
//! tables, Ramanujan sums, and the local factors `g_k` and `G_k` used by the
//! additive-divisor main term and the Euler-product layer.
//!
//! `g_k(z, n)` is the multiplicative correction factor in
//! `sum_m tau_k(nm) m^{-z} = g_k(z, n) zeta(z)^k`, and `G_k(z, q)` is the
//! Mobius-smoothed variant
//! `G_k(z, q) = sum_{d|q} mu(d) d^z/phi(d) sum_{e|d} mu(e) e^{-z} g_k(z, qe/d)`
//! that pairs with Ramanujan sums in the main-term q-series.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::powc;

/// Hard cap on sieve size (entries, not bytes).
pub const MAX_SIEVE_LIMIT: usize = 1 << 31;

#[derive(Debug, Clone, PartialEq)]
pub enum ArithError {
    /// Requested sieve limit exceeds the supported capacity.
    Capacity { limit: usize },
    /// Argument outside the operation's domain, e.g. `Re z <= 0` for `g_k`.
    Domain { what: &'static str },
    /// A truncated series failed to reach the stopping tolerance.
    NonConvergence { what: &'static str },
    /// A `tau_k` table for the requested `k` was not built.
    MissingTable { k: u32 },
}

impl fmt::Display for ArithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithError::Capacity { limit } => write!(f, "sieve limit {limit} exceeds capacity"),
            ArithError::Domain { what } => write!(f, "domain error: {what}"),
            ArithError::NonConvergence { what } => write!(f, "series did not converge: {what}"),
            ArithError::MissingTable { k } => write!(f, "tau_{k} table not built"),
        }
    }
}

impl core::error::Error for ArithError {}

/// Sieved tables of multiplicative functions up to a fixed limit.
///
/// Built once, then immutable; all lookups are O(1).
pub struct ArithTables {
    limit: usize,
    tau: BTreeMap<u32, Vec<u64>>,
    mu: Vec<i8>,
    phi: Vec<u64>,
    omega: Vec<u8>,
    spf: Vec<u32>,
}

impl ArithTables {
    /// Largest `n` the tables cover.
    pub fn limit(&self) -> usize {
        self.limit
    }

    /// `tau_k(n)` table for one of the `ks` passed to [`build_tables`].
    pub fn tau(&self, k: u32) -> Result<&[u64], ArithError> {
        self.tau
            .get(&k)
            .map(|v| v.as_slice())
            .ok_or(ArithError::MissingTable { k })
    }

    /// `tau_k(n)` for a single `n <= limit`.
    pub fn tau_k(&self, k: u32, n: usize) -> Result<u64, ArithError> {
        Ok(self.tau(k)?[n])
    }

    /// Mobius function table; `mu[0]` is a filler zero.
    pub fn mu(&self) -> &[i8] {
        &self.mu
    }

    /// Euler totient table; `phi[0]` is a filler zero.
    pub fn phi(&self) -> &[u64] {
        &self.phi
    }

    /// Number-of-distinct-prime-factors table.
    pub fn omega(&self) -> &[u8] {
        &self.omega
    }

    /// Smallest-prime-factor table; `spf[1] = 1`.
    pub fn spf(&self) -> &[u32] {
        &self.spf
    }

    /// Factorization of `n <= limit` via the smallest-prime-factor walk.
    pub fn factorize(&self, n: u64) -> Vec<(u64, u32)> {
        debug_assert!(n as usize <= self.limit && n >= 1);
        let mut m = n as usize;
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        out
    }
}

/// Builds all tables up to `limit` with `tau_k` for each `k` in `ks`.
pub fn build_tables(limit: usize, ks: &[u32]) -> Result<ArithTables, ArithError> {
    if limit < 2 || limit > MAX_SIEVE_LIMIT {
        return Err(ArithError::Capacity { limit });
    }
    let n = limit + 1;
    let mut spf = vec![0u32; n];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if p > spf[i] || ip >= n {
                break;
            }
            spf[ip] = p;
        }
    }
    spf[1] = 1;

    // cnt[m] = multiplicity of spf[m] in m; rest[m] = m with that prime removed.
    let mut cnt = vec![0u8; n];
    let mut rest = vec![0u32; n];
    rest[1] = 1;
    for m in 2..n {
        let p = spf[m] as usize;
        let q = m / p;
        if spf[q] as usize == p {
            cnt[m] = cnt[q] + 1;
            rest[m] = rest[q];
        } else {
            cnt[m] = 1;
            rest[m] = q as u32;
        }
    }

    let mut mu = vec![0i8; n];
    let mut phi = vec![0u64; n];
    let mut omega = vec![0u8; n];
    mu[1] = 1;
    phi[1] = 1;
    for m in 2..n {
        let r = rest[m] as usize;
        let e = cnt[m] as u32;
        let p = spf[m] as u64;
        mu[m] = if e >= 2 { 0 } else { -mu[r] };
        phi[m] = phi[r] * (p - 1) * p.pow(e - 1);
        omega[m] = omega[r] + 1;
    }

    let mut tau = BTreeMap::new();
    for &k in ks {
        if k == 0 {
            return Err(ArithError::Domain { what: "tau_0" });
        }
        let mut t = vec![0u64; n];
        t[1] = 1;
        for m in 2..n {
            t[m] = t[rest[m] as usize] * tau_prime_power(k, cnt[m] as u32);
        }
        tau.insert(k, t);
    }

    Ok(ArithTables {
        limit,
        tau,
        mu,
        phi,
        omega,
        spf,
    })
}

/// Primes up to and including `limit`, ascending.
pub fn primes_up_to(limit: usize) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for n in 2..=limit {
        if !composite[n] {
            out.push(n as u64);
            let mut m = n * n;
            while m <= limit {
                composite[m] = true;
                m += n;
            }
        }
    }
    out
}

/// `tau_k(p^a) = C(a+k-1, k-1)`, independent of the prime.
pub fn tau_prime_power(k: u32, a: u32) -> u64 {
    binomial(a as u64 + k as u64 - 1, k as u64 - 1)
}

/// Exact binomial coefficient; caller keeps arguments in u64 range.
pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut num = 1u64;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// `tau_k(n)` from a factorization.
pub fn tau_k_factored(k: u32, factors: &[(u64, u32)]) -> u64 {
    factors
        .iter()
        .map(|&(_, e)| tau_prime_power(k, e))
        .product()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64.
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
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'bases: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn brent_rho(n: u64) -> u64 {
    // n must be odd composite, not a prime power of a tiny prime.
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factorization by trial division with a Pollard-rho fallback,
/// returned as ascending `(p, multiplicity)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1);
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in [2u64, 3, 5] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    let mut d = 7u64;
    let inc = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0usize;
    while d <= 100_000 && d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += inc[i];
        i = (i + 1) & 7;
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut big: Vec<u64> = Vec::new();
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime(m) {
                big.push(m);
            } else {
                let d = brent_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
        big.sort_unstable();
        for p in big {
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some((_, e)) => *e += 1,
                None => out.push((p, 1)),
            }
        }
    }
    out.sort_unstable_by_key(|&(p, _)| p);
    out
}

/// Mobius function from a factorization.
pub fn mobius_factored(factors: &[(u64, u32)]) -> i64 {
    if factors.iter().any(|&(_, e)| e >= 2) {
        0
    } else if factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler totient from a factorization.
pub fn phi_factored(factors: &[(u64, u32)]) -> u64 {
    factors
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

/// All divisors of the factored integer, unsorted.
pub fn divisors_factored(factors: &[(u64, u32)]) -> Vec<u64> {
    let mut out = vec![1u64];
    for &(p, e) in factors {
        let prev = out.len();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            for i in 0..prev {
                out.push(out[i] * pe);
            }
        }
    }
    out
}

/// Ramanujan sum `c_q(r) = sum_{d | gcd(q, |r|)} d mu(q/d)`, with
/// `gcd(q, 0) = q`.
pub fn ramanujan_sum(q: u64, r: i64) -> i64 {
    assert!(q >= 1);
    if q == 1 {
        return 1;
    }
    let fq = factorize(q);
    let rr = r.unsigned_abs();
    let g = if rr == 0 { q } else { gcd(q, rr) };
    // Walk divisors d of g with the exponent vector relative to fq, so that
    // mu(q/d) is a per-prime exponent comparison.
    let fg: Vec<(u64, u32)> = fq
        .iter()
        .map(|&(p, e)| {
            let mut v = 0u32;
            let mut m = g;
            while m % p == 0 {
                m /= p;
                v += 1;
            }
            (p, v.min(e))
        })
        .collect();
    let mut acc = 0i64;
    let mut exps = vec![0u32; fg.len()];
    loop {
        let mut d = 1i64;
        let mut mu = 1i64;
        for (i, &(p, _)) in fg.iter().enumerate() {
            let diff = fq[i].1 - exps[i];
            if diff >= 2 {
                mu = 0;
                break;
            }
            if diff == 1 {
                mu = -mu;
            }
            d *= (p as i64).pow(exps[i]);
        }
        acc += mu * d;
        // next exponent vector
        let mut i = 0;
        loop {
            if i == fg.len() {
                return acc;
            }
            if exps[i] < fg[i].1 {
                exps[i] += 1;
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// Prime power with evaluation point: carries `g_k`/`G_k` arguments.
#[derive(Debug, Clone, Copy)]
pub struct PrimePowerArg {
    pub p: u64,
    pub j: u32,
    pub z: Complex64,
}

/// The cubic polynomial `Q_j(x) = 1 - 3j/(j+1) x + 3j/(j+2) x^2 - j/(j+3) x^3`
/// with `Q_0 = 1`; satisfies `Q_j(x) = j x^{-j} int_0^x t^{j-1}(1-t)^3 dt`.
pub fn q_poly(j: u32, x: Complex64) -> Complex64 {
    if j == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let j = j as f64;
    let one = Complex64::new(1.0, 0.0);
    one - x * (3.0 * j / (j + 1.0)) + x * x * (3.0 * j / (j + 2.0)) - x * x * x * (j / (j + 3.0))
}

const GK_MIN_TERMS: usize = 40;
const GK_MAX_TERMS: usize = 20_000;
const GK_REL_TOL: f64 = 1e-16;

/// `g_k(z, p^j)` as the ratio of the shifted to the plain tau_k Dirichlet
/// series at p: `(sum_i tau_k(p^{i+j}) p^{-iz}) / (sum_i tau_k(p^i) p^{-iz})`.
///
/// Requires `Re z > 0`; both series are summed until the next term falls below
/// `1e-16` of the accumulated sum (at least 40 terms).
pub fn gk_prime_power(k: u32, arg: &PrimePowerArg) -> Result<Complex64, ArithError> {
    if arg.z.re <= 0.0 {
        return Err(ArithError::Domain { what: "g_k needs Re z > 0" });
    }
    if arg.j == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let x = powc(arg.p as f64, -arg.z);
    let mut xi = Complex64::new(1.0, 0.0);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    // tau_k(p^i) and tau_k(p^{i+j}) advanced by the binomial ratio recurrence.
    let km1 = (k - 1) as f64;
    let mut t_den = 1.0f64;
    let mut t_num = tau_prime_power(k, arg.j) as f64;
    for i in 0..GK_MAX_TERMS {
        let term_n = xi * t_num;
        let term_d = xi * t_den;
        num += term_n;
        den += term_d;
        if i >= GK_MIN_TERMS
            && term_n.norm() < GK_REL_TOL * num.norm()
            && term_d.norm() < GK_REL_TOL * den.norm()
        {
            return Ok(num / den);
        }
        let i = i as f64;
        t_den *= (i + 1.0 + km1) / (i + 1.0);
        let ij = i + arg.j as f64;
        t_num *= (ij + 1.0 + km1) / (ij + 1.0);
        xi *= x;
    }
    Err(ArithError::NonConvergence { what: "g_k series" })
}

/// `g_4(z, p^j) = tau_4(p^j) Q_j(p^{-z})`, the closed form of the series ratio.
pub fn g4_prime_power_closed(arg: &PrimePowerArg) -> Complex64 {
    let x = powc(arg.p as f64, -arg.z);
    q_poly(arg.j, x) * tau_prime_power(4, arg.j) as f64
}

/// `g_k(z, n)` for factored `n`, by multiplicativity.
pub fn gk_factored(k: u32, z: Complex64, factors: &[(u64, u32)]) -> Result<Complex64, ArithError> {
    let mut acc = Complex64::new(1.0, 0.0);
    for &(p, j) in factors {
        acc *= gk_prime_power(k, &PrimePowerArg { p, j, z })?;
    }
    Ok(acc)
}

/// `G_k(z, q)` by the literal double divisor sum
/// `sum_{d|q} mu(d) d^z/phi(d) sum_{e|d} mu(e) e^{-z} g_k(z, qe/d)`.
///
/// Quadratic in the number of squarefree divisors; intended as the reference
/// route. Use [`big_gk_factored`] / [`big_g4_factored`] in hot loops.
pub fn big_gk_divisor_sum(k: u32, q: u64, z: Complex64) -> Result<Complex64, ArithError> {
    let fq = factorize(q);
    let rad: Vec<(u64, u32)> = fq.iter().map(|&(p, _)| (p, 1)).collect();
    let squarefree = divisors_factored(&rad);
    let mut acc = Complex64::new(0.0, 0.0);
    for &d in &squarefree {
        let fd = factorize(d);
        let mu_d = mobius_factored(&fd) as f64;
        let phi_d = phi_factored(&fd) as f64;
        let mut inner = Complex64::new(0.0, 0.0);
        for &e in &divisors_factored(&fd) {
            let mu_e = mobius_factored(&factorize(e)) as f64;
            let ne_d = q / d * e;
            inner += powc(e as f64, -z) * mu_e * gk_factored(k, z, &factorize(ne_d))?;
        }
        acc += powc(d as f64, z) * (mu_d / phi_d) * inner;
    }
    Ok(acc)
}

/// `G_k(z, p^j) = (p/(p-1)) g_k(z, p^j) - (p^z/(p-1)) g_k(z, p^{j-1})`,
/// the prime-power reduction of the double divisor sum.
pub fn big_gk_prime_power(k: u32, arg: &PrimePowerArg) -> Result<Complex64, ArithError> {
    if arg.j == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let p = arg.p as f64;
    let lead = gk_prime_power(k, arg)?;
    let lower = gk_prime_power(
        k,
        &PrimePowerArg { p: arg.p, j: arg.j - 1, z: arg.z },
    )?;
    Ok((lead * p - lower * powc(p, arg.z)) / (p - 1.0))
}

/// `G_k(z, q)` for factored `q`, multiplicative over prime powers.
pub fn big_gk_factored(
    k: u32,
    z: Complex64,
    factors: &[(u64, u32)],
) -> Result<Complex64, ArithError> {
    let mut acc = Complex64::new(1.0, 0.0);
    for &(p, j) in factors {
        acc *= big_gk_prime_power(k, &PrimePowerArg { p, j, z })?;
    }
    Ok(acc)
}

/// Closed form `G_4(z, p^j) = (p/(p-1)) [tau_4(p^j) Q_j(p^{-z})
/// - p^{z-1} tau_4(p^{j-1}) Q_{j-1}(p^{-z})]`.
pub fn big_g4_prime_power(arg: &PrimePowerArg) -> Complex64 {
    if arg.j == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let p = arg.p as f64;
    let x = powc(p, -arg.z);
    let lead = q_poly(arg.j, x) * tau_prime_power(4, arg.j) as f64;
    let lower = q_poly(arg.j - 1, x) * tau_prime_power(4, arg.j - 1) as f64;
    (lead - lower * powc(p, arg.z - 1.0)) * (p / (p - 1.0))
}

/// `G_4(z, q)` for factored `q`, all prime powers via the closed form.
pub fn big_g4_factored(z: Complex64, factors: &[(u64, u32)]) -> Complex64 {
    factors
        .iter()
        .map(|&(p, j)| big_g4_prime_power(&PrimePowerArg { p, j, z }))
        .product()
}

/// Product-form bound `|G_4(z,q)| <= 2^omega(q) tau_4(q)
/// prod_{p|q} (1+p^{-Re z})^3 (1+p^{Re z - 1})`.
pub fn big_g4_bound_product(re_z: f64, factors: &[(u64, u32)]) -> f64 {
    let mut b = 1.0f64;
    for &(p, j) in factors {
        let p = p as f64;
        let l = 1.0 + p.powf(-re_z);
        b *= 2.0 * tau_prime_power(4, j) as f64 * l * l * l * (1.0 + p.powf(re_z - 1.0));
    }
    b
}

/// Power-form bound `|G_4(z,q)| <= 32^omega(q) tau_4(q) q^rho` valid for
/// `1 - rho <= Re z <= 1 + rho`.
pub fn big_g4_bound_power(q: u64, factors: &[(u64, u32)], rho: f64) -> f64 {
    let omega = factors.len() as u32;
    32f64.powi(omega as i32) * tau_k_factored(4, factors) as f64 * (q as f64).powf(rho)
}
