//! Euler products over primes: the moment constants `g_k` and `a_k`, the
//! local-factor function `Z_1(s)`, and the doubly shifted correlation series
//! `H(u1,u2,u3,s) = sum_{r,q} c_q(r) G_4(1+u1,q) G_4(1+u2,q) q^{-2-u3} r^{-(2s-u3)}`
//! in both a literal truncated form and a factored (zeta-quotient times local
//! product) form, which serve as mutual cross-checks.

use alloc::collections::BTreeMap;
use alloc::vec;
use core::fmt;

use num_complex::Complex64;
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::arith::{
    self, big_g4_prime_power, primes_up_to, tau_prime_power, ArithError, ArithTables, PrimePowerArg,
};
use crate::numerics::{cauchy_derivative, factorial_rat, ContourCircle, NumError, Rat};
use crate::powc;
use crate::special::{self, SpecialError};

#[derive(Debug, Clone, PartialEq)]
pub enum EulerError {
    Domain { what: &'static str },
    Pole { where_: &'static str },
    /// The certified truncation tail exceeds the requested target tolerance.
    Precision { tail: f64, target: f64 },
    NonConvergence { what: &'static str },
    Arith(ArithError),
    Special(SpecialError),
    Num(NumError),
}

impl fmt::Display for EulerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EulerError::Domain { what } => write!(f, "domain error: {what}"),
            EulerError::Pole { where_ } => write!(f, "pole: {where_}"),
            EulerError::Precision { tail, target } => {
                write!(f, "tail bound {tail:.3e} exceeds target tolerance {target:.3e}")
            }
            EulerError::NonConvergence { what } => write!(f, "no convergence: {what}"),
            EulerError::Arith(e) => write!(f, "{e}"),
            EulerError::Special(e) => write!(f, "{e}"),
            EulerError::Num(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EulerError {}

impl From<ArithError> for EulerError {
    fn from(e: ArithError) -> Self {
        EulerError::Arith(e)
    }
}

impl From<SpecialError> for EulerError {
    fn from(e: SpecialError) -> Self {
        EulerError::Special(e)
    }
}

impl From<NumError> for EulerError {
    fn from(e: NumError) -> Self {
        EulerError::Num(e)
    }
}

/// Truncation policy for products over primes: cut at `prime_cutoff` and
/// certify the remainder through the model `|log local(p)| <= c p^{-beta}`
/// summed over the omitted primes.
#[derive(Debug, Clone, Copy)]
pub struct EulerProductSpec {
    pub prime_cutoff: u64,
    /// Coefficient `c` of the tail model.
    pub tail_coeff: f64,
    /// Exponent `beta > 1` of the tail model.
    pub tail_exponent: f64,
    /// Certified tails above this trigger a precision error.
    pub target_tolerance: f64,
}

impl Default for EulerProductSpec {
    fn default() -> Self {
        EulerProductSpec::for_a_constant(4)
    }
}

impl EulerProductSpec {
    /// Policy for `a_constant(k)`: the local factor is
    /// `1 - (k(k-1)/2)^2 p^{-2} + O(p^{-3})`, so the model coefficient is
    /// that second-order coefficient with a 30% slack.
    pub fn for_a_constant(k: u32) -> Self {
        let kk = (k * (k - 1)) as f64 / 2.0;
        EulerProductSpec {
            prime_cutoff: 1_000_000,
            tail_coeff: 1.3 * kk * kk,
            tail_exponent: 2.0,
            target_tolerance: 1e-3,
        }
    }

    fn tail_bound(&self) -> f64 {
        prime_tail_bound(self.tail_coeff, self.tail_exponent, self.prime_cutoff as f64)
    }
}

/// Upper bound for `sum_{p > P} c p^{-beta}` over primes: partial summation
/// against `pi(t) <= 1.3 t/ln t` gives `1.3 c beta P^{1-beta} / ((beta-1) ln P)`.
pub fn prime_tail_bound(c: f64, beta: f64, p_cutoff: f64) -> f64 {
    if beta <= 1.0 + 1e-9 || p_cutoff < 17.0 {
        return f64::INFINITY;
    }
    1.3 * c * beta * p_cutoff.powf(1.0 - beta) / ((beta - 1.0) * p_cutoff.ln())
}

/// A truncated Euler product value together with a certified bound on the
/// omitted primes' contribution (relative, since local factors are near 1).
#[derive(Debug, Clone, Copy)]
pub struct ValueWithTail {
    pub value: f64,
    pub tail_bound: f64,
}

/// A complex product value with its certified relative tail bound.
#[derive(Debug, Clone, Copy)]
pub struct ComplexWithTail {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `g_k = (k^2)! prod_{j=0}^{k-1} j!/(k+j)!` as an exact rational.
/// Defined for 1 <= k <= 8; g_1 = 1, g_2 = 2, g_3 = 42, g_4 = 24024.
pub fn g_constant(k: u32) -> Result<Rat, EulerError> {
    if k == 0 || k > 8 {
        return Err(EulerError::Domain { what: "g_constant needs 1 <= k <= 8" });
    }
    let k = k as u64;
    let mut g = factorial_rat(k * k);
    for j in 0..k {
        g *= factorial_rat(j) / factorial_rat(k + j);
    }
    Ok(g)
}

/// Local factor of `a_k` at `p`:
/// `(1-1/p)^{k^2} sum_{m>=0} binom(k+m-1, m)^2 p^{-m}`.
pub fn a_local_factor(k: u32, p: u64) -> f64 {
    let x = 1.0 / p as f64;
    let mut term = 1.0f64;
    let mut sum = 0.0f64;
    let kf = k as f64;
    for m in 0..10_000 {
        sum += term;
        let m = m as f64;
        let ratio = (kf + m) / (m + 1.0);
        term *= ratio * ratio * x;
        if m >= 4.0 && term < 1e-18 * sum {
            break;
        }
    }
    (1.0 - x).powi((k * k) as i32) * sum
}

/// Closed form of `sum_m binom(m+3,3)^2 x^m = (1+9x+9x^2+x^3)/(1-x)^7`,
/// the inner series of the `k = 4` local factor.
pub fn tau4_sq_generating(x: f64) -> f64 {
    (1.0 + 9.0 * x + 9.0 * x * x + x * x * x) / (1.0 - x).powi(7)
}

/// `a_k = prod_p (1-1/p)^{k^2} sum_m binom(k+m-1,m)^2 p^{-m}` truncated at
/// the spec's prime cutoff, with the certified tail attached.
pub fn a_constant(k: u32, spec: &EulerProductSpec) -> Result<ValueWithTail, EulerError> {
    if k == 0 || k > 8 {
        return Err(EulerError::Domain { what: "a_constant needs 1 <= k <= 8" });
    }
    let tail = spec.tail_bound();
    if !(tail <= spec.target_tolerance) {
        return Err(EulerError::Precision { tail, target: spec.target_tolerance });
    }
    let mut product = 1.0f64;
    for p in primes_up_to(spec.prime_cutoff as usize) {
        product *= a_local_factor(k, p);
    }
    Ok(ValueWithTail { value: product, tail_bound: tail })
}

/// Local factor of the `G_4` route to `a_4` at `p`:
/// `(1-1/p)^9 (1 + sum_{j=1..j_max} G_4(1,p^j)^2 (1-1/p) p^{-j})`,
/// with an early stop once terms fall below 1e-18 of the sum.
pub fn a4_local_via_g4(p: u64, j_max: u32) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let pf = p as f64;
    let mut sum = 1.0f64;
    for j in 1..=j_max {
        let g = big_g4_prime_power(&PrimePowerArg { p, j, z: one }).re;
        let term = g * g * (1.0 - 1.0 / pf) * pf.powi(-(j as i32));
        sum += term;
        if j >= 3 && term < 1e-18 * sum {
            break;
        }
    }
    (1.0 - 1.0 / pf).powi(9) * sum
}

/// `a_4` through the alternative route
/// `prod_p (1-1/p)^9 (1 + sum_j G_4(1,p^j)^2 (1-1/p) p^{-j})`.
pub fn a4_via_g4(spec: &EulerProductSpec) -> Result<ValueWithTail, EulerError> {
    let tail = spec.tail_bound();
    if !(tail <= spec.target_tolerance) {
        return Err(EulerError::Precision { tail, target: spec.target_tolerance });
    }
    let mut product = 1.0f64;
    for p in primes_up_to(spec.prime_cutoff as usize) {
        product *= a4_local_via_g4(p, 400);
    }
    Ok(ValueWithTail { value: product, tail_bound: tail })
}

/// Convergence margin: the series below need `Re s > -1/4`; evaluation is
/// restricted to `Re s >= -1/4 + 0.01`.
pub const RE_S_MIN: f64 = -0.24;

/// `Z_1(s) = prod_p (1-p^{-1-2s})^{16} sum_m tau_4(p^m)^2 p^{-m(1+2s)}`,
/// truncated over primes up to `prime_cutoff`. `Z_1(0) = a_4`, and
/// `sum_m tau_4(m)^2 m^{-1-2s} = zeta(1+2s)^{16} Z_1(s)`.
pub fn z1(s: Complex64, prime_cutoff: u64) -> Result<ComplexWithTail, EulerError> {
    if s.re < RE_S_MIN {
        return Err(EulerError::Domain { what: "Z_1 needs Re s >= -1/4 + 0.01" });
    }
    let mut product = Complex64::new(1.0, 0.0);
    for p in primes_up_to(prime_cutoff as usize) {
        let x = powc(p as f64, -(Complex64::new(1.0, 0.0) + 2.0 * s));
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut m = 0u32;
        loop {
            sum += term;
            let mf = m as f64;
            let ratio = (mf + 4.0) / (mf + 1.0);
            term *= ratio * ratio * x;
            m += 1;
            if m >= 8 && term.norm() < 1e-17 * sum.norm() {
                break;
            }
            if m > 2000 {
                return Err(EulerError::NonConvergence { what: "Z_1 local series" });
            }
        }
        let one = Complex64::new(1.0, 0.0);
        product *= (one - x).powi(16) * sum;
    }
    // Local factors are 1 - 36 p^{-2-4s} + O(p^{-3-6s}).
    let tail = prime_tail_bound(45.0, 2.0 + 4.0 * s.re, prime_cutoff as f64);
    Ok(ComplexWithTail { value: product, tail_bound: tail })
}

/// Shift tuple for the correlation series: three shifts `u_i` with
/// `|u_i| < delta' < 1/5` and the series variable `s`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftParams {
    pub u1: Complex64,
    pub u2: Complex64,
    pub u3: Complex64,
    pub s: Complex64,
    pub delta_prime: f64,
}

impl ShiftParams {
    pub fn new(
        u1: Complex64,
        u2: Complex64,
        u3: Complex64,
        s: Complex64,
        delta_prime: f64,
    ) -> Result<Self, EulerError> {
        let params = ShiftParams { u1, u2, u3, s, delta_prime };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), EulerError> {
        if !(self.delta_prime > 0.0 && self.delta_prime < 0.2) {
            return Err(EulerError::Domain { what: "delta' must lie in (0, 1/5)" });
        }
        if self.u1.norm() >= self.delta_prime
            || self.u2.norm() >= self.delta_prime
            || self.u3.norm() >= self.delta_prime
        {
            return Err(EulerError::Domain { what: "shifts need |u_i| < delta'" });
        }
        if !self.s.re.is_finite() || !self.s.im.is_finite() {
            return Err(EulerError::Domain { what: "s must be finite" });
        }
        Ok(())
    }

    fn max_shift(&self) -> f64 {
        self.u1.norm().max(self.u2.norm()).max(self.u3.norm())
    }
}

/// Local factor of the correlation series at `p`:
///
/// `(1-p^{-1-2s})^{16} (1-p^{-(1+2s-u1-u2)}) (1-p^{-(1+2s-u1)})^{-4}
///  (1-p^{-(1+2s-u2)})^{-4} [1 + (1-p^{2s-1-u3})
///  sum_{j>=1} G_4(1+u1,p^j) G_4(1+u2,p^j) p^{-j(1+2s)}]`.
pub fn shift_local_factor(p: u64, params: &ShiftParams) -> Result<Complex64, EulerError> {
    params.validate()?;
    let s = params.s;
    if s.re < RE_S_MIN {
        return Err(EulerError::Domain { what: "local factor needs Re s >= -1/4 + 0.01" });
    }
    let one = Complex64::new(1.0, 0.0);
    let pf = p as f64;
    let w16 = powc(pf, -(one + 2.0 * s));
    let pu1 = powc(pf, params.u1);
    let pu2 = powc(pf, params.u2);

    // G_4(1+u_i, p^j) by the closed form, sharing the power of p across j.
    let x1 = 1.0 / (pf * pu1);
    let x2 = 1.0 / (pf * pu2);
    let big_g4 = |j: u32, x: Complex64, pu: Complex64| -> Complex64 {
        let lead = arith::q_poly(j, x) * tau_prime_power(4, j) as f64;
        let lower = arith::q_poly(j - 1, x) * tau_prime_power(4, j - 1) as f64;
        (lead - lower * pu) * (pf / (pf - 1.0))
    };

    let mut series = Complex64::new(0.0, 0.0);
    let mut yj = one;
    let mut converged = false;
    for j in 1..=400u32 {
        yj *= w16;
        let term = big_g4(j, x1, pu1) * big_g4(j, x2, pu2) * yj;
        series += term;
        if j >= 3 && term.norm() < 1e-17 * (1.0 + series.norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EulerError::NonConvergence { what: "local factor j-series" });
    }
    let p_pow = powc(pf, 2.0 * s - one - params.u3);
    let bracket = one + (one - p_pow) * series;

    let f16 = (one - w16).powi(16);
    let f_joint = one - powc(pf, -(one + 2.0 * s - params.u1 - params.u2));
    let f1 = one - powc(pf, -(one + 2.0 * s - params.u1));
    let f2 = one - powc(pf, -(one + 2.0 * s - params.u2));
    Ok(f16 * f_joint / (f1 * f1 * f1 * f1) / (f2 * f2 * f2 * f2) * bracket)
}

/// Product of [`shift_local_factor`] over primes up to `prime_cutoff`,
/// ascending, with a certified tail from the model
/// `|local - 1| <= 12 p^{-2+m} + 24 p^{-2-2sigma+2m} + 20 p^{-2-4sigma+4m}`
/// (`m` the largest shift modulus, `sigma = Re s`), times a 1.5 slack for
/// higher-order terms.
pub fn shift_local_product(
    params: &ShiftParams,
    prime_cutoff: u64,
) -> Result<ComplexWithTail, EulerError> {
    params.validate()?;
    let mut product = Complex64::new(1.0, 0.0);
    for p in primes_up_to(prime_cutoff as usize) {
        product *= shift_local_factor(p, params)?;
    }
    let sigma = params.s.re.min(0.5);
    let m = params.max_shift();
    let pc = prime_cutoff as f64;
    let tail = 1.5
        * (prime_tail_bound(12.0, 2.0 - m, pc)
            + prime_tail_bound(24.0, 2.0 + 2.0 * sigma - 2.0 * m, pc)
            + prime_tail_bound(20.0, 2.0 + 4.0 * sigma - 4.0 * m, pc));
    Ok(ComplexWithTail { value: product, tail_bound: tail })
}

/// Factored evaluation of the correlation series: zeta prefactor times the
/// local product.
#[derive(Debug, Clone, Copy)]
pub struct ShiftSeriesFactored {
    pub value: Complex64,
    pub zeta_prefactor: Complex64,
    pub local_product: Complex64,
    /// Certified relative tail of the truncated local product.
    pub tail_bound: f64,
}

const POLE_GUARD: f64 = 1e-3;

/// `H(u1,u2,u3,s)` through its factorization
/// `zeta(2s-u3) zeta(1+2s)^{16} zeta(1+2s-u1-u2)
///  / (zeta(1+2s-u1)^4 zeta(1+2s-u2)^4) * prod_p local(p)`.
///
/// Errors with a pole description when `s` is within 1e-3 of
/// `(1+u3)/2`, `0`, `(u1+u2)/2`, `u1/2` or `u2/2`.
pub fn shift_series_factored(
    params: &ShiftParams,
    prime_cutoff: u64,
) -> Result<ShiftSeriesFactored, EulerError> {
    params.validate()?;
    let s = params.s;
    if s.re < RE_S_MIN {
        return Err(EulerError::Domain { what: "series needs Re s >= -1/4 + 0.01" });
    }
    let one = Complex64::new(1.0, 0.0);
    let poles = [
        ((one + params.u3) / 2.0, "s = (1+u3)/2"),
        (Complex64::new(0.0, 0.0), "s = 0"),
        ((params.u1 + params.u2) / 2.0, "s = (u1+u2)/2"),
        (params.u1 / 2.0, "s = u1/2 (zeta zero in denominator)"),
        (params.u2 / 2.0, "s = u2/2 (zeta zero in denominator)"),
    ];
    for (location, name) in poles {
        if (s - location).norm() < POLE_GUARD {
            return Err(EulerError::Pole { where_: name });
        }
    }
    let z_r = special::zeta(2.0 * s - params.u3)?;
    let z16 = special::zeta(one + 2.0 * s)?.powi(16);
    let z_joint = special::zeta(one + 2.0 * s - params.u1 - params.u2)?;
    let z1 = special::zeta(one + 2.0 * s - params.u1)?.powi(4);
    let z2 = special::zeta(one + 2.0 * s - params.u2)?.powi(4);
    let prefactor = z_r * z16 * z_joint / (z1 * z2);
    let local = shift_local_product(params, prime_cutoff)?;
    Ok(ShiftSeriesFactored {
        value: prefactor * local.value,
        zeta_prefactor: prefactor,
        local_product: local.value,
        tail_bound: local.tail_bound,
    })
}

/// Literal truncated evaluation of the correlation series.
#[derive(Debug, Clone, Copy)]
pub struct ShiftSeriesDirect {
    pub value: Complex64,
    /// Rigorous bound on the dropped `r > r_max` contribution.
    pub r_tail_bound: f64,
    /// log10 of a rigorous Rankin-type bound on the dropped `q > q_max`
    /// contribution. Worst-case `G_4` bounds compound per prime factor, so
    /// this is astronomically conservative; see `q_last_block` for scale.
    pub q_tail_log10: f64,
    /// Magnitude of the contribution of `q in (q_max/2, q_max]`, an
    /// empirical proxy for the actual remainder.
    pub q_last_block: f64,
}

/// `H(u1,u2,u3,s)` summed literally over `q <= q_max`, with each inner
/// `sum_{r <= r_max} c_q(r) r^{-w}` (`w = 2s-u3`) rearranged exactly into
/// `sum_{m squarefree | q} mu(m) (q/m)^{1-w} sum_{n <= floor(r_max m / q)} n^{-w}`
/// and completed by Euler-Maclaurin, so the cost is independent of `r_max`.
///
/// When `r_max / q_max >= 1e7` the completions collapse: the
/// `r_max`-dependent leading parts cancel exactly across the Mobius sum
/// (`sum_m mu(m) = 0` for `q >= 2`) and what survives of the inner sum is
/// `zeta(w) q^{1-w} prod_{p | q} (1 - p^{w-1})` up to terms below `1e-9`,
/// which is then assembled multiplicatively over the sieve.
///
/// Preconditions: `Re s > 1/2 + 2 delta'` and `Re(2s-u3) > 1`.
pub fn shift_series_direct(
    params: &ShiftParams,
    tables: &ArithTables,
    r_max: u64,
    q_max: u64,
) -> Result<ShiftSeriesDirect, EulerError> {
    params.validate()?;
    let one = Complex64::new(1.0, 0.0);
    let s = params.s;
    if s.re <= 0.5 + 2.0 * params.delta_prime {
        return Err(EulerError::Domain { what: "direct series needs Re s > 1/2 + 2 delta'" });
    }
    let w = 2.0 * s - params.u3;
    if w.re <= 1.01 {
        return Err(EulerError::Domain { what: "direct series needs Re(2s-u3) > 1" });
    }
    if q_max == 0 || q_max > tables.limit() as u64 {
        return Err(EulerError::Domain { what: "q_max outside sieve range" });
    }
    if r_max < 16 {
        return Err(EulerError::Domain { what: "r_max too small" });
    }
    let zeta_w = special::zeta(w)?;
    let spf = tables.spf();
    let n = q_max as usize;

    // Per-prime-power caches: G_4(1+u1, p^j) G_4(1+u2, p^j) (p^j)^{-(2+u3)},
    // indexed by the prime-power value.
    let z1 = one + params.u1;
    let z2 = one + params.u2;
    let exponent_q = -(Complex64::new(2.0, 0.0) + params.u3);
    let mut ppfac = vec![Complex64::new(0.0, 0.0); n + 1];
    for p in 2..=n {
        if spf[p] as usize != p {
            continue;
        }
        let mut pe = p;
        let mut j = 1u32;
        loop {
            let a1 = big_g4_prime_power(&PrimePowerArg { p: p as u64, j, z: z1 });
            let a2 = big_g4_prime_power(&PrimePowerArg { p: p as u64, j, z: z2 });
            ppfac[pe] = a1 * a2 * powc(pe as f64, exponent_q);
            if pe > n / p {
                break;
            }
            pe *= p;
            j += 1;
        }
    }

    // Multiplicative fill of A(q) over the sieve.
    let mut aval = vec![Complex64::new(0.0, 0.0); n + 1];
    aval[1] = one;
    for q in 2..=n {
        let p = spf[q] as usize;
        let mut pe = p;
        let mut rest = q / p;
        while rest > 1 && spf[rest] as usize == p {
            pe *= p;
            rest /= p;
        }
        aval[q] = aval[rest] * ppfac[pe];
    }
    drop(ppfac);

    let collapse = r_max / q_max >= 10_000_000;
    let hval = if collapse {
        let mut hpp = vec![Complex64::new(0.0, 0.0); n + 1];
        for p in 2..=n {
            if spf[p] as usize != p {
                continue;
            }
            let step = powc(p as f64, one - w);
            let mut pe = p;
            let mut lo = one;
            loop {
                let hi = lo * step;
                hpp[pe] = hi - lo;
                if pe > n / p {
                    break;
                }
                pe *= p;
                lo = hi;
            }
        }
        let mut hval = vec![Complex64::new(0.0, 0.0); n + 1];
        hval[1] = one;
        for q in 2..=n {
            let p = spf[q] as usize;
            let mut pe = p;
            let mut rest = q / p;
            while rest > 1 && spf[rest] as usize == p {
                pe *= p;
                rest /= p;
            }
            hval[q] = hval[rest] * hpp[pe];
        }
        hval
    } else {
        Vec::new()
    };

    let sigma_w = w.re;
    let r_neg = (r_max as f64).powf(-sigma_w);
    let abel = 1.0 + w.norm() / sigma_w;

    let mut value = Complex64::new(0.0, 0.0);
    let mut block = Complex64::new(0.0, 0.0);
    let mut r_tail = {
        // q = 1: the remainder sum_{r > r_max} r^{-w} evaluated by the same
        // completion.
        let partial = special::zeta_partial_with(w, r_max, zeta_w);
        value += partial;
        (zeta_w - partial).norm()
    };

    let mut primes_of_q = [0u64; 15];
    for q in 2..=n {
        // Distinct primes and sigma(q) from the smallest-prime-factor chain.
        let mut omega = 0usize;
        let mut sigma_q = 1.0f64;
        let mut m = q;
        while m > 1 {
            let p = spf[m] as usize;
            primes_of_q[omega] = p as u64;
            omega += 1;
            let mut pe = 1u64;
            while m % p == 0 {
                m /= p;
                pe *= p as u64;
            }
            sigma_q *= ((pe * p as u64 - 1) / (p as u64 - 1)) as f64;
        }
        // sum over squarefree divisors m of q: mu(m) (q/m)^{1-w} H_w(r_max m / q).
        let inner = if collapse {
            zeta_w * hval[q]
        } else {
            let mut inner = Complex64::new(0.0, 0.0);
            for mask in 0u32..(1u32 << omega) {
                let mut mdiv = 1u64;
                for (i, &p) in primes_of_q[..omega].iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        mdiv *= p;
                    }
                }
                let d = q as u64 / mdiv;
                let h = special::zeta_partial_with(w, r_max / d, zeta_w);
                let term = powc(d as f64, one - w) * h;
                if mask.count_ones() % 2 == 0 {
                    inner += term;
                } else {
                    inner -= term;
                }
            }
            inner
        };
        let contribution = aval[q] * inner;
        value += contribution;
        if q as u64 > q_max / 2 {
            block += contribution;
        }
        r_tail += aval[q].norm() * sigma_q * r_neg * abel;
    }

    let q_tail_log10 = rankin_q_tail_log10(params, &zeta_w, q_max);
    Ok(ShiftSeriesDirect {
        value,
        r_tail_bound: r_tail,
        q_tail_log10,
        q_last_block: block.norm(),
    })
}

/// Rankin bound on `|sum_{q > Q} A(q) S(q)|` in log10: with
/// `|S(q)| <= 2^omega |zeta(w)|` and the product-form `G_4` bound,
/// `sum_{q>Q} h(q) <= Q^-eta prod_p (sum_j h(p^j) p^{j eta})` for `eta = 0.9`.
fn rankin_q_tail_log10(params: &ShiftParams, zeta_w: &Complex64, q_max: u64) -> f64 {
    let eta = 0.9f64;
    let s1 = 1.0 + params.u1.re;
    let s2 = 1.0 + params.u2.re;
    let decay = 2.0 + params.u3.re;
    let hp = |p: f64, j: u32| -> f64 {
        let t4 = tau_prime_power(4, j) as f64;
        let b1 = 2.0 * t4 * (1.0 + p.powf(-s1)).powi(3) * (1.0 + p.powf(s1 - 1.0));
        let b2 = 2.0 * t4 * (1.0 + p.powf(-s2)).powi(3) * (1.0 + p.powf(s2 - 1.0));
        2.0 * b1 * b2 * p.powf(-(j as f64) * decay)
    };
    let mut ln_acc = -eta * (q_max as f64).ln() + zeta_w.norm().ln();
    for p in primes_up_to(10_000) {
        let pf = p as f64;
        let mut local = 1.0f64;
        for j in 1..=60u32 {
            let term = hp(pf, j) * pf.powf(j as f64 * eta);
            local += term;
            if term < 1e-18 * local {
                break;
            }
        }
        ln_acc += local.ln();
    }
    // p > 1e4: ln local <= hp(p,1) p^eta <= K p^{-(decay - eta - s1 - s2 + 2)}.
    let k = 2.0 * (2.0 * 4.0 * 1.01f64.powi(3)).powi(2)
        * (1.0 + 1e4f64.powf(s1 - 1.0))
        * (1.0 + 1e4f64.powf(s2 - 1.0));
    let beta = decay - eta - (s1 - 1.0) - (s2 - 1.0);
    ln_acc += prime_tail_bound(k, beta, 1e4);
    ln_acc / core::f64::consts::LN_10
}

/// The quadratic coefficient `Y(y1, y2)` of the local factor expansion,
/// written in `y_i = X_i^{-1} = p^{u_i}`:
/// `-36 + 24(y1+y2) - 6(y1^2+y2^2) - 16 y1 y2 + 4(y1^2 y2 + y1 y2^2) - y1^2 y2^2`.
pub fn local_quadratic_coeff(y1: Complex64, y2: Complex64) -> Complex64 {
    let c = |v: f64| Complex64::new(v, 0.0);
    c(-36.0) + c(24.0) * (y1 + y2) - c(6.0) * (y1 * y1 + y2 * y2) - c(16.0) * y1 * y2
        + c(4.0) * (y1 * y1 * y2 + y1 * y2 * y2)
        - y1 * y1 * y2 * y2
}

/// Remainder of the local factor after its quadratic model:
/// `local(p) - 1 + Y(p^{u1}, p^{u2}) p^{-2-4s}`.
pub fn shift_local_remainder(p: u64, params: &ShiftParams) -> Result<Complex64, EulerError> {
    let local = shift_local_factor(p, params)?;
    let pf = p as f64;
    let y1 = powc(pf, params.u1);
    let y2 = powc(pf, params.u2);
    let w2 = powc(pf, -(Complex64::new(2.0, 0.0) + 4.0 * params.s));
    Ok(local - Complex64::new(1.0, 0.0) + local_quadratic_coeff(y1, y2) * w2)
}

/// Exponent budget for [`shift_local_remainder`]: the remainder is
/// `O(p^{theta(sigma) + 7 delta'})` with
/// `theta = -2` for `sigma >= 0`, `-2-2sigma` on `[-1/4, 0)`, and
/// `-3-6sigma` on `[-1/2, -1/4)`.
pub fn remainder_exponent_budget(sigma: f64) -> f64 {
    if sigma >= 0.0 {
        -2.0
    } else if sigma >= -0.25 {
        -2.0 - 2.0 * sigma
    } else {
        -3.0 - 6.0 * sigma
    }
}

/// Bivariate polynomial with integer coefficients, keyed by `(deg y1, deg y2)`.
pub type Poly2 = BTreeMap<(u32, u32), i64>;

fn poly_from(terms: &[(u32, u32, i64)]) -> Poly2 {
    let mut p = Poly2::new();
    for &(a, b, c) in terms {
        if c != 0 {
            *p.entry((a, b)).or_insert(0) += c;
        }
    }
    p.retain(|_, c| *c != 0);
    p
}

fn poly_mul(a: &Poly2, b: &Poly2) -> Poly2 {
    let mut out = Poly2::new();
    for (&(a1, a2), &ca) in a {
        for (&(b1, b2), &cb) in b {
            *out.entry((a1 + b1, a2 + b2)).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn poly_add(a: &Poly2, b: &Poly2, scale: i64) -> Poly2 {
    let mut out = a.clone();
    for (&k, &cb) in b {
        *out.entry(k).or_insert(0) += scale * cb;
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Expands the local Euler factor
/// `(1-W)^{16} (1-y1 y2 W) (1-y1 W)^{-4} (1-y2 W)^{-4}` to order `W^2` and
/// returns the derived quadratic coefficient `B0 + A0 a1 + a2` next to the
/// closed form of [`local_quadratic_coeff`], both as exact polynomials.
pub fn local_quadratic_polys() -> (Poly2, Poly2) {
    let one = poly_from(&[(0, 0, 1)]);
    // Series in W to order 2, coefficients in y1, y2.
    let p1 = [
        one.clone(),
        poly_from(&[(0, 0, -16)]),
        poly_from(&[(0, 0, 120)]),
    ];
    let p2 = [one.clone(), poly_from(&[(1, 1, -1)]), Poly2::new()];
    let p3 = [one.clone(), poly_from(&[(1, 0, 4)]), poly_from(&[(2, 0, 10)])];
    let p4 = [one.clone(), poly_from(&[(0, 1, 4)]), poly_from(&[(0, 2, 10)])];
    let mul = |a: &[Poly2; 3], b: &[Poly2; 3]| -> [Poly2; 3] {
        let mut out = [Poly2::new(), Poly2::new(), Poly2::new()];
        for i in 0..3 {
            for j in 0..3 - i {
                out[i + j] = poly_add(&out[i + j], &poly_mul(&a[i], &b[j]), 1);
            }
        }
        out
    };
    let series = mul(&mul(&p1, &p2), &mul(&p3, &p4));
    let a1 = &series[1];
    let a2 = &series[2];

    let alpha0_1 = poly_from(&[(0, 0, 4), (1, 0, -1)]);
    let alpha0_2 = poly_from(&[(0, 0, 4), (0, 1, -1)]);
    let beta0_1 = poly_from(&[(0, 0, 10), (1, 0, -4)]);
    let beta0_2 = poly_from(&[(0, 0, 10), (0, 1, -4)]);
    let a_tilde = poly_mul(&alpha0_1, &alpha0_2);
    let b_tilde = poly_mul(&beta0_1, &beta0_2);
    // The W coefficient of the factor expansion must be -A0.
    debug_assert_eq!(*a1, poly_add(&Poly2::new(), &a_tilde, -1));

    let derived = poly_add(&poly_add(&b_tilde, &poly_mul(&a_tilde, a1), 1), a2, 1);
    let closed = poly_from(&[
        (0, 0, -36),
        (1, 0, 24),
        (0, 1, 24),
        (2, 0, -6),
        (0, 2, -6),
        (1, 1, -16),
        (2, 1, 4),
        (1, 2, 4),
        (2, 2, -1),
    ]);
    (derived, closed)
}

/// True when the expanded quadratic coefficient matches its closed form
/// exactly, coefficient by coefficient.
pub fn local_quadratic_identity() -> bool {
    let (derived, closed) = local_quadratic_polys();
    derived == closed
}

/// Closed forms of `f_j(s) = zeta(1+2s)^7 d^j/dz^j [zeta(1+2s-z)^{-4}]_{z=0}`
/// for `j <= 3`:
/// `f_0 = zeta^3`, `f_1 = 4 zeta' zeta^2`, `f_2 = 20 zeta'^2 zeta - 4 zeta'' zeta^2`,
/// `f_3 = 120 zeta'^3 - 60 zeta zeta' zeta'' + 4 zeta^2 zeta'''`, all at `1+2s`.
pub fn quotient_deriv_closed(j: u32, s: Complex64) -> Result<Complex64, EulerError> {
    if j > 3 {
        return Err(EulerError::Domain { what: "quotient derivatives defined for j <= 3" });
    }
    if s.norm() < 5e-4 {
        return Err(EulerError::Pole { where_: "zeta argument 1+2s at the pole" });
    }
    let a = Complex64::new(1.0, 0.0) + 2.0 * s;
    let z = special::zeta(a)?;
    if j == 0 {
        return Ok(z * z * z);
    }
    let d1 = special::zeta_deriv(a, 1)?.0;
    if j == 1 {
        return Ok(4.0 * d1 * z * z);
    }
    let d2 = special::zeta_deriv(a, 2)?.0;
    if j == 2 {
        return Ok(20.0 * d1 * d1 * z - 4.0 * d2 * z * z);
    }
    let d3 = special::zeta_deriv(a, 3)?.0;
    Ok(120.0 * d1 * d1 * d1 - 60.0 * z * d1 * d2 + 4.0 * z * z * d3)
}

/// Independent route to [`quotient_deriv_closed`]: a Cauchy-circle
/// derivative of `z -> zeta(1+2s-z)^{-4}` at 0, scaled by `zeta(1+2s)^7`.
/// The radius must stay below `|2s|` to avoid the pole of the inner zeta.
pub fn quotient_deriv_cauchy(
    j: u32,
    s: Complex64,
    radius: f64,
) -> Result<(Complex64, f64), EulerError> {
    if j > 3 {
        return Err(EulerError::Domain { what: "quotient derivatives defined for j <= 3" });
    }
    if radius >= (2.0 * s).norm() {
        return Err(EulerError::Domain { what: "radius reaches the inner zeta pole" });
    }
    let a = Complex64::new(1.0, 0.0) + 2.0 * s;
    let z7 = special::zeta(a)?.powi(7);
    let circle = ContourCircle::new(Complex64::new(0.0, 0.0), radius);
    let mut f = |z: Complex64| {
        let zv = special::zeta(a - z).unwrap_or(Complex64::new(f64::NAN, 0.0));
        zv.powi(-4)
    };
    let q = cauchy_derivative(&mut f, &circle, j, 1e-11)?;
    Ok((z7 * q.value, z7.norm() * q.err_estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat_int;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(u1: f64, u2: f64, u3: f64, s: Complex64, dp: f64) -> ShiftParams {
        ShiftParams::new(c(u1, 0.0), c(u2, 0.0), c(u3, 0.0), s, dp).unwrap()
    }

    #[test]
    fn g_constants_exact() {
        assert_eq!(g_constant(1).unwrap(), rat_int(1));
        assert_eq!(g_constant(2).unwrap(), rat_int(2));
        assert_eq!(g_constant(3).unwrap(), rat_int(42));
        assert_eq!(g_constant(4).unwrap(), rat_int(24024));
        for k in 5..=8 {
            assert!(g_constant(k).unwrap() > rat_int(0));
        }
        assert!(matches!(g_constant(0), Err(EulerError::Domain { .. })));
        assert!(matches!(g_constant(9), Err(EulerError::Domain { .. })));
    }

    #[test]
    fn tau4_sq_series_matches_generating_function() {
        for x in [0.1f64, 0.5, -0.3] {
            let mut sum = 0.0;
            let mut term = 1.0f64;
            for m in 0..200 {
                sum += term;
                let m = m as f64;
                let r = (m + 4.0) / (m + 1.0);
                term *= r * r * x;
            }
            assert!(
                (sum - tau4_sq_generating(x)).abs() < 1e-12 * tau4_sq_generating(x).abs(),
                "x={x}"
            );
        }
    }

    #[test]
    fn a_constant_k1_is_one() {
        let spec = EulerProductSpec { prime_cutoff: 10_000, ..EulerProductSpec::for_a_constant(1) };
        let a = a_constant(1, &spec).unwrap();
        assert!((a.value - 1.0).abs() < 1e-10);
        assert!(a.tail_bound.abs() < 1e-12);
    }

    #[test]
    fn a_constant_k2_is_six_over_pi_squared() {
        let a = a_constant(2, &EulerProductSpec::for_a_constant(2)).unwrap();
        let expected = 6.0 / (core::f64::consts::PI * core::f64::consts::PI);
        assert!((a.value - expected).abs() < 1e-6, "a2={} expected={expected}", a.value);
    }

    #[test]
    fn a_constant_two_cutoffs_within_tails() {
        let lo = EulerProductSpec { prime_cutoff: 100_000, ..EulerProductSpec::for_a_constant(4) };
        let hi = EulerProductSpec { prime_cutoff: 1_000_000, ..EulerProductSpec::for_a_constant(4) };
        let a_lo = a_constant(4, &lo).unwrap();
        let a_hi = a_constant(4, &hi).unwrap();
        assert!((a_lo.value - a_hi.value).abs() <= a_lo.tail_bound + a_hi.tail_bound);
        assert!(a_lo.tail_bound > a_hi.tail_bound);
    }

    #[test]
    fn a_constant_precision_error_when_tail_exceeds_target() {
        let spec = EulerProductSpec {
            prime_cutoff: 1000,
            target_tolerance: 1e-9,
            ..EulerProductSpec::for_a_constant(4)
        };
        assert!(matches!(a_constant(4, &spec), Err(EulerError::Precision { .. })));
    }

    #[test]
    fn a4_two_routes_agree_at_matched_cutoff() {
        let spec = EulerProductSpec { prime_cutoff: 20_000, ..EulerProductSpec::for_a_constant(4) };
        let direct = a_constant(4, &spec).unwrap().value;
        let via_g4 = a4_via_g4(&spec).unwrap().value;
        assert!(
            (direct - via_g4).abs() < 1e-10 * direct.abs(),
            "direct={direct} via_g4={via_g4}"
        );
    }

    #[test]
    fn a4_g4_local_at_two_matches_hand_expansion() {
        // G_4(1,2) = 7/4, G_4(1,4) = 11/4, G_4(1,8) = 4, giving
        // (1/2)^9 (1 + 49/64 + 121/128 + 1) = 475/65536 at j <= 3.
        let hand = 475.0 / 65536.0;
        assert!((a4_local_via_g4(2, 3) - hand).abs() < 1e-15);
    }

    #[test]
    fn a4_g4_local_truncation_stable_at_five() {
        let d = (a4_local_via_g4(5, 30) - a4_local_via_g4(5, 60)).abs();
        assert!(d < 1e-14, "d={d}");
    }

    #[test]
    fn a4_local_routes_agree_per_prime() {
        for p in [2u64, 3, 5, 97] {
            let series = a_local_factor(4, p);
            let g4 = a4_local_via_g4(p, 400);
            assert!((series - g4).abs() < 1e-13 * series.abs(), "p={p}");
        }
    }

    #[test]
    fn z1_at_zero_is_a4() {
        let spec = EulerProductSpec { prime_cutoff: 20_000, ..EulerProductSpec::for_a_constant(4) };
        let a4 = a_constant(4, &spec).unwrap().value;
        let z = z1(c(0.0, 0.0), 20_000).unwrap();
        assert!((z.value.re - a4).abs() < 1e-12 * a4.abs());
        assert!(z.value.im.abs() < 1e-15);
    }

    #[test]
    fn z1_at_one_matches_sieved_dirichlet_series() {
        let limit = 1_000_000usize;
        let tables = arith::build_tables(limit, &[4]).unwrap();
        let tau4 = tables.tau(4).unwrap();
        let mut sum = 0.0f64;
        for m in 1..=limit {
            let t = tau4[m as usize] as f64;
            let mf = m as f64;
            sum += t * t / (mf * mf * mf);
        }
        let zeta3 = special::zeta(c(3.0, 0.0)).unwrap().re;
        let scaled = sum / zeta3.powi(16);
        let z = z1(c(1.0, 0.0), 100_000).unwrap();
        assert!(
            (z.value.re - scaled).abs() < 1e-6 * scaled.abs(),
            "z1={} dirichlet={scaled}",
            z.value.re
        );
    }

    #[test]
    fn z1_conjugation_symmetric() {
        for s in [c(0.3, 0.4), c(-0.1, 1.2), c(1.0, -0.7)] {
            let a = z1(s, 2000).unwrap().value;
            let b = z1(s.conj(), 2000).unwrap().value;
            assert!((a.conj() - b).norm() < 1e-13 * a.norm());
        }
    }

    #[test]
    fn z1_domain_error_left_of_strip() {
        assert!(matches!(z1(c(-0.3, 0.0), 100), Err(EulerError::Domain { .. })));
    }

    #[test]
    fn shift_params_validation() {
        assert!(ShiftParams::new(c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), 0.1).is_err());
        assert!(ShiftParams::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), 0.25).is_err());
        assert!(ShiftParams::new(c(0.05, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), 0.1).is_ok());
    }

    #[test]
    fn shift_local_factor_at_zero_shifts_matches_a4_route() {
        // At u = 0, s = 0 the local factor collapses to the a_4 local factor.
        let p = params(0.0, 0.0, 0.0, c(0.0, 0.0), 0.05);
        for prime in [2u64, 3, 5, 97] {
            let local = shift_local_factor(prime, &p).unwrap();
            let a4_local = a4_local_via_g4(prime, 400);
            assert!(
                (local.re - a4_local).abs() < 1e-13 * a4_local.abs(),
                "p={prime} local={} a4={a4_local}",
                local.re
            );
            assert!(local.im.abs() < 1e-15);
        }
    }

    #[test]
    fn shift_local_remainder_well_under_budget() {
        let dp = 0.12;
        let p = params(0.05, -0.03, 0.02, c(0.25, 0.0), dp);
        for prime in [101u64, 499, 997] {
            let r = shift_local_remainder(prime, &p).unwrap().norm();
            let budget =
                (prime as f64).powf(remainder_exponent_budget(0.25) + 7.0 * dp + 0.2);
            assert!(r < budget, "p={prime} r={r:.3e} budget={budget:.3e}");
        }
    }

    #[test]
    fn quadratic_coeff_identity_exact_and_spot_values() {
        assert!(local_quadratic_identity());
        let (derived, _) = local_quadratic_polys();
        assert_eq!(derived.get(&(2, 1)), Some(&4));
        let at_one = local_quadratic_coeff(c(1.0, 0.0), c(1.0, 0.0));
        assert!((at_one.re + 9.0).abs() < 1e-14 && at_one.im.abs() < 1e-15);
    }

    #[test]
    fn quadratic_coeff_matches_definition_numerically() {
        let mut state = 0x2545f491_u64;
        let mut rand = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let y1 = c(0.5 + 1.5 * rand(), 2.0 * rand() - 1.0);
            let y2 = c(0.5 + 1.5 * rand(), 2.0 * rand() - 1.0);
            let a0 = (c(4.0, 0.0) - y1) * (c(4.0, 0.0) - y2);
            let b0 = (c(10.0, 0.0) - 4.0 * y1) * (c(10.0, 0.0) - 4.0 * y2);
            // W and W^2 coefficients of (1-W)^16 (1-y1y2 W) (1-y1 W)^-4 (1-y2 W)^-4.
            let a1 = c(-16.0, 0.0) - y1 * y2 + 4.0 * y1 + 4.0 * y2;
            let a2 = c(120.0, 0.0)
                + (c(-16.0, 0.0) - y1 * y2) * (4.0 * y1 + 4.0 * y2)
                + 32.0 * y1 * y2
                + 10.0 * (y1 * y1 + y2 * y2);
            let lhs = b0 + a0 * a1 + a2;
            let rhs = local_quadratic_coeff(y1, y2);
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0), "y1={y1} y2={y2}");
        }
    }

    #[test]
    fn direct_with_qmax_one_reduces_to_zeta() {
        let tables = arith::build_tables(64, &[]).unwrap();
        let p = params(0.01, -0.02, 0.005, c(0.8, 0.0), 0.05);
        let w = 2.0 * p.s - p.u3;
        let direct = shift_series_direct(&p, &tables, 100_000, 1).unwrap();
        let zw = special::zeta(w).unwrap();
        assert!((direct.value - zw).norm() <= direct.r_tail_bound * 1.5 + 1e-12);
        assert!(direct.r_tail_bound < 0.01);
    }

    #[test]
    fn direct_r_truncation_within_attached_tail() {
        let tables = arith::build_tables(2000, &[]).unwrap();
        let p = params(0.01, -0.02, 0.005, c(0.9, 0.0), 0.05);
        let coarse = shift_series_direct(&p, &tables, 10_000, 2000).unwrap();
        let fine = shift_series_direct(&p, &tables, 1_000_000, 2000).unwrap();
        let moved = (coarse.value - fine.value).norm();
        assert!(
            moved <= 2.0 * (coarse.r_tail_bound + fine.r_tail_bound),
            "moved={moved:.3e} tails={:.3e}/{:.3e}",
            coarse.r_tail_bound,
            fine.r_tail_bound
        );
    }

    #[test]
    fn direct_collapse_path_matches_mask_path() {
        // r_max/q_max = 1e7 takes the multiplicative branch, 5e6 the literal
        // mask branch; the values may differ only by the r-truncation tails.
        let tables = arith::build_tables(2000, &[]).unwrap();
        let p = params(0.01, -0.02, 0.005, c(0.8, 0.0), 0.05);
        let fast = shift_series_direct(&p, &tables, 20_000_000_000, 2000).unwrap();
        let slow = shift_series_direct(&p, &tables, 10_000_000_000, 2000).unwrap();
        let gap = (fast.value - slow.value).norm();
        assert!(
            gap <= fast.r_tail_bound + slow.r_tail_bound + 1e-9,
            "gap={gap:.3e} tails={:.3e}/{:.3e}",
            fast.r_tail_bound,
            slow.r_tail_bound
        );
    }

    #[test]
    fn direct_and_factored_routes_agree() {
        let tables = arith::build_tables(10_000, &[]).unwrap();
        let p = params(0.01, -0.02, 0.005, c(0.8, 0.0), 0.05);
        let direct = shift_series_direct(&p, &tables, 1_000_000_000, 10_000).unwrap();
        let factored = shift_series_factored(&p, 10_000).unwrap();
        let rel = (direct.value - factored.value).norm() / factored.value.norm();
        assert!(rel < 0.02, "rel={rel:.3e}");
        assert!(direct.q_last_block < 0.05 * factored.value.norm());
    }

    #[test]
    fn factored_pole_guards_fire() {
        let near_pole = params(0.0, 0.0, 0.0, c(0.5001, 0.0), 0.05);
        assert!(matches!(
            shift_series_factored(&near_pole, 100),
            Err(EulerError::Pole { .. })
        ));
        let at_zero = params(0.01, 0.01, 0.0, c(0.0001, 0.0), 0.05);
        assert!(matches!(
            shift_series_factored(&at_zero, 100),
            Err(EulerError::Pole { .. })
        ));
    }

    #[test]
    fn quotient_deriv_order_zero_is_zeta_cubed() {
        for s in [c(0.5, 0.0), c(1.0, 0.3), c(2.0, -0.5)] {
            let z = special::zeta(c(1.0, 0.0) + 2.0 * s).unwrap();
            let f0 = quotient_deriv_closed(0, s).unwrap();
            assert!((f0 - z * z * z).norm() < 1e-13 * f0.norm());
        }
    }

    #[test]
    fn quotient_deriv_closed_matches_cauchy() {
        for (j, s) in [(1u32, c(2.0, 0.0)), (2, c(1.0, 0.0)), (3, c(1.0, 0.0))] {
            let closed = quotient_deriv_closed(j, s).unwrap();
            let (oracle, err) = quotient_deriv_cauchy(j, s, 0.8).unwrap();
            assert!(
                (closed - oracle).norm() < 1e-8 * oracle.norm().max(1.0),
                "j={j} closed={closed} oracle={oracle} err={err:.2e}"
            );
        }
    }

    #[test]
    fn quotient_deriv_pole_guard() {
        assert!(matches!(
            quotient_deriv_closed(1, c(1e-5, 0.0)),
            Err(EulerError::Pole { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn local_factor_conjugation(
            u1 in -0.04f64..0.04,
            u2 in -0.04f64..0.04,
            u3 in -0.04f64..0.04,
            sre in 0.0f64..1.0,
            sim in -1.0f64..1.0,
            pidx in 0usize..6,
        ) {
            let p = [2u64, 3, 5, 11, 101, 997][pidx];
            let sp = params(u1, u2, u3, c(sre, sim), 0.05);
            let spc = params(u1, u2, u3, c(sre, -sim), 0.05);
            let a = shift_local_factor(p, &sp).unwrap();
            let b = shift_local_factor(p, &spc).unwrap();
            prop_assert!((a.conj() - b).norm() < 1e-12 * a.norm().max(1.0));
        }

        #[test]
        fn a_local_factors_sane(k in 1u32..6, pidx in 0usize..8) {
            let p = [2u64, 3, 5, 7, 11, 101, 499, 997][pidx];
            let local = a_local_factor(k, p);
            prop_assert!(local > 0.0 && local <= 1.0 + 1e-12);
        }
    }
}
