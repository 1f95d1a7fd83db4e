//! Smoothed shifted divisor correlations: compactly supported smooth test
//! weights, direct windowed evaluation of
//! `D(r) = sum_{m - n = r} tau_k(m) tau_l(n) f(m, n)`, and a main-term
//! prediction for it as a double contour integral against a Ramanujan-sum
//! q-series, so the two routes can be compared numerically.
//!
//! The prediction evaluated by [`main_term`] is
//!
//! ```text
//! (2 pi i)^{-2} oint oint zeta(z1)^k zeta(z2)^l
//!     [ sum_q c_q(r) G_k(z1, q) G_l(z2, q) q^{-z1-z2} ]
//!     [ int f(x, x - r) x^{z1-1} (x - r)^{z2-1} dx ] dz2 dz1
//! ```
//!
//! with both circles around `z = 1`. The q-series is truncated at a
//! configurable `q_max` and dyadic tail estimates are attached to the result;
//! for `k = l = 2` the prediction is a proven asymptotic, for higher `k, l`
//! it is conjectural and [`conjecture_experiment`] records the comparison
//! without judging it.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::arith::{self, ArithError, ArithTables, PrimePowerArg};
use crate::numerics::{kronrod15_nodes, ContourCircle};
use crate::powc;
use crate::special::{self, SpecialError};

#[derive(Debug, Clone, PartialEq)]
pub enum DivisorError {
    /// The sieve tables do not cover the requested window.
    Capacity { needed: u64, limit: u64 },
    /// A parameter is outside the supported range.
    Domain { what: &'static str },
    /// An attached tail estimate exceeds the usable fraction of the result.
    Precision { estimate: f64, tolerance: f64 },
    /// A refinement loop hit its cap before meeting its tolerance.
    NonConvergence { what: &'static str },
    /// The assembled double integral failed its realness check.
    ImaginaryResidue { ratio: f64 },
    Arith(ArithError),
    Special(SpecialError),
}

impl fmt::Display for DivisorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivisorError::Capacity { needed, limit } => {
                write!(f, "window needs tables up to {needed}, have {limit}")
            }
            DivisorError::Domain { what } => write!(f, "domain error: {what}"),
            DivisorError::Precision { estimate, tolerance } => {
                write!(f, "tail estimate {estimate:.3e} above tolerance {tolerance:.3e}")
            }
            DivisorError::NonConvergence { what } => write!(f, "did not converge: {what}"),
            DivisorError::ImaginaryResidue { ratio } => {
                write!(f, "imaginary residue ratio {ratio:.3e} in a real quantity")
            }
            DivisorError::Arith(e) => write!(f, "{e}"),
            DivisorError::Special(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DivisorError {}

impl From<ArithError> for DivisorError {
    fn from(e: ArithError) -> Self {
        DivisorError::Arith(e)
    }
}

impl From<SpecialError> for DivisorError {
    fn from(e: SpecialError) -> Self {
        DivisorError::Special(e)
    }
}

// ---------------------------------------------------------------------------
// Smooth weights
// ---------------------------------------------------------------------------

/// `exp(-s/(u(1-u)))` on `(0, 1)`, zero outside, with two derivatives in `u`.
fn bump_core(u: f64, s: f64) -> (f64, f64, f64) {
    if u <= 0.0 || u >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let a = 1.0 / u;
    let b = 1.0 / (1.0 - u);
    let g = a + b;
    let g1 = b * b - a * a;
    let g2 = 2.0 * (a * a * a + b * b * b);
    let v = (-s * g).exp();
    (v, -s * g1 * v, (s * s * g1 * g1 - s * g2) * v)
}

/// Smooth step `psi(v) = B(v) / (B(v) + B(1-v))` with `B(v) = exp(-1/v)` for
/// `v > 0`: identically 0 for `v <= 0`, identically 1 for `v >= 1`, and
/// `psi(v) + psi(1-v) = 1`. Returns `(psi, psi', psi'')`.
pub fn smoothstep_derivs(v: f64) -> (f64, f64, f64) {
    if v <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if v >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let w = 1.0 - v;
    let bv = (-1.0 / v).exp();
    let bw = (-1.0 / w).exp();
    let b1v = bv / (v * v);
    let b1w = bw / (w * w);
    let b2v = bv * (1.0 / (v * v * v * v) - 2.0 / (v * v * v));
    let b2w = bw * (1.0 / (w * w * w * w) - 2.0 / (w * w * w));
    let den = bv + bw;
    let dden = b1v - b1w;
    let d2den = b2v + b2w;
    let psi = bv / den;
    let psi1 = (b1v - psi * dden) / den;
    let psi2 = (b2v - psi * d2den - 2.0 * psi1 * dden) / den;
    (psi, psi1, psi2)
}

/// Dyadic-in-`sqrt 2` partition cell
/// `W0(y) = psi(2 log2 y) - psi(2 log2 y - 1)`, supported in `(1, 2)`, with
/// `sum_k W0(x / 2^{k/2}) = 1` for every `x >= 1`. Returns two derivatives.
pub fn partition_cell_derivs(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let ln2 = core::f64::consts::LN_2;
    let a = 2.0 * y.ln() / ln2;
    let da = 2.0 / (y * ln2);
    let d2a = -2.0 / (y * y * ln2);
    let (p0, p1, p2) = smoothstep_derivs(a);
    let (q0, q1, q2) = smoothstep_derivs(a - 1.0);
    (
        p0 - q0,
        (p1 - q1) * da,
        (p2 - q2) * da * da + (p1 - q1) * d2a,
    )
}

/// Values `W0(x / 2^{k/2})` for `k` in `k_lo..=k_hi`. At most two entries are
/// nonzero, and they sum to 1 whenever the range covers `(2 log2 x - 2,
/// 2 log2 x)`.
pub fn partition_of_unity(x: f64, k_lo: i64, k_hi: i64) -> Vec<f64> {
    debug_assert!(x > 0.0 && k_lo <= k_hi);
    let half_ln2 = 0.5 * core::f64::consts::LN_2;
    (k_lo..=k_hi)
        .map(|k| partition_cell_derivs(x * (-(k as f64) * half_ln2).exp()).0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `b((x - X)/X) b((y - Y)/Y)` with `b` the standard mollifier bump.
    ProductBump,
    /// `W0(x/X) W0(y/Y)` built from the smooth-step partition cell.
    PartitionCell,
}

/// Smooth compactly supported test weight on `[X, 2X] x [Y, 2Y]` with
/// analytic partial derivatives up to order two in each variable.
#[derive(Debug, Clone)]
pub struct SmoothWeight {
    pub x_scale: f64,
    pub y_scale: f64,
    /// Derivative growth scale `P`: the recorded constants bound
    /// `|x^m y^n f^(m,n)(x, y)|` by `C_{m,n} P^{m+n}`.
    pub deriv_scale: f64,
    pub kind: WeightKind,
    sharpness: f64,
}

impl SmoothWeight {
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        match self.kind {
            WeightKind::ProductBump => bump_core(t - 1.0, self.sharpness),
            WeightKind::PartitionCell => partition_cell_derivs(t),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.profile(x / self.x_scale).0 * self.profile(y / self.y_scale).0
    }

    /// `f^(m,n)(x, y)` for `m, n <= 2`.
    pub fn deriv(&self, m: u32, n: u32, x: f64, y: f64) -> f64 {
        debug_assert!(m <= 2 && n <= 2);
        let px = self.profile(x / self.x_scale);
        let py = self.profile(y / self.y_scale);
        let pick = |d: (f64, f64, f64), o: u32, s: f64| match o {
            0 => d.0,
            1 => d.1 / s,
            _ => d.2 / (s * s),
        };
        pick(px, m, self.x_scale) * pick(py, n, self.y_scale)
    }

    /// Constants `C_{m,n} = max |x^m y^n f^(m,n)| / P^{m+n}` sampled on a
    /// 20 x 20 grid over the support.
    pub fn derivative_constants(&self) -> [[f64; 3]; 3] {
        let mut c = [[0.0f64; 3]; 3];
        for i in 0..20 {
            let x = self.x_scale * (1.0 + (i as f64 + 0.5) / 20.0);
            for j in 0..20 {
                let y = self.y_scale * (1.0 + (j as f64 + 0.5) / 20.0);
                for (m, row) in c.iter_mut().enumerate() {
                    for (n, slot) in row.iter_mut().enumerate() {
                        let d = self.deriv(m as u32, n as u32, x, y).abs()
                            * x.powi(m as i32)
                            * y.powi(n as i32)
                            / self.deriv_scale.powi((m + n) as i32);
                        if d > *slot {
                            *slot = d;
                        }
                    }
                }
            }
        }
        c
    }
}

/// Product-bump weight supported on `[X, 2X] x [Y, 2Y]`. Requires scales
/// `>= 4` and `sharpness >= 1/4`; the recorded derivative scale is the
/// sharpness itself.
pub fn make_bump_weight(x_scale: f64, y_scale: f64, sharpness: f64) -> SmoothWeight {
    debug_assert!(x_scale >= 4.0 && y_scale >= 4.0 && sharpness >= 0.25);
    SmoothWeight {
        x_scale,
        y_scale,
        deriv_scale: sharpness,
        kind: WeightKind::ProductBump,
        sharpness,
    }
}

/// Partition-cell weight `W0(x/X) W0(y/Y)`, supported on `(X, 2X) x (Y, 2Y)`.
pub fn make_partition_weight(x_scale: f64, y_scale: f64) -> SmoothWeight {
    debug_assert!(x_scale >= 4.0 && y_scale >= 4.0);
    SmoothWeight {
        x_scale,
        y_scale,
        deriv_scale: 4.0,
        kind: WeightKind::PartitionCell,
        sharpness: 1.0,
    }
}

// ---------------------------------------------------------------------------
// Direct summation
// ---------------------------------------------------------------------------

/// `sum_{m - n = r} tau_k(m) tau_l(n) f(m, n)` by direct iteration over the
/// support of `f`. The tables must cover `2 max(X, Y)`.
pub fn divisor_sum_bruteforce(
    tables: &ArithTables,
    k: u32,
    l: u32,
    r: i64,
    f: &SmoothWeight,
) -> Result<f64, DivisorError> {
    let tk = tables.tau(k)?;
    let tl = tables.tau(l)?;
    let x_hi = (2.0 * f.x_scale).floor() as u64;
    let y_hi = (2.0 * f.y_scale).floor() as u64;
    let needed = x_hi.max(y_hi);
    if needed > tables.limit() as u64 {
        return Err(DivisorError::Capacity { needed, limit: tables.limit() as u64 });
    }
    let m_lo = (f.x_scale.ceil() as u64).max(1);
    let mut sum = 0.0f64;
    for m in m_lo..=x_hi {
        let n = m as i64 - r;
        if n < 1 {
            continue;
        }
        let nf = n as f64;
        if nf <= f.y_scale || nf >= 2.0 * f.y_scale {
            continue;
        }
        let w = f.eval(m as f64, nf);
        if w != 0.0 {
            sum += (tk[m as usize] * tl[n as usize]) as f64 * w;
        }
    }
    Ok(sum)
}

/// Sharp-cutoff correlation `sum_{n <= x} tau_k(n) tau_k(n + r)`, exactly in
/// integers. The tables must cover `floor(x) + r`.
pub fn divisor_sum_classical(
    tables: &ArithTables,
    k: u32,
    x: f64,
    r: u64,
) -> Result<u64, DivisorError> {
    let t = tables.tau(k)?;
    let top = x.floor() as u64;
    let needed = top + r;
    if needed > tables.limit() as u64 {
        return Err(DivisorError::Capacity { needed, limit: tables.limit() as u64 });
    }
    let mut sum = 0u64;
    for n in 1..=top {
        sum += t[n as usize] * t[(n + r) as usize];
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Main term
// ---------------------------------------------------------------------------

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Worst-case envelope for one term of the q-series on contours of radii
/// `rho1, rho2` around 1:
/// `gcd(q, r) 32^{2 omega(q)} tau_4(q)^2 q^{-2 + 2(rho1 + rho2)}`.
///
/// Uses `|c_q(r)| <= gcd(q, r)` and `|G_k(z, q)| <= 32^omega(q) tau_4(q)
/// q^rho` for `|Re z - 1| <= rho`, valid for `k <= 4`.
pub fn q_term_envelope(q: u64, r: i64, rho1: f64, rho2: f64) -> f64 {
    envelope_factored(q, &arith::factorize(q), r, rho1, rho2)
}

fn envelope_factored(q: u64, factors: &[(u64, u32)], r: i64, rho1: f64, rho2: f64) -> f64 {
    let g = gcd_u64(q, r.unsigned_abs()) as f64;
    let t4 = arith::tau_k_factored(4, factors) as f64;
    g * 32f64.powi(2 * factors.len() as i32)
        * t4
        * t4
        * (q as f64).powf(-2.0 + 2.0 * (rho1 + rho2))
}

/// Parameters of one main-term evaluation.
#[derive(Debug, Clone)]
pub struct MainTermSpec {
    pub k: u32,
    pub l: u32,
    /// Shift; must be nonzero and at most `X^{1 - epsilon_prime}` in size.
    pub r: i64,
    pub contour1: ContourCircle,
    pub contour2: ContourCircle,
    /// Truncation point of the q-series.
    pub q_max: u64,
    /// Relative tolerance for the contour-node doubling and the inner
    /// x-integral refinement.
    pub x_tolerance: f64,
    /// Exponent margin in the shift-size policy `|r| <= X^{1 - epsilon'}`.
    pub epsilon_prime: f64,
}

impl MainTermSpec {
    /// Both circles centered at `z = 1` with the given radius, tolerance
    /// `1e-7`, shift-policy margin `0.05`.
    pub fn new(k: u32, l: u32, r: i64, radius: f64, q_max: u64) -> Self {
        let center = Complex64::new(1.0, 0.0);
        MainTermSpec {
            k,
            l,
            r,
            contour1: ContourCircle::new(center, radius),
            contour2: ContourCircle::new(center, radius),
            q_max,
            x_tolerance: 1e-7,
            epsilon_prime: 0.05,
        }
    }

    fn validate(&self, f: &SmoothWeight) -> Result<(), DivisorError> {
        if !(2..=4).contains(&self.k) || !(2..=4).contains(&self.l) {
            return Err(DivisorError::Domain { what: "k and l must lie in 2..=4" });
        }
        if self.r == 0 {
            return Err(DivisorError::Domain { what: "shift r must be nonzero" });
        }
        let one = Complex64::new(1.0, 0.0);
        for c in [&self.contour1, &self.contour2] {
            if (c.center - one).norm() > 1e-12 {
                return Err(DivisorError::Domain { what: "contours must be centered at 1" });
            }
            if !(c.radius > 0.0 && c.radius < 0.1) {
                return Err(DivisorError::Domain { what: "contour radius must lie in (0, 1/10)" });
            }
        }
        if !(16..=200_000).contains(&self.q_max) {
            return Err(DivisorError::Domain { what: "q_max must lie in 16..=200000" });
        }
        if !(self.x_tolerance > 0.0 && self.x_tolerance <= 1e-2) {
            return Err(DivisorError::Domain { what: "x_tolerance must lie in (0, 1e-2]" });
        }
        if !(0.0..=0.5).contains(&self.epsilon_prime) {
            return Err(DivisorError::Domain { what: "epsilon_prime must lie in [0, 1/2]" });
        }
        let r_cap = f.x_scale.powf(1.0 - self.epsilon_prime);
        if (self.r.unsigned_abs() as f64) > r_cap {
            return Err(DivisorError::Domain { what: "|r| exceeds X^(1 - epsilon')" });
        }
        Ok(())
    }
}

/// Main-term value with its attached accuracy diagnostics.
#[derive(Debug, Clone)]
pub struct MainTermResult {
    pub value: f64,
    /// Contour-doubling difference plus the empirical q-tail estimate.
    pub error_estimate: f64,
    /// `|Im| / |Re|` of the assembled double integral before discarding the
    /// imaginary part; must be below `1e-6`.
    pub im_ratio: f64,
    /// Dyadic extrapolation of the top q-block's measured contribution.
    pub q_tail_estimate: f64,
    /// The same extrapolation applied to the worst-case term envelope;
    /// conservative by many orders of magnitude.
    pub q_tail_formula: f64,
    /// Last refinement delta of the inner x-integral matrix, on the scale of
    /// that matrix's entries.
    pub x_residual: f64,
    pub contour_nodes: usize,
}

struct QFac {
    p: u64,
    j: u32,
    pe: u32,
    rest: u32,
    cq: f64,
}

const MAX_CONTOUR_NODES: usize = 256;
const MAX_X_PANELS: usize = 512;

fn circle_nodes(c: &ContourCircle, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let th = core::f64::consts::TAU * i as f64 / n as f64;
        let u = Complex64::new(th.cos(), th.sin());
        z.push(c.center + u * c.radius);
        w.push(u * (c.radius / n as f64));
    }
    (z, w)
}

/// Matrix `A[q * n + i] = G_k(z_i, q) q^{-z_i}`, filled multiplicatively:
/// prime-power columns are evaluated directly, composite ones as products of
/// their prime-power and cofactor columns.
fn g_weight_matrix(
    k: u32,
    zn: &[Complex64],
    prep: &[QFac],
    qn: usize,
) -> Result<Vec<Complex64>, DivisorError> {
    let n = zn.len();
    let mut a = vec![Complex64::new(0.0, 0.0); (qn + 1) * n];
    for i in 0..n {
        a[n + i] = Complex64::new(1.0, 0.0);
    }
    for (q, fac) in prep.iter().enumerate().take(qn + 1).skip(2) {
        if fac.rest == 1 {
            for (i, &z) in zn.iter().enumerate() {
                let arg = PrimePowerArg { p: fac.p, j: fac.j, z };
                let g = if k == 4 {
                    arith::big_g4_prime_power(&arg)
                } else {
                    arith::big_gk_prime_power(k, &arg)?
                };
                a[q * n + i] = g * powc(q as f64, -z);
            }
        } else {
            let pe = fac.pe as usize;
            let rest = fac.rest as usize;
            for i in 0..n {
                a[q * n + i] = a[pe * n + i] * a[rest * n + i];
            }
        }
    }
    Ok(a)
}

/// `M[i * n + j] = int f(x, x - r) x^{z1_i - 1} (x - r)^{z2_j - 1} dx` on a
/// shared 15-point-per-panel grid in `u = log(x / X)`, refined by panel
/// doubling. Returns the matrix and the last refinement delta.
fn x_integral_matrix(
    spec: &MainTermSpec,
    f: &SmoothWeight,
    d1: &[Complex64],
    d2: &[Complex64],
) -> Result<(Vec<Complex64>, f64), DivisorError> {
    let n = d1.len();
    let xs = f.x_scale;
    let ys = f.y_scale;
    let r = spec.r as f64;
    let lo = xs.max(ys + r);
    let hi = (2.0 * xs).min(2.0 * ys + r);
    if !(lo < hi) {
        return Ok((vec![Complex64::new(0.0, 0.0); n * n], 0.0));
    }
    let u_lo = (lo / xs).ln();
    let u_hi = (hi / xs).ln();
    let tol = 0.05 * spec.x_tolerance;
    let mut prev: Option<Vec<Complex64>> = None;
    let mut panels = 8usize;
    let mut e1 = vec![Complex64::new(0.0, 0.0); n];
    let mut e2 = vec![Complex64::new(0.0, 0.0); n];
    loop {
        let mut nodes = Vec::with_capacity(panels * 15);
        for t in 0..panels {
            let a = u_lo + (u_hi - u_lo) * t as f64 / panels as f64;
            let b = u_lo + (u_hi - u_lo) * (t + 1) as f64 / panels as f64;
            kronrod15_nodes(a, b, &mut nodes);
        }
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for &(u, w) in &nodes {
            let x = xs * u.exp();
            let fx = f.eval(x, x - r);
            if fx == 0.0 {
                continue;
            }
            let lx = x.ln();
            let ly = (x - r).ln();
            for i in 0..n {
                e1[i] = (d1[i] * lx).exp();
                e2[i] = (d2[i] * ly).exp();
            }
            let wt = w * fx * x;
            for i in 0..n {
                let a = e1[i] * wt;
                let row = &mut m[i * n..(i + 1) * n];
                for (rj, &e) in row.iter_mut().zip(e2.iter()) {
                    *rj += a * e;
                }
            }
        }
        if let Some(p) = prev {
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (a, b) in m.iter().zip(p.iter()) {
                diff = diff.max((a - b).norm());
                scale = scale.max(a.norm());
            }
            if diff <= tol * scale {
                return Ok((m, diff));
            }
        }
        prev = Some(m);
        panels *= 2;
        if panels > MAX_X_PANELS {
            return Err(DivisorError::NonConvergence { what: "x-integral panel refinement" });
        }
    }
}

/// One full evaluation of the double contour integral at `n` nodes per
/// circle. Returns the total, the contribution of the top half of the
/// q-range, and the x-integral refinement residual.
fn contour_pass(
    spec: &MainTermSpec,
    f: &SmoothWeight,
    prep: &[QFac],
    n: usize,
) -> Result<(Complex64, Complex64, f64), DivisorError> {
    let qn = spec.q_max as usize;
    let (z1, w1) = circle_nodes(&spec.contour1, n);
    let (z2, w2) = circle_nodes(&spec.contour2, n);
    let mut zk1 = Vec::with_capacity(n);
    let mut zk2 = Vec::with_capacity(n);
    for i in 0..n {
        zk1.push(special::zeta(z1[i])?.powi(spec.k as i32));
        zk2.push(special::zeta(z2[i])?.powi(spec.l as i32));
    }
    let a = g_weight_matrix(spec.k, &z1, prep, qn)?;
    let same = spec.k == spec.l
        && spec.contour1.center == spec.contour2.center
        && spec.contour1.radius == spec.contour2.radius;
    let b_store;
    let b: &[Complex64] = if same {
        &a
    } else {
        b_store = g_weight_matrix(spec.l, &z2, prep, qn)?;
        &b_store
    };

    let d1: Vec<Complex64> = z1.iter().map(|&z| z - 1.0).collect();
    let d2: Vec<Complex64> = z2.iter().map(|&z| z - 1.0).collect();
    let (mx, x_res) = x_integral_matrix(spec, f, &d1, &d2)?;

    let half = qn / 2;
    let mut s_lo = vec![Complex64::new(0.0, 0.0); n * n];
    let mut s_hi = vec![Complex64::new(0.0, 0.0); n * n];
    for (q, fac) in prep.iter().enumerate().take(qn + 1).skip(1) {
        let c = fac.cq;
        if c == 0.0 {
            continue;
        }
        let target = if q > half { &mut s_hi } else { &mut s_lo };
        let arow = &a[q * n..(q + 1) * n];
        let brow = &b[q * n..(q + 1) * n];
        for i in 0..n {
            let ca = arow[i] * c;
            let row = &mut target[i * n..(i + 1) * n];
            for (rj, &bj) in row.iter_mut().zip(brow.iter()) {
                *rj += ca * bj;
            }
        }
    }

    let mut d = Complex64::new(0.0, 0.0);
    let mut dhi = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let wi = w1[i] * zk1[i];
        for j in 0..n {
            let m = mx[i * n + j] * wi * w2[j] * zk2[j];
            d += m * (s_lo[i * n + j] + s_hi[i * n + j]);
            dhi += m * s_hi[i * n + j];
        }
    }
    Ok((d, dhi, x_res))
}

/// Evaluates the main-term double contour integral for the shifted
/// correlation weighted by `f`, with the q-series truncated at
/// `spec.q_max`.
///
/// The contour trapezoid is doubled until two passes agree to
/// `spec.x_tolerance`; the q-tail is estimated by extrapolating the measured
/// contribution of the top dyadic q-block with ratio `2^{2(rho1+rho2)-1}`.
/// Fails with a precision error if that estimate exceeds 2% of the value,
/// and with an imaginary-residue error if the result is not real to `1e-6`.
pub fn main_term(spec: &MainTermSpec, f: &SmoothWeight) -> Result<MainTermResult, DivisorError> {
    spec.validate(f)?;
    let qn = spec.q_max as usize;
    let rho_sum = spec.contour1.radius + spec.contour2.radius;

    let mut prep = Vec::with_capacity(qn + 1);
    prep.push(QFac { p: 0, j: 0, pe: 0, rest: 0, cq: 0.0 });
    prep.push(QFac { p: 0, j: 0, pe: 0, rest: 1, cq: 1.0 });
    let quarter = qn / 4;
    let half = qn / 2;
    let mut env_lo = 0.0f64;
    let mut env_hi = 0.0f64;
    for q in 2..=qn {
        let fs = arith::factorize(q as u64);
        let (p, j) = fs[0];
        let pe = p.pow(j);
        let env = envelope_factored(
            q as u64,
            &fs,
            spec.r,
            spec.contour1.radius,
            spec.contour2.radius,
        );
        if q > half {
            env_hi += env;
        } else if q > quarter {
            env_lo += env;
        }
        prep.push(QFac {
            p,
            j,
            pe: pe as u32,
            rest: (q as u64 / pe) as u32,
            cq: arith::ramanujan_sum(q as u64, spec.r) as f64,
        });
    }
    let q_tail_formula = if env_hi == 0.0 {
        0.0
    } else if env_lo > env_hi {
        let rho = env_hi / env_lo;
        env_hi * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };

    let tol = spec.x_tolerance.max(1e-11);
    let mut prev: Option<Complex64> = None;
    let mut n = 32usize;
    let (d, dhi, x_res, contour_err, nodes) = loop {
        let (d, dhi, x_res) = contour_pass(spec, f, &prep, n)?;
        if let Some(p) = prev {
            let diff = (d - p).norm();
            if diff <= tol * d.norm().max(1e-300) {
                break (d, dhi, x_res, diff, n);
            }
        }
        if n >= MAX_CONTOUR_NODES {
            return Err(DivisorError::NonConvergence { what: "contour node doubling" });
        }
        prev = Some(d);
        n *= 2;
    };

    let rho = 2f64.powf(2.0 * rho_sum - 1.0);
    let q_tail = dhi.norm() * rho / (1.0 - rho);
    let scale = d.norm();
    if scale > 0.0 && q_tail > 0.02 * scale {
        return Err(DivisorError::Precision { estimate: q_tail, tolerance: 0.02 * scale });
    }
    let im_ratio = if d.re != 0.0 {
        (d.im / d.re).abs()
    } else if d.im == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    if im_ratio >= 1e-6 {
        return Err(DivisorError::ImaginaryResidue { ratio: im_ratio });
    }
    Ok(MainTermResult {
        value: d.re,
        error_estimate: contour_err + q_tail,
        im_ratio,
        q_tail_estimate: q_tail,
        q_tail_formula,
        x_residual: x_res,
        contour_nodes: nodes,
    })
}

/// One row of a correlation experiment: both routes and their difference,
/// raw and divided by `X^{1/2 + epsilon0}`. Carries no verdict; for
/// `k = l = 2` the discrepancy is a theorem-backed error term, beyond that
/// it is the quantity under study.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub k: u32,
    pub l: u32,
    pub r: i64,
    pub x_scale: f64,
    pub y_scale: f64,
    pub q_max: u64,
    pub radius1: f64,
    pub radius2: f64,
    pub bruteforce: f64,
    pub main_term: f64,
    pub abs_error: f64,
    pub normalized_error: f64,
    pub epsilon0: f64,
}

/// Runs both routes for one `(k, l, r, f)` and records the comparison.
pub fn conjecture_experiment(
    tables: &ArithTables,
    spec: &MainTermSpec,
    f: &SmoothWeight,
    epsilon0: f64,
) -> Result<ExperimentRecord, DivisorError> {
    let brute = divisor_sum_bruteforce(tables, spec.k, spec.l, spec.r, f)?;
    let main = main_term(spec, f)?;
    let abs_error = (brute - main.value).abs();
    Ok(ExperimentRecord {
        k: spec.k,
        l: spec.l,
        r: spec.r,
        x_scale: f.x_scale,
        y_scale: f.y_scale,
        q_max: spec.q_max,
        radius1: spec.contour1.radius,
        radius2: spec.contour2.radius,
        bruteforce: brute,
        main_term: main.value,
        abs_error,
        normalized_error: abs_error / f.x_scale.powf(0.5 + epsilon0),
        epsilon0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_tables;

    fn next_f64(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    fn fd(f: &SmoothWeight, m: u32, n: u32, x: f64, y: f64) -> f64 {
        let hx = if m == 2 { 4e-5 } else { 1e-5 } * f.x_scale;
        let hy = if n == 2 { 4e-5 } else { 1e-5 } * f.y_scale;
        match (m, n) {
            (0, 0) => f.eval(x, y),
            (1, 0) => (f.eval(x + hx, y) - f.eval(x - hx, y)) / (2.0 * hx),
            (0, 1) => (f.eval(x, y + hy) - f.eval(x, y - hy)) / (2.0 * hy),
            (2, 0) => (f.eval(x + hx, y) - 2.0 * f.eval(x, y) + f.eval(x - hx, y)) / (hx * hx),
            (0, 2) => (f.eval(x, y + hy) - 2.0 * f.eval(x, y) + f.eval(x, y - hy)) / (hy * hy),
            (1, 1) => {
                (f.eval(x + hx, y + hy) - f.eval(x + hx, y - hy) - f.eval(x - hx, y + hy)
                    + f.eval(x - hx, y - hy))
                    / (4.0 * hx * hy)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn bump_profile_vanishes_off_window() {
        let f = make_bump_weight(1000.0, 2000.0, 1.0);
        assert!(f.eval(1500.0, 3000.0) > 0.0);
        assert_eq!(f.eval(990.0, 3000.0), 0.0);
        assert_eq!(f.eval(2000.0, 3000.0), 0.0);
        assert_eq!(f.eval(1500.0, 1999.0), 0.0);
        assert_eq!(f.eval(1500.0, 4000.0), 0.0);
        let g = make_partition_weight(1000.0, 2000.0);
        assert!(g.eval(1500.0, 3000.0) > 0.0);
        assert_eq!(g.eval(999.0, 3000.0), 0.0);
        assert_eq!(g.eval(1500.0, 4001.0), 0.0);
    }

    #[test]
    fn weight_derivatives_match_central_differences() {
        for f in [
            make_bump_weight(1000.0, 1500.0, 1.0),
            make_partition_weight(1000.0, 2000.0),
        ] {
            for &(m, n) in &[(1u32, 0u32), (0, 1), (2, 0), (0, 2), (1, 1)] {
                let mut state = 0x1234_5678_9abc_def0u64 ^ ((m as u64) << 8 | n as u64);
                let mut worst = 0.0f64;
                let mut scale = 0.0f64;
                let mut pts = Vec::new();
                for _ in 0..50 {
                    let x = f.x_scale * (1.02 + 0.96 * next_f64(&mut state));
                    let y = f.y_scale * (1.02 + 0.96 * next_f64(&mut state));
                    let an = f.deriv(m, n, x, y);
                    scale = scale.max(an.abs());
                    pts.push((x, y, an));
                }
                for (x, y, an) in pts {
                    worst = worst.max((fd(&f, m, n, x, y) - an).abs());
                }
                assert!(
                    worst <= 1e-6 * scale,
                    "kind {:?} order ({m},{n}): worst {worst:.3e} scale {scale:.3e}",
                    f.kind
                );
            }
        }
    }

    #[test]
    fn derivative_constants_are_recorded_and_modest() {
        let c = make_bump_weight(1e5, 1e5, 1.0).derivative_constants();
        assert!(c[0][0] > 0.0 && c[0][0] <= 1.0);
        for row in &c {
            for &v in row {
                assert!(v.is_finite() && v > 0.0 && v < 1e4);
            }
        }
        let cp = make_partition_weight(1e5, 1e5).derivative_constants();
        for row in &cp {
            for &v in row {
                assert!(v.is_finite() && v < 1e5);
            }
        }
    }

    #[test]
    fn smoothstep_is_a_partition_of_two() {
        let mut state = 7u64;
        for _ in 0..100 {
            let v = next_f64(&mut state);
            let (a, da, _) = smoothstep_derivs(v);
            let (b, _, _) = smoothstep_derivs(1.0 - v);
            assert!((a + b - 1.0).abs() < 1e-15);
            assert!(da >= 0.0);
        }
        assert_eq!(smoothstep_derivs(-0.5), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep_derivs(1.5), (1.0, 0.0, 0.0));
    }

    #[test]
    fn partition_cells_sum_to_one_everywhere() {
        let at_one: f64 = partition_of_unity(1.0, -4, 4).iter().sum();
        assert!((at_one - 1.0).abs() < 1e-15);
        let big: f64 = partition_of_unity(1e6, 30, 45).iter().sum();
        assert!((big - 1.0).abs() < 1e-12);
        let mut state = 99u64;
        for _ in 0..200 {
            let x = 10f64.powf(9.0 * next_f64(&mut state));
            let lo = (2.0 * x.log2()).floor() as i64 - 3;
            let cells = partition_of_unity(x, lo, lo + 8);
            let nonzero = cells.iter().filter(|&&w| w > 0.0).count();
            assert!(nonzero >= 1 && nonzero <= 2, "x={x}: {nonzero} cells");
            let total: f64 = cells.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(cells.iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn classical_binary_values_match_hand_sums() {
        let tables = build_tables(100, &[2]).unwrap();
        assert_eq!(divisor_sum_classical(&tables, 2, 4.0, 1).unwrap(), 18);
        assert_eq!(divisor_sum_classical(&tables, 2, 1.0, 1).unwrap(), 2);
        assert!(matches!(
            divisor_sum_classical(&tables, 2, 99.0, 5),
            Err(DivisorError::Capacity { .. })
        ));
    }

    #[test]
    fn classical_quaternary_matches_tuple_convolution() {
        let tables = build_tables(50, &[4]).unwrap();
        let tau = |n: u64| (1..=n).filter(|d| n % d == 0).count() as u64;
        let tau4 = |n: u64| -> u64 { (1..=n).filter(|d| n % d == 0).map(|d| tau(d) * tau(n / d)).sum() };
        let want: u64 = (1..=10u64).map(|n| tau4(n) * tau4(n + 2)).sum();
        assert_eq!(divisor_sum_classical(&tables, 4, 10.0, 2).unwrap(), want);
    }

    #[test]
    fn bruteforce_matches_direct_reimplementation() {
        let tables = build_tables(4_100, &[2, 3]).unwrap();
        let f = make_bump_weight(1000.0, 1100.0, 1.0);
        let got = divisor_sum_bruteforce(&tables, 2, 3, 7, &f).unwrap();
        let t2 = tables.tau(2).unwrap();
        let t3 = tables.tau(3).unwrap();
        let mut want = 0.0;
        for m in 1..=4_000u64 {
            let n = m as i64 - 7;
            if n < 1 {
                continue;
            }
            let w = f.eval(m as f64, n as f64);
            if w != 0.0 {
                want += (t2[m as usize] * t3[n as usize]) as f64 * w;
            }
        }
        assert!(want > 0.0);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn bruteforce_symmetric_under_shift_negation() {
        let tables = build_tables(3_100, &[2, 3]).unwrap();
        let fxy = make_bump_weight(1000.0, 1500.0, 1.0);
        let fyx = make_bump_weight(1500.0, 1000.0, 1.0);
        let a = divisor_sum_bruteforce(&tables, 2, 3, 5, &fxy).unwrap();
        let b = divisor_sum_bruteforce(&tables, 3, 2, -5, &fyx).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn bruteforce_unchanged_by_larger_sieve() {
        let small = build_tables(3_000, &[2]).unwrap();
        let large = build_tables(6_000, &[2]).unwrap();
        let f = make_bump_weight(1000.0, 1000.0, 1.0);
        let a = divisor_sum_bruteforce(&small, 2, 2, 3, &f).unwrap();
        let b = divisor_sum_bruteforce(&large, 2, 2, 3, &f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn main_term_binary_tracks_bruteforce() {
        let tables = build_tables(20_100, &[2]).unwrap();
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let spec = MainTermSpec::new(2, 2, 1, 0.05, 2000);
        let brute = divisor_sum_bruteforce(&tables, 2, 2, 1, &f).unwrap();
        let main = main_term(&spec, &f).unwrap();
        assert!(main.im_ratio < 1e-6);
        let rel = (brute - main.value).abs() / brute;
        assert!(rel < 0.15, "brute {brute:.4e} main {:.4e} rel {rel:.3e}", main.value);
    }

    #[test]
    fn main_term_even_in_shift() {
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let mut spec = MainTermSpec::new(2, 2, 3, 0.05, 600);
        spec.x_tolerance = 1e-9;
        let plus = main_term(&spec, &f).unwrap();
        spec.r = -3;
        let minus = main_term(&spec, &f).unwrap();
        let rel = (plus.value - minus.value).abs() / plus.value.abs();
        assert!(rel < 1e-6, "r=+3 {:.6e} r=-3 {:.6e}", plus.value, minus.value);
    }

    #[test]
    fn main_term_radius_independent() {
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let mut small = MainTermSpec::new(2, 2, 2, 0.04, 500);
        small.x_tolerance = 1e-9;
        let mut large = MainTermSpec::new(2, 2, 2, 0.06, 500);
        large.x_tolerance = 1e-9;
        let a = main_term(&small, &f).unwrap();
        let b = main_term(&large, &f).unwrap();
        let rel = (a.value - b.value).abs() / a.value.abs();
        assert!(rel < 1e-6, "radius 0.04 {:.8e} vs 0.06 {:.8e}", a.value, b.value);
    }

    #[test]
    fn main_term_qmax_doubling_within_tail_estimate() {
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let coarse = MainTermSpec::new(2, 2, 1, 0.05, 1000);
        let fine = MainTermSpec::new(2, 2, 1, 0.05, 2000);
        let a = main_term(&coarse, &f).unwrap();
        let b = main_term(&fine, &f).unwrap();
        let shift = (a.value - b.value).abs();
        assert!(a.q_tail_estimate < 0.02 * a.value.abs());
        assert!(
            shift <= 5.0 * a.q_tail_estimate + 1e-9 * a.value.abs(),
            "shift {shift:.3e} tail {:.3e}",
            a.q_tail_estimate
        );
        assert!(a.q_tail_formula > a.q_tail_estimate);
    }

    #[test]
    fn q_term_envelope_dominates_terms() {
        let mut state = 0xfeed_beefu64;
        let r = 6i64;
        for k in 2..=4u32 {
            let circle = ContourCircle::new(Complex64::new(1.0, 0.0), 0.05);
            for _ in 0..25 {
                let q = 1 + (next_f64(&mut state) * 4999.0) as u64;
                let th1 = core::f64::consts::TAU * next_f64(&mut state);
                let th2 = core::f64::consts::TAU * next_f64(&mut state);
                let z1 = circle.center + Complex64::new(th1.cos(), th1.sin()) * circle.radius;
                let z2 = circle.center + Complex64::new(th2.cos(), th2.sin()) * circle.radius;
                let fs = arith::factorize(q);
                let g1 = arith::big_gk_factored(k, z1, &fs).unwrap();
                let g2 = arith::big_gk_factored(k, z2, &fs).unwrap();
                let c = arith::ramanujan_sum(q, r) as f64;
                let term = (g1 * g2 * powc(q as f64, -z1 - z2) * c).norm();
                let env = q_term_envelope(q, r, 0.05, 0.05);
                assert!(term <= env * (1.0 + 1e-12), "k={k} q={q}: {term:.3e} > {env:.3e}");
            }
        }
    }

    #[test]
    fn main_term_rejects_out_of_range_parameters() {
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let bad_radius = MainTermSpec::new(2, 2, 1, 0.15, 500);
        assert!(matches!(main_term(&bad_radius, &f), Err(DivisorError::Domain { .. })));
        let zero_shift = MainTermSpec::new(2, 2, 0, 0.05, 500);
        assert!(matches!(main_term(&zero_shift, &f), Err(DivisorError::Domain { .. })));
        let tiny_q = MainTermSpec::new(2, 2, 1, 0.05, 8);
        assert!(matches!(main_term(&tiny_q, &f), Err(DivisorError::Domain { .. })));
        let huge_shift = MainTermSpec::new(2, 2, 7000, 0.05, 500);
        assert!(matches!(main_term(&huge_shift, &f), Err(DivisorError::Domain { .. })));
        let k_out = MainTermSpec::new(5, 2, 1, 0.05, 500);
        assert!(matches!(main_term(&k_out, &f), Err(DivisorError::Domain { .. })));
    }

    #[test]
    fn experiment_record_fields_consistent() {
        let tables = build_tables(20_100, &[2]).unwrap();
        let f = make_bump_weight(1e4, 1e4, 1.0);
        let spec = MainTermSpec::new(2, 2, 1, 0.05, 600);
        let rec = conjecture_experiment(&tables, &spec, &f, 0.01).unwrap();
        assert_eq!(rec.k, 2);
        assert_eq!(rec.q_max, 600);
        assert_eq!(rec.radius1, 0.05);
        assert!((rec.abs_error - (rec.bruteforce - rec.main_term).abs()).abs() < 1e-12);
        let norm = rec.abs_error / 1e4f64.powf(0.51);
        assert!((rec.normalized_error - norm).abs() < 1e-12 * norm.max(1.0));
    }
}
