//! Quadrature and small linear-algebra kernels: spectrally convergent circle
//! contours for Cauchy integrals and derivatives, adaptive Gauss-Kronrod
//! integration on real intervals with complex integrands, a dense solver for
//! polynomial fitting, exact big-rational helpers, and double-double scalars
//! for the few evaluations that need more than f64 precision.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

pub type Rat = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq)]
pub enum NumError {
    /// Quadrature hit its evaluation cap; carries the best estimate so far.
    NonConvergence {
        what: &'static str,
        best: Complex64,
        err_estimate: f64,
    },
    /// Linear system has no pivot above the degeneracy threshold.
    Singular,
}

impl fmt::Display for NumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumError::NonConvergence { what, err_estimate, .. } => {
                write!(f, "{what}: no convergence, error estimate {err_estimate:.3e}")
            }
            NumError::Singular => write!(f, "singular linear system"),
        }
    }
}

impl core::error::Error for NumError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub err_estimate: f64,
    pub evaluations: usize,
}

/// Circle contour `center + radius e^{i theta}`, traversed counterclockwise.
#[derive(Debug, Clone, Copy)]
pub struct ContourCircle {
    pub center: Complex64,
    pub radius: f64,
}

impl ContourCircle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        ContourCircle { center, radius }
    }

    fn node(&self, k: usize, n: usize) -> (Complex64, Complex64) {
        let theta = core::f64::consts::TAU * k as f64 / n as f64;
        let u = Complex64::new(theta.cos(), theta.sin());
        (self.center + u * self.radius, u)
    }
}

const CIRCLE_START: usize = 64;
const CIRCLE_MAX: usize = 1 << 14;

/// `(1/2 pi i) closed-integral f(z) dz` over the circle, by the trapezoid rule
/// with node doubling. Stops when successive estimates agree to
/// `tol * max(1, |value|)`; the trapezoid rule converges geometrically for
/// integrands analytic in an annulus around the contour.
pub fn cauchy_circle_integral(
    f: &mut dyn FnMut(Complex64) -> Complex64,
    circle: &ContourCircle,
    tol: f64,
) -> Result<QuadResult, NumError> {
    let mut n = CIRCLE_START;
    let mut vals: Vec<Complex64> = (0..n).map(|k| f(circle.node(k, n).0)).collect();
    let mut evals = n;
    let mut prev: Option<Complex64> = None;
    loop {
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, v) in vals.iter().enumerate() {
            sum += *v * circle.node(k, n).1;
        }
        let est = sum * (circle.radius / n as f64);
        if let Some(p) = prev {
            let err = (est - p).norm();
            if err <= tol * est.norm().max(1.0) {
                return Ok(QuadResult { value: est, err_estimate: err, evaluations: evals });
            }
            if n >= CIRCLE_MAX {
                return Err(NumError::NonConvergence {
                    what: "circle contour integral",
                    best: est,
                    err_estimate: err,
                });
            }
        }
        prev = Some(est);
        let n2 = 2 * n;
        let mut next = vec![Complex64::new(0.0, 0.0); n2];
        for k in 0..n {
            next[2 * k] = vals[k];
        }
        for k in 0..n {
            next[2 * k + 1] = f(circle.node(2 * k + 1, n2).0);
        }
        evals += n;
        vals = next;
        n = n2;
    }
}

/// `f^(order)(center)` by Cauchy's formula on the circle:
/// `order!/(N R^order) sum_k f(z_k) e^{-i order theta_k}`.
pub fn cauchy_derivative(
    f: &mut dyn FnMut(Complex64) -> Complex64,
    circle: &ContourCircle,
    order: u32,
    tol: f64,
) -> Result<QuadResult, NumError> {
    let fact: f64 = (1..=order as u64).map(|i| i as f64).product();
    let mut n = CIRCLE_START;
    let mut vals: Vec<Complex64> = (0..n).map(|k| f(circle.node(k, n).0)).collect();
    let mut evals = n;
    let mut prev: Option<Complex64> = None;
    loop {
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, v) in vals.iter().enumerate() {
            let theta = core::f64::consts::TAU * k as f64 * order as f64 / n as f64;
            sum += *v * Complex64::new(theta.cos(), -theta.sin());
        }
        let est = sum * (fact / (n as f64 * circle.radius.powi(order as i32)));
        if let Some(p) = prev {
            let err = (est - p).norm();
            if err <= tol * est.norm().max(1.0) {
                return Ok(QuadResult { value: est, err_estimate: err, evaluations: evals });
            }
            if n >= CIRCLE_MAX {
                return Err(NumError::NonConvergence {
                    what: "circle derivative",
                    best: est,
                    err_estimate: err,
                });
            }
        }
        prev = Some(est);
        let n2 = 2 * n;
        let mut next = vec![Complex64::new(0.0, 0.0); n2];
        for k in 0..n {
            next[2 * k] = vals[k];
        }
        for k in 0..n {
            next[2 * k + 1] = f(circle.node(2 * k + 1, n2).0);
        }
        evals += n;
        vals = next;
        n = n2;
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Nodes and weights of the 15-point rule scaled to `[a, b]`; the weights
/// sum to `b - a`. Used where an integrand must be tabulated on a shared
/// grid instead of integrated through a closure.
pub(crate) fn kronrod15_nodes(a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    out.push((c, h * WGK[7]));
    for j in 0..7 {
        let x = h * XGK[j];
        let w = h * WGK[j];
        out.push((c - x, w));
        out.push((c + x, w));
    }
}

fn qk15(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    for j in 0..3 {
        let x = h * XGK[2 * j + 1];
        let fsum = f(c - x) + f(c + x);
        resg += fsum * WG[j];
        resk += fsum * WGK[2 * j + 1];
    }
    for j in 0..4 {
        let x = h * XGK[2 * j];
        let fsum = f(c - x) + f(c + x);
        resk += fsum * WGK[2 * j];
    }
    (resk * h, ((resk - resg) * h).norm())
}

struct Segment {
    err: f64,
    a: f64,
    b: f64,
    value: Complex64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integral of a complex-valued function over `[a, b]`:
/// Gauss-Kronrod 7-15 with globally worst-first interval bisection.
pub fn adaptive_line_quadrature(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    tol_abs: f64,
    tol_rel: f64,
    max_segments: usize,
) -> Result<QuadResult, NumError> {
    debug_assert!(a < b);
    let mut heap = BinaryHeap::new();
    let (v, e) = qk15(f, a, b);
    heap.push(Segment { err: e, a, b, value: v });
    let mut evals = 15usize;
    let mut total = v;
    let mut total_err = e;
    while heap.len() < max_segments {
        if total_err <= tol_abs + tol_rel * total.norm() {
            return Ok(QuadResult { value: total, err_estimate: total_err, evaluations: evals });
        }
        let worst = heap.pop().expect("heap nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = qk15(f, worst.a, mid);
        let (v2, e2) = qk15(f, mid, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { err: e1, a: worst.a, b: mid, value: v1 });
        heap.push(Segment { err: e2, a: mid, b: worst.b, value: v2 });
    }
    if total_err <= tol_abs + tol_rel * total.norm() {
        return Ok(QuadResult { value: total, err_estimate: total_err, evaluations: evals });
    }
    Err(NumError::NonConvergence {
        what: "adaptive line quadrature",
        best: total,
        err_estimate: total_err,
    })
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major, consumed along with `b`.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, NumError> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(NumError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

/// Coefficients `c_0..c_{n-1}` of the unique degree-`n-1` polynomial through
/// the `n` points, by a Vandermonde solve. Callers should center and scale
/// `xs` into `[-1, 1]` first to keep the system well conditioned.
pub fn polyfit_exact(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, NumError> {
    let n = xs.len();
    debug_assert!(ys.len() == n);
    let mut a = Vec::with_capacity(n);
    for &x in xs {
        let mut row = Vec::with_capacity(n);
        let mut xp = 1.0;
        for _ in 0..n {
            row.push(xp);
            xp *= x;
        }
        a.push(row);
    }
    solve_linear(a, ys.to_vec())
}

/// Interpolating-polynomial coefficients over the rationals: Gaussian
/// elimination of the Vandermonde system in exact arithmetic, so the usual
/// conditioning loss of equispaced nodes does not apply. Coefficient `i` of
/// the result multiplies `x^i`. The nodes must be pairwise distinct.
pub fn polyfit_rational(xs: &[Rat], ys: &[Rat]) -> Result<Vec<Rat>, NumError> {
    let n = xs.len();
    debug_assert!(ys.len() == n);
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(n);
    for x in xs {
        let mut row = Vec::with_capacity(n);
        let mut xp = Rat::one();
        for _ in 0..n {
            row.push(xp.clone());
            xp = &xp * x;
        }
        a.push(row);
    }
    let mut b = ys.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&i| !a[i][col].is_zero())
            .ok_or(NumError::Singular)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &a[col][col];
            for k in col..n {
                let t = &factor * &a[col][k];
                a[row][k] -= t;
            }
            let t = &factor * &b[col];
            b[row] -= t;
        }
    }
    let mut out = vec![Rat::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col].clone();
        for k in col + 1..n {
            acc -= &a[col][k] * &out[k];
        }
        out[col] = acc / &a[col][col];
    }
    Ok(out)
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_ratio(num: i64, den: i64) -> Rat {
    debug_assert!(den != 0);
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial_rat(n: u64) -> Rat {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    Rat::from_integer(acc)
}

pub fn binomial_rat(n: u64, k: u64) -> Rat {
    if k > n {
        return rat_int(0);
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    Rat::new(num, den)
}

/// Nearest f64 to an exact rational.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational out of f64 range")
}

/// Bernoulli numbers `B_0 ..= B_n` as exact rationals, from the recurrence
/// `sum_{j <= m} C(m+1, j) B_j = 0` (so `B_1 = -1/2`).
pub fn bernoulli_numbers(n: usize) -> Vec<Rat> {
    let mut b: Vec<Rat> = Vec::with_capacity(n + 1);
    b.push(Rat::one());
    for m in 1..=n {
        let mut acc = rat_int(0);
        for (j, bj) in b.iter().enumerate() {
            acc += binomial_rat(m as u64 + 1, j as u64) * bj;
        }
        b.push(-acc / rat_int(m as i64 + 1));
    }
    b
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Requires `|a| >= |b|` or `a == 0`.
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double scalar: the unevaluated sum `hi + lo` of two floats,
/// carrying roughly 106 bits of precision through the classic error-free
/// transformations. Used where a functional amplifies node-level rounding
/// beyond what f64 evaluation can absorb, as in the residue-polynomial
/// leading-coefficient extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// pi as a double-double pair.
pub const DD_PI: Dd = Dd { hi: 3.141592653589793, lo: 1.2246467991473532e-16 };
/// log 2 as a double-double pair.
pub const DD_LN2: Dd = Dd { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };

/// Series cutoff for the elementary-function expansions below; safely under
/// the ~1e-32 representable resolution near 1.
const DD_TERM_FLOOR: f64 = 1e-35;

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// Normalizing constructor; accepts any pair of floats.
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact scaling by `2^k`.
    pub fn mul_pow2(self, k: i32) -> Dd {
        let s = 2.0f64.powi(k);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    /// Division by a plain f64 with a full double-double quotient.
    pub fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = self - Dd { hi: p, lo: e };
        let q2 = (r.hi + r.lo) / d;
        let (s, e2) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e2 }
    }

    pub fn from_rat(r: &Rat) -> Dd {
        let hi = rat_to_f64(r);
        let rest = r - Rat::from_float(hi).expect("finite rational head");
        Dd::new(hi, rat_to_f64(&rest))
    }

    /// Exact rational value of the pair; `None` for non-finite parts.
    pub fn to_rat(self) -> Option<Rat> {
        Some(Rat::from_float(self.hi)? + Rat::from_float(self.lo)?)
    }

    /// `e^x` for `|x| < 40` by reduction modulo log 2 and a Taylor tail.
    pub fn exp(self) -> Dd {
        debug_assert!(self.hi.abs() < 40.0);
        let k = (self.hi / DD_LN2.hi).round();
        let r = self - DD_LN2 * k;
        let mut sum = Dd::ONE + r;
        let mut term = r;
        let mut i = 2.0f64;
        loop {
            term = (term * r).div_f64(i);
            sum = sum + term;
            if term.hi.abs() < DD_TERM_FLOOR {
                break;
            }
            i += 1.0;
        }
        sum.mul_pow2(k as i32)
    }

    /// Natural log of a positive value: scale into `[1, 2)`, then the
    /// arctanh series in `(f - 1)/(f + 1)`, which stays below 1/3.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let m = self.hi.log2().floor() as i32;
        let f = self.mul_pow2(-m);
        let z = (f - 1.0) / (f + 1.0);
        let z2 = z * z;
        let mut sum = z;
        let mut term = z;
        let mut k = 1.0f64;
        loop {
            term = term * z2;
            let add = term.div_f64(2.0 * k + 1.0);
            sum = sum + add;
            if add.hi.abs() < DD_TERM_FLOOR {
                break;
            }
            k += 1.0;
        }
        DD_LN2 * (m as f64) + sum * 2.0
    }

    /// Log of an integer; the dyadic scaling makes the reduction exact.
    pub fn ln_u64(n: u64) -> Dd {
        debug_assert!(n >= 1);
        if n == 1 {
            return Dd::ZERO;
        }
        Dd::from_f64(n as f64).ln()
    }

    /// Simultaneous sine and cosine for `|x| <= 2.8`, where the direct
    /// Taylor series has no cancellation worth reducing for.
    pub fn sin_cos(self) -> (Dd, Dd) {
        debug_assert!(self.hi.abs() <= 2.8);
        let x2 = self * self;
        let mut sin = Dd::ONE;
        let mut term = Dd::ONE;
        let mut k = 1.0f64;
        loop {
            term = (term * x2).div_f64(-(2.0 * k) * (2.0 * k + 1.0));
            sin = sin + term;
            if term.hi.abs() < DD_TERM_FLOOR {
                break;
            }
            k += 1.0;
        }
        let mut cos = Dd::ONE;
        term = Dd::ONE;
        k = 1.0;
        loop {
            term = (term * x2).div_f64(-(2.0 * k - 1.0) * (2.0 * k));
            cos = cos + term;
            if term.hi.abs() < DD_TERM_FLOOR {
                break;
            }
            k += 1.0;
        }
        (sin * self, cos)
    }
}

impl core::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl core::ops::Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Dd { hi: s1, lo: s2 }
    }
}

impl core::ops::Add<f64> for Dd {
    type Output = Dd;
    fn add(self, rhs: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs);
        let (s1, s2) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi: s1, lo: s2 }
    }
}

impl core::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl core::ops::Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, rhs: f64) -> Dd {
        self + (-rhs)
    }
}

impl core::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let (s, e2) = quick_two_sum(p, e + (self.hi * rhs.lo + self.lo * rhs.hi));
        Dd { hi: s, lo: e2 }
    }
}

impl core::ops::Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        let (s, e2) = quick_two_sum(p, e + self.lo * rhs);
        Dd { hi: s, lo: e2 }
    }
}

impl core::ops::Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        debug_assert!(rhs.hi != 0.0);
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + q3
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ZERO: DdComplex = DdComplex { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: DdComplex = DdComplex { re: Dd::ONE, im: Dd::ZERO };

    pub fn new(re: Dd, im: Dd) -> DdComplex {
        DdComplex { re, im }
    }

    pub fn from_f64(re: f64, im: f64) -> DdComplex {
        DdComplex { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    pub fn to_complex64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add_re(self, x: f64) -> DdComplex {
        DdComplex { re: self.re + x, im: self.im }
    }

    pub fn scale(self, x: f64) -> DdComplex {
        DdComplex { re: self.re * x, im: self.im * x }
    }

    pub fn mul_real(self, x: Dd) -> DdComplex {
        DdComplex { re: self.re * x, im: self.im * x }
    }

    pub fn div_f64(self, d: f64) -> DdComplex {
        DdComplex { re: self.re.div_f64(d), im: self.im.div_f64(d) }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn powi(self, n: u32) -> DdComplex {
        let mut acc = DdComplex::ONE;
        let mut base = self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn exp(self) -> DdComplex {
        let (s, c) = self.im.sin_cos();
        let e = self.re.exp();
        DdComplex { re: e * c, im: e * s }
    }
}

impl core::ops::Neg for DdComplex {
    type Output = DdComplex;
    fn neg(self) -> DdComplex {
        DdComplex { re: -self.re, im: -self.im }
    }
}

impl core::ops::Add for DdComplex {
    type Output = DdComplex;
    fn add(self, rhs: DdComplex) -> DdComplex {
        DdComplex { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl core::ops::Sub for DdComplex {
    type Output = DdComplex;
    fn sub(self, rhs: DdComplex) -> DdComplex {
        DdComplex { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl core::ops::Mul for DdComplex {
    type Output = DdComplex;
    fn mul(self, rhs: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl core::ops::Div for DdComplex {
    type Output = DdComplex;
    fn div(self, rhs: DdComplex) -> DdComplex {
        let n2 = rhs.norm_sqr();
        debug_assert!(n2.hi > 0.0);
        let re = self.re * rhs.re + self.im * rhs.im;
        let im = self.im * rhs.re - self.re * rhs.im;
        DdComplex { re: re / n2, im: im / n2 }
    }
}
