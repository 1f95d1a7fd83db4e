//! Critical-line moment integrals and the arithmetic of their leading
//! constants: adaptive quadrature of `|zeta(1/2+it)|^{2k}` with optional
//! smooth windows, shifted moments with the piecewise normalizer, a direct
//! numerical check of the smoothed eighth-power approximate functional
//! equation against `|zeta|^8`, extraction of the degree-16 log-U residue
//! coefficient through a multi-U Vandermonde solve, and exact big-rational
//! verification of the constant combination behind the quartic coefficient
//! 24024/16!.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::arith::{build_tables, primes_up_to, ArithError};
use crate::divisor::smoothstep_derivs;
use crate::eulerprod::{a_constant, g_constant, EulerError, EulerProductSpec};
use crate::numerics::{
    adaptive_line_quadrature, bernoulli_numbers, factorial_rat, polyfit_rational, rat_int,
    rat_ratio, rat_to_f64, Dd, DdComplex, NumError, Rat, DD_PI,
};
use crate::special::{
    shifted_normalizer, zeta, KernelLine, KernelParams, SpecialError, KERNEL_IM_MAX, ZETA_IM_MAX,
};

#[derive(Debug, Clone, PartialEq)]
pub enum MomentError {
    /// A parameter is outside the supported range.
    Domain { what: &'static str },
    /// A product or sieve budget is exceeded.
    Capacity { needed: u64, limit: u64 },
    /// A computed quantity failed an internal accuracy cross-check.
    Precision { estimate: f64, tolerance: f64 },
    /// A refinement loop hit its cap before meeting its tolerance.
    NonConvergence { what: &'static str },
    Arith(ArithError),
    Euler(EulerError),
    Special(SpecialError),
    Num(NumError),
}

impl fmt::Display for MomentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentError::Domain { what } => write!(f, "domain error: {what}"),
            MomentError::Capacity { needed, limit } => {
                write!(f, "budget exceeded: needs {needed}, capped at {limit}")
            }
            MomentError::Precision { estimate, tolerance } => {
                write!(f, "accuracy estimate {estimate:.3e} above tolerance {tolerance:.3e}")
            }
            MomentError::NonConvergence { what } => write!(f, "no convergence: {what}"),
            MomentError::Arith(e) => write!(f, "{e}"),
            MomentError::Euler(e) => write!(f, "{e}"),
            MomentError::Special(e) => write!(f, "{e}"),
            MomentError::Num(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MomentError {}

impl From<ArithError> for MomentError {
    fn from(e: ArithError) -> Self {
        MomentError::Arith(e)
    }
}

impl From<EulerError> for MomentError {
    fn from(e: EulerError) -> Self {
        MomentError::Euler(e)
    }
}

impl From<SpecialError> for MomentError {
    fn from(e: SpecialError) -> Self {
        MomentError::Special(e)
    }
}

impl From<NumError> for MomentError {
    fn from(e: NumError) -> Self {
        MomentError::Num(e)
    }
}

/// Flat-top smooth window: rises from 0 to 1 over `[lo, lo + edge]`, holds 1,
/// and falls back to 0 over `[hi - edge, hi]`. Built from the same smoothstep
/// as the divisor weights, so every derivative of order `j` is bounded by a
/// constant times `edge^{-j}`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothWindow {
    pub lo: f64,
    pub hi: f64,
    pub edge: f64,
}

impl SmoothWindow {
    pub fn new(lo: f64, hi: f64, edge: f64) -> Result<Self, MomentError> {
        if !(lo.is_finite() && hi.is_finite() && edge.is_finite()) {
            return Err(MomentError::Domain { what: "window bounds must be finite" });
        }
        if !(lo >= 0.0 && lo < hi) {
            return Err(MomentError::Domain { what: "window needs 0 <= lo < hi" });
        }
        if !(edge > 0.0 && 2.0 * edge <= hi - lo) {
            return Err(MomentError::Domain { what: "window edge must fit twice inside [lo, hi]" });
        }
        Ok(SmoothWindow { lo, hi, edge })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.deriv(0, t)
    }

    /// Derivative of order `j <= 2` at `t`.
    pub fn deriv(&self, j: u32, t: f64) -> f64 {
        debug_assert!(j <= 2);
        let (r0, r1, r2) = smoothstep_derivs((t - self.lo) / self.edge);
        let (f0, f1, f2) = smoothstep_derivs((self.hi - t) / self.edge);
        match j {
            0 => r0 * f0,
            1 => (r1 * f0 - r0 * f1) / self.edge,
            _ => (r2 * f0 - 2.0 * r1 * f1 + r0 * f2) / (self.edge * self.edge),
        }
    }

    /// Sampled bounds `C_j = max |w^(j)| edge^j` over a fine grid, one entry
    /// per derivative order `0..=2`.
    pub fn sampled_derivative_constants(&self) -> [f64; 3] {
        let mut c = [0.0f64; 3];
        let n = 400;
        for i in 0..=n {
            let t = self.lo + (self.hi - self.lo) * i as f64 / n as f64;
            for (j, slot) in c.iter_mut().enumerate() {
                let scaled = self.deriv(j as u32, t).abs() * self.edge.powi(j as i32);
                if scaled > *slot {
                    *slot = scaled;
                }
            }
        }
        c
    }
}

/// Default moment window for a run of length `t_len`: supported on
/// `[t_len/2, t_len]` with rise length `t_len/10`.
pub fn moment_window(t_len: f64) -> Result<SmoothWindow, MomentError> {
    if !(t_len.is_finite() && t_len > 0.0) {
        return Err(MomentError::Domain { what: "window length must be positive" });
    }
    SmoothWindow::new(0.5 * t_len, t_len, 0.1 * t_len)
}

/// A request for `int_{T_lo}^{T_hi} |zeta(1/2+it)|^{2k} (w(t)) dt`.
#[derive(Debug, Clone)]
pub struct MomentRequest {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Moment parameter: the integrand carries the power `2k`.
    pub k: f64,
    /// Relative quadrature tolerance.
    pub rel_tolerance: f64,
    pub window: Option<SmoothWindow>,
}

const MOMENT_MAX_SEGMENTS: usize = 40_000;
const MOMENT_ABS_FLOOR: f64 = 1e-9;

impl MomentRequest {
    pub fn new(t_lo: f64, t_hi: f64, k: f64) -> Self {
        MomentRequest { t_lo, t_hi, k, rel_tolerance: 1e-9, window: None }
    }

    pub fn with_window(mut self, window: SmoothWindow) -> Self {
        self.window = Some(window);
        self
    }

    pub fn with_tolerance(mut self, rel_tolerance: f64) -> Self {
        self.rel_tolerance = rel_tolerance;
        self
    }

    fn validate(&self) -> Result<(), MomentError> {
        if !(self.t_lo.is_finite() && self.t_hi.is_finite() && self.t_lo >= 0.0) {
            return Err(MomentError::Domain { what: "integration bounds must be finite, lo >= 0" });
        }
        if !(self.t_lo < self.t_hi) {
            return Err(MomentError::Domain { what: "integration window is empty" });
        }
        if self.t_hi > ZETA_IM_MAX {
            return Err(MomentError::Domain { what: "upper bound exceeds the zeta accuracy envelope" });
        }
        if !(self.k >= 0.5 && self.k <= 16.0) {
            return Err(MomentError::Domain { what: "moment parameter needs 1/2 <= k <= 16" });
        }
        if !(self.rel_tolerance >= 1e-13 && self.rel_tolerance <= 0.1) {
            return Err(MomentError::Domain { what: "tolerance must lie in [1e-13, 0.1]" });
        }
        if let Some(w) = &self.window {
            if !(w.lo > 0.0) {
                return Err(MomentError::Domain { what: "window support must start above 0" });
            }
        }
        Ok(())
    }
}

/// A moment value with the quadrature error estimate attached.
#[derive(Debug, Clone, Copy)]
pub struct MomentValue {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

pub fn moment_integral(req: &MomentRequest) -> Result<MomentValue, MomentError> {
    req.validate()?;
    let two_k = 2.0 * req.k;
    let mut fail: Option<SpecialError> = None;
    let mut f = |t: f64| -> Complex64 {
        // |zeta(1/2+it)| is even in t, so the evaluator only sees Im >= 0.
        match zeta(Complex64::new(0.5, t.abs())) {
            Ok(z) => {
                let mut v = z.norm().powf(two_k);
                if let Some(w) = &req.window {
                    v *= w.eval(t);
                }
                Complex64::new(v, 0.0)
            }
            Err(e) => {
                fail = Some(e);
                Complex64::new(f64::NAN, 0.0)
            }
        }
    };
    let q = adaptive_line_quadrature(
        &mut f,
        req.t_lo,
        req.t_hi,
        MOMENT_ABS_FLOOR,
        req.rel_tolerance,
        MOMENT_MAX_SEGMENTS,
    );
    if let Some(e) = fail {
        return Err(MomentError::Special(e));
    }
    let q = q?;
    Ok(MomentValue {
        value: q.value.re,
        error_estimate: q.err_estimate,
        evaluations: q.evaluations,
    })
}

/// A shifted moment with both the raw and the normalized value.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedMoment {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub t0: f64,
    /// Piecewise normalizer evaluated at `(T_hi, t0)`.
    pub normalizer: f64,
    /// `value / (T (log T)^{k^2/2} normalizer^{k^2/2})`.
    pub normalized: f64,
}

/// `int_{T_lo}^{T_hi} |zeta(1/2+i(t+t0))|^k |zeta(1/2+i(t-t0))|^k (w(t)) dt`,
/// normalized by `T (log T)^{k^2/2}` times the same power of the piecewise
/// shift factor. At `t0 = 0` the integrand coincides with the one of
/// [`moment_integral`] at the same `k`.
pub fn shifted_moment(req: &MomentRequest, t0: f64) -> Result<ShiftedMoment, MomentError> {
    req.validate()?;
    if !(t0.is_finite() && t0.abs() <= 0.5 * req.t_hi) {
        return Err(MomentError::Domain { what: "shift must satisfy |t0| <= T_hi/2" });
    }
    if req.t_hi + t0.abs() > ZETA_IM_MAX {
        return Err(MomentError::Domain { what: "shifted argument exceeds the zeta accuracy envelope" });
    }
    let mut fail: Option<SpecialError> = None;
    let mut f = |t: f64| -> Complex64 {
        let a = zeta(Complex64::new(0.5, (t + t0).abs()));
        let b = zeta(Complex64::new(0.5, (t - t0).abs()));
        match (a, b) {
            (Ok(za), Ok(zb)) => {
                let mut v = (za.norm() * zb.norm()).powf(req.k);
                if let Some(w) = &req.window {
                    v *= w.eval(t);
                }
                Complex64::new(v, 0.0)
            }
            (Err(e), _) | (_, Err(e)) => {
                fail = Some(e);
                Complex64::new(f64::NAN, 0.0)
            }
        }
    };
    let q = adaptive_line_quadrature(
        &mut f,
        req.t_lo,
        req.t_hi,
        MOMENT_ABS_FLOOR,
        req.rel_tolerance,
        MOMENT_MAX_SEGMENTS,
    );
    if let Some(e) = fail {
        return Err(MomentError::Special(e));
    }
    let q = q?;
    let normalizer = shifted_normalizer(req.t_hi, t0);
    let half_k_sq = 0.5 * req.k * req.k;
    let scale = req.t_hi * req.t_hi.ln().powf(half_k_sq) * normalizer.powf(half_k_sq);
    Ok(ShiftedMoment {
        value: q.value.re,
        error_estimate: q.err_estimate,
        evaluations: q.evaluations,
        t0,
        normalizer,
        normalized: q.value.re / scale,
    })
}

const AFE_T_MIN: f64 = 20.0;
const AFE_T_MAX: f64 = 60.0;
/// Products with kernel magnitude below this fraction of the kernel peak are
/// dropped. The floor must stay far below the comparison tolerance times the
/// smallest direct value: near 30 the eighth power dips under 0.25, and the
/// tau4-weighted pair count multiplies whatever the floor admits.
const AFE_KERNEL_FLOOR: f64 = 1e-11;
/// Log-spacing of the kernel table; cubic interpolation on this grid is
/// checked against direct kernel evaluation at off-grid points.
const AFE_GRID_STEP: f64 = 0.02;
const AFE_MN_BUDGET: u64 = 48_000_000;
const AFE_LINE_PANELS: usize = 96;

/// Outcome of the eighth-power approximate-functional-equation check.
#[derive(Debug, Clone)]
pub struct AfeCheck {
    /// `2 sum_{m,n} tau4(m) tau4(n) (mn)^{-1/2} (m/n)^{-it} V_t(pi^4 mn)`.
    pub afe_value: f64,
    /// `|zeta(1/2+it)|^8`.
    pub direct_value: f64,
    pub rel_error: f64,
    /// Imaginary leakage of the pair sum relative to its real part.
    pub im_ratio: f64,
    /// The `m = n` part of `afe_value`; conjugate symmetry makes it real.
    pub diagonal_sum: f64,
    /// Same pair sum against the truncated kernel with `U = t^{1-epsilon}`.
    pub truncated_value: f64,
    pub mn_cutoff: u64,
    pub pair_count: u64,
}

/// Kernel values tabulated on a geometric grid of products, for both the
/// plain and the truncated kernel, with a shared cubic interpolation rule.
struct KernelTable {
    x0: f64,
    h: f64,
    vals: Vec<(Complex64, Complex64)>,
}

impl KernelTable {
    fn eval(&self, lx: f64) -> (Complex64, Complex64) {
        let u = (lx - self.x0) / self.h;
        let i = u.floor() as usize;
        debug_assert!(i >= 1 && i + 2 < self.vals.len());
        let d = u - i as f64;
        let wm1 = -d * (d - 1.0) * (d - 2.0) / 6.0;
        let w0 = (d * d - 1.0) * (d - 2.0) / 2.0;
        let w1 = -d * (d + 1.0) * (d - 2.0) / 2.0;
        let w2 = d * (d * d - 1.0) / 6.0;
        let p = &self.vals[i - 1..i + 3];
        (
            wm1 * p[0].0 + w0 * p[1].0 + w1 * p[2].0 + w2 * p[3].0,
            wm1 * p[0].1 + w0 * p[1].1 + w1 * p[2].1 + w2 * p[3].1,
        )
    }
}

/// Checks the smoothed approximate functional equation for the eighth power
/// at height `t`: the weighted double Dirichlet sum over pairs `(m, n)` with
/// `pi^4 mn` inside the kernel transition must reproduce `|zeta(1/2+it)|^8`.
/// `u_epsilon` sets `U = t^{1-u_epsilon}` for the truncated-kernel variant
/// reported alongside.
pub fn afe_check(t: f64, u_epsilon: f64) -> Result<AfeCheck, MomentError> {
    if !(t.is_finite() && (AFE_T_MIN..=AFE_T_MAX).contains(&t)) {
        return Err(MomentError::Domain { what: "height must lie in [20, 60]" });
    }
    if !(u_epsilon > 0.0 && u_epsilon < 0.9) {
        return Err(MomentError::Domain { what: "truncation exponent must lie in (0, 0.9)" });
    }
    let params = KernelParams::new(t, t.powf(1.0 - u_epsilon))?;
    let line = KernelLine::new(&params, false, 1.0, KERNEL_IM_MAX, AFE_LINE_PANELS)?;
    let line_tilde = KernelLine::new(&params, true, 1.0, KERNEL_IM_MAX, AFE_LINE_PANELS)?;
    let coarse = KernelLine::new(&params, false, 1.0, KERNEL_IM_MAX, AFE_LINE_PANELS / 2)?;

    let pi4_ln = 4.0 * core::f64::consts::PI.ln();
    let h = AFE_GRID_STEP;
    let x0 = pi4_ln - 2.0 * h;
    let budget_ln = pi4_ln + (1.05 * AFE_MN_BUDGET as f64).ln();
    let mut vals: Vec<(Complex64, Complex64)> = Vec::new();
    let mut vmax = 0.0f64;
    let mut below = 0usize;
    let mut i = 0usize;
    let stop_idx = loop {
        let lx = x0 + i as f64 * h;
        let x = lx.exp();
        let v = line.eval(x);
        vals.push((v, line_tilde.eval(x)));
        let mag = v.norm();
        if mag > vmax {
            vmax = mag;
        }
        if i >= 2 && mag < AFE_KERNEL_FLOOR * vmax {
            below += 1;
            if below >= 8 {
                break i - 7;
            }
        } else {
            below = 0;
        }
        if lx > budget_ln {
            return Err(MomentError::Capacity {
                needed: ((lx - pi4_ln).exp().ceil()) as u64,
                limit: AFE_MN_BUDGET,
            });
        }
        i += 1;
    };
    let table = KernelTable { x0, h, vals };
    let mn_cutoff = ((x0 + stop_idx as f64 * h - pi4_ln).exp().floor() as u64).min(AFE_MN_BUDGET);

    // The fixed panel count and the interpolation grid both get checked
    // against independent evaluations before the pair sum uses them.
    let mut rng = 0x9e3779b97f4a7c15u64;
    for probe in 0..6 {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        let frac = (rng >> 11) as f64 / (1u64 << 53) as f64;
        let lx = pi4_ln + frac * (mn_cutoff.max(2) as f64).ln();
        let x = lx.exp();
        let fine = line.eval(x);
        if probe < 3 {
            let diff = (fine - coarse.eval(x)).norm();
            if diff > 1e-10 * fine.norm().max(1.0) {
                return Err(MomentError::NonConvergence { what: "kernel line panel refinement" });
            }
        }
        let diff = (table.eval(lx).0 - fine).norm();
        if diff > 1e-8 * fine.norm().max(1.0) {
            return Err(MomentError::NonConvergence { what: "kernel table interpolation" });
        }
    }

    let tables = build_tables(mn_cutoff as usize, &[4])?;
    let tau4 = tables.tau(4)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_tilde = Complex64::new(0.0, 0.0);
    let mut diag = Complex64::new(0.0, 0.0);
    let mut pair_count = 0u64;
    for m in 1..=mn_cutoff {
        let mf = m as f64;
        let lm = mf.ln();
        let cm = tau4[m as usize] as f64 / mf.sqrt();
        let n_max = mn_cutoff / m;
        for n in 1..=n_max {
            let nf = n as f64;
            let ln_n = nf.ln();
            let coef = cm * tau4[n as usize] as f64 / nf.sqrt();
            let (vs, vt) = table.eval(pi4_ln + lm + ln_n);
            let (sin_p, cos_p) = (t * (ln_n - lm)).sin_cos();
            let phase = Complex64::new(cos_p, sin_p);
            let term = coef * phase * vs;
            sum += term;
            sum_tilde += coef * phase * vt;
            if m == n {
                diag += term;
            }
            pair_count += 1;
        }
    }
    let afe = 2.0 * sum;
    let direct = zeta(Complex64::new(0.5, t))?.norm().powi(8);
    let im_ratio = afe.im.abs() / afe.re.abs().max(1e-300);
    Ok(AfeCheck {
        afe_value: afe.re,
        direct_value: direct,
        rel_error: (afe.re - direct).abs() / direct,
        im_ratio,
        diagonal_sum: 2.0 * diag.re,
        truncated_value: 2.0 * sum_tilde.re,
        mn_cutoff,
        pair_count,
    })
}

/// Radius of the residue contour, a dyadic 3/16 so that scaling the
/// unit-circle nodes is exact. Extracting the leading coefficient from
/// equispaced samples of a degree-16 polynomial amplifies absolute noise on
/// the sample values by roughly twelve orders of magnitude; the per-node
/// scale `r^{-15} e^{4 r log U}` is minimized near 0.2, and the remaining
/// headroom still forces the contour evaluations into double-double
/// arithmetic so the sample values are correct to their last f64 bit.
const DIAG_RADIUS: f64 = 0.1875;
const DIAG_NODES: usize = 1024;
/// Prime cutoff of the truncated arithmetic factor. The ratio of the leading
/// coefficient to the factor's value at 0 is independent of the truncation,
/// because the truncated product is itself analytic on the contour disk.
const DIAG_PRIME_CUTOFF: usize = 1000;
/// Direct terms and Bernoulli correction count of the double-double
/// Euler-Maclaurin zeta evaluation; the truncation error is near 1e-33.
const DIAG_ZETA_TERMS: u32 = 40;
const DIAG_ZETA_ORDER: usize = 21;
const DIAG_LOG_U_LO: i64 = 10;
const DIAG_LOG_U_HI: i64 = 26;
const DIAG_TOLERANCE: f64 = 1e-4;

/// Shared tables for [`dd_zeta_one_plus`]: `B_2j/(2j)!` for `j <= 21` and
/// `log k` for `k <= 40`, both to double-double accuracy.
fn dd_zeta_tables() -> (Vec<Dd>, Vec<Dd>) {
    let bern_all = bernoulli_numbers(2 * DIAG_ZETA_ORDER);
    let mut bern = Vec::with_capacity(DIAG_ZETA_ORDER);
    for j in 1..=DIAG_ZETA_ORDER {
        bern.push(Dd::from_rat(&(bern_all[2 * j].clone() / factorial_rat(2 * j as u64))));
    }
    let ln_k = (0..=DIAG_ZETA_TERMS as u64)
        .map(|k| if k >= 2 { Dd::ln_u64(k) } else { Dd::ZERO })
        .collect();
    (bern, ln_k)
}

/// `zeta(1 + w)` for `|w| <= 3/4` in double-double arithmetic, by
/// Euler-Maclaurin with the pole split off exactly as `N^{-w}/w`.
fn dd_zeta_one_plus(w: DdComplex, bern: &[Dd], ln_k: &[Dd]) -> DdComplex {
    let nf = DIAG_ZETA_TERMS as f64;
    let s = w.add_re(1.0);
    let mut sum = DdComplex::ONE;
    for k in 2..DIAG_ZETA_TERMS {
        sum = sum + (-(s.mul_real(ln_k[k as usize]))).exp();
    }
    let ln_n = ln_k[DIAG_ZETA_TERMS as usize];
    let n_pow = (-(s.mul_real(ln_n))).exp();
    let mut t = (-(w.mul_real(ln_n))).exp() / w + n_pow.scale(0.5);
    let mut poch = s;
    let mut n_shift = n_pow.div_f64(nf);
    for (j, b) in bern.iter().enumerate() {
        t = t + (n_shift * poch).mul_real(*b);
        let a = 2.0 * (j as f64 + 1.0);
        poch = poch * s.add_re(a - 1.0) * s.add_re(a);
        n_shift = n_shift.div_f64(nf * nf);
    }
    sum + t
}

/// Finite Euler product over `p <= DIAG_PRIME_CUTOFF` of
/// `(1 - x)^16 sum_j binom(j+3,3)^2 x^j` at `x = p^{-u}`: the arithmetic
/// factor that multiplies `zeta^16(u)` in the generating identity for
/// `sum tau_4(n)^2 n^{-u}`, truncated and in double-double arithmetic.
fn dd_arithmetic_factor(u: DdComplex, primes_ln: &[Dd]) -> DdComplex {
    let mut prod = DdComplex::ONE;
    for lnp in primes_ln {
        let x = (-(u.mul_real(*lnp))).exp();
        let mut acc = DdComplex::ONE;
        let mut xp = DdComplex::ONE;
        let mut j = 1.0f64;
        loop {
            xp = xp * x;
            let c = (j + 1.0) * (j + 2.0) * (j + 3.0) / 6.0;
            let term = xp.scale(c * c);
            acc = acc + term;
            let t_mag = term.re.hi.abs() + term.im.hi.abs();
            let a_mag = acc.re.hi.abs() + acc.im.hi.abs();
            if t_mag < 1e-36 * a_mag || j >= 400.0 {
                debug_assert!(j < 400.0, "series for p^-u decays too slowly");
                break;
            }
            j += 1.0;
        }
        prod = prod * (DdComplex::ONE - x).powi(16) * acc;
    }
    prod
}

/// Result of the diagonal residue extraction.
#[derive(Debug, Clone)]
pub struct DiagonalCheck {
    /// Coefficients of the degree-16 polynomial in `log U`, low to high.
    pub coefficients: Vec<f64>,
    /// Leading coefficient divided by the arithmetic factor at 1.
    pub leading_ratio: f64,
    /// `2/638512875`.
    pub target: f64,
    pub rel_error: f64,
    /// Same ratio from the direct Laurent-mode filter on the contour, an
    /// independent route used as a cross-check.
    pub filter_ratio: f64,
    /// Relative misfit of the solved polynomial at an off-grid `log U`.
    pub off_grid_residual: f64,
    pub passes: bool,
}

/// Extracts the residue of `zeta^16(1+2s) A(1+2s) (2pi)^{-4s} e^{s^2}
/// U^{4s}/s` at `s = 0` as a polynomial in `log U`, where `A` is the
/// truncated arithmetic factor: the contour integral is evaluated at
/// `U = e^10, ..., e^26` in double-double arithmetic and the Vandermonde
/// system is solved exactly over the rationals, confirming the `(log U)^16`
/// coefficient equals `2 A(1) / 638512875`.
pub fn diagonal_constant_check() -> Result<DiagonalCheck, MomentError> {
    let n = DIAG_NODES;
    let (bern, ln_k) = dd_zeta_tables();
    let primes_ln: Vec<Dd> =
        primes_up_to(DIAG_PRIME_CUTOFF).iter().map(|&p| Dd::ln_u64(p)).collect();
    let ln_2pi = (DD_PI * 2.0).ln();

    // Nodes s_j = r omega^j by repeated multiplication with the exact-angle
    // root of unity; 2/N and the radius are dyadic, so only the accumulated
    // omega powers carry rounding, far below double-double resolution.
    let (st, ct) = (DD_PI * (2.0 / n as f64)).sin_cos();
    let omega = DdComplex::new(ct, st);
    let inv_n = 1.0 / n as f64;
    let mut om = DdComplex::ONE;
    // Per node: F(s) s / N (the 1/s of the integrand cancels against the
    // trapezoid weight s), e^{2s} whose integer powers realize U^{4s} on the
    // half-integer log-U grid, and s itself for the mode filter.
    let mut nodes: Vec<(DdComplex, DdComplex, DdComplex)> = Vec::with_capacity(n);
    for _ in 0..n {
        let s = om.scale(DIAG_RADIUS);
        let w = s.scale(2.0);
        let zeta16 = dd_zeta_one_plus(w, &bern, &ln_k).powi(16);
        let factor = dd_arithmetic_factor(w.add_re(1.0), &primes_ln);
        let pref = (s.mul_real(ln_2pi).scale(-4.0) + s * s).exp();
        nodes.push(((zeta16 * factor * pref).scale(inv_n), w.exp(), s));
        om = om * omega;
    }
    let contour = |two_l: u32| -> DdComplex {
        let mut acc = DdComplex::ZERO;
        for (f, base, _) in &nodes {
            acc = acc + *f * base.powi(two_l);
        }
        acc
    };

    let count = (DIAG_LOG_U_HI - DIAG_LOG_U_LO + 1) as usize;
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for l in DIAG_LOG_U_LO..=DIAG_LOG_U_HI {
        let r = contour(2 * l as u32);
        let (re, im) = (r.re.to_f64(), r.im.to_f64());
        if im.abs() > 1e-6 * re.abs().max(1e-300) {
            return Err(MomentError::Precision {
                estimate: im.abs() / re.abs().max(1e-300),
                tolerance: 1e-6,
            });
        }
        ys.push(
            r.re.to_rat()
                .ok_or(MomentError::NonConvergence { what: "contour value not finite" })?,
        );
        xs.push(rat_int(l));
    }
    let coeffs_rat = polyfit_rational(&xs, &ys)?;
    let coefficients: Vec<f64> = coeffs_rat.iter().map(rat_to_f64).collect();
    let leading = coefficients[16];

    // Independent route: the Laurent coefficient of s^{-17} read off as the
    // 16th Fourier mode of F on the circle, times 4^16/16!.
    let mut phi = DdComplex::ZERO;
    for (f, _, s) in &nodes {
        phi = phi + *f * s.powi(16);
    }
    if phi.im.to_f64().abs() > 1e-6 * phi.re.to_f64().abs().max(1e-300) {
        return Err(MomentError::Precision {
            estimate: phi.im.to_f64().abs() / phi.re.to_f64().abs().max(1e-300),
            tolerance: 1e-6,
        });
    }
    let mode_factor = 4294967296.0 / 20922789888000.0; // 4^16 / 16!
    let leading_filter = phi.re.to_f64() * mode_factor;
    let route_gap = (leading - leading_filter).abs() / leading_filter.abs().max(1e-300);
    if route_gap > 3e-5 {
        return Err(MomentError::Precision { estimate: route_gap, tolerance: 3e-5 });
    }

    // Degree-16 adequacy: the solved polynomial must reproduce the contour
    // value at the off-grid point L = 18.5 (power 37 of e^{2s}).
    let l_probe = 18.5;
    let probe_direct = contour(37).re.to_f64();
    let mut horner = 0.0f64;
    for c in coefficients.iter().rev() {
        horner = horner * l_probe + c;
    }
    let off_grid_residual = (horner - probe_direct).abs() / probe_direct.abs().max(1e-300);

    let a_at_one = dd_arithmetic_factor(DdComplex::ONE, &primes_ln).re.to_f64();
    let target = rat_to_f64(&rat_ratio(2, 638_512_875));
    let leading_ratio = leading / a_at_one;
    let rel_error = (leading_ratio - target).abs() / target;
    Ok(DiagonalCheck {
        coefficients,
        leading_ratio,
        target,
        rel_error,
        filter_ratio: leading_filter / a_at_one,
        off_grid_residual,
        passes: rel_error <= DIAG_TOLERANCE && off_grid_residual <= 1e-6,
    })
}

/// One term of the embedded constant table: a signed unit fraction carrying
/// the weight `2^n2`, with `n1 + n2 = 16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerTerm {
    /// Power of `log t` carried by the term.
    pub n1: u32,
    /// Power of the complementary logarithm; the substituted weight is `2^n2`.
    pub n2: u32,
    /// `+1` or `-1`.
    pub sign: i64,
    pub denominator: u64,
}

/// The exact rational constants whose combination produces the quartic
/// coefficient `24024/16!`.
#[derive(Debug, Clone)]
pub struct ConstantLedger {
    pub terms: Vec<LedgerTerm>,
    /// `4/638512875`, the diagonal contribution per `(log U)^16`.
    pub diagonal_coefficient: Rat,
    /// `-13381/2615348736000`, the off-diagonal contribution.
    pub offdiagonal_coefficient: Rat,
    /// `24024/16!`, the combined coefficient.
    pub target: Rat,
}

/// The embedded term table; kept as a reviewable text file so the weighted
/// sum below can be audited line by line.
pub const LOG_POWER_TABLE: &str = include_str!("../data/log_power_terms.txt");

impl ConstantLedger {
    pub fn from_embedded_table() -> Result<Self, MomentError> {
        let mut terms = Vec::new();
        for raw in LOG_POWER_TABLE.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (n1, n2, sign, den) = match (it.next(), it.next(), it.next(), it.next(), it.next())
            {
                (Some(a), Some(b), Some(c), Some(d), None) => {
                    let n1 = a.parse::<u32>();
                    let n2 = b.parse::<u32>();
                    let sign = match c {
                        "+" => Ok(1i64),
                        "-" => Ok(-1i64),
                        _ => Err(()),
                    };
                    let den = d.parse::<u64>();
                    match (n1, n2, sign, den) {
                        (Ok(n1), Ok(n2), Ok(s), Ok(d)) => (n1, n2, s, d),
                        _ => {
                            return Err(MomentError::Domain {
                                what: "malformed line in the constant table",
                            })
                        }
                    }
                }
                _ => return Err(MomentError::Domain { what: "malformed line in the constant table" }),
            };
            if n1 + n2 != 16 || n2 > 62 || den == 0 || den > i64::MAX as u64 {
                return Err(MomentError::Domain { what: "constant table entry out of range" });
            }
            terms.push(LedgerTerm { n1, n2, sign, denominator: den });
        }
        if terms.len() != 6 {
            return Err(MomentError::Domain { what: "constant table must hold six terms" });
        }
        Ok(ConstantLedger {
            terms,
            diagonal_coefficient: rat_ratio(4, 638_512_875),
            offdiagonal_coefficient: rat_ratio(-13381, 2_615_348_736_000),
            target: rat_int(24024) / factorial_rat(16),
        })
    }
}

/// Outcome of the exact constant-combination verification.
#[derive(Debug, Clone)]
pub struct CombinationCheck {
    /// `sum of sign * 2^n2 / denominator` over the table.
    pub weighted_sum: Rat,
    /// Weighted sum equals the off-diagonal coefficient.
    pub sum_matches: bool,
    /// `4/638512875 = 131072/16!`.
    pub diagonal_reduction: bool,
    /// `13381/2615348736000 = 107048/16!`.
    pub offdiagonal_reduction: bool,
    /// `131072 - 107048 = 24024`, matching both the target and `g_4`.
    pub difference_matches: bool,
}

impl CombinationCheck {
    pub fn passes(&self) -> bool {
        self.sum_matches
            && self.diagonal_reduction
            && self.offdiagonal_reduction
            && self.difference_matches
    }
}

/// Verifies, in exact rational arithmetic, that the embedded term table sums
/// to the off-diagonal coefficient, that both coefficients reduce to the
/// stated multiples of `1/16!`, and that their combination is `24024/16!`
/// with `24024 = g_4`.
pub fn constant_combination_check(ledger: &ConstantLedger) -> Result<CombinationCheck, MomentError> {
    let mut weighted_sum = rat_int(0);
    for term in &ledger.terms {
        weighted_sum += rat_ratio(term.sign * (1i64 << term.n2), term.denominator as i64);
    }
    let f16 = factorial_rat(16);
    let sum_matches = weighted_sum == ledger.offdiagonal_coefficient;
    let diagonal_reduction = ledger.diagonal_coefficient == rat_int(131072) / f16.clone();
    let offdiagonal_reduction =
        -ledger.offdiagonal_coefficient.clone() == rat_int(107048) / f16.clone();
    let combined = ledger.diagonal_coefficient.clone() + ledger.offdiagonal_coefficient.clone();
    let g4 = g_constant(4)?;
    let difference_matches = combined == ledger.target
        && (combined * f16) == rat_int(131072 - 107048)
        && g4 == rat_int(24024);
    Ok(CombinationCheck {
        weighted_sum,
        sum_matches,
        diagonal_reduction,
        offdiagonal_reduction,
        difference_matches,
    })
}

/// Predicted leading term of the `2k`-th moment.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// `g_k a_k / (k^2)! * T (log T)^{k^2}`.
    pub keating_snaith_leading: f64,
    /// The same value routed through the explicit constant `24024/16!`;
    /// only populated for `k = 4`, where the two must coincide exactly.
    pub quartic_leading: Option<f64>,
    /// Exact rational factor `g_k/(k^2)!`.
    pub rational_factor: Rat,
    /// Arithmetic factor `a_k` with its certified truncation tail.
    pub a_value: f64,
    pub a_tail: f64,
    /// The power of `log T`, `k^2`.
    pub moment_power: u32,
}

pub fn prediction(t_len: f64, k: u32) -> Result<Prediction, MomentError> {
    if !(t_len.is_finite() && t_len > core::f64::consts::E) {
        return Err(MomentError::Domain { what: "prediction needs T > e" });
    }
    let g = g_constant(k)?;
    let a = a_constant(k, &EulerProductSpec::for_a_constant(k))?;
    let kk = k * k;
    let rational_factor = g / factorial_rat(kk as u64);
    let log_pow = t_len.ln().powi(kk as i32);
    let keating_snaith_leading = rat_to_f64(&rational_factor) * a.value * t_len * log_pow;
    let quartic_leading = if k == 4 {
        let explicit = rat_int(24024) / factorial_rat(16);
        Some(rat_to_f64(&explicit) * a.value * t_len * log_pow)
    } else {
        None
    };
    Ok(Prediction {
        keating_snaith_leading,
        quartic_leading,
        rational_factor,
        a_value: a.value,
        a_tail: a.tail_bound,
        moment_power: kk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xorshift(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn window_has_flat_top_and_compact_support() {
        let w = moment_window(2000.0).unwrap();
        assert_eq!(w.lo, 1000.0);
        assert_eq!(w.hi, 2000.0);
        assert_eq!(w.edge, 200.0);
        assert_eq!(w.eval(999.0), 0.0);
        assert_eq!(w.eval(2001.0), 0.0);
        for t in [1200.0, 1400.0, 1650.0, 1800.0] {
            assert_eq!(w.eval(t), 1.0, "plateau at {t}");
            assert_eq!(w.deriv(1, t), 0.0);
        }
        assert!(w.eval(1100.0) > 0.0 && w.eval(1100.0) < 1.0);
        let c = w.sampled_derivative_constants();
        assert_eq!(c[0], 1.0);
        assert!(c[1] > 0.5 && c[1] < 4.0, "C_1 = {}", c[1]);
        assert!(c[2] > 1.0 && c[2] < 40.0, "C_2 = {}", c[2]);
    }

    #[test]
    fn window_derivatives_match_central_differences() {
        let w = moment_window(300.0).unwrap();
        let mut state = 0x2545f4914f6cdd1du64;
        for _ in 0..40 {
            let t = w.lo + (w.hi - w.lo) * xorshift(&mut state);
            let h1 = 1e-5 * w.edge;
            let fd1 = (w.eval(t + h1) - w.eval(t - h1)) / (2.0 * h1);
            assert!(
                (w.deriv(1, t) - fd1).abs() <= 1e-6 / w.edge,
                "first derivative at {t}: {} vs {fd1}",
                w.deriv(1, t)
            );
            let h2 = 4e-5 * w.edge;
            let fd2 = (w.eval(t + h2) - 2.0 * w.eval(t) + w.eval(t - h2)) / (h2 * h2);
            assert!(
                (w.deriv(2, t) - fd2).abs() <= 1e-5 / (w.edge * w.edge),
                "second derivative at {t}: {} vs {fd2}",
                w.deriv(2, t)
            );
        }
    }

    #[test]
    fn request_validation_rejects_bad_parameters() {
        let bad = [
            MomentRequest::new(-1.0, 10.0, 1.0),
            MomentRequest::new(10.0, 5.0, 1.0),
            MomentRequest::new(0.0, 6000.0, 1.0),
            MomentRequest::new(0.0, 10.0, 0.25),
            MomentRequest::new(0.0, 10.0, 1.0).with_tolerance(1e-20),
        ];
        for req in bad {
            assert!(matches!(moment_integral(&req), Err(MomentError::Domain { .. })));
        }
        assert!(matches!(
            shifted_moment(&MomentRequest::new(0.0, 100.0, 4.0), 60.0),
            Err(MomentError::Domain { .. })
        ));
    }

    #[test]
    fn second_moment_tracks_classical_formula() {
        // Oracle: int_0^T |zeta(1/2+it)|^2 dt = T log(T/2pi) + (2 gamma - 1) T
        // plus a fluctuating remainder far below the leading terms.
        let t_len = 2000.0;
        let req = MomentRequest::new(0.0, t_len, 1.0).with_tolerance(1e-8);
        let got = moment_integral(&req).unwrap();
        let gamma = 0.577_215_664_901_532_9;
        let classical = t_len * (t_len / (2.0 * core::f64::consts::PI)).ln()
            + (2.0 * gamma - 1.0) * t_len;
        assert!(
            (got.value - classical).abs() < 500.0,
            "value {} vs classical {classical}",
            got.value
        );
        // The T log T ratio approaches 1 from below and sits near 0.78 here.
        let ratio = got.value / (t_len * t_len.ln());
        assert!(ratio > 0.7 && ratio < 1.2, "ratio {ratio}");
    }

    #[test]
    fn eighth_moment_halving_tolerance_stays_within_estimate() {
        let t_len = 1000.0;
        let coarse =
            moment_integral(&MomentRequest::new(0.0, t_len, 4.0).with_tolerance(1e-6)).unwrap();
        let fine =
            moment_integral(&MomentRequest::new(0.0, t_len, 4.0).with_tolerance(5e-7)).unwrap();
        assert!(
            (coarse.value - fine.value).abs() <= coarse.error_estimate.max(1e-9 * coarse.value),
            "shift {} vs estimate {}",
            (coarse.value - fine.value).abs(),
            coarse.error_estimate
        );
    }

    #[test]
    fn moment_is_additive_over_a_partition_and_monotone() {
        let tol = 1e-9;
        let whole = moment_integral(&MomentRequest::new(0.0, 500.0, 4.0)).unwrap();
        let left = moment_integral(&MomentRequest::new(0.0, 200.0, 4.0)).unwrap();
        let right = moment_integral(&MomentRequest::new(200.0, 500.0, 4.0)).unwrap();
        let parts = left.value + right.value;
        let slack =
            (whole.error_estimate + left.error_estimate + right.error_estimate + tol * parts).max(1e-7);
        assert!(
            (whole.value - parts).abs() <= slack,
            "whole {} vs parts {parts}",
            whole.value
        );
        // Nonnegative integrand: extending the window cannot decrease it.
        assert!(whole.value >= left.value);
    }

    #[test]
    fn windowed_moment_restricts_to_the_support() {
        let w = moment_window(400.0).unwrap();
        let windowed =
            moment_integral(&MomentRequest::new(0.0, 400.0, 1.0).with_window(w)).unwrap();
        let tail_only =
            moment_integral(&MomentRequest::new(w.lo, 400.0, 1.0).with_window(w)).unwrap();
        assert!(
            (windowed.value - tail_only.value).abs()
                <= 1e-8 * windowed.value + windowed.error_estimate + tail_only.error_estimate
        );
        let unwindowed = moment_integral(&MomentRequest::new(w.lo, 400.0, 1.0)).unwrap();
        assert!(windowed.value < unwindowed.value);
    }

    #[test]
    fn zero_shift_matches_plain_moment() {
        let req = MomentRequest::new(0.0, 300.0, 4.0);
        let shifted = shifted_moment(&req, 0.0).unwrap();
        let plain = moment_integral(&req).unwrap();
        let rel = (shifted.value - plain.value).abs() / plain.value;
        assert!(rel < 1e-12, "rel {rel}");
        assert_eq!(shifted.normalizer, 300.0f64.ln());
    }

    #[test]
    fn shifted_moment_is_even_in_the_shift() {
        let req = MomentRequest::new(0.0, 300.0, 4.0);
        let plus = shifted_moment(&req, 2.0).unwrap();
        let minus = shifted_moment(&req, -2.0).unwrap();
        let rel = (plus.value - minus.value).abs() / plus.value;
        assert!(rel < 1e-13, "rel {rel}");
        assert_eq!(plus.normalizer, minus.normalizer);
    }

    #[test]
    fn shifted_grid_normalizations_are_finite() {
        let req = MomentRequest::new(0.0, 300.0, 4.0).with_tolerance(1e-7);
        for t0 in [0.0, 1e-3, 5e-3, 0.1, 1.0, 10.0] {
            let s = shifted_moment(&req, t0).unwrap();
            assert!(s.value.is_finite() && s.value > 0.0);
            assert!(s.normalized.is_finite() && s.normalized > 0.0);
            assert!(s.normalizer.is_finite() && s.normalizer > 0.0);
        }
    }

    #[test]
    fn afe_matches_direct_eighth_power_at_low_height() {
        let r = afe_check(20.0, 0.1).unwrap();
        assert!(r.rel_error < 1e-3, "rel_error {}", r.rel_error);
        assert!(r.im_ratio < 1e-8, "im_ratio {}", r.im_ratio);
        assert!(r.diagonal_sum > 0.0);
        assert!(r.truncated_value.is_finite());
        assert!(r.mn_cutoff > 1000);
        assert!(r.pair_count > r.mn_cutoff);
    }

    #[test]
    fn afe_matches_direct_eighth_power_at_height_thirty() {
        let r = afe_check(30.0, 0.1).unwrap();
        assert!(r.rel_error < 1e-3, "rel_error {}", r.rel_error);
        assert!(r.diagonal_sum > 0.0);
    }

    #[test]
    fn afe_rejects_out_of_range_parameters() {
        assert!(matches!(afe_check(10.0, 0.1), Err(MomentError::Domain { .. })));
        assert!(matches!(afe_check(70.0, 0.1), Err(MomentError::Domain { .. })));
        assert!(matches!(afe_check(30.0, 0.0), Err(MomentError::Domain { .. })));
        assert!(matches!(afe_check(30.0, 1.0), Err(MomentError::Domain { .. })));
    }

    #[test]
    fn dd_zeta_helper_matches_known_values() {
        let (bern, ln_k) = dd_zeta_tables();
        // zeta(2) = pi^2/6 and zeta(4) = pi^4/90, both expressible in
        // double-double form without external constants.
        let z2 = dd_zeta_one_plus(DdComplex::from_f64(1.0, 0.0), &bern, &ln_k);
        let pi2 = DD_PI * DD_PI;
        assert!((z2.re - pi2.div_f64(6.0)).to_f64().abs() < 1e-28);
        assert_eq!(z2.im.to_f64(), 0.0);
        let z4 = dd_zeta_one_plus(DdComplex::from_f64(3.0, 0.0), &bern, &ln_k);
        assert!((z4.re - (pi2 * pi2).div_f64(90.0)).to_f64().abs() < 1e-28);
        // Against the f64 evaluator at a contour-like argument.
        let dd = dd_zeta_one_plus(DdComplex::from_f64(0.2, 0.3), &bern, &ln_k).to_complex64();
        let f = zeta(Complex64::new(1.2, 0.3)).unwrap();
        assert!((dd - f).norm() < 1e-10 * f.norm(), "dd {dd} vs f64 {f}");
    }

    #[test]
    fn dd_arithmetic_factor_matches_f64_product() {
        use crate::eulerprod::z1;
        let primes_ln: Vec<Dd> = primes_up_to(1000).iter().map(|&p| Dd::ln_u64(p)).collect();
        for s in [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.05, 0.1),
            Complex64::new(-0.1, 0.15),
        ] {
            let u = DdComplex::from_f64(1.0 + 2.0 * s.re, 2.0 * s.im);
            let dd = dd_arithmetic_factor(u, &primes_ln).to_complex64();
            let f = z1(s, 1000).unwrap().value;
            assert!((dd - f).norm() < 1e-9 * f.norm(), "s = {s}: dd {dd} vs f64 {f}");
        }
    }

    #[test]
    fn diagonal_residue_extraction_recovers_the_constant() {
        let r = diagonal_constant_check().unwrap();
        assert!(r.passes);
        assert!(r.rel_error <= 1e-4, "rel_error {}", r.rel_error);
        assert_eq!(r.coefficients.len(), 17);
        assert!(r.off_grid_residual <= 1e-6, "residual {}", r.off_grid_residual);
        let gap = (r.leading_ratio - r.filter_ratio).abs() / r.filter_ratio.abs();
        assert!(gap <= 3e-5, "route gap {gap}");
    }

    #[test]
    fn constant_table_identities_hold_exactly() {
        let ledger = ConstantLedger::from_embedded_table().unwrap();
        assert_eq!(ledger.terms.len(), 6);
        for term in &ledger.terms {
            assert_eq!(term.n1 + term.n2, 16);
            assert!(term.sign == 1 || term.sign == -1);
        }
        let check = constant_combination_check(&ledger).unwrap();
        assert!(check.sum_matches, "weighted sum {:?}", check.weighted_sum);
        assert!(check.diagonal_reduction);
        assert!(check.offdiagonal_reduction);
        assert!(check.difference_matches);
        assert!(check.passes());
        assert_eq!(check.weighted_sum, rat_ratio(-13381, 2_615_348_736_000));
        // 638512875 * 2^15 = 16! and 2615348736000 * 8 = 16!.
        assert_eq!(rat_int(638_512_875) * rat_int(1 << 15), factorial_rat(16));
        assert_eq!(rat_int(2_615_348_736_000) * rat_int(8), factorial_rat(16));
    }

    #[test]
    fn prediction_reproduces_the_expected_factors() {
        let p1 = prediction(100.0, 1).unwrap();
        // Every local factor is exactly 1; only accumulated rounding across
        // the prime product remains.
        assert!((p1.a_value - 1.0).abs() < 1e-10);
        let t_log_t = 100.0 * 100.0f64.ln();
        assert!((p1.keating_snaith_leading - t_log_t).abs() < 1e-9 * t_log_t);
        assert!(p1.quartic_leading.is_none());

        let p2 = prediction(100.0, 2).unwrap();
        assert_eq!(p2.rational_factor, rat_ratio(1, 12));

        let p4 = prediction(1e6, 4).unwrap();
        assert_eq!(p4.moment_power, 16);
        assert_eq!(p4.rational_factor, rat_int(24024) / factorial_rat(16));
        let quartic = p4.quartic_leading.unwrap();
        assert_eq!(quartic, p4.keating_snaith_leading);
    }

    #[test]
    fn prediction_is_strictly_increasing_in_t() {
        let mut state = 0x853c49e6748fea9bu64;
        for k in 1..=4u32 {
            for _ in 0..10 {
                let t1 = 3.0 + 5000.0 * xorshift(&mut state);
                let t2 = t1 * (1.01 + xorshift(&mut state));
                let p1 = prediction(t1, k).unwrap();
                let p2 = prediction(t2, k).unwrap();
                assert!(
                    p2.keating_snaith_leading > p1.keating_snaith_leading,
                    "k={k} t1={t1} t2={t2}"
                );
            }
        }
        assert!(matches!(prediction(2.0, 4), Err(MomentError::Domain { .. })));
    }
}
