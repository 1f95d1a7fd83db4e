//! Complex special functions: the zeta function on a right strip via
//! Euler-Maclaurin summation, zeta derivatives by Cauchy circles, log-gamma,
//! the fourth-power gamma-ratio kernel `g(s,t)`, the smoothing kernels `V_t`
//! and their sharp-cutoff variants, and the shifted-moment normalizer.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
// Inherent f64 methods exist only with std; the trait supplies them via libm.
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::numerics::{cauchy_derivative, ContourCircle, NumError};
use crate::powc;

#[derive(Debug, Clone, PartialEq)]
pub enum SpecialError {
    /// Evaluation at or too close to a pole.
    Pole { where_: &'static str },
    /// Argument outside the implemented region.
    Domain { what: &'static str },
    Num(NumError),
}

impl fmt::Display for SpecialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecialError::Pole { where_ } => write!(f, "pole: {where_}"),
            SpecialError::Domain { what } => write!(f, "domain error: {what}"),
            SpecialError::Num(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SpecialError {}

impl From<NumError> for SpecialError {
    fn from(e: NumError) -> Self {
        SpecialError::Num(e)
    }
}

/// Bernoulli numbers B_2, B_4, ..., B_24 as (numerator, denominator).
const BERNOULLI: [(f64, f64); 12] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
];

/// Largest |Im s| the zeta evaluator promises ~1e-10 accuracy for.
pub const ZETA_IM_MAX: f64 = 5000.0;

/// Euler-Maclaurin zeta evaluator on the strip Re s > -1.
///
/// `sum_{n<N} n^{-s} + N^{1-s}/(s-1) + N^{-s}/2 + Bernoulli corrections`,
/// with N ≈ max(20, ceil|Im s| + 20) and `correction_order/2` correction
/// terms. Two evaluators with different orders serve as mutual checks.
#[derive(Debug, Clone, Copy)]
pub struct ZetaEvaluator {
    pub correction_order: u32,
}

impl Default for ZetaEvaluator {
    fn default() -> Self {
        ZetaEvaluator { correction_order: 24 }
    }
}

impl ZetaEvaluator {
    pub fn eval(&self, s: Complex64) -> Result<Complex64, SpecialError> {
        let order = self.correction_order.clamp(4, 24);
        if (s - Complex64::new(1.0, 0.0)).norm() < 1e-12 {
            return Err(SpecialError::Pole { where_: "zeta at s = 1" });
        }
        if s.re <= -1.0 {
            return Err(SpecialError::Domain { what: "zeta needs Re s > -1" });
        }
        if s.im.abs() > ZETA_IM_MAX {
            return Err(SpecialError::Domain { what: "zeta: |Im s| too large" });
        }
        let n = 20usize.max(s.im.abs().ceil() as usize + 20);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..n {
            sum += powc(k as f64, -s);
        }
        sum += em_completion(s, n as f64, order as usize);
        Ok(sum)
    }
}

/// The Euler-Maclaurin completion `sum_{n >= N} n^{-s}` continued in s:
/// `N^{1-s}/(s-1) + N^{-s}/2 + sum_j B_2j/(2j)! (s)_(2j-1) N^{-s-2j+1}`.
fn em_completion(s: Complex64, nf: f64, order: usize) -> Complex64 {
    let n_pow = powc(nf, -s);
    let mut t = n_pow * nf / (s - 1.0) + n_pow * 0.5;
    let mut poch = s;
    let mut fact = 2.0f64;
    let mut n_shift = n_pow / nf;
    for j in 1..=(order / 2).min(BERNOULLI.len()) {
        let (bn, bd) = BERNOULLI[j - 1];
        t += n_shift * poch * (bn / (bd * fact));
        let a = 2.0 * j as f64;
        poch = poch * (s + (a - 1.0)) * (s + a);
        fact *= (a + 1.0) * (a + 2.0);
        n_shift = n_shift / (nf * nf);
    }
    t
}

/// Partial sum `sum_{n<=m} n^{-w}`, exact for small m and completed through
/// the zeta value for large m, so the cost is independent of m.
pub fn zeta_partial(w: Complex64, m: u64) -> Result<Complex64, SpecialError> {
    if m <= ZETA_PARTIAL_DIRECT {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..=m {
            sum += powc(k as f64, -w);
        }
        return Ok(sum);
    }
    Ok(zeta_partial_with(w, m, zeta(w)?))
}

/// [`zeta_partial`] with the zeta value supplied by the caller, for hot loops
/// that evaluate many partial sums at the same exponent.
pub fn zeta_partial_with(w: Complex64, m: u64, zeta_w: Complex64) -> Complex64 {
    if m <= ZETA_PARTIAL_DIRECT {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..=m {
            sum += powc(k as f64, -w);
        }
        return sum;
    }
    zeta_w - em_completion(w, (m + 1) as f64, 16)
}

const ZETA_PARTIAL_DIRECT: u64 = 2000;

/// Zeta with the default correction order.
pub fn zeta(s: Complex64) -> Result<Complex64, SpecialError> {
    ZetaEvaluator::default().eval(s)
}

/// `zeta^(order)(s)` for order <= 3 by a Cauchy circle of radius
/// `min(1e-2, |s-1|/2)`; returns the value and the quadrature error estimate.
pub fn zeta_deriv(s: Complex64, order: u32) -> Result<(Complex64, f64), SpecialError> {
    debug_assert!(order <= 3);
    if order == 0 {
        return Ok((zeta(s)?, 0.0));
    }
    let dist = (s - Complex64::new(1.0, 0.0)).norm();
    if dist <= 1e-3 {
        return Err(SpecialError::Pole { where_: "zeta_deriv too close to s = 1" });
    }
    let radius = 1e-2f64.min(dist / 2.0);
    zeta_deriv_with_radius(s, order, radius)
}

/// Same as [`zeta_deriv`] with an explicit circle radius, for two-radius
/// consistency checks.
pub fn zeta_deriv_with_radius(
    s: Complex64,
    order: u32,
    radius: f64,
) -> Result<(Complex64, f64), SpecialError> {
    let circle = ContourCircle::new(s, radius);
    // Coefficient extraction amplifies zeta round-off by order!/radius^order,
    // so the achievable accuracy is ~1e-9 at radius 1e-2 and order 3.
    let r = cauchy_derivative(
        &mut |z| zeta(z).expect("circle stays inside the zeta strip"),
        &circle,
        order,
        1e-9,
    )?;
    Ok((r.value, r.err_estimate))
}

/// Principal-branch log-gamma by upward recursion into Re w >= 10 followed by
/// the Stirling series. Accurate to ~1e-12 for arguments off the nonpositive
/// real axis; callers keep w away from the poles 0, -1, -2, ...
pub fn log_gamma(mut w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < 10.0 {
        acc -= w.ln();
        w += 1.0;
    }
    let half_ln_tau = 0.918_938_533_204_672_74; // ln(2 pi)/2
    let mut res = (w - 0.5) * w.ln() - w + half_ln_tau;
    let w2 = w * w;
    let mut wp = w;
    for j in 1..=10u32 {
        let (bn, bd) = BERNOULLI[(j - 1) as usize];
        let a = 2.0 * j as f64;
        res += Complex64::new(bn / (bd * a * (a - 1.0)), 0.0) / wp;
        wp *= w2;
    }
    acc + res
}

pub fn gamma(w: Complex64) -> Complex64 {
    log_gamma(w).exp()
}

/// The fourth-power gamma-ratio kernel
/// `g(s,t) = [G(1/4 + s/2 + it/2) G(1/4 + s/2 - it/2) /
///            (G(1/4 + it/2) G(1/4 - it/2))]^4` with `G = Gamma`,
/// computed as the exponential of log-gamma differences.
pub fn gamma_ratio_kernel(s: Complex64, t: f64) -> Result<Complex64, SpecialError> {
    if t <= 0.0 {
        return Err(SpecialError::Domain { what: "gamma_ratio_kernel needs t > 0" });
    }
    let q = Complex64::new(0.25, 0.0);
    let ht = Complex64::new(0.0, 0.5 * t);
    let ln = log_gamma(q + s * 0.5 + ht) + log_gamma(q + s * 0.5 - ht)
        - log_gamma(q + ht)
        - log_gamma(q - ht);
    Ok((ln * 4.0).exp())
}

/// Output of [`stirling_ratio`]: the directly computed gamma ratio and its
/// large-t prediction `t^{-(s1+s2+a+b)} exp(mp i pi (s1+s2+a+b)/2)`.
#[derive(Debug, Clone, Copy)]
pub struct StirlingRatio {
    pub computed: Complex64,
    pub predicted: Complex64,
}

/// `Gamma(1/2 - b - s2 +- it) / Gamma(1/2 + a + s1 +- it)` together with its
/// first-order Stirling prediction; `upper` picks the `+it` sign (which pairs
/// with the `-i pi/2` phase).
pub fn stirling_ratio(
    a: Complex64,
    b: Complex64,
    s1: Complex64,
    s2: Complex64,
    t: f64,
    upper: bool,
) -> Result<StirlingRatio, SpecialError> {
    if t <= 0.0 {
        return Err(SpecialError::Domain { what: "stirling_ratio needs t > 0" });
    }
    let it = Complex64::new(0.0, if upper { t } else { -t });
    let half = Complex64::new(0.5, 0.0);
    let num = half - b - s2 + it;
    let den = half + a + s1 + it;
    let computed = (log_gamma(num) - log_gamma(den)).exp();
    let e = s1 + s2 + a + b;
    let phase_sign = if upper { -1.0 } else { 1.0 };
    let predicted =
        (-e * t.ln() + Complex64::new(0.0, phase_sign * core::f64::consts::FRAC_PI_2) * e).exp();
    Ok(StirlingRatio { computed, predicted })
}

/// Parameters of the smoothing kernels: ordinate `t` and the cutoff `U`
/// entering the sharp-cutoff variant through `(U/t)^{4s}`.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub t: f64,
    pub u: f64,
}

impl KernelParams {
    pub fn new(t: f64, u: f64) -> Result<Self, SpecialError> {
        if t <= 0.0 || u <= 1.0 {
            return Err(SpecialError::Domain { what: "kernel params need t > 0, U > 1" });
        }
        Ok(KernelParams { t, u })
    }
}

// 15-point Kronrod extension of 7-point Gauss-Legendre on [-1, 1],
// stored as (abscissa, weight) for the full symmetric node set.
const PANEL_XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const PANEL_WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Precomputed vertical-line quadrature for the smoothing kernel at fixed
/// `(t, U)`: nodes of `G(s)/s g(s,t) [(U/t)^{4s}]` on `Re s = line_re`,
/// `|Im s| <= im_max`, laid out as Gauss-Kronrod panels. Each `eval(x)` then
/// costs one complex exponential per node.
pub struct KernelLine {
    nodes: Vec<(Complex64, Complex64)>,
}

impl KernelLine {
    pub fn new(
        params: &KernelParams,
        tilde: bool,
        line_re: f64,
        im_max: f64,
        panels: usize,
    ) -> Result<Self, SpecialError> {
        if line_re.abs() < 1e-6 {
            return Err(SpecialError::Domain { what: "kernel line through s = 0" });
        }
        debug_assert!(im_max > 0.0 && panels >= 1);
        let ln_scale = if tilde { 4.0 * (params.u / params.t).ln() } else { 0.0 };
        let h = im_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 30);
        for side in [-1.0f64, 1.0] {
            for panel in 0..panels {
                let c = side * (panel as f64 + 0.5) * h;
                for (i, &xg) in PANEL_XGK.iter().enumerate() {
                    let offs: &[f64] = if xg == 0.0 { &[0.0] } else { &[-xg, xg] };
                    for &o in offs {
                        let tau = c + 0.5 * h * o;
                        let s = Complex64::new(line_re, tau);
                        let g = gamma_ratio_kernel(s, params.t)?;
                        let pref = (s * s + s * ln_scale).exp() / s * g
                            * (0.5 * h * PANEL_WGK[i] / core::f64::consts::TAU);
                        nodes.push((s, pref));
                    }
                }
            }
        }
        Ok(KernelLine { nodes })
    }

    /// The kernel value at `x > 0`:
    /// `(1/2 pi i) int G(s)/s g(s,t) [(U/t)^{4s}] x^{-s} ds`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_with_scale(x).0
    }

    /// Kernel value plus the gross magnitude of the quadrature sum. The gross
    /// scale fixes the round-off floor: the value is only meaningful to about
    /// `1e-16 * gross`, which can exceed the value itself for x far below the
    /// kernel transition.
    pub fn eval_with_scale(&self, x: f64) -> (Complex64, f64) {
        debug_assert!(x > 0.0);
        let lx = x.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut gross = 0.0f64;
        for &(s, pref) in &self.nodes {
            let term = pref * (-s * lx).exp();
            sum += term;
            gross += term.norm();
        }
        (sum, gross)
    }
}

/// Truncation height for the kernel's vertical integration line; the
/// Gaussian factor makes the discarded tails far below working precision.
pub const KERNEL_IM_MAX: f64 = 12.0;

/// Smoothing kernel `V_t(x)` (or the sharp-cutoff variant with the
/// `(U/t)^{4s}` factor when `tilde`), on the line Re s = 1 truncated at
/// `|Im s| <= 12`; panel counts are doubled until two estimates agree.
pub fn kernel_v(params: &KernelParams, x: f64, tilde: bool) -> Result<Complex64, SpecialError> {
    if x <= 0.0 {
        return Err(SpecialError::Domain { what: "kernel_v needs x > 0" });
    }
    let mut panels = 8usize;
    let mut prev = KernelLine::new(params, tilde, 1.0, KERNEL_IM_MAX, panels)?.eval(x);
    let mut diff = f64::INFINITY;
    while panels <= 128 {
        panels *= 2;
        let (next, gross) =
            KernelLine::new(params, tilde, 1.0, KERNEL_IM_MAX, panels)?.eval_with_scale(x);
        diff = (next - prev).norm();
        // The log-gamma round-off floor is a small multiple of 1e-14 times
        // the gross sum; below that, panel counts only reshuffle noise.
        if diff <= 1e-12 * gross + 1e-11 * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(SpecialError::Num(NumError::NonConvergence {
        what: "kernel_v panel refinement",
        best: prev,
        err_estimate: diff,
    }))
}

/// Shifted-moment normalizer:
/// `min(1/|2 t0|, log T)` for `|t0| <= 1/200` (so `log T` at `t0 = 0`),
/// `log(2 + |2 t0|)` otherwise.
pub fn shifted_normalizer(t_len: f64, t0: f64) -> f64 {
    debug_assert!(t_len > 2.0);
    let a = (2.0 * t0).abs();
    if t0.abs() <= 1.0 / 200.0 {
        if a == 0.0 {
            t_len.ln()
        } else {
            (1.0 / a).min(t_len.ln())
        }
    } else {
        (2.0 + a).ln()
    }
}

/// `ln sin(pi s / 2)` stable for large |Im s|.
fn ln_sin_half_pi(s: Complex64) -> Complex64 {
    if s.im.abs() <= 2.0 {
        return (s * core::f64::consts::FRAC_PI_2).sin().ln();
    }
    if s.im > 0.0 {
        // sin(pi s/2) = e^{-i pi s/2} (i/2) (1 - e^{i pi s}), second factor ~1.
        let tail = (Complex64::new(0.0, core::f64::consts::PI) * s).exp();
        Complex64::new(0.0, -core::f64::consts::FRAC_PI_2) * s
            + Complex64::new(0.0, 0.5).ln()
            + (Complex64::new(1.0, 0.0) - tail).ln()
    } else {
        ln_sin_half_pi(s.conj()).conj()
    }
}

/// Functional-equation factor `chi(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s)`,
/// evaluated in log form so large |Im s| does not overflow.
pub fn chi(s: Complex64) -> Complex64 {
    let ln2 = core::f64::consts::LN_2;
    let lnpi = 1.144_729_885_849_400_2; // ln(pi)
    let one = Complex64::new(1.0, 0.0);
    (s * ln2 + (s - one) * lnpi + ln_sin_half_pi(s) + log_gamma(one - s)).exp()
}

/// Phase `theta(t) = Im log Gamma(1/4 + it/2) - (t/2) ln pi` of the rotated
/// critical-line combination.
pub fn riemann_siegel_theta(t: f64) -> f64 {
    let lnpi = 1.144_729_885_849_400_2;
    log_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * lnpi
}

/// The real rotated combination `e^{i theta(t)} zeta(1/2 + it)`.
pub fn hardy_z(t: f64) -> Result<f64, SpecialError> {
    let z = zeta(Complex64::new(0.5, t))?;
    let rotated = Complex64::new(0.0, riemann_siegel_theta(t)).exp() * z;
    debug_assert!(rotated.im.abs() < 1e-8 * rotated.norm().max(1.0));
    Ok(rotated.re)
}
