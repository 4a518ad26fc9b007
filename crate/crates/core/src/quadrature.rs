//! Numerical integration for the continuum transport integrals.
//!
//! * [`tanh_sinh`]: double-exponential rule for finite intervals with
//!   integrable endpoint singularities. The integrand receives the exact
//!   distances to both ends of the outer interval, so factors like
//!   `(λ_m - λ)^ν` keep full precision next to an endpoint.
//! * [`gauss_kronrod`]: adaptive 7/15-point Gauss–Kronrod for smooth panels.
//! * [`fourier_finite`]: `∫_a^b g(x) e^{-ixt} dx` summed over half-period
//!   panels, Gauss–Kronrod inside and tanh-sinh on the two end panels.
//! * [`line_integral_log`]: trapezoid rule on the whole real line for
//!   integrands given by their complex logarithm, returned with a separate
//!   scale so results far below `f64::MIN_POSITIVE` relative to the integrand
//!   stay representable.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Interval `[lo, hi]` inside an outer interval `[outer_lo, outer_hi]`.
#[derive(Debug, Clone, Copy)]
struct Span {
    lo: f64,
    hi: f64,
    /// `lo - outer_lo`
    lo_offset: f64,
    /// `outer_hi - hi`
    hi_offset: f64,
}

const TS_MAX_LEVEL: u32 = 7;
const TS_MAX_DEPTH: u32 = 24;
/// Spans one adaptive tanh-sinh call may visit.
const TS_MAX_SPANS: usize = 2_000;

/// `∫_a^b f` where `f(x, x - a, b - x)`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    tanh_sinh_within(f, a, b, a, b, abs_tol, rel_tol)
}

/// `∫_lo^hi f` for a sub-interval of `[a, b]`, where the integrand still
/// receives distances to the outer ends: `f(x, x - a, b - x)`.
pub fn tanh_sinh_within<F>(
    f: F,
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    if !(hi > lo) {
        return Ok(ZERO);
    }
    let span = Span {
        lo,
        hi,
        lo_offset: lo - a,
        hi_offset: b - hi,
    };
    tanh_sinh_adaptive(&f, span, abs_tol, rel_tol)
}

fn tanh_sinh_adaptive<F>(f: &F, span: Span, abs_tol: f64, rel_tol: f64) -> Result<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    tanh_sinh_span(f, span, abs_tol, rel_tol, 0, &Cell::new(TS_MAX_SPANS))
}

fn tanh_sinh_span<F>(
    f: &F,
    span: Span,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    budget: &Cell<usize>,
) -> Result<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    budget.set(budget.get().saturating_sub(1));
    if let Some(v) = tanh_sinh_fixed(f, span, abs_tol, rel_tol) {
        return Ok(v);
    }
    if depth >= TS_MAX_DEPTH || budget.get() == 0 {
        return Err(Error::NumericalFailure(format!(
            "tanh-sinh quadrature did not converge on [{}, {}]",
            span.lo, span.hi
        )));
    }
    let mid = 0.5 * (span.lo + span.hi);
    let left = Span {
        lo: span.lo,
        hi: mid,
        lo_offset: span.lo_offset,
        hi_offset: span.hi_offset + (span.hi - mid),
    };
    let right = Span {
        lo: mid,
        hi: span.hi,
        lo_offset: span.lo_offset + (mid - span.lo),
        hi_offset: span.hi_offset,
    };
    Ok(
        tanh_sinh_span(f, left, 0.5 * abs_tol, rel_tol, depth + 1, budget)?
            + tanh_sinh_span(f, right, 0.5 * abs_tol, rel_tol, depth + 1, budget)?,
    )
}

/// One tanh-sinh pass with step halving; `None` if not converged.
fn tanh_sinh_fixed<F>(f: &F, span: Span, abs_tol: f64, rel_tol: f64) -> Option<Complex64>
where
    F: Fn(f64, f64, f64) -> Complex64,
{
    let half = 0.5 * (span.hi - span.lo);
    let centre = 0.5 * (span.hi + span.lo);
    // Node at u: offsets from both ends and weight (without the step factor).
    let node = |u: f64| -> Option<(f64, f64, f64)> {
        let s = FRAC_PI_2 * u.sinh();
        let from_lo = half * 2.0 / (1.0 + (-2.0 * s).exp());
        let to_hi = half * 2.0 / (1.0 + (2.0 * s).exp());
        if from_lo == 0.0 || to_hi == 0.0 {
            return None;
        }
        let cs = s.cosh();
        let w = half * FRAC_PI_2 * u.cosh() / (cs * cs);
        Some((from_lo, to_hi, w))
    };
    let eval = |u: f64| -> Option<Complex64> {
        let (from_lo, to_hi, w) = node(u)?;
        let x = if u < 0.0 {
            span.lo + from_lo
        } else {
            span.hi - to_hi
        };
        let x = if u == 0.0 { centre } else { x };
        let v = f(x, span.lo_offset + from_lo, span.hi_offset + to_hi);
        Some(v * w)
    };
    // Sum over u = k * step for odd k (or all k at level 0), both signs,
    // until terms vanish.
    let sweep = |step: f64, stride: usize, start: usize| -> Complex64 {
        let mut acc = ZERO;
        for sign in [-1.0, 1.0] {
            let mut k = start;
            let mut small = 0;
            loop {
                let u = sign * k as f64 * step;
                match eval(u) {
                    None => break,
                    Some(term) => {
                        acc += term;
                        if term.norm() <= 1e-18 * acc.norm().max(f64::MIN_POSITIVE) {
                            small += 1;
                            if small >= 3 {
                                break;
                            }
                        } else {
                            small = 0;
                        }
                    }
                }
                k += stride;
                if k as f64 * step > 7.0 {
                    break;
                }
            }
        }
        acc
    };

    let mut step = 0.5;
    let mut sum = eval(0.0).unwrap_or(ZERO) + sweep(step, 1, 1);
    let mut estimate = sum * step;
    for _ in 1..=TS_MAX_LEVEL {
        step *= 0.5;
        sum += sweep(step, 2, 1);
        let next = sum * step;
        let err = (next - estimate).norm();
        estimate = next;
        if !estimate.re.is_finite() || !estimate.im.is_finite() {
            return None;
        }
        if err <= abs_tol.max(rel_tol * estimate.norm()) {
            return Some(estimate);
        }
    }
    None
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod (7/15) with bisection.
pub fn gauss_kronrod<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(b > a) {
        return Ok(ZERO);
    }
    let budget = Cell::new(GK_MAX_INTERVALS);
    gk_adaptive(&f, a, b, abs_tol, rel_tol, 0, &budget)
}

/// Subintervals one adaptive call may visit; noise that the error estimate
/// cannot resolve would otherwise bisect without bound.
const GK_MAX_INTERVALS: usize = 20_000;

fn gk_adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    budget: &Cell<usize>,
) -> Result<Complex64> {
    budget.set(budget.get().saturating_sub(1));
    let (v, err) = gk15(f, a, b);
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if err <= abs_tol.max(rel_tol * v.norm()) {
        return Ok(v);
    }
    if depth >= 40 || budget.get() == 0 {
        return Err(Error::NumericalFailure(format!(
            "Gauss-Kronrod quadrature did not converge on [{a}, {b}]"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(
        gk_adaptive(f, a, m, 0.5 * abs_tol, rel_tol, depth + 1, budget)?
            + gk_adaptive(f, m, b, 0.5 * abs_tol, rel_tol, depth + 1, budget)?,
    )
}

/// `∫_a^b g(x, x - a, b - x) e^{-ixt} dx`.
///
/// The interval is cut into panels of half an oscillation period `π/t`.
/// `abs_tol` bounds the total error; it is shared evenly between panels.
pub fn fourier_finite<G>(g: G, a: f64, b: f64, t: f64, abs_tol: f64) -> Result<Complex64>
where
    G: Fn(f64, f64, f64) -> Complex64 + Sync,
{
    if !(b > a) {
        return Ok(ZERO);
    }
    let width = b - a;
    let panels = if t > 0.0 {
        ((width * t / PI).ceil() as usize).max(1)
    } else {
        1
    };
    let tol = abs_tol / panels as f64;
    let rel = 1e-13;
    let panel_phase = width * t / panels as f64;
    let edge = |k: usize| {
        if k == panels {
            b
        } else {
            a + width * k as f64 / panels as f64
        }
    };
    // Phases are taken relative to each panel's left edge: `x t` itself
    // carries an absolute rounding error of order `ulp(x t)`, which for large
    // `t` is noise the error estimate cannot get below.
    let start = |k: usize| Complex64::from_polar(1.0, -(a * t + k as f64 * panel_phase));

    let end_panel = |k: usize| -> Result<Complex64> {
        let (lo, hi) = (edge(k), edge(k + 1));
        let span = Span {
            lo,
            hi,
            lo_offset: lo - a,
            hi_offset: b - hi,
        };
        let f = |x: f64, da: f64, db: f64| g(x, da, db) * Complex64::from_polar(1.0, -(x - lo) * t);
        Ok(tanh_sinh_adaptive(&f, span, tol, rel)? * start(k))
    };

    if panels <= 2 {
        let mut total = ZERO;
        for k in 0..panels {
            total += end_panel(k)?;
        }
        return Ok(total);
    }
    let mut total = end_panel(0)? + end_panel(panels - 1)?;
    for k in 1..panels - 1 {
        let lo = edge(k);
        let local = |s: f64| {
            let x = lo + s;
            g(x, x - a, b - x) * Complex64::from_polar(1.0, -s * t)
        };
        total += gauss_kronrod(local, 0.0, edge(k + 1) - lo, tol, rel)? * start(k);
    }
    Ok(total)
}

/// `∫_{-∞}^{∞} exp(log_f(u)) du` by the trapezoid rule with step halving.
///
/// Returns `(I, shift)` with the integral equal to `I · e^shift`, where
/// `shift` is the peak of `Re log_f`. The integrand must decay on both sides
/// of a single dominant region and be analytic near the real axis, so the
/// trapezoid rule converges geometrically.
pub fn line_integral_log<F>(log_f: F, rel_tol: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    const SCAN: f64 = 60.0;
    const DROP: f64 = 46.0;
    let re = |u: f64| {
        let v = log_f(u).re;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Coarse scan for the peak, then golden-section refinement.
    let mut best = (0.0, re(0.0));
    let mut u = -SCAN;
    while u <= SCAN {
        let v = re(u);
        if v > best.1 {
            best = (u, v);
        }
        u += 0.125;
    }
    if !best.1.is_finite() {
        return Err(Error::NumericalFailure(
            "integrand vanishes on the scan range".into(),
        ));
    }
    let (mut lo, mut hi) = (best.0 - 0.125, best.0 + 0.125);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if re(m1) < re(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let peak_u = 0.5 * (lo + hi);
    let shift = re(peak_u).max(best.1);

    // Extend outward until the integrand is negligible relative to the peak.
    let reach = |dir: f64| -> Result<f64> {
        let mut step = 1e-3;
        let mut u = peak_u;
        loop {
            u += dir * step;
            if re(u) < shift - DROP {
                return Ok(u);
            }
            step = (step * 1.5).min(1.0);
            if (u - peak_u).abs() > 4.0 * SCAN {
                return Err(Error::NumericalFailure(
                    "integrand does not decay on the real line".into(),
                ));
            }
        }
    };
    let u_lo = reach(-1.0)?;
    let u_hi = reach(1.0)?;

    let term = |u: f64| {
        let l = log_f(u);
        let v = Complex64::from_polar((l.re - shift).exp(), l.im);
        if v.re.is_finite() && v.im.is_finite() {
            v
        } else {
            ZERO
        }
    };
    let mut n = 16usize;
    let mut h = (u_hi - u_lo) / n as f64;
    let mut sum: Complex64 = (0..=n).map(|k| term(u_lo + k as f64 * h)).sum();
    let mut estimate = sum * h;
    for _ in 0..18 {
        let fresh: Complex64 = (0..n).map(|k| term(u_lo + (k as f64 + 0.5) * h)).sum();
        sum += fresh;
        n *= 2;
        h *= 0.5;
        let next = sum * h;
        let err = (next - estimate).norm();
        estimate = next;
        // Converged once successive refinements agree relative to the
        // integrand's magnitude, which is 1 after scaling.
        if n >= 64 && err <= rel_tol * estimate.norm().max(1e-300) {
            return Ok((estimate, shift));
        }
    }
    Err(Error::NumericalFailure(
        "trapezoid rule on the real line did not converge".into(),
    ))
}
