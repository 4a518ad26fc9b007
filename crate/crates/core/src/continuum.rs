//! Analytic densities of states and the continuum transport integrals
//!
//! ```text
//! p̄(t)    = ∫ ρ(λ) e^{-λt} dλ
//! |ᾱ(t)|² = |∫ ρ(λ) e^{-iλt} dλ|²
//! ```
//!
//! Two families are supported. `PowerSemicircle(ν, λ_m)` has
//! `ρ ∝ (λ λ_m - λ²)^ν` on `[0, λ_m]`; `ν = -1/2, λ_m = 4` is the density of
//! states of the infinite chain and `ν = 1/2` the Wigner semicircle.
//! `Lifshits(b)` has `ρ ∝ λ^{-b} e^{-1/λ}` on `(0, ∞)`.
//!
//! The semicircle Fourier integral is summed over half-period panels. For the
//! Lifshits family the quantum integrand is analytic in the fourth quadrant,
//! so the contour is rotated onto the ray `arg λ = -π/4`, which runs through
//! the saddle point of `-1/λ - iλt`. Along that ray the integrand no longer
//! oscillates, so the result keeps full relative accuracy even when
//! `|ᾱ|²` has decayed to `e^{-280}`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::graph::{parse_num, split_spec};
use crate::quadrature::{fourier_finite, line_integral_log, tanh_sinh_within};
use crate::transport::TimeGrid;
use crate::{par, Error, Result};

/// Default band edge for semicircle specs without `lmax`: the top of the
/// infinite chain's spectrum.
pub const DEFAULT_LAMBDA_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousDos {
    /// `ρ ∝ (λ λ_m - λ²)^ν` on `[0, λ_m]`, `ν > -1`, `λ_m > 0`.
    PowerSemicircle { nu: f64, lambda_max: f64 },
    /// `ρ ∝ λ^{-b} e^{-1/λ}` on `(0, ∞)`, `b > 1`.
    Lifshits { b: f64 },
}

impl ContinuousDos {
    pub fn power_semicircle(nu: f64, lambda_max: f64) -> Result<Self> {
        let dos = ContinuousDos::PowerSemicircle { nu, lambda_max };
        dos.validate().map(|_| dos)
    }

    pub fn lifshits(b: f64) -> Result<Self> {
        let dos = ContinuousDos::Lifshits { b };
        dos.validate().map(|_| dos)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ContinuousDos::PowerSemicircle { nu, lambda_max } => {
                if !(nu > -1.0 && nu.is_finite()) {
                    return Err(Error::InvalidParameter(format!("need nu > -1, got {nu}")));
                }
                if !(lambda_max > 0.0 && lambda_max.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "need lambda_max > 0, got {lambda_max}"
                    )));
                }
            }
            ContinuousDos::Lifshits { b } => {
                if !(b > 1.0 && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!("need b > 1, got {b}")));
                }
            }
        }
        Ok(())
    }

    /// Natural log of the normalisation integral `∫ (unnormalised ρ)`.
    ///
    /// `∫_0^{λ_m} (λ(λ_m-λ))^ν dλ = λ_m^{2ν+1} Γ(ν+1)² / Γ(2ν+2)` and
    /// `∫_0^∞ λ^{-b} e^{-1/λ} dλ = Γ(b-1)`.
    pub fn log_normalization(&self) -> f64 {
        match *self {
            ContinuousDos::PowerSemicircle { nu, lambda_max } => {
                (2.0 * nu + 1.0) * lambda_max.ln() + 2.0 * libm::lgamma(nu + 1.0)
                    - libm::lgamma(2.0 * nu + 2.0)
            }
            ContinuousDos::Lifshits { b } => libm::lgamma(b - 1.0),
        }
    }

    /// Normalised density at `λ`; zero outside the support.
    pub fn density(&self, lambda: f64) -> f64 {
        match *self {
            ContinuousDos::PowerSemicircle { nu, lambda_max } => {
                if lambda <= 0.0 || lambda >= lambda_max {
                    return 0.0;
                }
                self.semicircle_density(lambda, lambda_max - lambda, nu)
            }
            ContinuousDos::Lifshits { b } => {
                if lambda <= 0.0 {
                    return 0.0;
                }
                (-b * lambda.ln() - 1.0 / lambda - self.log_normalization()).exp()
            }
        }
    }

    /// Density from the distances to both band edges.
    fn semicircle_density(&self, from_lo: f64, to_hi: f64, nu: f64) -> f64 {
        (nu * (from_lo * to_hi).ln() - self.log_normalization()).exp()
    }

    /// `(lo, hi)` of the support; `hi` is infinite for the Lifshits family.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ContinuousDos::PowerSemicircle { lambda_max, .. } => (0.0, lambda_max),
            ContinuousDos::Lifshits { .. } => (0.0, f64::INFINITY),
        }
    }
}

impl FromStr for ContinuousDos {
    type Err = Error;

    /// `semicircle:nu=0.5,lmax=2` (lmax defaults to 4) or `lifshits:b=2`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = split_spec(s)?;
        let mut nu = None;
        let mut lmax = None;
        let mut b = None;
        for (offset, tok) in params {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(offset, format!("expected key=value, got `{tok}`")))?;
            let vpos = offset + key.len() + 1;
            match (family, key.trim()) {
                ("semicircle" | "power", "nu") => nu = Some(parse_num(vpos, value.trim(), "nu")?),
                ("semicircle" | "power", "lmax") => {
                    lmax = Some(parse_num(vpos, value.trim(), "lmax")?)
                }
                ("lifshits", "b") => b = Some(parse_num(vpos, value.trim(), "b")?),
                ("semicircle" | "power" | "lifshits", other) => {
                    return Err(Error::parse(offset, format!("unknown parameter `{other}`")))
                }
                (other, _) => return Err(Error::parse(0, format!("unknown DOS family `{other}`"))),
            }
        }
        let dos = match family {
            "semicircle" | "power" => ContinuousDos::PowerSemicircle {
                nu: nu.ok_or_else(|| Error::parse(family.len() + 1, "missing `nu`"))?,
                lambda_max: lmax.unwrap_or(DEFAULT_LAMBDA_MAX),
            },
            "lifshits" => ContinuousDos::Lifshits {
                b: b.ok_or_else(|| Error::parse(family.len() + 1, "missing `b`"))?,
            },
            other => return Err(Error::parse(0, format!("unknown DOS family `{other}`"))),
        };
        dos.validate()
            .map_err(|e| Error::parse(family.len() + 1, e.to_string()))?;
        Ok(dos)
    }
}

impl fmt::Display for ContinuousDos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContinuousDos::PowerSemicircle { nu, lambda_max } => {
                write!(f, "semicircle:nu={nu},lmax={lambda_max}")
            }
            ContinuousDos::Lifshits { b } => write!(f, "lifshits:b={b}"),
        }
    }
}

const REL_TOL: f64 = 1e-12;

fn semicircle_classical(dos: &ContinuousDos, nu: f64, lambda_max: f64, t: f64) -> Result<f64> {
    let f = |_: f64, da: f64, db: f64| {
        Complex64::new(dos.semicircle_density(da, db, nu) * (-da * t).exp(), 0.0)
    };
    // Panels [0, 1/t], [1/t, 2/t], [2/t, 4/t], ... keep the decaying
    // exponential resolved; beyond λt = 745 everything underflows.
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = (1.0 / t).min(lambda_max);
    loop {
        total += tanh_sinh_within(f, lo, hi, 0.0, lambda_max, 1e-300, REL_TOL)
            .map_err(|e| at_time(e, t))?
            .re;
        if hi >= lambda_max || hi * t > 745.0 {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(lambda_max);
    }
    Ok(total.clamp(0.0, 1.0))
}

fn semicircle_amplitude(
    dos: &ContinuousDos,
    nu: f64,
    lambda_max: f64,
    t: f64,
) -> Result<Complex64> {
    let g = |_: f64, da: f64, db: f64| Complex64::new(dos.semicircle_density(da, db, nu), 0.0);
    fourier_finite(g, 0.0, lambda_max, t, 1e-15).map_err(|e| at_time(e, t))
}

/// Lifshits integral along `λ = r0 e^u ω` with `r0 = 1/√t`; returns
/// `(I, shift)` such that the integral is `I e^{shift}`.
fn lifshits_ray(b: f64, t: f64, omega_arg: f64, oscillating: bool) -> Result<(Complex64, f64)> {
    let ln_r0 = -0.5 * t.ln();
    let ln_norm = libm::lgamma(b - 1.0);
    let log_f = |u: f64| {
        let ln_lambda = Complex64::new(ln_r0 + u, omega_arg);
        let lambda = ln_lambda.exp();
        let exponent = if oscillating {
            Complex64::new(0.0, -t) * lambda
        } else {
            -lambda * t
        };
        (1.0 - b) * ln_lambda - lambda.inv() + exponent - ln_norm
    };
    line_integral_log(log_f, 1e-13).map_err(|e| at_time(e, t))
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::NumericalFailure(msg) => Error::NumericalFailure(format!("{msg} (t = {t})")),
        other => other,
    }
}

/// Continuum classical return probability `p̄(t)` at a single time.
pub fn classical_return_at(dos: &ContinuousDos, t: f64) -> Result<f64> {
    dos.validate()?;
    if t == 0.0 {
        return Ok(1.0);
    }
    match *dos {
        ContinuousDos::PowerSemicircle { nu, lambda_max } => {
            semicircle_classical(dos, nu, lambda_max, t)
        }
        ContinuousDos::Lifshits { b } => {
            let (v, shift) = lifshits_ray(b, t, 0.0, false)?;
            Ok((v.re * shift.exp()).clamp(0.0, 1.0))
        }
    }
}

/// Continuum mean amplitude `ᾱ(t) = ∫ ρ(λ) e^{-iλt} dλ` at a single time.
pub fn quantum_amplitude_at(dos: &ContinuousDos, t: f64) -> Result<Complex64> {
    dos.validate()?;
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    match *dos {
        ContinuousDos::PowerSemicircle { nu, lambda_max } => {
            semicircle_amplitude(dos, nu, lambda_max, t)
        }
        ContinuousDos::Lifshits { b } => {
            let (v, shift) = lifshits_ray(b, t, -FRAC_PI_4, true)?;
            Ok(v * shift.exp())
        }
    }
}

/// `p̄(t)` on a grid.
pub fn classical_return_continuum(dos: &ContinuousDos, grid: &TimeGrid) -> Result<Vec<f64>> {
    dos.validate()?;
    par::try_map(grid.times(), |&t| classical_return_at(dos, t))
}

/// `|ᾱ(t)|²` on a grid.
pub fn quantum_return_bound_continuum(dos: &ContinuousDos, grid: &TimeGrid) -> Result<Vec<f64>> {
    dos.validate()?;
    par::try_map(grid.times(), |&t| {
        quantum_amplitude_at(dos, t).map(|a| a.norm_sqr().clamp(0.0, 1.0))
    })
}

/// `J_0(2t)^{2d}`: return probability of the infinite `d`-dimensional
/// hypercubic lattice, where the quantum bound is exact.
pub fn lattice_return_1d_product(d: u32, grid: &TimeGrid) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "lattice dimension must be >= 1".into(),
        ));
    }
    Ok(grid
        .times()
        .iter()
        .map(|&t| libm::j0(2.0 * t).powi(2 * d as i32))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Classical,
    Quantum,
}

/// Leading large-`t` behaviour, up to a constant factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticLaw {
    /// `t^exponent`
    PowerLaw { exponent: f64 },
    /// `t^prefactor_exponent · exp(-coefficient · t^stretch_exponent)`
    StretchedExp {
        prefactor_exponent: f64,
        coefficient: f64,
        stretch_exponent: f64,
    },
}

impl AsymptoticLaw {
    /// Log of the law at `t`, up to an additive constant.
    pub fn ln_shape(&self, t: f64) -> f64 {
        match *self {
            AsymptoticLaw::PowerLaw { exponent } => exponent * t.ln(),
            AsymptoticLaw::StretchedExp {
                prefactor_exponent,
                coefficient,
                stretch_exponent,
            } => prefactor_exponent * t.ln() - coefficient * t.powf(stretch_exponent),
        }
    }
}

/// Large-time law of `p̄` or `env[|ᾱ|²]` for a density family.
pub fn asymptotic_law(dos: &ContinuousDos, which: Transport) -> AsymptoticLaw {
    match (*dos, which) {
        (ContinuousDos::PowerSemicircle { nu, .. }, Transport::Classical) => {
            AsymptoticLaw::PowerLaw {
                exponent: -(1.0 + nu),
            }
        }
        (ContinuousDos::PowerSemicircle { nu, .. }, Transport::Quantum) => {
            AsymptoticLaw::PowerLaw {
                exponent: -2.0 * (1.0 + nu),
            }
        }
        (ContinuousDos::Lifshits { b }, Transport::Classical) => AsymptoticLaw::StretchedExp {
            prefactor_exponent: (2.0 * b - 3.0) / 4.0,
            coefficient: 2.0,
            stretch_exponent: 0.5,
        },
        (ContinuousDos::Lifshits { b }, Transport::Quantum) => AsymptoticLaw::StretchedExp {
            prefactor_exponent: (2.0 * b - 3.0) / 2.0,
            coefficient: 2.0 * SQRT_2,
            stretch_exponent: 0.5,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_and_display() {
        let d: ContinuousDos = "semicircle:nu=0.5,lmax=2".parse().unwrap();
        assert_eq!(
            d,
            ContinuousDos::PowerSemicircle {
                nu: 0.5,
                lambda_max: 2.0
            }
        );
        let d: ContinuousDos = "semicircle:nu=-0.5".parse().unwrap();
        assert_eq!(
            d,
            ContinuousDos::PowerSemicircle {
                nu: -0.5,
                lambda_max: 4.0
            }
        );
        assert_eq!(d.to_string(), "semicircle:nu=-0.5,lmax=4");
        let d: ContinuousDos = "lifshits:b=2".parse().unwrap();
        assert_eq!(d, ContinuousDos::Lifshits { b: 2.0 });
        assert!("lifshits:b=1".parse::<ContinuousDos>().is_err());
        assert!("semicircle:nu=-1".parse::<ContinuousDos>().is_err());
        assert!("semicircle:lmax=2".parse::<ContinuousDos>().is_err());
        match "semicircle:nu=x".parse::<ContinuousDos>() {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 14),
            other => panic!("{other:?}"),
        }
        assert!("gauss:s=1".parse::<ContinuousDos>().is_err());
    }

    #[test]
    fn t_zero_is_one() {
        for dos in [
            ContinuousDos::power_semicircle(0.5, 2.0).unwrap(),
            ContinuousDos::lifshits(2.0).unwrap(),
        ] {
            assert_eq!(classical_return_at(&dos, 0.0).unwrap(), 1.0);
            assert_eq!(quantum_amplitude_at(&dos, 0.0).unwrap().norm_sqr(), 1.0);
        }
    }

    #[test]
    fn asymptotic_exponents() {
        let chain = ContinuousDos::power_semicircle(-0.5, 4.0).unwrap();
        assert_eq!(
            asymptotic_law(&chain, Transport::Classical),
            AsymptoticLaw::PowerLaw { exponent: -0.5 }
        );
        let wigner = ContinuousDos::power_semicircle(0.5, 2.0).unwrap();
        assert_eq!(
            asymptotic_law(&wigner, Transport::Quantum),
            AsymptoticLaw::PowerLaw { exponent: -3.0 }
        );
        match asymptotic_law(&ContinuousDos::lifshits(2.0).unwrap(), Transport::Quantum) {
            AsymptoticLaw::StretchedExp {
                prefactor_exponent,
                coefficient,
                stretch_exponent,
            } => {
                assert_eq!(prefactor_exponent, 0.5);
                assert_relative_eq!(coefficient, 2.0 * 2f64.sqrt());
                assert_eq!(stretch_exponent, 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lattice_bessel() {
        let grid = TimeGrid::from_times(vec![0.0, 2.404_825_557_695_773 / 2.0]).unwrap();
        let v = lattice_return_1d_product(2, &grid).unwrap();
        assert_eq!(v[0], 1.0);
        assert!(v[1] < 1e-30);
        assert!(lattice_return_1d_product(0, &grid).is_err());
    }

    #[test]
    fn density_outside_support() {
        let d = ContinuousDos::power_semicircle(0.5, 2.0).unwrap();
        assert_eq!(d.density(-0.1), 0.0);
        assert_eq!(d.density(2.5), 0.0);
        assert!(d.density(1.0) > 0.0);
        assert_eq!(ContinuousDos::lifshits(3.0).unwrap().density(0.0), 0.0);
    }
}
