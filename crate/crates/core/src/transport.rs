//! Discrete-spectrum transport: averaged return probabilities, pairwise
//! transition probabilities and the long-time average χ.
//!
//! Time is dimensionless (unit jump rate). The classical generator is
//! `T = -L`, the quantum Hamiltonian `H = L`. Slightly negative eigenvalues
//! from round-off are clamped to zero.

use std::fmt::Write as _;

use faer::mat::MatRef;
use num_complex::Complex64;

use crate::spectral::{cluster_ranges, Eigenvectors, Spectrum};
use crate::{format_f64, par, Error, Result};

/// Decays below this are flushed to zero.
const UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
    /// Union of grids, e.g. a logarithmic grid refined linearly over a window.
    Mixed,
}

/// Strictly increasing, finite, non-negative sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    spacing: Spacing,
}

impl TimeGrid {
    /// `points` log-spaced times over `[t_min, t_max]`, optionally with `t = 0`
    /// prepended.
    pub fn logarithmic(t_min: f64, t_max: f64, points: usize, include_zero: bool) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < t_min < t_max and >= 2 points, got [{t_min}, {t_max}] x {points}"
            )));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let step = (b - a) / (points - 1) as f64;
        let mut times = Vec::with_capacity(points + 1);
        if include_zero {
            times.push(0.0);
        }
        times.extend((0..points).map(|i| match i {
            0 => t_min,
            i if i == points - 1 => t_max,
            i => (a + i as f64 * step).exp(),
        }));
        Ok(TimeGrid {
            times,
            spacing: Spacing::Logarithmic,
        })
    }

    /// `points` equally spaced times over `[t_start, t_end]`.
    pub fn linear(t_start: f64, t_end: f64, points: usize) -> Result<Self> {
        if !(t_start >= 0.0 && t_end > t_start && t_end.is_finite()) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "linear grid needs 0 <= t_start < t_end and >= 2 points, got [{t_start}, {t_end}] x {points}"
            )));
        }
        let step = (t_end - t_start) / (points - 1) as f64;
        let times = (0..points)
            .map(|i| {
                if i == points - 1 {
                    t_end
                } else {
                    t_start + i as f64 * step
                }
            })
            .collect();
        Ok(TimeGrid {
            times,
            spacing: Spacing::Linear,
        })
    }

    /// Linear grid with step `dt` from `t_start`, ending at or before `t_end`.
    pub fn with_step(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {dt}"
            )));
        }
        let points = ((t_end - t_start) / dt + 1e-9).floor() as usize + 1;
        let times: Vec<f64> = (0..points).map(|i| t_start + i as f64 * dt).collect();
        Self::from_times(times).map(|g| TimeGrid {
            spacing: Spacing::Linear,
            ..g
        })
    }

    /// 600 log-spaced points over `[1e-2, 1e4]` plus `t = 0`.
    pub fn default_log() -> Self {
        Self::logarithmic(1e-2, 1e4, 600, true).expect("valid default grid")
    }

    /// Arbitrary increasing times. Uniform or geometric sequences (the latter
    /// optionally led by `t = 0`) are recognised, so a grid read back from a
    /// file keeps its spacing.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("empty time grid".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
            return Err(Error::InvalidInput(
                "grid times must be finite and >= 0".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "grid times must be strictly increasing".into(),
            ));
        }
        let spacing = detect_spacing(&times);
        Ok(TimeGrid { times, spacing })
    }

    /// Sorted union of two grids; exact duplicates are dropped.
    pub fn merge(&self, other: &TimeGrid) -> TimeGrid {
        let mut times: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        TimeGrid {
            times,
            spacing: Spacing::Mixed,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }
}

fn detect_spacing(times: &[f64]) -> Spacing {
    let even = |steps: &[f64]| {
        steps.len() >= 2
            && steps
                .iter()
                .all(|d| (d - steps[0]).abs() <= 1e-9 * steps[0].abs())
    };
    let diffs: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if even(&diffs) {
        return Spacing::Linear;
    }
    let positive = if times[0] == 0.0 { &times[1..] } else { times };
    let ratios: Vec<f64> = positive.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if even(&ratios) {
        Spacing::Logarithmic
    } else {
        Spacing::Mixed
    }
}

fn clamped(s: &Spectrum) -> Vec<f64> {
    s.eigenvalues().iter().map(|&l| l.max(0.0)).collect()
}

fn decay(lambda: f64, t: f64) -> f64 {
    let e = (-lambda * t).exp();
    if e < UNDERFLOW {
        0.0
    } else {
        e
    }
}

/// `p̄(t) = (1/N) Σ_n exp(-λ_n t)`.
pub fn classical_return(s: &Spectrum, grid: &TimeGrid) -> Vec<f64> {
    let lambdas = clamped(s);
    let n = lambdas.len() as f64;
    par::map(grid.times(), |&t| {
        lambdas.iter().map(|&l| decay(l, t)).sum::<f64>() / n
    })
}

/// Mean amplitude `ᾱ(t) = (1/N) Σ_n exp(-iλ_n t)`.
fn mean_amplitude(lambdas: &[f64], t: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &l in lambdas {
        let (sin, cos) = (l * t).sin_cos();
        re += cos;
        im -= sin;
    }
    Complex64::new(re, im) / lambdas.len() as f64
}

/// `|ᾱ(t)|² = |(1/N) Σ_n exp(-iλ_n t)|²`, the eigenvalue-only lower bound of
/// the quantum return probability.
pub fn quantum_return_bound(s: &Spectrum, grid: &TimeGrid) -> Vec<f64> {
    let lambdas = clamped(s);
    par::map(grid.times(), |&t| {
        mean_amplitude(&lambdas, t).norm_sqr().clamp(0.0, 1.0)
    })
}

/// Exact averaged quantum return probability
/// `π̄(t) = (1/N) Σ_j |Σ_n exp(-iλ_n t) v_jn²|²`.
pub fn exact_average_return(s: &Spectrum, grid: &TimeGrid) -> Result<Vec<f64>> {
    let v = s.require_vectors()?;
    let lambdas = clamped(s);
    let n = lambdas.len();
    // weights[j * n + m] = v_jm²
    let mut weights = vec![0.0; n * n];
    for m in 0..n {
        for (j, x) in v.column(m).iter().enumerate() {
            weights[j * n + m] = x * x;
        }
    }
    Ok(par::map(grid.times(), |&t| {
        let phases: Vec<(f64, f64)> = lambdas
            .iter()
            .map(|&l| {
                let (sin, cos) = (l * t).sin_cos();
                (cos, -sin)
            })
            .collect();
        let total: f64 = weights
            .chunks_exact(n)
            .map(|row| {
                let (mut re, mut im) = (0.0, 0.0);
                for (w, (c, s)) in row.iter().zip(&phases) {
                    re += w * c;
                    im += w * s;
                }
                re * re + im * im
            })
            .sum();
        (total / n as f64).clamp(0.0, 1.0)
    }))
}

fn check_node(v: &Eigenvectors, index: usize) -> Result<()> {
    if index < v.n() {
        Ok(())
    } else {
        Err(Error::NodeOutOfRange { index, n: v.n() })
    }
}

/// Classical transition probability `p_{k,j}(t) = ⟨k| exp(-Lt) |j⟩`.
pub fn pairwise_classical(s: &Spectrum, j: usize, k: usize, t: f64) -> Result<f64> {
    let v = s.require_vectors()?;
    check_node(v, j)?;
    check_node(v, k)?;
    Ok(s.eigenvalues()
        .iter()
        .enumerate()
        .map(|(m, &l)| decay(l.max(0.0), t) * v.get(k, m) * v.get(j, m))
        .sum())
}

/// Quantum transition amplitude `α_{k,j}(t) = ⟨k| exp(-iLt) |j⟩`.
pub fn pairwise_amplitude(s: &Spectrum, j: usize, k: usize, t: f64) -> Result<Complex64> {
    let v = s.require_vectors()?;
    check_node(v, j)?;
    check_node(v, k)?;
    Ok(s.eigenvalues()
        .iter()
        .enumerate()
        .map(|(m, &l)| Complex64::from_polar(v.get(k, m) * v.get(j, m), -l.max(0.0) * t))
        .sum())
}

/// Quantum transition probability `π_{k,j}(t) = |α_{k,j}(t)|²`.
pub fn pairwise_quantum(s: &Spectrum, j: usize, k: usize, t: f64) -> Result<f64> {
    pairwise_amplitude(s, j, k, t).map(|a| a.norm_sqr())
}

/// Long-time averaged transition probabilities, `data[k * n + j] = χ_{k,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ChiMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.n + j]
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|k| self.get(k, j)).sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Header row of node indices, then one row per `k`.
    pub fn to_csv(&self) -> String {
        let mut out = (0..self.n)
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for k in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format_f64(self.get(k, j))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// `χ_{k,j} = Σ_E |Σ_{n∈E} v_kn v_jn|²` over eigenvalue clusters `E`.
///
/// Cross terms inside a degenerate cluster are what separate χ from the naive
/// `Σ_n v_kn² v_jn²`, so the result depends on `cluster_tol` resolving the
/// true degeneracies. Singleton clusters are folded into one product
/// `W Wᵀ` with `W = v∘v`; larger clusters form their projector explicitly.
pub fn chi_matrix(s: &Spectrum, cluster_tol: f64) -> Result<ChiMatrix> {
    let v = s.require_vectors()?;
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster tolerance must be positive, got {cluster_tol}"
        )));
    }
    let n = v.n();
    let ranges = cluster_ranges(s, cluster_tol);
    let (singles, groups): (Vec<_>, Vec<_>) = ranges.into_iter().partition(|r| r.len() == 1);

    let mut squares = Vec::with_capacity(singles.len() * n);
    for r in &singles {
        squares.extend(v.column(r.start).iter().map(|x| x * x));
    }
    let w = MatRef::from_column_major_slice(&squares, n, singles.len());
    let mut chi = w * w.transpose();

    for r in groups {
        let block = &v_block(v, r.start, r.end);
        let vb = MatRef::from_column_major_slice(block, n, r.len());
        let proj = vb * vb.transpose();
        for j in 0..n {
            for k in 0..n {
                let p = proj[(k, j)];
                chi[(k, j)] += p * p;
            }
        }
    }
    let data = (0..n)
        .flat_map(|k| (0..n).map(move |j| (k, j)))
        .map(|(k, j)| chi[(k, j)])
        .collect();
    Ok(ChiMatrix { n, data })
}

fn v_block(v: &Eigenvectors, start: usize, end: usize) -> Vec<f64> {
    (start..end)
        .flat_map(|m| v.column(m).iter().copied())
        .collect()
}

/// Sampled `p̄`, `|ᾱ|²` and optionally `π̄` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSeries {
    pub grid: TimeGrid,
    pub p_bar: Vec<f64>,
    pub alpha_bar_sq: Vec<f64>,
    pub pi_bar: Option<Vec<f64>>,
}

impl TransportSeries {
    /// Evaluates all series for a discrete spectrum; `π̄` only when requested
    /// (requires eigenvectors).
    pub fn from_spectrum(s: &Spectrum, grid: &TimeGrid, with_pi: bool) -> Result<Self> {
        let pi_bar = if with_pi {
            Some(exact_average_return(s, grid)?)
        } else {
            None
        };
        Ok(TransportSeries {
            grid: grid.clone(),
            p_bar: classical_return(s, grid),
            alpha_bar_sq: quantum_return_bound(s, grid),
            pi_bar,
        })
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    /// `t,p_bar,alpha_bar_sq[,pi_bar]` with round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p_bar,alpha_bar_sq");
        if self.pi_bar.is_some() {
            out.push_str(",pi_bar");
        }
        out.push('\n');
        for (i, t) in self.grid.times().iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{}",
                format_f64(*t),
                format_f64(self.p_bar[i]),
                format_f64(self.alpha_bar_sq[i])
            );
            if let Some(pi) = &self.pi_bar {
                let _ = write!(out, ",{}", format_f64(pi[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`TransportSeries::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "empty series file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_pi = match cols.as_slice() {
            ["t", "p_bar", "alpha_bar_sq"] => false,
            ["t", "p_bar", "alpha_bar_sq", "pi_bar"] => true,
            _ => return Err(Error::parse(0, format!("unexpected header `{header}`"))),
        };
        let (mut t, mut p, mut a, mut pi) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in lines {
            let fields: Result<Vec<f64>> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("bad number `{f}`")))
                })
                .collect();
            let fields = fields?;
            if fields.len() != cols.len() {
                return Err(Error::parse(lineno, "wrong number of columns"));
            }
            t.push(fields[0]);
            p.push(fields[1]);
            a.push(fields[2]);
            if with_pi {
                pi.push(fields[3]);
            }
        }
        Ok(TransportSeries {
            grid: TimeGrid::from_times(t)?,
            p_bar: p,
            alpha_bar_sq: a,
            pi_bar: with_pi.then_some(pi),
        })
    }
}
