//! Efficiency measures from sampled return probabilities: envelopes of local
//! maxima, power-law and stretched-exponential fits, the ratio
//! `ΔP(t) = ln env[|ᾱ|²] / ln p̄`, crossovers and saturation plateaus.

use std::fmt::Write as _;

use crate::transport::{Spacing, TransportSeries};
use crate::{format_f64, Error, Result};

/// Sampled `(t, value)` pairs with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl Series {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "series has {} times but {} values",
                t.len(),
                y.len()
            )));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "series times must be strictly increasing".into(),
            ));
        }
        Ok(Series { t, y })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// True when no value exceeds its predecessor.
    pub fn is_non_increasing(&self) -> bool {
        self.y.windows(2).all(|w| w[1] <= w[0])
    }

    /// Points with `lo <= t <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Series {
        let (t, y) = self
            .t
            .iter()
            .zip(&self.y)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, y)| (*t, *y))
            .unzip();
        Series { t, y }
    }
}

/// Local maxima of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    points: Series,
    half_width: usize,
}

impl Envelope {
    pub fn series(&self) -> &Series {
        &self.points
    }

    pub fn into_series(self) -> Series {
        self.points
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// An envelope already consists of maxima; extracting again returns it
    /// unchanged.
    pub fn extract(&self) -> Envelope {
        self.clone()
    }
}

/// Keeps every point strictly greater than all points up to `half_width`
/// indices to its left and not smaller than those to its right, so a plateau
/// contributes its first point. Windows are truncated at the series ends. If
/// nothing qualifies, the global maximum is returned.
pub fn extract_envelope(series: &Series, half_width: usize) -> Result<Envelope> {
    if half_width == 0 {
        return Err(Error::InvalidInput(
            "envelope half-width must be >= 1".into(),
        ));
    }
    let n = series.len();
    if n < 2 * half_width + 1 {
        return Err(Error::InvalidInput(format!(
            "series of {n} points is too short for half-width {half_width}"
        )));
    }
    let y = series.values();
    let mut keep = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(half_width);
        let hi = (i + half_width).min(n - 1);
        let left = y[lo..i].iter().all(|&v| y[i] > v);
        let right = y[i + 1..=hi].iter().all(|&v| y[i] >= v);
        if left && right {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        let best = (0..n).fold(0, |b, i| if y[i] > y[b] { i } else { b });
        keep.push(best);
    }
    let t = keep.iter().map(|&i| series.times()[i]).collect();
    let v = keep.iter().map(|&i| y[i]).collect();
    Ok(Envelope {
        points: Series { t, y: v },
        half_width,
    })
}

/// Curve used as `env[|ᾱ|²]`: the series itself when it never rises (no
/// oscillation to strip), its envelope otherwise.
pub fn quantum_envelope(series: &Series, half_width: usize) -> Result<Series> {
    if series.is_non_increasing() {
        Ok(series.clone())
    } else {
        extract_envelope(series, half_width).map(Envelope::into_series)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// `ln y = exponent · ln t + ln_prefactor`
    PowerLaw { exponent: f64, ln_prefactor: f64 },
    /// `ln y = power · ln t - coefficient · √t + ln_prefactor`
    StretchedExp {
        power: f64,
        coefficient: f64,
        ln_prefactor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub model: FitModel,
    pub window: (f64, f64),
    pub points: usize,
    /// RMS residual in `ln y`.
    pub residual: f64,
    /// Standard errors: `[exponent]` or `[power, coefficient]`.
    pub stderr: Vec<f64>,
    pub warning: Option<String>,
}

impl ScalingFit {
    /// Power-law exponent, or the power-law prefactor exponent of a
    /// stretched exponential.
    pub fn exponent(&self) -> f64 {
        match self.model {
            FitModel::PowerLaw { exponent, .. } => exponent,
            FitModel::StretchedExp { power, .. } => power,
        }
    }

    /// Stretch coefficient `c` of `exp(-c√t)`; `None` for a power law.
    pub fn coefficient(&self) -> Option<f64> {
        match self.model {
            FitModel::PowerLaw { .. } => None,
            FitModel::StretchedExp { coefficient, .. } => Some(coefficient),
        }
    }
}

#[allow(clippy::needless_range_loop)]
/// Least squares via Householder QR. Returns coefficients, RMS residual and
/// coefficient standard errors.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let m = y.len();
    let k = columns.len();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    for j in 0..k {
        let norm = a[j][j..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidInput("rank-deficient fit design".into()));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(j) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in b[j..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
    }
    let r = |i: usize, j: usize| a[j][i];
    let scale = (0..k).map(|i| r(i, i).abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r(i, i).abs() <= 1e-13 * scale) {
        return Err(Error::InvalidInput("rank-deficient fit design".into()));
    }
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (b[i] - s) / r(i, i);
    }
    let ssr: f64 = (0..m)
        .map(|row| {
            let fit: f64 = (0..k).map(|j| columns[j][row] * coef[j]).sum();
            (y[row] - fit).powi(2)
        })
        .sum();
    let rms = (ssr / m as f64).sqrt();
    // R⁻¹ column by column; Var(coef) = σ² diag(R⁻¹ R⁻ᵀ).
    let sigma2 = if m > k { ssr / (m - k) as f64 } else { 0.0 };
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..k).rev() {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..k).map(|j| r(i, j) * rinv[j][c]).sum();
            rinv[i][c] = (rhs - s) / r(i, i);
        }
    }
    let stderr = (0..k)
        .map(|i| (sigma2 * rinv[i].iter().map(|x| x * x).sum::<f64>()).sqrt())
        .collect();
    Ok((coef, rms, stderr))
}

fn windowed(series: &Series, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    if !(lo < hi) || lo <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "fit window must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let w = series.window(lo, hi);
    if w.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "need >= 5 points in [{lo}, {hi}], found {}",
            w.len()
        )));
    }
    if let Some(bad) = w.values().iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-positive value {bad} inside fit window [{lo}, {hi}]"
        )));
    }
    Ok((w.t, w.y))
}

/// Straight line through `(ln t, ln y)` inside `window`.
pub fn fit_power_law(series: &Series, window: (f64, f64)) -> Result<ScalingFit> {
    let (t, y) = windowed(series, window)?;
    let ln_t: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let ln_y: Vec<f64> = y.iter().map(|x| x.ln()).collect();
    let ones = vec![1.0; t.len()];
    let (coef, residual, stderr) = least_squares(&[ln_t, ones], &ln_y)?;
    Ok(ScalingFit {
        model: FitModel::PowerLaw {
            exponent: coef[0],
            ln_prefactor: coef[1],
        },
        window,
        points: t.len(),
        residual,
        stderr: vec![stderr[0]],
        warning: None,
    })
}

/// `ln y = a ln t - c √t + const` inside `window`, stretch exponent fixed
/// at 1/2. A non-positive `c` is reported through `warning`.
pub fn fit_stretched_exp(series: &Series, window: (f64, f64)) -> Result<ScalingFit> {
    let (t, y) = windowed(series, window)?;
    let ln_t: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let neg_sqrt: Vec<f64> = t.iter().map(|x| -x.sqrt()).collect();
    let ln_y: Vec<f64> = y.iter().map(|x| x.ln()).collect();
    let ones = vec![1.0; t.len()];
    let (coef, residual, stderr) = least_squares(&[ln_t, neg_sqrt, ones], &ln_y)?;
    let warning = (coef[1] <= 0.0).then(|| {
        format!(
            "model mismatch: stretch coefficient {} is not positive",
            coef[1]
        )
    });
    Ok(ScalingFit {
        model: FitModel::StretchedExp {
            power: coef[0],
            coefficient: coef[1],
            ln_prefactor: coef[2],
        },
        window,
        points: t.len(),
        residual,
        stderr: stderr[..2].to_vec(),
        warning,
    })
}

/// `ΔP(t)` on the classical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaP {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    /// Times inside the envelope's range where a log vanished or was
    /// undefined (a value of 1, or not strictly inside (0, 1)).
    pub excluded: Vec<f64>,
}

impl DeltaP {
    /// Mean over the last decade of valid points.
    pub fn asymptotic(&self) -> Option<f64> {
        let last = *self.t.last()?;
        let tail: Vec<f64> = self
            .t
            .iter()
            .zip(&self.value)
            .filter(|(t, _)| **t >= last / 10.0)
            .map(|(_, v)| *v)
            .collect();
        Some(tail.iter().sum::<f64>() / tail.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,delta_p\n");
        for (t, v) in self.t.iter().zip(&self.value) {
            let _ = writeln!(out, "{},{}", format_f64(*t), format_f64(*v));
        }
        out
    }
}

/// Interpolates `ln y` linearly in `ln t`; `None` outside the sample range.
fn log_interp(series: &Series, t: f64) -> Option<f64> {
    let ts = series.times();
    let ys = series.values();
    if ts.is_empty() || t < ts[0] || t > *ts.last()? {
        return None;
    }
    let i = ts.partition_point(|&x| x < t);
    if ts[i] == t {
        return Some(ys[i].ln());
    }
    let (t0, t1) = (ts[i - 1], ts[i]);
    if t0 <= 0.0 || ys[i - 1] <= 0.0 || ys[i] <= 0.0 {
        return None;
    }
    let w = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
    Some((1.0 - w) * ys[i - 1].ln() + w * ys[i].ln())
}

/// `ΔP(t) = ln env[|ᾱ(t)|²] / ln p̄(t)` at every classical sample inside the
/// envelope's time range. Points where either quantity is not strictly
/// inside `(0, 1)` are excluded and listed.
pub fn delta_p_series(classical: &Series, quantum_envelope: &Series) -> DeltaP {
    let mut out = DeltaP {
        t: Vec::new(),
        value: Vec::new(),
        excluded: Vec::new(),
    };
    let (Some(&first), Some(&last)) = (
        quantum_envelope.times().first(),
        quantum_envelope.times().last(),
    ) else {
        return out;
    };
    for (&t, &p) in classical.times().iter().zip(classical.values()) {
        if t < first || t > last {
            continue;
        }
        let ln_q = log_interp(quantum_envelope, t);
        let valid = p > 0.0 && p < 1.0 && matches!(ln_q, Some(q) if q < 0.0 && q.is_finite());
        match (valid, ln_q) {
            (true, Some(q)) => {
                out.t.push(t);
                out.value.push(q / p.ln());
            }
            _ => out.excluded.push(t),
        }
    }
    out
}

/// First time `ΔP` crosses 1 from below, linearly interpolated.
pub fn detect_crossover(delta: &DeltaP) -> Option<f64> {
    delta
        .t
        .windows(2)
        .zip(delta.value.windows(2))
        .find(|(_, v)| v[0] < 1.0 && v[1] >= 1.0)
        .map(|(t, v)| t[0] + (1.0 - v[0]) / (v[1] - v[0]) * (t[1] - t[0]))
}

/// Mean and maximum absolute deviation over the last `tail_fraction` of
/// the samples.
pub fn saturation(values: &[f64], tail_fraction: f64) -> Result<(f64, f64)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "tail fraction must lie in (0, 0.5], got {tail_fraction}"
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let count = ((values.len() as f64 * tail_fraction).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - count..];
    let mean = tail.iter().sum::<f64>() / count as f64;
    let fluct = tail.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok((mean, fluct))
}

/// Saturation over the last `tail_fraction` of the time span rather than
/// of the sample count, so extra samples packed into a fit window do not
/// shift the tail. The span is measured in `ln t` (over the positive times)
/// when `log_scale` is set and in `t` otherwise; on a uniform grid of the
/// matching kind this agrees with [`saturation`].
pub fn saturation_in_time(
    series: &Series,
    tail_fraction: f64,
    log_scale: bool,
) -> Result<(f64, f64)> {
    saturation(&[1.0], tail_fraction)?;
    let t = series.times();
    let (Some(&first), Some(&last)) = (t.iter().find(|&&x| x > 0.0), t.last()) else {
        return Err(Error::InvalidInput("series has no positive times".into()));
    };
    let start = if log_scale {
        (last.ln() - tail_fraction * (last.ln() - first.ln())).exp()
    } else {
        last - tail_fraction * (last - t[0])
    };
    let tail: Vec<f64> = t
        .iter()
        .zip(series.values())
        .filter(|(t, _)| **t >= start)
        .map(|(_, v)| *v)
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let fluct = tail.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok((mean, fluct))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    PowerLaw,
    StretchedExp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub half_width: usize,
    pub classical_window: Option<(f64, f64)>,
    pub quantum_window: Option<(f64, f64)>,
    pub model: DecayModel,
    pub tail_fraction: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            half_width: 3,
            classical_window: None,
            quantum_window: None,
            model: DecayModel::PowerLaw,
            tail_fraction: 0.1,
        }
    }
}

/// Classical and quantum efficiency measures of one transport run.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub nodes: Option<usize>,
    pub classical_fit: Option<ScalingFit>,
    pub quantum_fit: Option<ScalingFit>,
    pub delta_p: DeltaP,
    pub crossover_time: Option<f64>,
    /// Tail mean and fluctuation of `p̄`.
    pub classical_saturation: (f64, f64),
    /// Tail mean and fluctuation of the lower bound `|ᾱ|²`.
    pub quantum_saturation: (f64, f64),
    pub exact_saturation: Option<(f64, f64)>,
}

impl EfficiencyReport {
    /// `P_cl`, the classical decay exponent (power-law model only).
    pub fn p_cl(&self) -> Option<f64> {
        match self.classical_fit.as_ref()?.model {
            FitModel::PowerLaw { exponent, .. } => Some(-exponent),
            _ => None,
        }
    }

    pub fn p_qm(&self) -> Option<f64> {
        match self.quantum_fit.as_ref()?.model {
            FitModel::PowerLaw { exponent, .. } => Some(-exponent),
            _ => None,
        }
    }

    /// `P_qm / P_cl`; independent of constant prefactors.
    pub fn exponent_ratio(&self) -> Option<f64> {
        Some(self.p_qm()? / self.p_cl()?)
    }

    pub fn delta_p_asymptotic(&self) -> Option<f64> {
        self.delta_p.asymptotic()
    }

    /// Flat `key = value` text.
    pub fn to_text(&self) -> String {
        let num = |v: Option<f64>| v.map_or_else(|| "none".to_string(), format_f64);
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv(
            "nodes",
            self.nodes
                .map_or_else(|| "continuum".into(), |n| n.to_string()),
        );
        if let Some(n) = self.nodes {
            kv("equipartition", format_f64(1.0 / n as f64));
        }
        for (label, fit) in [
            ("classical", &self.classical_fit),
            ("quantum", &self.quantum_fit),
        ] {
            let Some(fit) = fit else {
                kv(&format!("{label}_fit"), "none".into());
                continue;
            };
            match fit.model {
                FitModel::PowerLaw {
                    exponent,
                    ln_prefactor,
                } => {
                    kv(&format!("{label}_fit"), "power_law".into());
                    kv(&format!("{label}_exponent"), format_f64(exponent));
                    kv(
                        &format!("{label}_exponent_stderr"),
                        format_f64(fit.stderr[0]),
                    );
                    kv(&format!("{label}_ln_prefactor"), format_f64(ln_prefactor));
                }
                FitModel::StretchedExp {
                    power,
                    coefficient,
                    ln_prefactor,
                } => {
                    kv(&format!("{label}_fit"), "stretched_exp".into());
                    kv(&format!("{label}_power"), format_f64(power));
                    kv(&format!("{label}_power_stderr"), format_f64(fit.stderr[0]));
                    kv(&format!("{label}_coefficient"), format_f64(coefficient));
                    kv(
                        &format!("{label}_coefficient_stderr"),
                        format_f64(fit.stderr[1]),
                    );
                    kv(&format!("{label}_ln_prefactor"), format_f64(ln_prefactor));
                }
            }
            kv(
                &format!("{label}_window"),
                format!("{},{}", format_f64(fit.window.0), format_f64(fit.window.1)),
            );
            kv(&format!("{label}_points"), fit.points.to_string());
            kv(&format!("{label}_residual"), format_f64(fit.residual));
            if let Some(w) = &fit.warning {
                kv(&format!("{label}_warning"), w.clone());
            }
        }
        kv("p_cl", num(self.p_cl()));
        kv("p_qm", num(self.p_qm()));
        kv("exponent_ratio", num(self.exponent_ratio()));
        kv("delta_p_asymptotic", num(self.delta_p_asymptotic()));
        kv("delta_p_points", self.delta_p.t.len().to_string());
        kv("delta_p_excluded", self.delta_p.excluded.len().to_string());
        kv("crossover_time", num(self.crossover_time));
        kv(
            "classical_tail_mean",
            format_f64(self.classical_saturation.0),
        );
        kv(
            "classical_tail_fluctuation",
            format_f64(self.classical_saturation.1),
        );
        kv(
            "quantum_bound_tail_mean",
            format_f64(self.quantum_saturation.0),
        );
        kv(
            "quantum_bound_tail_fluctuation",
            format_f64(self.quantum_saturation.1),
        );
        if let Some((mean, fluct)) = self.exact_saturation {
            kv("quantum_exact_tail_mean", format_f64(mean));
            kv("quantum_exact_tail_fluctuation", format_f64(fluct));
        }
        out
    }
}

/// Fits, ΔP and saturation for a transport run. `nodes` is `None` for a
/// continuum density of states.
pub fn efficiency_report(
    series: &TransportSeries,
    opts: &AnalysisOptions,
    nodes: Option<usize>,
) -> Result<EfficiencyReport> {
    let classical = Series::new(series.times().to_vec(), series.p_bar.clone())?;
    let quantum = Series::new(series.times().to_vec(), series.alpha_bar_sq.clone())?;
    let envelope = quantum_envelope(&quantum, opts.half_width)?;
    let fit = |s: &Series, w: (f64, f64)| match opts.model {
        DecayModel::PowerLaw => fit_power_law(s, w),
        DecayModel::StretchedExp => fit_stretched_exp(s, w),
    };
    let classical_fit = opts
        .classical_window
        .map(|w| fit(&classical, w))
        .transpose()?;
    let quantum_fit = opts.quantum_window.map(|w| fit(&envelope, w)).transpose()?;
    let delta_p = delta_p_series(&classical, &envelope);
    let crossover_time = detect_crossover(&delta_p);
    let log_scale = series.grid.spacing() != Spacing::Linear;
    let tail = |values: &[f64]| -> Result<(f64, f64)> {
        let s = Series::new(series.times().to_vec(), values.to_vec())?;
        saturation_in_time(&s, opts.tail_fraction, log_scale)
    };
    let exact_saturation = series.pi_bar.as_deref().map(tail).transpose()?;
    Ok(EfficiencyReport {
        nodes,
        classical_fit,
        quantum_fit,
        delta_p,
        crossover_time,
        classical_saturation: tail(&series.p_bar)?,
        quantum_saturation: tail(&series.alpha_bar_sq)?,
        exact_saturation,
    })
}
