//! Laplacian spectra: dense symmetric eigendecomposition, degeneracy
//! clustering and empirical densities of states.

use std::fmt::Write as _;

use faer::{Mat, Side};

use crate::graph::Laplacian;
use crate::{format_f64, Error, Result};

/// Orthonormal eigenvectors stored column-major: column `k` pairs with
/// eigenvalue `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvectors {
    n: usize,
    data: Vec<f64>,
}

impl Eigenvectors {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Component of node `node` in mode `mode`.
    #[inline]
    pub fn get(&self, node: usize, mode: usize) -> f64 {
        self.data[mode * self.n + node]
    }

    pub fn column(&self, mode: usize) -> &[f64] {
        &self.data[mode * self.n..(mode + 1) * self.n]
    }
}

/// Sorted Laplacian eigenvalues with optional eigenvectors and the default
/// degeneracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Option<Eigenvectors>,
    degeneracies: Vec<(f64, usize)>,
}

impl Spectrum {
    /// Wraps a bare eigenvalue list (sorted here), e.g. a closed-form spectrum.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        let degeneracies = cluster(&eigenvalues, default_cluster_tol(&eigenvalues));
        Ok(Spectrum {
            eigenvalues,
            eigenvectors: None,
            degeneracies,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&Eigenvectors> {
        self.eigenvectors.as_ref()
    }

    /// Eigenvectors or [`Error::MissingEigenvectors`].
    pub fn require_vectors(&self) -> Result<&Eigenvectors> {
        self.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)
    }

    /// Degeneracy table at the default tolerance `1e-8·max(1, λ_max)`.
    pub fn degeneracies(&self) -> &[(f64, usize)] {
        &self.degeneracies
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is never empty")
    }

    pub fn default_cluster_tol(&self) -> f64 {
        default_cluster_tol(&self.eigenvalues)
    }

    /// `index,eigenvalue` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", format_f64(*v));
        }
        out
    }
}

fn default_cluster_tol(sorted: &[f64]) -> f64 {
    1e-8 * sorted.last().copied().unwrap_or(0.0).max(1.0)
}

/// Eigendecomposition of a Laplacian. Eigenvalues come back ascending; when
/// `with_vectors` is set each eigenvector is normalised and signed so that
/// its first non-negligible component is positive.
pub fn decompose(l: &Laplacian, with_vectors: bool) -> Result<Spectrum> {
    let n = l.n();
    let mat = Mat::<f64>::from_fn(n, n, |i, j| l.get(i, j));
    let fail =
        |e| Error::NumericalFailure(format!("eigensolver failed on a {n}x{n} matrix: {e:?}"));

    if !with_vectors {
        let values = mat.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
        return Spectrum::from_eigenvalues(values);
    }

    let evd = mat.self_adjoint_eigen(Side::Lower).map_err(fail)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "eigensolver produced non-finite values on a {n}x{n} matrix"
        )));
    }
    let mut data = Vec::with_capacity(n * n);
    for &k in &order {
        let col: Vec<f64> = (0..n).map(|i| u[(i, k)]).collect();
        let sign = col
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        data.extend(col.into_iter().map(|x| sign * x));
    }
    let degeneracies = cluster(&eigenvalues, default_cluster_tol(&eigenvalues));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(Eigenvectors { n, data }),
        degeneracies,
    })
}

/// Groups sorted eigenvalues: each value joins the current cluster when it
/// lies within `tol` of the cluster's running mean.
fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut sum = 0.0;
    for &x in sorted {
        match out.last_mut() {
            Some((mean, count)) if (x - *mean).abs() <= tol => {
                sum += x;
                *count += 1;
                *mean = sum / *count as f64;
            }
            _ => {
                sum = x;
                out.push((x, 1));
            }
        }
    }
    out
}

/// Index ranges of eigenvalue clusters, in the same order as
/// [`degeneracy_table`].
pub(crate) fn cluster_ranges(s: &Spectrum, tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    cluster(&s.eigenvalues, tol)
        .into_iter()
        .map(|(_, count)| {
            let r = start..start + count;
            start += count;
            r
        })
        .collect()
}

/// `(value, multiplicity)` pairs; multiplicities sum to `n`.
pub fn degeneracy_table(s: &Spectrum, cluster_tol: f64) -> Result<Vec<(f64, usize)>> {
    if !(cluster_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster tolerance must be positive, got {cluster_tol}"
        )));
    }
    Ok(cluster(&s.eigenvalues, cluster_tol))
}

/// `value,multiplicity` CSV.
pub fn degeneracies_to_csv(table: &[(f64, usize)]) -> String {
    let mut out = String::from("value,multiplicity\n");
    for (v, m) in table {
        let _ = writeln!(out, "{},{m}", format_f64(*v));
    }
    out
}

/// Normalised eigenvalue histogram: `Σ density·width = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl DosHistogram {
    pub fn bin_width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Probability mass in bin `i`.
    pub fn mass(&self, i: usize) -> f64 {
        self.density[i] * self.bin_width(i)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,density\n");
        for i in 0..self.density.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_f64(self.edges[i]),
                format_f64(self.edges[i + 1]),
                format_f64(self.density[i])
            );
        }
        out
    }
}

/// Histogram of the spectrum over `[λ_min, λ_max]` with `bins` equal bins,
/// the last bin closed. A degenerate range is widened to `λ ± 0.5`.
pub fn dos_histogram(s: &Spectrum, bins: usize) -> Result<DosHistogram> {
    histogram(&s.eigenvalues, bins)
}

pub(crate) fn histogram(values: &[f64], bins: usize) -> Result<DosHistogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = values.len() as f64;
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 / total / (edges[i + 1] - edges[i]))
        .collect();
    Ok(DosHistogram { edges, density })
}

/// Kolmogorov–Smirnov distance between the centred, variance-normalised
/// values and the unit-variance Wigner semicircle on `[-2, 2]`.
pub fn semicircle_ks_statistic(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let mut z: Vec<f64> = values.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let cdf = |x: f64| {
        let y = x.clamp(-2.0, 2.0);
        0.5 + (y * (4.0 - y * y).sqrt() / 4.0 + (y / 2.0).asin()) / std::f64::consts::PI
    };
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dendrimer, build_ring, build_star, laplacian, Graph};
    use approx::assert_abs_diff_eq;

    fn spectrum(g: &Graph, vectors: bool) -> Spectrum {
        decompose(&laplacian(g), vectors).unwrap()
    }

    #[test]
    fn star_spectrum_and_degeneracies() {
        let s = spectrum(&build_star(10).unwrap(), true);
        let table = degeneracy_table(&s, 1e-8).unwrap();
        assert_eq!(table.len(), 3);
        assert_abs_diff_eq!(table[0].0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table[1].0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table[2].0, 10.0, epsilon = 1e-12);
        assert_eq!(table.iter().map(|t| t.1).collect::<Vec<_>>(), vec![1, 8, 1]);
        assert_eq!(s.degeneracies().len(), 3);

        let s5 = spectrum(&build_star(5).unwrap(), false);
        for (got, want) in s5.eigenvalues().iter().zip([0.0, 1.0, 1.0, 1.0, 5.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn ring_four_spectrum() {
        let s = spectrum(&build_ring(4).unwrap(), false);
        for (got, want) in s.eigenvalues().iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_node() {
        let g = Graph::from_edges(1, []).unwrap();
        let s = spectrum(&g, true);
        assert_eq!(s.eigenvalues(), &[0.0]);
        assert_eq!(s.eigenvectors().unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn dendrimer_leaf_modes_are_degenerate() {
        let s = spectrum(&build_dendrimer(2, 3).unwrap(), false);
        let table = degeneracy_table(&s, 1e-8).unwrap();
        let at_one = table.iter().find(|(v, _)| (v - 1.0).abs() < 1e-6).unwrap();
        assert!(at_one.1 >= 3, "{table:?}");
        assert_eq!(table.iter().map(|t| t.1).sum::<usize>(), 10);
    }

    #[test]
    fn clustering_edge_cases() {
        let s = Spectrum::from_eigenvalues(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            degeneracy_table(&s, 1e-8).unwrap(),
            vec![(1.0, 1), (2.0, 1), (3.0, 1)]
        );
        assert!(degeneracy_table(&s, 0.0).is_err());
        assert_eq!(cluster_ranges(&s, 1.2), vec![0..2, 2..3]);
        assert_eq!(cluster_ranges(&s, 1.5), vec![0..3]);
    }

    #[test]
    fn eigenvector_sign_convention() {
        let s = spectrum(&build_ring(6).unwrap(), true);
        let v = s.require_vectors().unwrap();
        for k in 0..6 {
            let first = v.column(k).iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
        let bare = spectrum(&build_ring(6).unwrap(), false);
        assert!(matches!(
            bare.require_vectors(),
            Err(Error::MissingEigenvectors)
        ));
    }

    #[test]
    fn histogram_mass() {
        let s = spectrum(&build_star(10).unwrap(), false);
        let h = dos_histogram(&s, 2).unwrap();
        assert_abs_diff_eq!(h.mass(0), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(h.mass(1), 0.1, epsilon = 1e-12);

        let one = Spectrum::from_eigenvalues(vec![0.0]).unwrap();
        let h = dos_histogram(&one, 4).unwrap();
        let total: f64 = (0..4).map(|i| h.mass(i)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert_eq!((0..4).filter(|&i| h.mass(i) > 0.0).count(), 1);
        assert!(dos_histogram(&one, 0).is_err());
    }

    #[test]
    fn csv_exports() {
        let s = Spectrum::from_eigenvalues(vec![0.0, 1.0, 1.0, 4.5]).unwrap();
        assert_eq!(s.to_csv(), "index,eigenvalue\n0,0\n1,1\n2,1\n3,4.5\n");
        assert_eq!(
            degeneracies_to_csv(s.degeneracies()),
            "value,multiplicity\n0,1\n1,2\n4.5,1\n"
        );
    }
}
