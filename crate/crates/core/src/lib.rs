//! Efficiency of classical and quantum transport on graphs, computed from the
//! eigenvalue spectrum of the graph Laplacian.
//!
//! The classical process is a continuous-time random walk generated by
//! `T = -L`; the quantum process is a continuous-time quantum walk with
//! Hamiltonian `H = L`. Both are characterised by node-averaged return
//! probabilities:
//!
//! ```text
//! p̄(t)    = (1/N) Σ_n exp(-λ_n t)                 classical, exact
//! |ᾱ(t)|² = |(1/N) Σ_n exp(-i λ_n t)|²            quantum, lower bound of π̄(t)
//! π̄(t)    = (1/N) Σ_j |⟨j| exp(-iHt) |j⟩|²         quantum, exact (needs eigenvectors)
//! ```
//!
//! The decay of `p̄` and of the envelope of the maxima of `|ᾱ|²` are the
//! efficiency measures; [`analysis`] fits them and forms the ratio
//! `ΔP(t) = ln env[|ᾱ|²] / ln p̄`.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | ring, star, dendrimer, periodic lattice and G(n, p) builders; Laplacian |
//! | [`spectral`] | dense symmetric eigensolve, degeneracies, DOS histograms |
//! | [`transport`] | discrete-spectrum return probabilities, pairwise probabilities, χ |
//! | [`continuum`] | analytic densities of states and their transport integrals |
//! | [`analysis`] | envelopes, power-law / stretched-exponential fits, ΔP, saturation |
//! | [`quadrature`] | adaptive and oscillatory quadrature used by [`continuum`] |
//!
//! Evaluation over time points runs on rayon when the `parallel` feature is
//! enabled (the default) and sequentially otherwise; results are identical
//! either way.

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod continuum;
mod error;
pub mod graph;
mod par;
pub mod quadrature;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};

/// Formats a float with the shortest representation that parses back to the
/// same value. Plain decimal notation in the usual range, exponent notation
/// for very large or very small magnitudes.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_f64;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.0, 1.0, -0.5, 1e-300, 3.0e20, 0.1 + 0.2, 2.5e-6, 1.0 / 3.0] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(1e-300), "1e-300");
        assert_eq!(format_f64(0.25), "0.25");
    }
}
