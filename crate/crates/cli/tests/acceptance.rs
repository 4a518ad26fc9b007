//! Acceptance criteria, one PASS/FAIL line each. Runs the real pipeline
//! through the experiment runner; exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use qtransport::analysis::{
    delta_p_series, detect_crossover, extract_envelope, fit_power_law, quantum_envelope, Series,
};
use qtransport::continuum::lattice_return_1d_product;
use qtransport::graph::{
    build_dendrimer, build_erdos_renyi, build_hypercubic, build_ring, build_star, laplacian, Graph,
};
use qtransport::spectral::decompose;
use qtransport::transport::{
    chi_matrix, classical_return, exact_average_return, pairwise_amplitude, pairwise_classical,
    pairwise_quantum, quantum_return_bound, TimeGrid, TransportSeries,
};
use qtransport_cli::{preset, run_experiment, ExperimentConfig, RunManifest, PRESETS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(dir: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(dir.join("report.txt"))
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(r: &HashMap<String, String>, key: &str) -> f64 {
    r.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn series(dir: &Path) -> TransportSeries {
    TransportSeries::from_csv(&std::fs::read_to_string(dir.join("series.csv")).unwrap()).unwrap()
}

fn mean_over(s: &TransportSeries, values: &[f64], lo: f64, hi: f64) -> f64 {
    let picked: Vec<f64> = s
        .times()
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(_, v)| *v)
        .collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

/// Runs a preset into `root/<name>` and returns the elapsed seconds.
fn run_preset(name: &str, root: &Path) -> (ExperimentConfig, f64) {
    let mut cfg = preset(name).unwrap();
    cfg.out = root.join(name);
    let start = Instant::now();
    run_experiment(&cfg).unwrap();
    (cfg, start.elapsed().as_secs_f64())
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn ring_scaling(root: &Path) -> Outcome {
    let (cfg, secs) = run_preset("fig2a", root);
    let r = report(&cfg.out);
    let cl = num(&r, "classical_exponent");
    let qm = num(&r, "quantum_exponent");
    // Plateau: the bound averaged over successive decades past 1e3 agrees
    // with the long-time limit Σ g² / N² (g = eigenvalue multiplicities).
    let s = series(&cfg.out);
    let degeneracies = std::fs::read_to_string(cfg.out.join("degeneracies.csv")).unwrap();
    let g2: f64 = degeneracies
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap().powi(2))
        .sum();
    let limit = g2 / 200f64.powi(2);
    let decades = [(1e3, 1e4), (1e4, 1e5)].map(|(a, b)| mean_over(&s, &s.alpha_bar_sq, a, b));
    let plateau = decades.iter().all(|m| within(*m, limit, 0.1 * limit));
    check(
        within(cl, -0.5, 0.05) && within(qm, -1.0, 0.10) && plateau && secs < 5.0,
        format!(
            "classical {cl:.4}, quantum envelope {qm:.4}, tail means {:.5}/{:.5} vs limit {limit:.5}, {secs:.2}s",
            decades[0], decades[1]
        ),
    )
}

fn semicircle(root: &Path) -> Outcome {
    let (cfg, secs) = run_preset("fig1b", root);
    let r = report(&cfg.out);
    let cl = num(&r, "classical_exponent");
    let qm = num(&r, "quantum_exponent");
    check(
        within(cl, -1.5, 0.08) && within(qm, -3.0, 0.15) && secs < 30.0,
        format!("classical {cl:.4}, quantum envelope {qm:.4}, {secs:.2}s"),
    )
}

fn chain(_: &Path) -> Outcome {
    let grid = TimeGrid::with_step(10.0, 1000.0, 0.05).unwrap();
    let j0sq = lattice_return_1d_product(1, &grid).unwrap();
    let s = Series::new(grid.times().to_vec(), j0sq).unwrap();
    let env = extract_envelope(&s, 3).unwrap().into_series();
    let slope = fit_power_law(&env, (10.0, 1000.0)).unwrap().exponent();

    let spectrum = decompose(&laplacian(&build_ring(1000).unwrap()), false).unwrap();
    let near = TimeGrid::with_step(0.0, 249.9, 0.1).unwrap();
    let ring = quantum_return_bound(&spectrum, &near);
    let exact = lattice_return_1d_product(1, &near).unwrap();
    let worst = ring
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(
        within(slope, -1.0, 0.05) && worst < 1e-6,
        format!("envelope exponent {slope:.4}, ring N=1000 max deviation {worst:.2e} for t < 250"),
    )
}

fn lifshits(root: &Path) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    let start = Instant::now();
    for b in [2, 3] {
        let cfg = ExperimentConfig {
            dos: Some(format!("lifshits:b={b}")),
            out: root.join(format!("lifshits{b}")),
            ..ExperimentConfig::default()
        };
        run_experiment(&cfg).unwrap();
        let s = series(&cfg.out);
        let classical = Series::new(s.times().to_vec(), s.p_bar.clone()).unwrap();
        let quantum = Series::new(s.times().to_vec(), s.alpha_bar_sq.clone()).unwrap();
        let dp = delta_p_series(&classical, &quantum_envelope(&quantum, 3).unwrap());
        let last = dp.asymptotic().unwrap_or(f64::NAN);
        let crossing = detect_crossover(&dp);
        pass &= within(last, 2f64.sqrt(), 0.05) && crossing.is_some();
        detail.push(format!(
            "b={b}: ΔP {last:.4} over [1e3, 1e4], crossover {}",
            crossing.map_or("none".into(), |t| format!("t={t:.3}"))
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        pass && secs < 60.0,
        format!("{}, {secs:.2}s", detail.join("; ")),
    )
}

fn star(root: &Path) -> Outcome {
    let (cfg, _) = run_preset("fig3", root);
    let s = series(&cfg.out);
    let pi = s.pi_bar.clone().unwrap();
    let tail = mean_over(&s, &s.alpha_bar_sq, 10.0, 100.0);
    let ordered = s
        .times()
        .iter()
        .zip(s.p_bar.iter().zip(&pi))
        .filter(|(t, _)| **t > 0.0)
        .all(|(_, (p, q))| p < q);
    let last = *s.p_bar.last().unwrap();
    check(
        within(tail, 0.64, 0.05) && ordered && within(last, 0.1, 1e-6),
        format!("|ᾱ|² mean over [10, 100] {tail:.4}, p̄ < π̄ for t > 0: {ordered}, final p̄ {last}"),
    )
}

fn dendrimer(root: &Path) -> Outcome {
    let (cfg, secs) = run_preset("fig2b", root);
    let s = series(&cfg.out);
    let r = report(&cfg.out);

    let ring = decompose(&laplacian(&build_ring(200).unwrap()), false).unwrap();
    let ring_p = classical_return(&ring, &s.grid);
    let dend = Series::new(s.times().to_vec(), s.p_bar.clone()).unwrap();
    let ring = Series::new(s.times().to_vec(), ring_p).unwrap();
    let mut ratios = Vec::new();
    for window in [(10.0, 100.0), (100.0, 1000.0)] {
        let d = fit_power_law(&dend, window).unwrap().residual;
        let g = fit_power_law(&ring, window).unwrap().residual;
        ratios.push(d / g);
    }
    // Reported only: at t ~ 1 both curves are still in their short-time
    // regime, so this decade does not discriminate.
    let early = fit_power_law(&dend, (1.0, 10.0)).unwrap().residual
        / fit_power_law(&ring, (1.0, 10.0)).unwrap().residual;
    let quantum = num(&r, "quantum_bound_tail_mean");
    let classical = num(&r, "classical_tail_mean");
    check(
        ratios.iter().all(|&x| x > 3.0) && quantum > 10.0 * classical && secs < 60.0,
        format!(
            "residual ratio vs ring {:.1} on [10, 100], {:.1} on [100, 1000] ({early:.2} on [1, 10], not gated); tail means quantum {quantum:.4} classical {classical:.2e}; {secs:.2}s",
            ratios[0], ratios[1]
        ),
    )
}

type CMat = Vec<Vec<Complex64>>;

fn expm(l: &[Vec<f64>], c: Complex64) -> CMat {
    let n = l.len();
    let matmul = |a: &CMat, b: &CMat| -> CMat {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let norm = l
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * c.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a: CMat = l
        .iter()
        .map(|r| r.iter().map(|&x| c * x / 2f64.powi(s)).collect())
        .collect();
    let one = |i: usize, j: usize| Complex64::new((i == j) as u8 as f64, 0.0);
    let mut result: CMat = (0..n)
        .map(|i| (0..n).map(|j| one(i, j)).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = matmul(&term, &a);
        for (ri, row) in term.iter_mut().enumerate() {
            for (ci, x) in row.iter_mut().enumerate() {
                *x /= k as f64;
                result[ri][ci] += *x;
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

fn properties(_: &Path) -> Outcome {
    let families: Vec<(&str, Graph, bool)> = vec![
        ("ring", build_ring(200).unwrap(), true),
        ("torus", build_hypercubic(12, 2).unwrap(), true),
        ("star", build_star(100).unwrap(), false),
        ("dendrimer", build_dendrimer(5, 3).unwrap(), false),
        ("er", build_erdos_renyi(200, 0.05, 9).unwrap(), false),
    ];
    let grid = TimeGrid::logarithmic(1e-2, 1e4, 120, true).unwrap();
    let mut failures = Vec::new();
    for (name, g, regular) in &families {
        let l = laplacian(g);
        let n = g.n();
        if (0..n).any(|i| l.row(i).iter().sum::<f64>().abs() > 1e-12) {
            failures.push(format!("{name}: Laplacian row sums"));
        }
        let s = decompose(&l, true).unwrap();
        if (s.eigenvalues().iter().sum::<f64>() - l.trace()).abs() > 1e-10 {
            failures.push(format!("{name}: trace"));
        }
        let bound = quantum_return_bound(&s, &grid);
        let exact = exact_average_return(&s, &grid).unwrap();
        if bound.iter().zip(&exact).any(|(b, e)| *b > e + 1e-10) {
            failures.push(format!("{name}: Cauchy-Schwarz"));
        }
        if *regular && bound.iter().zip(&exact).any(|(b, e)| (b - e).abs() > 1e-9) {
            failures.push(format!("{name}: regular exactness"));
        }
        for &t in &[0.3, 5.0, 100.0] {
            for j in [0, n / 3, n - 1] {
                let pc: f64 = (0..n)
                    .map(|k| pairwise_classical(&s, j, k, t).unwrap())
                    .sum();
                let pq: f64 = (0..n).map(|k| pairwise_quantum(&s, j, k, t).unwrap()).sum();
                if (pc - 1.0).abs() > 1e-9 || (pq - 1.0).abs() > 1e-9 {
                    failures.push(format!("{name}: conservation at t={t}"));
                }
            }
        }
        let chi = chi_matrix(&s, s.default_cluster_tol()).unwrap();
        if (0..n).any(|j| (chi.column_sum(j) - 1.0).abs() > 1e-9) {
            failures.push(format!("{name}: chi column sums"));
        }
    }
    let small = [
        build_ring(6).unwrap(),
        build_star(7).unwrap(),
        build_dendrimer(1, 3).unwrap(),
        build_erdos_renyi(8, 0.6, 4).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for g in &small {
        let l = laplacian(g);
        let dense: Vec<Vec<f64>> = (0..g.n()).map(|i| l.row(i).to_vec()).collect();
        let s = decompose(&l, true).unwrap();
        for t in [0.4, 2.0, 9.0] {
            let c = expm(&dense, Complex64::new(-t, 0.0));
            let u = expm(&dense, Complex64::new(0.0, -t));
            for j in 0..g.n() {
                for k in 0..g.n() {
                    worst = worst
                        .max((pairwise_classical(&s, j, k, t).unwrap() - c[k][j].re).abs())
                        .max((pairwise_amplitude(&s, j, k, t).unwrap() - u[k][j]).norm());
                }
            }
        }
    }
    if worst > 1e-8 {
        failures.push(format!("matrix exponential deviation {worst:.2e}"));
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} families, dense exponential deviation {worst:.1e}",
                families.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn determinism(root: &Path) -> Outcome {
    let rerun = root.join("rerun");
    let mut differing = Vec::new();
    for name in PRESETS {
        let first = root.join(name);
        if !first.exists() {
            run_preset(name, root);
        }
        let manifest = RunManifest::load(&first).unwrap();
        let mut cfg = manifest.config.clone();
        cfg.out = rerun.join(name);
        run_experiment(&cfg).unwrap();
        for file in manifest.files.keys().filter(|f| f.ends_with(".csv")) {
            let a = std::fs::read(first.join(file)).unwrap();
            let b = std::fs::read(cfg.out.join(file)).unwrap();
            if a != b {
                differing.push(format!("{name}/{file}"));
            }
        }
        differing.extend(
            manifest
                .mismatches(&first)
                .into_iter()
                .map(|f| format!("{name}/{f} checksum")),
        );
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} presets rerun from their manifests, all CSVs identical",
                PRESETS.len()
            )
        } else {
            format!("differs: {}", differing.join(", "))
        },
    )
}

type Criterion = fn(&Path) -> Outcome;

fn main() {
    let root = tempfile::tempdir().unwrap();
    let criteria: [(&str, Criterion); 8] = [
        ("1 ring scaling", ring_scaling),
        ("2 semicircle", semicircle),
        ("3 1D continuum", chain),
        ("4 Lifshits limit", lifshits),
        ("5 star graph", star),
        ("6 dendrimer", dendrimer),
        ("7 property suite", properties),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let outcome = criterion(root.path());
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
