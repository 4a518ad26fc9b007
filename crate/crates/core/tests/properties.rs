use proptest::prelude::*;
use qtransport::analysis::{
    delta_p_series, detect_crossover, efficiency_report, extract_envelope, fit_power_law,
    fit_stretched_exp, AnalysisOptions, DeltaP, Series,
};
use qtransport::format_f64;
use qtransport::graph::{build_erdos_renyi, laplacian, Graph, GraphSpec};
use qtransport::spectral::{decompose, degeneracy_table};
use qtransport::transport::{
    chi_matrix, classical_return, exact_average_return, quantum_return_bound, TimeGrid,
    TransportSeries,
};

fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn er_graph() -> impl Strategy<Value = Graph> {
    (2usize..28, 0.05f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| build_erdos_renyi(n, p, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transport_invariants(g in er_graph()) {
        let s = decompose(&laplacian(&g), true).unwrap();
        let grid = TimeGrid::logarithmic(1e-2, 1e3, 30, true).unwrap();
        let p = classical_return(&s, &grid);
        let a = quantum_return_bound(&s, &grid);
        let pi = exact_average_return(&s, &grid).unwrap();
        prop_assert!((p[0] - 1.0).abs() < 1e-12);
        prop_assert!((a[0] - 1.0).abs() < 1e-12);
        for w in p.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let floor = g.components() as f64 / g.n() as f64;
        for i in 0..grid.len() {
            prop_assert!(a[i] <= pi[i] + 1e-10);
            prop_assert!(p[i] >= floor - 1e-12 && p[i] <= 1.0);
        }
        let chi = chi_matrix(&s, s.default_cluster_tol()).unwrap();
        for j in 0..g.n() {
            prop_assert!((chi.column_sum(j) - 1.0).abs() < 1e-9);
        }
        let table = degeneracy_table(&s, s.default_cluster_tol()).unwrap();
        prop_assert_eq!(table.iter().map(|x| x.1).sum::<usize>(), g.n());
    }

    #[test]
    fn edge_list_round_trip(g in er_graph()) {
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn spec_round_trip(n in 3usize..500, p in 0.0f64..1.0, seed in any::<u64>()) {
        for spec in [
            GraphSpec::Ring(n),
            GraphSpec::Star(n),
            GraphSpec::ErdosRenyi { n, p, seed: Some(seed) },
        ] {
            let back: GraphSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }

    #[test]
    fn float_format_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn series_csv_round_trip(g in er_graph(), with_pi in any::<bool>()) {
        let s = decompose(&laplacian(&g), with_pi).unwrap();
        let grid = TimeGrid::logarithmic(1e-3, 1e4, 25, true).unwrap();
        let series = TransportSeries::from_spectrum(&s, &grid, with_pi).unwrap();
        let back = TransportSeries::from_csv(&series.to_csv()).unwrap();
        prop_assert_eq!(back.to_csv(), series.to_csv());
        prop_assert_eq!(back.p_bar, series.p_bar);
    }

    #[test]
    fn envelope_idempotent(values in prop::collection::vec(0.0f64..1.0, 7..200), hw in 1usize..4) {
        let t = (1..=values.len()).map(|i| i as f64).collect();
        let s = Series::new(t, values).unwrap();
        let env = extract_envelope(&s, hw).unwrap();
        prop_assert_eq!(env.extract(), env.clone());
        prop_assert!(!env.series().is_empty());
        let max = s.values().iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(env.series().values().contains(&max));
        for (t, v) in env.series().times().iter().zip(env.series().values()) {
            prop_assert_eq!(s.values()[*t as usize - 1], *v);
        }
    }

    #[test]
    fn power_law_recovered(exponent in -4.0f64..-0.1, ln_c in -5.0f64..1.0) {
        let t = log_times(0.5, 2000.0, 80);
        let y = t.iter().map(|x| (ln_c + exponent * x.ln()).exp()).collect();
        let fit = fit_power_law(&Series::new(t, y).unwrap(), (1.0, 1000.0)).unwrap();
        prop_assert!((fit.exponent() - exponent).abs() < 1e-10);
    }

    #[test]
    fn stretched_recovered(a in -2.0f64..2.0, c in 0.1f64..3.0, ln_k in -3.0f64..3.0) {
        let t = log_times(1.0, 400.0, 120);
        let y = t.iter().map(|x| (ln_k + a * x.ln() - c * x.sqrt()).exp()).collect();
        let fit = fit_stretched_exp(&Series::new(t, y).unwrap(), (1.0, 400.0)).unwrap();
        prop_assert!((fit.exponent() - a).abs() < 1e-10);
        prop_assert!((fit.coefficient().unwrap() - c).abs() < 1e-10);
    }

    #[test]
    fn exponent_ratio_ignores_prefactors(
        pc in 0.2f64..2.0,
        ratio in 0.5f64..3.0,
        scale in 0.01f64..0.99,
    ) {
        let times = log_times(1.0, 1000.0, 60);
        let grid = TimeGrid::from_times(times.clone()).unwrap();
        let make = |k: f64| TransportSeries {
            grid: grid.clone(),
            p_bar: times.iter().map(|t| k * t.powf(-pc)).collect(),
            alpha_bar_sq: times.iter().map(|t| k * t.powf(-pc * ratio)).collect(),
            pi_bar: None,
        };
        let opts = AnalysisOptions {
            classical_window: Some((10.0, 100.0)),
            quantum_window: Some((10.0, 100.0)),
            ..AnalysisOptions::default()
        };
        let plain = efficiency_report(&make(1.0), &opts, None).unwrap();
        let scaled = efficiency_report(&make(scale), &opts, None).unwrap();
        let r0 = plain.exponent_ratio().unwrap();
        prop_assert!((r0 - ratio).abs() < 1e-9);
        prop_assert!((scaled.exponent_ratio().unwrap() - r0).abs() < 1e-9);
        // ΔP itself moves once a constant prefactor enters the logs.
        let c = Series::new(times.clone(), make(scale).p_bar).unwrap();
        let q = Series::new(times.clone(), make(scale).alpha_bar_sq).unwrap();
        let shifted = delta_p_series(&c, &q);
        if (ratio - 1.0).abs() > 1e-3 {
            prop_assert!((shifted.value[10] - plain.delta_p.value[10]).abs() > 1e-12);
        }
    }

    #[test]
    fn no_crossover_on_one_side(values in prop::collection::vec(0.01f64..0.99, 2..50), above in any::<bool>()) {
        let value: Vec<f64> = values.iter().map(|v| if above { 1.0 + v } else { *v }).collect();
        let t = (1..=value.len()).map(|i| i as f64).collect();
        let d = DeltaP { t, value, excluded: vec![] };
        prop_assert_eq!(detect_crossover(&d), None);
    }
}
