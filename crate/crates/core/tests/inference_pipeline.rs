//! Detect → fit → infer on synthetic spectra.

use dicke_spectra::analytic::{evaluate_spectrum, general_lines, Grid, SampledSpectrum};
use dicke_spectra::error::Error;
use dicke_spectra::inference::{
    analyze_spectrum, detect_peaks, infer_parameters, merged_regime_estimate, FitOptions,
    InferenceDiagnostic, InferenceOptions, PipelineOptions,
};
use dicke_spectra::model::make_params;

fn analytic(n: usize, rabi: f64, dd: f64) -> SampledSpectrum {
    let p = make_params(n, rabi, dd, 0.0).unwrap();
    evaluate_spectrum(&general_lines(&p).unwrap().lines, &Grid::default_for(&p))
}

/// Separation between neighbouring sidebands over the widest sideband's full width.
fn resolvable(n: usize, dd: f64) -> bool {
    if n == 1 {
        return true;
    }
    let widest = (1..=n).map(|k| (1 + 2 * k * (n - k + 1)) as f64 / 4.0).fold(0.0, f64::max);
    dd / (n - 1) as f64 > 2.0 * widest
}

#[test]
fn round_trip_is_exact_or_refused() {
    for rabi in [50.0, 100.0] {
        let dd = 0.2 * 2.0 * rabi;
        for n in 1..=6usize {
            let analysis = analyze_spectrum(&analytic(n, rabi, dd), PipelineOptions::default()).unwrap();
            match analysis.inference {
                Ok(inf) => {
                    assert_eq!(inf.n_hat, n, "Ω={rabi} N={n}");
                    let want = if n == 1 { 0.0 } else { dd };
                    assert!((inf.delta_hat - want).abs() <= 0.01 * dd, "Ω={rabi} N={n}: δ̂={}", inf.delta_hat);
                    assert!((inf.omega_hat - rabi).abs() <= 0.005 * rabi, "Ω={rabi} N={n}: Ω̂={}", inf.omega_hat);
                }
                Err(e) => {
                    assert!(!resolvable(n, dd), "Ω={rabi} N={n} is resolvable but inference failed: {e}");
                    assert!(matches!(e, Error::Inference(_)));
                }
            }
        }
    }
}

#[test]
fn estimators_agree_on_clean_data() {
    for (n, rabi, dd) in [(2, 50.0, 20.0), (3, 50.0, 20.0), (4, 100.0, 60.0), (5, 100.0, 60.0), (6, 150.0, 120.0)] {
        let analysis = analyze_spectrum(&analytic(n, rabi, dd), PipelineOptions::default()).unwrap();
        let inf = analysis.inference.unwrap();
        assert!(
            (inf.delta_hat - inf.delta_from_spacing).abs() <= 1e-6 * inf.delta_hat,
            "N={n}: {} vs {}",
            inf.delta_hat,
            inf.delta_from_spacing
        );
        assert!(!inf.diagnostics.iter().any(|d| matches!(d, InferenceDiagnostic::EstimatorDisagreement { .. })));
    }
}

#[test]
fn overlapping_sidebands_take_the_failure_path() {
    for n in 3..=8usize {
        for spacing in [0.5, 1.0, 2.0] {
            let dd = spacing * (n - 1) as f64;
            let s = analytic(n, 80.0, dd);
            let peaks = detect_peaks(&s, 1e-3).unwrap();
            assert!(peaks.len() < 2 * n + 1, "N={n} δ̃={spacing}: {} peaks", peaks.len());
            let analysis = analyze_spectrum(&s, PipelineOptions::default()).unwrap();
            if let Ok(inf) = analysis.inference {
                panic!("N={n} δ̃={spacing}: inferred N̂={} from merged lines", inf.n_hat);
            }
        }
    }
}

#[test]
fn merged_sidebands_are_broader_than_mollow() {
    let s = analytic(4, 80.0, 4.5);
    let est = merged_regime_estimate(&s, FitOptions::default()).unwrap();
    assert!(est.excess_width > 0.0);
    assert!((est.omega_hat - 80.0).abs() < 1.0);
}

#[test]
fn poorly_resolved_lines_are_flagged() {
    let centers = [-103.0, -100.0, -97.0, 0.0, 97.0, 100.0, 103.0];
    let inf = infer_parameters(&centers, InferenceOptions::default()).unwrap();
    assert_eq!(inf.n_hat, 3);
    assert!(inf.diagnostics.iter().any(|d| matches!(d, InferenceDiagnostic::PoorlyResolved { .. })));
}

#[test]
fn even_line_counts_are_refused() {
    let err = infer_parameters(&[-100.0, -90.0, 90.0, 100.0], InferenceOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Inference(_)));
}
