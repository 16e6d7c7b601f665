//! Closed form against the numerical dressed-frame oracle, and the bare
//! (non-secular) model against both, along a ladder of coupling strengths.
//!
//!     cargo run --release --example oracle_comparison

use dicke_spectra::analytic::{evaluate_spectrum, general_lines, Grid, SampledSpectrum};
use dicke_spectra::liouville::{bare_spectrum_oracle, dressed_spectrum_oracle};
use dicke_spectra::model::make_params;

fn l1_relative(a: &SampledSpectrum, b: &SampledSpectrum) -> f64 {
    let diff: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum();
    diff / b.values().iter().sum::<f64>()
}

fn main() -> dicke_spectra::error::Result<()> {
    println!("closed form vs dressed oracle, delta/(2 Omega) = 0.2");
    for n in [2usize, 3] {
        for rung in [10.0, 20.0, 40.0, 80.0] {
            let dd = rung * (n - 1) as f64;
            let params = make_params(n, dd / 0.4, dd, 0.0)?;
            let grid = Grid::default_for(&params);
            let closed = evaluate_spectrum(&general_lines(&params)?.lines, &grid);
            let oracle = dressed_spectrum_oracle(&params, &grid)?;
            println!("  N = {n}, delta~ = {rung:>4}: L1 / total = {:.4}", l1_relative(&oracle, &closed));
        }
    }

    println!("\nbare vs dressed, N = 2, delta = 40");
    for ratio in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let params = make_params(2, 40.0 / (2.0 * ratio), 40.0, 0.0)?;
        let grid = Grid::default_for(&params);
        let bare = bare_spectrum_oracle(&params, &grid)?;
        let dressed = dressed_spectrum_oracle(&params, &grid)?;
        println!("  delta/(2 Omega) = {ratio:<6}: L1 / total = {:.4}", l1_relative(&bare, &dressed));
    }
    Ok(())
}
