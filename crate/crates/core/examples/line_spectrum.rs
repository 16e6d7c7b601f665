//! Closed-form line list for a few emitter counts, and the sampled spectrum
//! at a handful of offsets.
//!
//!     cargo run --example line_spectrum

use dicke_spectra::analytic::{evaluate_spectrum, general_lines, integrated_weight, Grid};
use dicke_spectra::model::make_params;

fn main() -> dicke_spectra::error::Result<()> {
    for n in [1, 2, 3, 5] {
        let params = make_params(n, 100.0, 60.0, 0.0)?;
        let lines = general_lines(&params)?;
        println!("N = {n}: {} lines, total weight {:.6}", lines.len(), integrated_weight(&lines.lines));
        for l in lines.sorted_lines() {
            println!("  x0 = {:>9.3}  half-width = {:>6.3}  weight = {:.5}", l.center, l.half_width, l.weight);
        }
        if !params.warnings.is_empty() {
            println!("  warnings: {:?}", params.warnings);
        }
    }

    let params = make_params(2, 50.0, 20.0, 0.0)?;
    let lines = general_lines(&params)?;
    let probe = Grid::new(vec![-110.0, -100.0, -90.0, 0.0, 90.0, 100.0, 110.0])?;
    println!("\nN = 2, Omega = 50, delta = 20:");
    for (x, s) in evaluate_spectrum(&lines.lines, &probe).iter() {
        println!("  S({x:>6.1}) = {s:.6}");
    }
    Ok(())
}
