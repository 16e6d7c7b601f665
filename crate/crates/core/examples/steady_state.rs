//! Secular generator: steady state, spectrum of the coherence sector, and
//! how far the bare-frame steady state sits from the maximally mixed one.
//!
//!     cargo run --example steady_state

use dicke_spectra::liouville::{
    build_bare_liouvillian, build_secular_liouvillian, coherence_decay_rates, steady_state,
};
use dicke_spectra::model::make_params;

fn main() -> dicke_spectra::error::Result<()> {
    let n = 4;
    let params = make_params(n, 300.0, 300.0, 0.0)?;
    let secular = build_secular_liouvillian(&params);
    let rho = steady_state(&secular)?;
    println!("secular steady state, N = {n} (expect 1/{} on the diagonal):", n + 1);
    for i in 0..=n {
        let row: Vec<String> = (0..=n).map(|j| format!("{:8.5}", rho.matrix()[(i, j)].re)).collect();
        println!("  {}", row.join(" "));
    }

    println!("\ncoherence rho_(n,n+1) eigenmodes vs closed form:");
    let dt = params.delta_tilde();
    for k in 0..n {
        let mode = coherence_decay_rates(&secular, k)?;
        let width = (1 + 2 * (n - k) * (k + 1)) as f64 / 4.0;
        let freq = 2.0 * params.rabi - dt * (1.0 + 2.0 * k as f64 - n as f64) / 2.0;
        println!(
            "  n = {k}: rate {:.5} (closed form {width:.5}), frequency {:.4} (closed form {freq:.4})",
            mode.rate, mode.frequency
        );
    }

    let bare = steady_state(&build_bare_liouvillian(&make_params(n, 5.0, 2.0, 0.0)?))?;
    let pops: Vec<String> = (0..=n).map(|i| format!("{:.4}", bare.matrix()[(i, i)].re)).collect();
    println!("\nbare-frame populations at Omega = 5: [{}]", pops.join(", "));
    println!("min eigenvalue {:.3e}", bare.min_eigenvalue());
    Ok(())
}
