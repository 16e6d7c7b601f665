//! Writes the three published spectra (S/N^2) as two-column data files.
//!
//!     cargo run --example figures -- [output-dir]

use std::path::PathBuf;

use dicke_spectra::figures::{expected_peaks, figure_data};
use dicke_spectra::inference::detect_peaks;
use dicke_spectra::io::{write_spectrum, Header};

fn main() -> dicke_spectra::error::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("dicke-figures"));
    std::fs::create_dir_all(&dir)?;
    for which in 1..=3u8 {
        let data = figure_data(which)?;
        let mut header = Header::new(&format!("figure {which}"), Some(&data.spec.params()));
        header.push("caption", &data.spec.caption());
        header.push("normalization", "S/N^2");
        let path = dir.join(format!("fig{which}.dat"));
        write_spectrum(&path, &data.spectrum, &header)?;

        let found = detect_peaks(&data.spectrum, 1e-3)?;
        let want = expected_peaks(which)?;
        println!("{} -> {}", data.spec.caption(), path.display());
        for (p, c) in found.iter().zip(&want) {
            println!("  peak at {:>9.3} (line at {c:>9.3}), height {:.4}", p.location, p.height);
        }
    }
    Ok(())
}
