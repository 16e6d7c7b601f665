//! Parameter, line-list and spectrum files: write, read back, compare.
//!
//!     cargo run --example spectrum_files

use dicke_spectra::analytic::{evaluate_spectrum, general_lines};
use dicke_spectra::io::{read_lines, read_params, read_spectrum, write_lines, write_params, write_spectrum, GridSpec, Header};
use dicke_spectra::model::make_params;

fn main() -> dicke_spectra::error::Result<()> {
    let dir = std::env::temp_dir().join(format!("dicke-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let params = make_params(3, 50.0, 20.0, 0.0)?;
    let grid = GridSpec { min: -150.0, max: 150.0, points: 1201 };
    write_params(&dir.join("params.toml"), &params, Some(grid))?;
    let loaded = read_params(&dir.join("params.toml"))?;
    println!("params.toml:\n{}", loaded.to_toml());

    let lines = general_lines(&loaded.params()?)?;
    write_lines(&dir.join("lines.toml"), &lines)?;
    let back = read_lines(&dir.join("lines.toml"))?;
    println!("lines.toml: {} lines, identical = {}", back.len(), back.sorted_lines() == lines.sorted_lines());

    let spectrum = evaluate_spectrum(&lines.lines, &loaded.grid()?);
    let path = dir.join("spectrum.dat");
    write_spectrum(&path, &spectrum, &Header::new("spectrum_files example", Some(&params)))?;
    let (read, header) = read_spectrum(&path)?;
    let worst = spectrum
        .values()
        .iter()
        .zip(read.values())
        .map(|(a, b)| if *a == 0.0 { 0.0 } else { (a - b).abs() / a })
        .fold(0.0, f64::max);
    println!("spectrum.dat: {} rows, generator '{}', max relative change {worst:.2e}", read.len(), header.get("generator").unwrap_or("?"));

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
