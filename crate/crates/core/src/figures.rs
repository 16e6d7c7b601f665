//! Data behind the three published spectra, normalized as S/N².

use crate::analytic::{evaluate_spectrum, general_lines, Grid, SampledSpectrum};
use crate::error::{Error, Result};
use crate::model::{make_params, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureSpec {
    pub which: u8,
    pub n_emitters: usize,
    pub rabi: f64,
    pub dd_coupling: f64,
}

impl FigureSpec {
    pub fn get(which: u8) -> Result<Self> {
        let (n, rabi, ratio) = match which {
            1 => (2, 50.0, 0.2),
            2 => (3, 50.0, 0.2),
            3 => (5, 100.0, 0.3),
            _ => return Err(Error::InvalidParams(format!("no figure {which}; choose 1, 2 or 3"))),
        };
        Ok(Self {
            which,
            n_emitters: n,
            rabi,
            dd_coupling: ratio * 2.0 * rabi,
        })
    }

    pub fn params(&self) -> SystemParams {
        make_params(self.n_emitters, self.rabi, self.dd_coupling, 0.0).expect("figure parameters are valid")
    }

    /// Caption line: 2Ω/γ, Δ/γ, δ/(2Ω), N.
    pub fn caption(&self) -> String {
        format!(
            "N={} 2Omega/gamma={} Delta/gamma=0 delta/(2Omega)={}",
            self.n_emitters,
            2.0 * self.rabi,
            self.dd_coupling / (2.0 * self.rabi)
        )
    }
}

pub struct FigureData {
    pub spec: FigureSpec,
    /// S(x)/N² on the default grid.
    pub spectrum: SampledSpectrum,
}

pub fn figure_data(which: u8) -> Result<FigureData> {
    let spec = FigureSpec::get(which)?;
    let params = spec.params();
    let lines = general_lines(&params)?;
    let n2 = (spec.n_emitters * spec.n_emitters) as f64;
    let spectrum = evaluate_spectrum(&lines.lines, &Grid::default_for(&params)).scaled(1.0 / n2);
    Ok(FigureData { spec, spectrum })
}

/// Line positions the figure shows, ascending.
pub fn expected_peaks(which: u8) -> Result<Vec<f64>> {
    let spec = FigureSpec::get(which)?;
    let mut centers: Vec<f64> = general_lines(&spec.params())?.lines.iter().map(|l| l.center).collect();
    centers.sort_by(f64::total_cmp);
    Ok(centers)
}
