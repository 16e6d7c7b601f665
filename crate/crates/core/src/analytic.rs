//! Closed-form resonance-fluorescence line sets and their evaluation on a grid.
//!
//! A spectrum is a finite sum of Lorentzians, each contributing
//! `w·Γ/(Γ² + (x − x₀)²)` at offset `x = (ν − ω_L)/γ`. The global prefactor
//! 1/4 of the collective spectrum is folded into every weight, so a line is
//! a self-contained fit primitive and integrates to `π·w`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Half-width of the central (Rayleigh-like) line, γ/2.
pub const CENTRAL_HALF_WIDTH: f64 = 0.5;
/// Half-width of the δ = 0 collective Mollow sidebands, 3γ/4.
pub const MOLLOW_SIDEBAND_HALF_WIDTH: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub center: f64,
    pub half_width: f64,
    pub weight: f64,
}

impl SpectralLine {
    pub fn new(center: f64, half_width: f64, weight: f64) -> Self {
        Self {
            center,
            half_width,
            weight,
        }
    }

    #[inline]
    pub fn value_at(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.weight * self.half_width / (self.half_width * self.half_width + d * d)
    }

    /// Height at the line center, `w/Γ`.
    pub fn peak_value(&self) -> f64 {
        self.weight / self.half_width
    }

    fn validate(&self) -> Result<()> {
        if !(self.center.is_finite() && self.half_width.is_finite() && self.weight.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite line {self:?}")));
        }
        if self.half_width <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "line half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.weight < 0.0 {
            return Err(Error::InvalidParams(format!(
                "line weight must be non-negative, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

/// Which closed form produced a [`LineSpectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    General,
    Mollow,
    TwoAtom,
    ThreeAtom,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::General => "general",
            Provenance::Mollow => "mollow",
            Provenance::TwoAtom => "two_atom",
            Provenance::ThreeAtom => "three_atom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "general" => Some(Provenance::General),
            "mollow" => Some(Provenance::Mollow),
            "two_atom" => Some(Provenance::TwoAtom),
            "three_atom" => Some(Provenance::ThreeAtom),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpectrum {
    pub params: SystemParams,
    pub lines: Vec<SpectralLine>,
    pub provenance: Provenance,
}

impl LineSpectrum {
    /// Builds a line spectrum, checking positivity of widths and weights.
    pub fn new(params: SystemParams, lines: Vec<SpectralLine>, provenance: Provenance) -> Result<Self> {
        for line in &lines {
            line.validate()?;
        }
        Ok(Self {
            params,
            lines,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Lines sorted by center.
    pub fn sorted_lines(&self) -> Vec<SpectralLine> {
        let mut lines = self.lines.clone();
        lines.sort_by(|a, b| a.center.total_cmp(&b.center));
        lines
    }

    /// Every line at +x₀ has a partner at −x₀ with the same width and weight.
    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        let mut used = vec![false; self.lines.len()];
        for (i, a) in self.lines.iter().enumerate() {
            if used[i] {
                continue;
            }
            let partner = self.lines.iter().enumerate().position(|(j, b)| {
                !used[j]
                    && (i != j || a.center.abs() <= tol)
                    && (a.center + b.center).abs() <= tol
                    && (a.half_width - b.half_width).abs() <= tol
                    && (a.weight - b.weight).abs() <= tol
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }

    pub fn central_line_count(&self, tol: f64) -> usize {
        self.lines.iter().filter(|l| l.center.abs() <= tol).count()
    }
}

fn require_resonance(params: &SystemParams, what: &str) -> Result<()> {
    if params.is_resonant() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{what} is only defined at resonance (detuning = 0), got {}",
            params.detuning
        )))
    }
}

fn central_line(n: usize) -> SpectralLine {
    let nf = n as f64;
    // I₀/4 with I₀ = N(N+2)/3.
    SpectralLine::new(0.0, CENTRAL_HALF_WIDTH, nf * (nf + 2.0) / 12.0)
}

/// The 2N+1-line collective spectrum at resonance.
///
/// Upper ("+") branch, n = 1..=N: center 2Ω − δ̃(2n−N−1)/2, weight
/// n(N−n+1)/(4(N+1)), half-width (1 + 2n(N−n+1))/4. Lower ("−") branch,
/// n = 0..N: center −2Ω + δ̃(2n−N+1)/2, weight (n+1)(N−n)/(4(N+1)),
/// half-width (1 + 2(n+1)(N−n))/4. The two zero-weight terms of the sums
/// are omitted.
pub fn general_lines(params: &SystemParams) -> Result<LineSpectrum> {
    require_resonance(params, "the closed-form collective spectrum")?;
    let n = params.n_emitters;
    let nf = n as f64;
    let two_rabi = 2.0 * params.rabi;
    let dt = params.delta_tilde();

    let mut lines = Vec::with_capacity(2 * n + 1);
    lines.push(central_line(n));
    for k in 1..=n {
        let kf = k as f64;
        let c = (k * (n - k + 1)) as f64;
        lines.push(SpectralLine::new(
            two_rabi - dt * (2.0 * kf - nf - 1.0) / 2.0,
            (1.0 + 2.0 * c) / 4.0,
            c / (4.0 * (nf + 1.0)),
        ));
    }
    for k in 0..n {
        let kf = k as f64;
        let c = ((k + 1) * (n - k)) as f64;
        lines.push(SpectralLine::new(
            -two_rabi + dt * (2.0 * kf - nf + 1.0) / 2.0,
            (1.0 + 2.0 * c) / 4.0,
            c / (4.0 * (nf + 1.0)),
        ));
    }
    LineSpectrum::new(params.clone(), lines, Provenance::General)
}

/// Collective Mollow triplet obtained when the dipole-dipole coupling is dropped.
///
/// `params.dd_coupling` is ignored.
pub fn mollow_limit_lines(params: &SystemParams) -> Result<LineSpectrum> {
    require_resonance(params, "the collective Mollow spectrum")?;
    let nf = params.n_emitters as f64;
    let side_weight = nf * (nf + 2.0) / 24.0;
    let two_rabi = 2.0 * params.rabi;
    let lines = vec![
        central_line(params.n_emitters),
        SpectralLine::new(two_rabi, MOLLOW_SIDEBAND_HALF_WIDTH, side_weight),
        SpectralLine::new(-two_rabi, MOLLOW_SIDEBAND_HALF_WIDTH, side_weight),
    ];
    LineSpectrum::new(params.clone(), lines, Provenance::Mollow)
}

/// Literal two-emitter spectrum: central line 2/3 at width 1/2 and four
/// sidebands at ±2Ω ± δ/2 of weight 1/6 and width 5/4.
pub fn two_atom_lines(params: &SystemParams) -> Result<LineSpectrum> {
    if params.n_emitters != 2 {
        return Err(Error::Unsupported(format!(
            "two-emitter spectrum requested for N = {}",
            params.n_emitters
        )));
    }
    require_resonance(params, "the two-emitter spectrum")?;
    let (w, d) = (2.0 * params.rabi, params.dd_coupling / 2.0);
    let mut lines = vec![SpectralLine::new(0.0, 0.5, 4.0 / 6.0)];
    for center in [w + d, w - d, -w - d, -w + d] {
        lines.push(SpectralLine::new(center, 1.25, 1.0 / 6.0));
    }
    LineSpectrum::new(params.clone(), lines, Provenance::TwoAtom)
}

/// Literal three-emitter spectrum: central 5/4 at width 1/2, ±2Ω of weight
/// 1/4 and width 9/4, ±2Ω ± δ/2 of weight 3/16 and width 7/4.
pub fn three_atom_lines(params: &SystemParams) -> Result<LineSpectrum> {
    if params.n_emitters != 3 {
        return Err(Error::Unsupported(format!(
            "three-emitter spectrum requested for N = {}",
            params.n_emitters
        )));
    }
    require_resonance(params, "the three-emitter spectrum")?;
    let (w, d) = (2.0 * params.rabi, params.dd_coupling / 2.0);
    let mut lines = vec![
        SpectralLine::new(0.0, 0.5, 5.0 / 4.0),
        SpectralLine::new(w, 2.25, 0.25),
        SpectralLine::new(-w, 2.25, 0.25),
    ];
    for center in [w + d, w - d, -w - d, -w + d] {
        lines.push(SpectralLine::new(center, 1.75, 0.75 * 0.25));
    }
    LineSpectrum::new(params.clone(), lines, Provenance::ThreeAtom)
}

/// Σ w over the lines; the spectrum integrates to π times this.
pub fn integrated_weight(lines: &[SpectralLine]) -> f64 {
    lines.iter().map(|l| l.weight).sum()
}

/// Strictly increasing, finite sample points in offset units.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if let Some(bad) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("grid point {bad} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(format!(
                "grid is not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self(points))
    }

    /// `points` equally spaced samples from `min` to `max` inclusive.
    pub fn uniform(min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParams(format!("grid needs at least 2 points, got {points}")));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::InvalidParams(format!("invalid grid range [{min}, {max}]")));
        }
        let step = (max - min) / (points - 1) as f64;
        let mut xs: Vec<f64> = (0..points).map(|i| min + step * i as f64).collect();
        xs[points - 1] = max;
        Self::new(xs)
    }

    /// Symmetric range ±(2Ω + δ + 20γ) with 4001 points.
    pub fn default_for(params: &SystemParams) -> Self {
        let half = 2.0 * params.rabi + params.dd_coupling + 20.0;
        Self::uniform(-half, half, 4001).expect("default grid is always valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Values below this (relative to the largest magnitude) count as numerical
/// undershoot rather than a negative intensity.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Intensity samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledSpectrum {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParams(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("value {i} is not finite")));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(i) = values.iter().position(|&v| v < -NEGATIVE_TOLERANCE * scale) {
            return Err(Error::InvalidParams(format!(
                "value {i} is negative ({})",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.points().iter().copied().zip(self.values.iter().copied())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every value multiplied by `factor` (e.g. the 1/N² figure normalization).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Trapezoidal integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        let x = self.grid.points();
        x.windows(2)
            .zip(self.values.windows(2))
            .map(|(xw, vw)| 0.5 * (xw[1] - xw[0]) * (vw[0] + vw[1]))
            .sum()
    }
}

/// Samples the Lorentzian sum on the grid.
pub fn evaluate_spectrum(lines: &[SpectralLine], grid: &Grid) -> SampledSpectrum {
    let values: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&x| lines.iter().map(|l| l.value_at(x)).sum())
        .collect();
    SampledSpectrum {
        grid: grid.clone(),
        values,
    }
}
