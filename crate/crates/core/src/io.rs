//! On-disk formats.
//!
//! Parameters and line lists are TOML documents; sampled spectra are
//! two-column text with `#` comment headers that gnuplot and CSV readers
//! both accept. Every number is written with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{Grid, LineSpectrum, Provenance, SampledSpectrum, SpectralLine, NEGATIVE_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{make_params, SystemParams};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Rounds to the 12 significant digits the files carry.
pub fn round_sig12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<Grid> {
        Grid::uniform(self.min, self.max, self.points)
    }

    /// The ±(2Ω + δ + 20γ), 4001-point default.
    pub fn default_for(params: &SystemParams) -> Self {
        let half = 2.0 * params.rabi + params.dd_coupling + 20.0;
        Self {
            min: -half,
            max: half,
            points: 4001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    // Signed so that a negative count reports as a validation error, not a TOML type error.
    pub n_emitters: i64,
    pub rabi: f64,
    pub dd_coupling: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl ParamsFile {
    pub fn from_params(params: &SystemParams, grid: Option<GridSpec>) -> Self {
        Self {
            n_emitters: params.n_emitters as i64,
            rabi: round_sig12(params.rabi),
            dd_coupling: round_sig12(params.dd_coupling),
            detuning: round_sig12(params.detuning),
            grid: grid.map(|g| GridSpec {
                min: round_sig12(g.min),
                max: round_sig12(g.max),
                points: g.points,
            }),
        }
    }

    pub fn params(&self) -> Result<SystemParams> {
        if self.n_emitters < 1 {
            return Err(Error::InvalidParams(format!(
                "n_emitters must be at least 1, got {}",
                self.n_emitters
            )));
        }
        make_params(self.n_emitters as usize, self.rabi, self.dd_coupling, self.detuning)
    }

    /// The file's grid if present, else the default for its parameters.
    pub fn grid(&self) -> Result<Grid> {
        match &self.grid {
            Some(g) => g.to_grid(),
            None => Ok(Grid::default_for(&self.params()?)),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.params()?;
        if let Some(g) = &file.grid {
            g.to_grid()?;
        }
        Ok(file)
    }
}

pub fn write_params(path: &Path, params: &SystemParams, grid: Option<GridSpec>) -> Result<()> {
    fs::write(path, ParamsFile::from_params(params, grid).to_toml())?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<ParamsFile> {
    ParamsFile::from_toml(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineEntry {
    center: f64,
    half_width: f64,
    weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinesDocument {
    generator: String,
    provenance: String,
    params: ParamsFile,
    lines: Vec<LineEntry>,
}

pub fn lines_to_toml(spectrum: &LineSpectrum) -> String {
    let doc = LinesDocument {
        generator: TOOL_VERSION.to_string(),
        provenance: spectrum.provenance.as_str().to_string(),
        params: ParamsFile::from_params(&spectrum.params, None),
        lines: spectrum
            .sorted_lines()
            .iter()
            .map(|l| LineEntry {
                center: round_sig12(l.center),
                half_width: round_sig12(l.half_width),
                weight: round_sig12(l.weight),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("lines serialize")
}

pub fn lines_from_toml(text: &str) -> Result<LineSpectrum> {
    let doc: LinesDocument = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let provenance = Provenance::parse(&doc.provenance)
        .ok_or_else(|| Error::Format(format!("unknown provenance tag '{}'", doc.provenance)))?;
    if doc.lines.is_empty() {
        return Err(Error::Format("lines document lists no lines".into()));
    }
    let lines = doc
        .lines
        .iter()
        .map(|e| SpectralLine::new(e.center, e.half_width, e.weight))
        .collect();
    LineSpectrum::new(doc.params.params()?, lines, provenance)
}

pub fn write_lines(path: &Path, spectrum: &LineSpectrum) -> Result<()> {
    fs::write(path, lines_to_toml(spectrum))?;
    Ok(())
}

pub fn read_lines(path: &Path) -> Result<LineSpectrum> {
    lines_from_toml(&fs::read_to_string(path)?)
}

/// `key: value` comment lines at the top of a spectrum file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    /// Header with the tool version and, when known, the physical parameters.
    pub fn new(generator: &str, params: Option<&SystemParams>) -> Self {
        let mut h = Self::default();
        h.push("tool", TOOL_VERSION);
        h.push("generator", generator);
        if let Some(p) = params {
            h.push(
                "params",
                &format!(
                    "n_emitters={} rabi={} dd_coupling={} detuning={}",
                    p.n_emitters,
                    round_sig12(p.rabi),
                    round_sig12(p.dd_coupling),
                    round_sig12(p.detuning)
                ),
            );
        }
        h
    }

    pub fn push(&mut self, key: &str, value: &str) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn spectrum_to_string(spectrum: &SampledSpectrum, header: &Header) -> String {
    let mut out = String::with_capacity(32 * (spectrum.len() + 8));
    for (k, v) in &header.entries {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    writeln!(out, "# columns: x = (nu - omega_L)/gamma, S(x)").unwrap();
    for (x, y) in spectrum.iter() {
        writeln!(out, "{},{}", fmt_sig12(x), fmt_sig12(y)).unwrap();
    }
    out
}

/// Parses a spectrum file. Comma or whitespace separated; `#` starts a comment line.
pub fn spectrum_from_str(text: &str) -> Result<(SampledSpectrum, Header)> {
    let mut header = Header::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                let key = k.trim();
                if key != "columns" && !key.is_empty() {
                    header.push(key, v.trim());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("'{s}' is not a decimal number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite value '{s}'"),
                });
            }
            Ok(v)
        };
        let x = parse(fields[0])?;
        let y = parse(fields[1])?;
        if let Some(&prev) = xs.last() {
            if x <= prev {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("offset {x} does not increase past {prev}"),
                });
            }
        }
        xs.push(x);
        ys.push(y);
        rows.push(line_no);
    }
    if xs.is_empty() {
        return Err(Error::Format("spectrum file has no data rows".into()));
    }
    let scale = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(i) = ys.iter().position(|&v| v < -NEGATIVE_TOLERANCE * scale) {
        return Err(Error::Parse {
            line: rows[i],
            msg: format!("negative intensity {}", ys[i]),
        });
    }
    let grid = Grid::new(xs)?;
    let spectrum = SampledSpectrum::new(grid, ys).map_err(|e| Error::Format(e.to_string()))?;
    Ok((spectrum, header))
}

pub fn write_spectrum(path: &Path, spectrum: &SampledSpectrum, header: &Header) -> Result<()> {
    fs::write(path, spectrum_to_string(spectrum, header))?;
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<(SampledSpectrum, Header)> {
    spectrum_from_str(&fs::read_to_string(path)?)
}
