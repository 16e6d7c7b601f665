//! Self-check suites run by `dicke-spectra validate`.
//!
//! Each check prints as `name: pass|fail: detail`. Tolerances match the
//! acceptance suite in `tests/acceptance.rs`.

use std::fmt;
use std::str::FromStr;

use crate::analytic::{
    evaluate_spectrum, general_lines, mollow_limit_lines, three_atom_lines, two_atom_lines, Grid, LineSpectrum,
    SpectralLine,
};
use crate::error::{Error, Result};
use crate::figures::figure_data;
use crate::inference::{add_multiplicative_noise, analyze_spectrum, detect_peaks, PipelineOptions};
use crate::liouville::{
    bare_spectrum_oracle, build_bare_liouvillian, build_secular_liouvillian, coherence_decay_rates,
    dressed_spectrum_oracle, steady_state,
};
use crate::model::{collective_operators, commutator, make_params, OperatorMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "fail" };
        write!(f, "{}: {}: {}", self.name, status, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Appendix,
    Oracle,
    Inference,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "appendix" => Ok(Suite::Appendix),
            "oracle" => Ok(Suite::Oracle),
            "inference" => Ok(Suite::Inference),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidParams(format!("unknown suite '{s}'"))),
        }
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Algebra | Suite::All) {
        checks.push(commutators());
        checks.push(casimir());
        checks.push(trace_preservation());
        checks.push(steady_state_identity());
    }
    if matches!(suite, Suite::Appendix | Suite::All) {
        checks.push(appendix_equality());
        checks.push(single_atom_mollow());
        checks.push(sum_rule());
        checks.push(peak_height_scaling());
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        checks.push(coherence_widths());
        checks.push(mollow_limit_oracle());
        checks.push(oracle_convergence());
        checks.push(secular_scaling());
    }
    if matches!(suite, Suite::Inference | Suite::All) {
        checks.push(figure_peaks());
        checks.push(inference_round_trip());
    }
    checks
}

fn max_abs(m: &OperatorMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutators() -> Check {
    let mut worst = 0.0f64;
    for n in 1..=20 {
        let ops = collective_operators(n);
        let two = C64::new(2.0, 0.0);
        worst = worst
            .max(max_abs(&(commutator(&ops.raising, &ops.lowering) - &ops.inversion)))
            .max(max_abs(&(commutator(&ops.inversion, &ops.raising) - &ops.raising * two)))
            .max(max_abs(&(commutator(&ops.inversion, &ops.lowering) + &ops.lowering * two)));
    }
    Check::new("algebra.commutators", worst < 1e-12, format!("N<=20 max residual {worst:.2e}"))
}

pub fn casimir() -> Check {
    let mut worst = 0.0f64;
    for n in 1..=20 {
        let ops = collective_operators(n);
        let j = n as f64 / 2.0;
        let c = &ops.inversion * &ops.inversion * C64::new(0.25, 0.0)
            + (ops.raise_lower() + ops.lower_raise()) * C64::new(0.5, 0.0);
        let target = OperatorMatrix::identity(n + 1, n + 1) * C64::new(j * (j + 1.0), 0.0);
        worst = worst.max(max_abs(&(c - target)));
    }
    Check::new("algebra.casimir", worst < 1e-10, format!("N<=20 max residual {worst:.2e}"))
}

pub fn trace_preservation() -> Check {
    let mut worst = 0.0f64;
    for n in 1..=10 {
        let p = make_params(n, 7.0 + n as f64, 3.0 * n as f64, 0.0).expect("valid");
        worst = worst
            .max(build_secular_liouvillian(&p).trace_defect())
            .max(build_bare_liouvillian(&p).trace_defect());
    }
    Check::new("algebra.trace-preservation", worst < 1e-10, format!("max |Tr L(.)| {worst:.2e}"))
}

/// Secular steady state is the maximally mixed state at resonance.
pub fn steady_state_identity() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut worst = 0.0f64;
        for n in 1..=10 {
            for (rabi, dd) in [(50.0, 20.0), (13.0, 4.0), (200.0, 150.0)] {
                let p = make_params(n, rabi, dd, 0.0)?;
                let rho = steady_state(&build_secular_liouvillian(&p))?;
                let target = OperatorMatrix::identity(n + 1, n + 1) * C64::new(1.0 / (n + 1) as f64, 0.0);
                worst = worst.max(max_abs(&(rho.matrix() - target)));
            }
        }
        Ok((worst <= 1e-10, format!("N<=10 max entry deviation {worst:.2e}")))
    })();
    Check::from_result("steady-state.identity", r)
}

fn max_rel_line_diff(a: &LineSpectrum, b: &LineSpectrum) -> f64 {
    let (a, b) = (a.sorted_lines(), b.sorted_lines());
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
    a.iter()
        .zip(&b)
        .map(|(p, q)| {
            let c = if p.center == 0.0 && q.center == 0.0 { 0.0 } else { rel(p.center, q.center) };
            c.max(rel(p.half_width, q.half_width)).max(rel(p.weight, q.weight))
        })
        .fold(0.0, f64::max)
}

pub fn appendix_equality() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut worst = 0.0f64;
        for (rabi, dd) in [(50.0, 20.0), (100.0, 60.0), (37.5, 11.0)] {
            let p2 = make_params(2, rabi, dd, 0.0)?;
            worst = worst.max(max_rel_line_diff(&general_lines(&p2)?, &two_atom_lines(&p2)?));
            let p3 = make_params(3, rabi, dd, 0.0)?;
            worst = worst.max(max_rel_line_diff(&general_lines(&p3)?, &three_atom_lines(&p3)?));
        }
        Ok((worst <= 1e-12, format!("max relative difference {worst:.2e}")))
    })();
    Check::from_result("appendix.equality", r)
}

pub fn single_atom_mollow() -> Check {
    let r: Result<(bool, String)> = (|| {
        let p = make_params(1, 10.0, 0.0, 0.0)?;
        let got = general_lines(&p)?.sorted_lines();
        let want = [
            SpectralLine::new(-20.0, 0.75, 0.125),
            SpectralLine::new(0.0, 0.5, 0.25),
            SpectralLine::new(20.0, 0.75, 0.125),
        ];
        let ok = got.len() == 3
            && got.iter().zip(&want).all(|(g, w)| {
                (g.center - w.center).abs() < 1e-12
                    && (g.half_width - w.half_width).abs() < 1e-12
                    && (g.weight - w.weight).abs() < 1e-12
            });
        Ok((ok, format!("{} lines, widths 1/2 and 3/4 expected", got.len())))
    })();
    Check::from_result("mollow.single-atom", r)
}

pub fn sum_rule() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut worst = 0.0f64;
        for n in 1..=8 {
            let p = make_params(n, 50.0, 20.0, 0.0)?;
            let half = 2.0 * p.rabi + p.dd_coupling + 2000.0;
            let grid = Grid::uniform(-half, half, (2.0 * half / 0.05) as usize + 1)?;
            let integral = evaluate_spectrum(&general_lines(&p)?.lines, &grid).trapezoid();
            let target = std::f64::consts::PI * (n * (n + 2)) as f64 / 6.0;
            worst = worst.max((integral - target).abs() / target);
        }
        Ok((worst < 0.01, format!("N<=8 max relative deviation {worst:.3e}")))
    })();
    Check::from_result("sum-rule", r)
}

pub fn peak_height_scaling() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut ratios = Vec::new();
        for n in 2..=10 {
            let p = make_params(n, 50.0, 20.0, 0.0)?;
            let s0: f64 = general_lines(&p)?.lines.iter().map(|l| l.value_at(0.0)).sum();
            ratios.push(s0 / (n * n) as f64);
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (max - min) / max;
        Ok((
            spread < 0.15,
            format!("S(0)/N^2 spans [{min:.4}, {max:.4}] for N=2..10, spread {:.1}%", 100.0 * spread),
        ))
    })();
    Check::from_result("peak-height.n-squared", r)
}

pub fn coherence_widths() -> Check {
    let r: Result<(bool, String)> = (|| {
        let (mut worst_rate, mut worst_freq) = (0.0f64, 0.0f64);
        for n in 2..=6usize {
            let dd = 100.0 * (n - 1) as f64;
            let p = make_params(n, 100.0 * n as f64, dd, 0.0)?;
            let l = build_secular_liouvillian(&p);
            for k in 0..n {
                let mode = coherence_decay_rates(&l, k)?;
                let rate = (1.0 + 2.0 * ((n - k) * (k + 1)) as f64) / 4.0;
                let freq = 2.0 * p.rabi - p.delta_tilde() * (1.0 + 2.0 * k as f64 - n as f64) / 2.0;
                worst_rate = worst_rate.max((mode.rate - rate).abs() / rate);
                worst_freq = worst_freq.max((mode.frequency - freq).abs() / freq.abs());
            }
        }
        Ok((
            worst_rate <= 0.02 && worst_freq <= 0.02,
            format!("N=2..6 at delta~=100: rate rel err {worst_rate:.2e}, frequency rel err {worst_freq:.2e}"),
        ))
    })();
    Check::from_result("oracle.coherence-widths", r)
}

pub fn mollow_limit_oracle() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut worst = 0.0f64;
        for n in [1, 2, 3, 5] {
            let p = make_params(n, 20.0, 0.0, 0.0)?;
            let grid = Grid::uniform(-70.0, 70.0, 2801)?;
            let oracle = dressed_spectrum_oracle(&p, &grid)?;
            let closed = evaluate_spectrum(&mollow_limit_lines(&p)?.lines, &grid);
            let dev = oracle
                .values()
                .iter()
                .zip(closed.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(dev / closed.max_value());
        }
        Ok((worst <= 1e-6, format!("N in {{1,2,3,5}} max relative deviation {worst:.2e}")))
    })();
    Check::from_result("oracle.mollow-limit", r)
}

/// Trapezoid integral of |a − b| restricted to samples where `keep(x)` holds.
pub fn windowed_l1(x: &[f64], a: &[f64], b: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    let mut total = 0.0;
    for i in 1..x.len() {
        if keep(x[i - 1]) && keep(x[i]) {
            total += 0.5 * (x[i] - x[i - 1]) * ((a[i - 1] - b[i - 1]).abs() + (a[i] - b[i]).abs());
        }
    }
    total
}

/// Normalized L1 distance between the closed form and the dressed oracle along
/// the δ̃ ∈ {10, 20, 40, 80} ladder at δ/(2Ω) = 0.2.
pub fn convergence_ladder(n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for dt in [10.0, 20.0, 40.0, 80.0] {
        let dd = dt * (n - 1) as f64;
        let rabi = dd / 0.4;
        let p = make_params(n, rabi, dd, 0.0)?;
        let half = 2.0 * rabi + dd / 2.0 + 60.0;
        let grid = Grid::uniform(-half, half, (2.0 * half / 0.05) as usize + 1)?;
        let oracle = dressed_spectrum_oracle(&p, &grid)?;
        let closed = evaluate_spectrum(&general_lines(&p)?.lines, &grid);
        let l1 = windowed_l1(grid.points(), oracle.values(), closed.values(), |_| true);
        out.push(l1 / closed.trapezoid());
    }
    Ok(out)
}

pub fn oracle_convergence() -> Check {
    let r: Result<(bool, String)> = (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for n in [2, 3, 5] {
            let ladder = convergence_ladder(n)?;
            let monotone = ladder.windows(2).all(|w| w[1] < w[0]);
            let last = *ladder.last().expect("four rungs");
            ok &= monotone && last < 0.02;
            let rungs: Vec<String> = ladder.iter().map(|v| format!("{:.2}%", 100.0 * v)).collect();
            parts.push(format!("N={n} [{}]", rungs.join(", ")));
        }
        Ok((ok, parts.join("; ")))
    })();
    Check::from_result("oracle.convergence", r)
}

/// Sideband-window L1 between the bare and dressed oracles, N = 2, δ = 40γ,
/// for each δ/(2Ω) in `ratios`, normalized by the dressed window intensity.
pub fn secular_ladder(ratios: &[f64]) -> Result<Vec<f64>> {
    let dd = 40.0;
    let mut out = Vec::new();
    for &ratio in ratios {
        let rabi = dd / (2.0 * ratio);
        let p = make_params(2, rabi, dd, 0.0)?;
        let reach = dd / 2.0 + 10.0;
        let half = 2.0 * rabi + reach;
        let grid = Grid::uniform(-half, half, (2.0 * half / 0.05) as usize + 1)?;
        let bare = bare_spectrum_oracle(&p, &grid)?;
        let dressed = dressed_spectrum_oracle(&p, &grid)?;
        let in_window = |x: f64| (x.abs() - 2.0 * rabi).abs() <= reach;
        let zeros = vec![0.0; grid.len()];
        let l1 = windowed_l1(grid.points(), bare.values(), dressed.values(), in_window);
        let norm = windowed_l1(grid.points(), dressed.values(), &zeros, in_window);
        out.push(l1 / norm);
    }
    Ok(out)
}

pub fn secular_scaling() -> Check {
    let r: Result<(bool, String)> = (|| {
        let ladder = secular_ladder(&[0.4, 0.2, 0.1])?;
        let ratios: Vec<f64> = ladder.windows(2).map(|w| w[0] / w[1]).collect();
        let ok = ratios.iter().all(|r| (2.0..=8.0).contains(r));
        Ok((
            ok,
            format!(
                "L1 at delta/2Omega=0.4,0.2,0.1: {:.3}, {:.3}, {:.3}; successive ratios {:.2}, {:.2}",
                ladder[0], ladder[1], ladder[2], ratios[0], ratios[1]
            ),
        ))
    })();
    Check::from_result("oracle.secular-scaling", r)
}

pub const FIGURE_PEAK_THRESHOLD: f64 = 1e-3;

pub fn figure_peaks() -> Check {
    let expected: [&[f64]; 3] = [
        &[-110.0, -90.0, 0.0, 90.0, 110.0],
        &[-110.0, -100.0, -90.0, 0.0, 90.0, 100.0, 110.0],
        &[-230.0, -215.0, -200.0, -185.0, -170.0, 0.0, 170.0, 185.0, 200.0, 215.0, 230.0],
    ];
    let r: Result<(bool, String)> = (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for (which, want) in (1..=3u8).zip(expected) {
            let data = figure_data(which)?;
            let peaks = detect_peaks(&data.spectrum, FIGURE_PEAK_THRESHOLD)?;
            let worst = if peaks.len() == want.len() {
                peaks
                    .iter()
                    .zip(want)
                    .map(|(p, w)| (p.location - w).abs())
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            ok &= worst <= 0.5;
            parts.push(format!("fig{which}: {} peaks, max offset {worst:.3}", peaks.len()));
        }
        Ok((ok, parts.join("; ")))
    })();
    Check::from_result("figures.peaks", r)
}

pub fn inference_round_trip() -> Check {
    let r: Result<(bool, String)> = (|| {
        let (rabi, ratio) = (100.0, 0.3);
        let dd = ratio * 2.0 * rabi;
        let mut ok = true;
        let (mut worst_d, mut worst_o, mut worst_noisy_d) = (0.0f64, 0.0f64, 0.0f64);
        for n in 1..=6usize {
            let p = make_params(n, rabi, dd, 0.0)?;
            let clean = evaluate_spectrum(&general_lines(&p)?.lines, &Grid::default_for(&p));
            // The identifiable coupling is the cluster span, zero for one emitter.
            let truth_d = if n == 1 { 0.0 } else { dd };
            let d_err = |d: f64| if n == 1 { d.abs() } else { (d - truth_d).abs() / truth_d };

            let r = analyze_spectrum(&clean, PipelineOptions::default())?.inference?;
            ok &= r.n_hat == n && d_err(r.delta_hat) <= 0.01 && (r.omega_hat - rabi).abs() / rabi <= 0.005;
            worst_d = worst_d.max(d_err(r.delta_hat));
            worst_o = worst_o.max((r.omega_hat - rabi).abs() / rabi);

            let noisy = add_multiplicative_noise(&clean, 0.01, 1000 + n as u64);
            let opts = PipelineOptions {
                smoothing: 3,
                ..PipelineOptions::default()
            };
            let r = analyze_spectrum(&noisy, opts)?.inference?;
            ok &= r.n_hat == n && d_err(r.delta_hat) <= 0.03;
            worst_noisy_d = worst_noisy_d.max(d_err(r.delta_hat));
        }
        Ok((
            ok,
            format!(
                "N=1..6: clean delta err {worst_d:.2e}, omega err {worst_o:.2e}; 1% noise delta err {worst_noisy_d:.2e}"
            ),
        ))
    })();
    Check::from_result("inference.round-trip", r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_format() {
        let c = Check::new("x.y", true, "ok".into());
        assert_eq!(c.to_string(), "x.y: pass: ok");
        let c = Check::new("x.y", false, "bad".into());
        assert_eq!(c.to_string(), "x.y: fail: bad");
    }

    #[test]
    fn suite_names() {
        assert_eq!("appendix".parse::<Suite>().unwrap(), Suite::Appendix);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn algebra_suite_passes() {
        assert!(run_suite(Suite::Algebra).iter().all(|c| c.passed));
    }
}
