//! Numerical oracles checked against each other and against known limits.

use nalgebra::{DMatrix, DVector};

use dicke_spectra::analytic::{evaluate_spectrum, general_lines, mollow_limit_lines, Grid};
use dicke_spectra::inference::detect_peaks;
use dicke_spectra::liouville::{
    bare_spectrum_oracle, build_bare_liouvillian, build_secular_liouvillian, dressed_spectrum_oracle,
    resolvent_correlator, steady_state, unvec, vec_op, CorrelatorSpec, Liouvillian,
};
use dicke_spectra::model::{collective_operators, make_params, OperatorMatrix, C64};

/// Re ∫₀^T e^{ixτ}(Tr[B e^{Lτ}(ρA)] − plateau) dτ by composite 5-point
/// Gauss–Legendre on fixed panels, propagating with matrix exponentials.
struct TimeDomain {
    nodes: Vec<(f64, DMatrix<C64>)>,
    weights: [f64; 5],
    panel: f64,
    step: DMatrix<C64>,
    panels: usize,
}

const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl TimeDomain {
    fn new(l: &Liouvillian, t_max: f64, panel: f64) -> Self {
        let m = l.matrix();
        let nodes = GL_X
            .iter()
            .map(|&g| {
                let t = 0.5 * panel * (g + 1.0);
                (t, (m * C64::new(t, 0.0)).exp())
            })
            .collect();
        Self {
            nodes,
            weights: GL_W,
            panel,
            step: (m * C64::new(panel, 0.0)).exp(),
            panels: (t_max / panel).ceil() as usize,
        }
    }

    fn spectrum(&self, rho: &OperatorMatrix, spec: &CorrelatorSpec, xs: &[f64]) -> Vec<f64> {
        let d = rho.nrows();
        let source = rho * &spec.left;
        let plateau = if spec.incoherent {
            (rho * &spec.left).trace() * (&spec.right * rho).trace()
        } else {
            C64::new(0.0, 0.0)
        };
        let mut v: DVector<C64> = vec_op(&source);
        let mut acc = vec![C64::new(0.0, 0.0); xs.len()];
        for k in 0..self.panels {
            let t0 = k as f64 * self.panel;
            for ((t, prop), w) in self.nodes.iter().zip(self.weights) {
                let g = (&spec.right * unvec(&(prop * &v), d)).trace() - plateau;
                let tau = t0 + t;
                for (a, &x) in acc.iter_mut().zip(xs) {
                    *a += C64::new(0.0, x * tau).exp() * g * (0.5 * self.panel * w);
                }
            }
            v = &self.step * v;
        }
        acc.iter().map(|z| z.re).collect()
    }
}

fn random_hermitian(d: usize, seed: u64) -> OperatorMatrix {
    // Small deterministic LCG; only needs to avoid special structure.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let a = OperatorMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

#[test]
fn resolvent_matches_time_domain_quadrature() {
    let xs = [-7.3, -4.0, -1.1, 0.0, 0.4, 2.5, 6.0, 9.2];
    let cases = [(1usize, 2.0, 0.0, 0.0), (2, 3.0, 1.5, 0.0), (3, 2.5, 2.0, 0.0), (2, 1.5, 0.7, 0.8)];
    let mut worst = 0.0f64;
    for (idx, &(n, rabi, dd, det)) in cases.iter().enumerate() {
        let p = make_params(n, rabi, dd, det).unwrap();
        let ops = collective_operators(n);
        let frames: Vec<Liouvillian> = if det == 0.0 {
            vec![build_secular_liouvillian(&p), build_bare_liouvillian(&p)]
        } else {
            vec![build_bare_liouvillian(&p)]
        };
        for l in frames {
            let rho = steady_state(&l).unwrap();
            let td = TimeDomain::new(&l, 50.0, 0.02);
            let specs = [
                CorrelatorSpec::incoherent(ops.raising.clone(), ops.lowering.clone()),
                CorrelatorSpec::incoherent(ops.inversion.clone(), ops.inversion.clone()),
                CorrelatorSpec::incoherent(random_hermitian(n + 1, idx as u64), random_hermitian(n + 1, 99 + idx as u64)),
            ];
            let grid = Grid::new(xs.to_vec()).unwrap();
            for spec in &specs {
                let fast = resolvent_correlator(&l, &rho, spec, &grid).unwrap().values;
                let slow = td.spectrum(rho.matrix(), spec, &xs);
                for (a, b) in fast.iter().zip(&slow) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-6, "resolvent vs quadrature max deviation {worst:e}");
}

#[test]
fn propagation_preserves_hermiticity_and_trace() {
    let p = make_params(3, 2.0, 1.0, 0.3).unwrap();
    for l in [build_bare_liouvillian(&p), build_secular_liouvillian(&make_params(3, 2.0, 1.0, 0.0).unwrap())] {
        let rho0 = {
            let h = random_hermitian(4, 5);
            let pos = &h * h.adjoint();
            let tr = pos.trace();
            pos / tr
        };
        for tau in [0.1, 1.0, 7.5] {
            let prop = (l.matrix() * C64::new(tau, 0.0)).exp();
            let rho = unvec(&(prop * vec_op(&rho0)), 4);
            let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(herm < 1e-12, "tau={tau}: anti-Hermitian part {herm:e}");
            assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn dressed_oracle_shows_fig1_lines() {
    let p = make_params(2, 50.0, 20.0, 0.0).unwrap();
    let grid = Grid::uniform(-140.0, 140.0, 5601).unwrap();
    let s = dressed_spectrum_oracle(&p, &grid).unwrap();
    let peaks = detect_peaks(&s, 1e-3).unwrap();
    let locs: Vec<f64> = peaks.iter().map(|p| p.location).collect();
    assert_eq!(locs.len(), 5, "{locs:?}");
    for (got, want) in locs.iter().zip([-110.0, -90.0, 0.0, 90.0, 110.0]) {
        assert!((got - want).abs() <= 0.1, "{got} vs {want}");
    }
}

#[test]
fn dressed_oracle_is_exact_without_coupling() {
    for n in [1usize, 3] {
        let p = make_params(n, if n == 1 { 10.0 } else { 50.0 }, 0.0, 0.0).unwrap();
        let grid = Grid::default_for(&p);
        let oracle = dressed_spectrum_oracle(&p, &grid).unwrap();
        let closed = evaluate_spectrum(&mollow_limit_lines(&p).unwrap().lines, &grid);
        let dev = oracle
            .values()
            .iter()
            .zip(closed.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-6 * closed.max_value(), "N={n}: {dev:e}");
    }
}

#[test]
fn dressed_oracle_is_non_negative() {
    for (n, rabi, dd) in [(2, 50.0, 20.0), (4, 30.0, 12.0), (6, 80.0, 40.0)] {
        let p = make_params(n, rabi, dd, 0.0).unwrap();
        let s = dressed_spectrum_oracle(&p, &Grid::default_for(&p)).unwrap();
        assert!(s.values().iter().all(|&v| v >= -1e-8));
    }
}

#[test]
fn bare_single_emitter_is_mollow_triplet() {
    let p = make_params(1, 10.0, 0.0, 0.0).unwrap();
    let grid = Grid::uniform(-40.0, 40.0, 8001).unwrap();
    let s = bare_spectrum_oracle(&p, &grid).unwrap();
    let peaks = detect_peaks(&s, 1e-2).unwrap();
    let locs: Vec<f64> = peaks.iter().map(|p| p.location).collect();
    assert_eq!(locs.len(), 3, "{locs:?}");
    assert!(locs[1].abs() <= 0.1);
    assert!((locs[0] + 20.0).abs() <= 0.1 && (locs[2] - 20.0).abs() <= 0.1, "{locs:?}");
}

#[test]
fn bare_spectrum_without_drive_vanishes() {
    let p = make_params(3, 0.0, 0.0, 0.0).unwrap();
    let s = bare_spectrum_oracle(&p, &Grid::uniform(-20.0, 20.0, 401).unwrap()).unwrap();
    assert!(s.max_value() < 1e-12);
}

#[test]
fn bare_and_dressed_agree_in_weight_at_small_coupling_ratio() {
    // Integrated sideband intensity is insensitive to the small non-secular
    // shifts, so it converges even where lineshapes do not yet overlap.
    let p = make_params(2, 400.0, 40.0, 0.0).unwrap();
    let half = 2.0 * p.rabi + 40.0;
    let grid = Grid::uniform(-half, half, (2.0 * half / 0.05) as usize + 1).unwrap();
    let bare = bare_spectrum_oracle(&p, &grid).unwrap();
    let dressed = dressed_spectrum_oracle(&p, &grid).unwrap();
    let window = |s: &dicke_spectra::analytic::SampledSpectrum| {
        s.iter()
            .filter(|(x, _)| (x.abs() - 2.0 * p.rabi).abs() <= 30.0)
            .map(|(_, y)| y * 0.05)
            .sum::<f64>()
    };
    let (b, d) = (window(&bare), window(&dressed));
    assert!((b - d).abs() / d < 0.05, "bare {b} dressed {d}");
}

#[test]
fn closed_form_lines_sit_on_oracle_peaks_when_resolved() {
    let p = make_params(3, 400.0, 160.0, 0.0).unwrap();
    let lines = general_lines(&p).unwrap();
    let grid = Grid::default_for(&p);
    let s = dressed_spectrum_oracle(&p, &grid).unwrap();
    let peaks = detect_peaks(&s, 1e-3).unwrap();
    assert_eq!(peaks.len(), lines.len());
    let mut centers: Vec<f64> = lines.lines.iter().map(|l| l.center).collect();
    centers.sort_by(f64::total_cmp);
    for (pk, c) in peaks.iter().zip(centers) {
        assert!((pk.location - c).abs() < 0.25, "{} vs {c}", pk.location);
    }
}
