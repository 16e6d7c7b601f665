//! Physical parameters, the symmetric Dicke subspace and the laser-dressed frame.
//!
//! All rates and frequencies are measured in units of the single-emitter
//! decay rate γ, which is therefore fixed to 1. Frequencies are offsets from
//! the laser frequency; absolute transition frequencies never appear.
//!
//! Dicke states |n⟩, n = 0..=N, are indexed by the number of excited
//! emitters, so every operator on the symmetric subspace is an
//! (N+1)×(N+1) matrix.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense complex operator on the (N+1)-dimensional symmetric subspace.
pub type OperatorMatrix = DMatrix<C64>;

/// Factor by which δ must exceed Nγ before the secular regime is considered reached.
pub const SECULAR_MARGIN: f64 = 10.0;

/// Conditions under which the closed-form spectrum is not expected to be accurate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamWarning {
    /// 2Ω ≤ δ: the dressed splitting no longer dominates the dipole-dipole shift.
    DriveNotDominant,
    /// δ < 10·N·γ: the sideband lines are not well separated compared with the collective decay.
    CouplingBelowCollectiveDecay,
}

/// Physical inputs of the N-emitter model, in units of γ.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub n_emitters: usize,
    pub gamma: f64,
    pub rabi: f64,
    pub dd_coupling: f64,
    /// Δ = ω₀ − ω_L + δ̃, so Δ = 0 is resonance including the collective shift.
    pub detuning: f64,
    pub warnings: Vec<ParamWarning>,
}

/// Validate and normalize the physical inputs.
///
/// Leaving the secular regime only attaches warnings; it never fails.
pub fn make_params(n: usize, rabi: f64, dd_coupling: f64, detuning: f64) -> Result<SystemParams> {
    if n == 0 {
        return Err(Error::InvalidParams("emitter count must be at least 1".into()));
    }
    for (name, v) in [("rabi", rabi), ("dd_coupling", dd_coupling), ("detuning", detuning)] {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
        }
    }
    if rabi < 0.0 {
        return Err(Error::InvalidParams(format!("rabi must be non-negative, got {rabi}")));
    }
    if dd_coupling < 0.0 {
        return Err(Error::InvalidParams(format!(
            "dd_coupling must be non-negative, got {dd_coupling}"
        )));
    }

    let mut params = SystemParams {
        n_emitters: n,
        gamma: 1.0,
        rabi,
        dd_coupling,
        detuning,
        warnings: Vec::new(),
    };
    if 2.0 * rabi <= dd_coupling {
        params.warnings.push(ParamWarning::DriveNotDominant);
    }
    if dd_coupling < SECULAR_MARGIN * n as f64 * params.gamma {
        params.warnings.push(ParamWarning::CouplingBelowCollectiveDecay);
    }
    Ok(params)
}

impl SystemParams {
    /// `2Ω > δ` and `δ ≥ 10·N·γ`.
    pub fn secular_ok(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n_emitters + 1
    }

    /// Per-pair coupling δ̃.
    pub fn delta_tilde(&self) -> f64 {
        scaled_coupling(self.dd_coupling, self.n_emitters)
    }

    pub fn is_resonant(&self) -> bool {
        self.detuning == 0.0
    }
}

/// δ̃ = δ/(N−1); zero for a single emitter, which has no pairs.
pub fn scaled_coupling(delta: f64, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        delta / (n - 1) as f64
    }
}

/// Derived quantities of the laser-dressed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    /// Mixing angle θ with cot 2θ = Δ/(2Ω).
    pub theta: f64,
    /// Generalized Rabi frequency G = √(Ω² + (Δ/2)²).
    pub g_big: f64,
    /// Ḡ = G + δ̃(sin⁴θ − sin²2θ/2), the dressed level spacing coefficient of R_z.
    pub g_bar: f64,
    /// δ̄ = δ̃(cos⁴θ + sin⁴θ − sin²2θ), the coefficient of −R⁺R⁻.
    pub delta_bar: f64,
    pub delta_tilde: f64,
}

impl DressedFrame {
    pub fn sin2_2theta(&self) -> f64 {
        (2.0 * self.theta).sin().powi(2)
    }

    pub fn cos4_theta(&self) -> f64 {
        self.theta.cos().powi(4)
    }

    pub fn sin4_theta(&self) -> f64 {
        self.theta.sin().powi(4)
    }
}

pub fn dressed_frame(params: &SystemParams) -> DressedFrame {
    let (rabi, det) = (params.rabi, params.detuning);
    // Δ = 0 is pinned to π/4 exactly, including the undriven corner Ω = 0.
    let theta = if det == 0.0 {
        FRAC_PI_4
    } else {
        0.5 * (2.0 * rabi).atan2(det)
    };
    let delta_tilde = params.delta_tilde();
    let (s, c) = theta.sin_cos();
    let sin2 = (2.0 * theta).sin().powi(2);
    let g_big = (rabi * rabi + 0.25 * det * det).sqrt();
    DressedFrame {
        theta,
        g_big,
        g_bar: g_big + delta_tilde * (s.powi(4) - 0.5 * sin2),
        delta_bar: delta_tilde * (c.powi(4) + s.powi(4) - sin2),
        delta_tilde,
    }
}

/// Collective ladder operators R⁺, R⁻, R_z on the symmetric subspace.
///
/// The same matrices represent the bare-frame operators S⁺, S⁻ and
/// S_z = R_z/2.
#[derive(Debug, Clone)]
pub struct CollectiveOperators {
    pub raising: OperatorMatrix,
    pub lowering: OperatorMatrix,
    pub inversion: OperatorMatrix,
}

/// ⟨n+1|R⁺|n⟩ = √((N−n)(n+1)), ⟨n|R_z|n⟩ = 2n − N.
pub fn collective_operators(n: usize) -> CollectiveOperators {
    let dim = n + 1;
    let mut raising = OperatorMatrix::zeros(dim, dim);
    let mut inversion = OperatorMatrix::zeros(dim, dim);
    for k in 0..dim {
        inversion[(k, k)] = C64::new(2.0 * k as f64 - n as f64, 0.0);
        if k < n {
            raising[(k + 1, k)] = C64::new((((n - k) * (k + 1)) as f64).sqrt(), 0.0);
        }
    }
    let lowering = raising.adjoint();
    CollectiveOperators {
        raising,
        lowering,
        inversion,
    }
}

impl CollectiveOperators {
    pub fn dim(&self) -> usize {
        self.inversion.nrows()
    }

    /// R⁺R⁻, diagonal with entries n(N−n+1).
    pub fn raise_lower(&self) -> OperatorMatrix {
        &self.raising * &self.lowering
    }

    /// R⁻R⁺, diagonal with entries (N−n)(n+1).
    pub fn lower_raise(&self) -> OperatorMatrix {
        &self.lowering * &self.raising
    }
}

pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn max_abs(m: &OperatorMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn fig1_params_are_secular() {
        let p = make_params(2, 50.0, 20.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.dd_coupling / (2.0 * p.rabi), 0.2);
        assert!(p.secular_ok());
        assert_eq!(p.gamma, 1.0);
    }

    #[test]
    fn single_emitter_has_no_pair_coupling() {
        let p = make_params(1, 10.0, 0.0, 0.0).unwrap();
        assert_eq!(p.delta_tilde(), 0.0);
    }

    #[test]
    fn weak_coupling_only_warns() {
        let p = make_params(3, 50.0, 1.0, 0.0).unwrap();
        assert!(!p.secular_ok());
        assert_eq!(p.warnings, vec![ParamWarning::CouplingBelowCollectiveDecay]);
        let strong = make_params(2, 5.0, 20.0, 0.0).unwrap();
        assert!(strong.warnings.contains(&ParamWarning::DriveNotDominant));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_params(0, 1.0, 0.0, 0.0).is_err());
        assert!(make_params(2, -1.0, 0.0, 0.0).is_err());
        assert!(make_params(2, 1.0, -0.5, 0.0).is_err());
        assert!(make_params(2, f64::NAN, 0.0, 0.0).is_err());
        assert!(make_params(2, 1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn scaled_coupling_cases() {
        assert_eq!(scaled_coupling(20.0, 2), 20.0);
        assert_eq!(scaled_coupling(60.0, 5), 15.0);
        assert_eq!(scaled_coupling(7.0, 1), 0.0);
    }

    #[test]
    fn resonant_dressed_frame() {
        let p = make_params(2, 50.0, 20.0, 0.0).unwrap();
        let f = dressed_frame(&p);
        assert_eq!(f.theta, FRAC_PI_4);
        assert_abs_diff_eq!(f.g_bar, 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.delta_bar, -10.0, epsilon = 1e-12);

        let p0 = make_params(3, 17.0, 0.0, 0.0).unwrap();
        let f0 = dressed_frame(&p0);
        assert_eq!(f0.g_bar, 17.0);
        assert_eq!(f0.g_big, 17.0);
        assert_eq!(f0.delta_bar, 0.0);
    }

    #[test]
    fn detuned_dressed_frame() {
        // Δ = 2Ω → cot 2θ = 1 → θ = π/8.
        let p = make_params(3, 10.0, 8.0, 20.0).unwrap();
        let f = dressed_frame(&p);
        assert_abs_diff_eq!(f.theta, PI / 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(1.0 / (2.0 * f.theta).tan(), 1.0, epsilon = 1e-13);
        let dt = 4.0;
        let (s, c) = (PI / 8.0).sin_cos();
        let g = (100.0f64 + 100.0).sqrt();
        assert_abs_diff_eq!(f.g_big, g, epsilon = 1e-12);
        assert_abs_diff_eq!(f.g_bar, g + dt * (s.powi(4) - 0.25), epsilon = 1e-12);
        assert_abs_diff_eq!(f.delta_bar, dt * (c.powi(4) + s.powi(4) - 0.5), epsilon = 1e-12);
    }

    #[test]
    fn dressed_frame_continuous_at_resonance() {
        let at = dressed_frame(&make_params(4, 30.0, 45.0, 0.0).unwrap());
        for eps in [1e-6, -1e-6] {
            let near = dressed_frame(&make_params(4, 30.0, 45.0, eps).unwrap());
            assert!((near.theta - at.theta).abs() < 1e-7);
            assert!((near.g_bar - at.g_bar).abs() < 1e-5);
            assert!((near.delta_bar - at.delta_bar).abs() < 1e-5);
        }
    }

    #[test]
    fn ladder_matrices_small_n() {
        let ops = collective_operators(1);
        assert_eq!(ops.raising[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(ops.raising[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(ops.inversion[(0, 0)].re, -1.0);
        assert_eq!(ops.inversion[(1, 1)].re, 1.0);

        let ops = collective_operators(2);
        assert_abs_diff_eq!(ops.raising[(1, 0)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ops.raising[(2, 1)].re, 2f64.sqrt(), epsilon = 1e-15);
        let diag: Vec<f64> = (0..3).map(|k| ops.inversion[(k, k)].re).collect();
        assert_eq!(diag, vec![-2.0, 0.0, 2.0]);
    }

    #[test]
    fn su2_algebra_up_to_twenty() {
        for n in 1..=20 {
            let ops = collective_operators(n);
            let (rp, rm, rz) = (&ops.raising, &ops.lowering, &ops.inversion);
            assert_eq!(&rp.adjoint(), rm);
            assert!(max_abs(&(commutator(rp, rm) - rz)) < 1e-12);
            assert!(max_abs(&(commutator(rz, rp) - rp * C64::new(2.0, 0.0))) < 1e-12);
            assert!(max_abs(&(commutator(rz, rm) + rm * C64::new(2.0, 0.0))) < 1e-12);

            // Casimir: R_z²/4 + (R⁺R⁻ + R⁻R⁺)/2 = j(j+1), j = N/2.
            let j = n as f64 / 2.0;
            let casimir = rz * rz * C64::new(0.25, 0.0)
                + (ops.raise_lower() + ops.lower_raise()) * C64::new(0.5, 0.0);
            let expected = OperatorMatrix::identity(n + 1, n + 1) * C64::new(j * (j + 1.0), 0.0);
            assert!(max_abs(&(casimir - expected)) < 1e-10 * (1.0 + j * j));

            let rl = ops.raise_lower();
            let lr = ops.lower_raise();
            for k in 0..=n {
                assert_abs_diff_eq!(rl[(k, k)].re, (k * (n - k + 1)) as f64, epsilon = 1e-10);
                assert_abs_diff_eq!(lr[(k, k)].re, ((n - k) * (k + 1)) as f64, epsilon = 1e-10);
            }
            let off_diag: f64 = (0..=n)
                .flat_map(|a| (0..=n).map(move |b| (a, b)))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| rl[(a, b)].norm() + lr[(a, b)].norm())
                .sum();
            assert_eq!(off_diag, 0.0);
        }
    }
}
