//! Master-equation oracles on the symmetric Dicke subspace.
//!
//! Density operators are column-stacked: `vec(ρ)[i + j·d] = ρ[i, j]`, so
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`. Two generators are provided:
//!
//! * the secular dressed-frame Liouvillian
//!   `dρ/dt = −i[Ḡ R_z − δ̄ R⁺R⁻, ρ] + (γ sin²2θ/4) D[R_z] + γ cos⁴θ D[R⁻] + γ sin⁴θ D[R⁺]`,
//! * the bare-frame Liouvillian with the driven collective Hamiltonian
//!   `Δ S_z + Ω(S⁺ + S⁻) − δ̃ S⁺S⁻` and collective decay `γ D[S⁻]`,
//!
//! with `D[X]ρ = XρX† − ½{X†X, ρ}`.
//!
//! Two-time correlators `⟨A(0) B(τ)⟩ = Tr[B e^{Lτ}(ρ_s A)]` are transformed
//! with the resolvent `∫₀^∞ e^{ixτ} e^{Lτ} dτ = −(L + ix)⁻¹`. A complex Schur
//! form `L = Q T Q†` is computed once, after which every frequency costs one
//! triangular solve.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::analytic::{Grid, SampledSpectrum};
use crate::error::{Error, Result};
use crate::model::{collective_operators, dressed_frame, CollectiveOperators, OperatorMatrix, SystemParams, C64};

/// Eigenvalues closer than this to zero (relative to `max(1, ‖L‖∞)`) count as stationary.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 100_000;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    SecularDressed,
    BareNonsecular,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::SecularDressed => "secular",
            Frame::BareNonsecular => "bare",
        }
    }
}

/// Superoperator acting on column-vectorized density operators.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: DMatrix<C64>,
    frame: Frame,
    params: SystemParams,
}

impl Liouvillian {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Dimension of the underlying Hilbert space, N + 1.
    pub fn system_dim(&self) -> usize {
        self.params.dim()
    }

    /// ‖vec(I)ᵀ L‖∞; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.system_dim();
        (0..self.matrix.ncols())
            .map(|col| {
                (0..d)
                    .map(|k| self.matrix[(k + k * d, col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.matrix)
    }

    /// Applies the generator to an operator.
    pub fn apply(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        unvec(&(&self.matrix * vec_op(rho)), self.system_dim())
    }
}

/// Eigenvalues of a general complex matrix via its Schur form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

pub fn vec_op(m: &OperatorMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<C64>, dim: usize) -> OperatorMatrix {
    OperatorMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// `−i[H, ·]` as a superoperator.
pub fn hamiltonian_superop(h: &OperatorMatrix) -> DMatrix<C64> {
    let id = OperatorMatrix::identity(h.nrows(), h.ncols());
    (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I)
}

/// `rate·D[X]` as a superoperator.
pub fn dissipator_superop(x: &OperatorMatrix, rate: f64) -> DMatrix<C64> {
    let id = OperatorMatrix::identity(x.nrows(), x.ncols());
    let xdx = x.adjoint() * x;
    let half = C64::new(0.5, 0.0);
    (x.conjugate().kronecker(x) - id.kronecker(&xdx) * half - xdx.transpose().kronecker(&id) * half)
        * C64::new(rate, 0.0)
}

/// Secular dressed-frame generator with the flat reservoir replacement Γ̂^(±) → γ.
pub fn build_secular_liouvillian(params: &SystemParams) -> Liouvillian {
    let ops = collective_operators(params.n_emitters);
    let frame = dressed_frame(params);
    let g = params.gamma;
    let h = &ops.inversion * C64::new(frame.g_bar, 0.0) - ops.raise_lower() * C64::new(frame.delta_bar, 0.0);
    let matrix = hamiltonian_superop(&h)
        + dissipator_superop(&ops.inversion, g * frame.sin2_2theta() / 4.0)
        + dissipator_superop(&ops.lowering, g * frame.cos4_theta())
        + dissipator_superop(&ops.raising, g * frame.sin4_theta());
    Liouvillian {
        matrix,
        frame: Frame::SecularDressed,
        params: params.clone(),
    }
}

/// Bare-frame generator without any secular approximation.
pub fn build_bare_liouvillian(params: &SystemParams) -> Liouvillian {
    let ops = collective_operators(params.n_emitters);
    let h = bare_hamiltonian(params, &ops);
    let matrix = hamiltonian_superop(&h) + dissipator_superop(&ops.lowering, params.gamma);
    Liouvillian {
        matrix,
        frame: Frame::BareNonsecular,
        params: params.clone(),
    }
}

/// `Δ S_z + Ω(S⁺ + S⁻) − δ̃ S⁺S⁻` with `S_z = R_z/2`.
pub fn bare_hamiltonian(params: &SystemParams, ops: &CollectiveOperators) -> OperatorMatrix {
    &ops.inversion * C64::new(params.detuning / 2.0, 0.0)
        + (&ops.raising + &ops.lowering) * C64::new(params.rabi, 0.0)
        - ops.raise_lower() * C64::new(params.delta_tilde(), 0.0)
}

/// Hermitian, unit-trace density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(OperatorMatrix);

impl DensityOperator {
    pub fn matrix(&self) -> &OperatorMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr[A ρ]`.
    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        (op * &self.0).trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Stationary state of `L`, normalized to unit trace.
///
/// Fails when `L` has no stationary mode or more than one.
pub fn steady_state(l: &Liouvillian) -> Result<DensityOperator> {
    let d = l.system_dim();
    let tol = ZERO_EIGENVALUE_TOL * l.norm_inf().max(1.0);
    let zeros = l.eigenvalues()?.iter().filter(|z| z.norm() <= tol).count();
    match zeros {
        0 => return Err(Error::Numerical("generator has no stationary state".into())),
        1 => {}
        k => {
            return Err(Error::Numerical(format!(
                "stationary state is not unique ({k} null eigenvalues)"
            )))
        }
    }

    // Replace the ρ₀₀ equation, which is linearly dependent on the other
    // population equations, by the trace condition.
    let mut a = l.matrix.clone();
    for col in 0..d * d {
        a[(0, col)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        a[(0, k + k * d)] = ONE;
    }
    let mut rhs = DVector::zeros(d * d);
    rhs[0] = ONE;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("steady-state system is singular".into()))?;
    let rho = unvec(&sol, d);
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    Ok(DensityOperator(rho / tr))
}

/// Operators of a two-time correlator `⟨A(0) B(τ)⟩`.
#[derive(Debug, Clone)]
pub struct CorrelatorSpec {
    pub left: OperatorMatrix,
    pub right: OperatorMatrix,
    /// Subtract the τ → ∞ plateau `⟨A⟩_s⟨B⟩_s` (coherent scattering).
    pub incoherent: bool,
}

impl CorrelatorSpec {
    pub fn incoherent(left: OperatorMatrix, right: OperatorMatrix) -> Self {
        Self {
            left,
            right,
            incoherent: true,
        }
    }
}

/// One-sided Fourier transform of a correlator sampled on a grid.
///
/// Unlike [`SampledSpectrum`] the values may take either sign.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSpectrum {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl CorrelatorSpectrum {
    pub fn into_spectrum(self) -> Result<SampledSpectrum> {
        SampledSpectrum::new(self.grid, self.values)
    }
}

/// Precomputed Schur form of `L` (or of `L` with its stationary mode shifted
/// away, when deflated) for repeated resolvent evaluations.
pub struct Resolvent {
    q: DMatrix<C64>,
    t: DMatrix<C64>,
    rho_s: DensityOperator,
    deflated: bool,
    dim: usize,
}

impl Resolvent {
    /// With `deflated`, the generator is replaced by `L − |ρ_s⟩⟩⟨⟨I|`, which
    /// agrees with `L` on trace-free operators and is invertible at x = 0.
    pub fn new(l: &Liouvillian, rho_s: &DensityOperator, deflated: bool) -> Result<Self> {
        let d = l.system_dim();
        let mut m = l.matrix.clone();
        if deflated {
            let r = vec_op(rho_s.matrix());
            for k in 0..d {
                let col = k + k * d;
                for row in 0..d * d {
                    m[(row, col)] -= r[row];
                }
            }
        }
        let schur = Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
        let (q, t) = schur.unpack();
        Ok(Self {
            q,
            t,
            rho_s: rho_s.clone(),
            deflated,
            dim: d,
        })
    }

    /// `Re ∫₀^∞ e^{ixτ} (⟨A(0)B(τ)⟩_s − plateau) dτ` at every grid point.
    pub fn correlator(&self, spec: &CorrelatorSpec, grid: &Grid) -> Result<CorrelatorSpectrum> {
        let d = self.dim;
        if spec.left.shape() != (d, d) || spec.right.shape() != (d, d) {
            return Err(Error::InvalidParams(format!(
                "correlator operators must be {d}×{d}"
            )));
        }
        if spec.incoherent && !self.deflated {
            return Err(Error::InvalidParams(
                "incoherent correlators need a deflated resolvent".into(),
            ));
        }
        let mut source = self.rho_s.matrix() * &spec.left;
        if spec.incoherent {
            let plateau = source.trace();
            source -= self.rho_s.matrix() * plateau;
        }
        let u = self.q.adjoint() * vec_op(&source);
        // Tr[B X] = vec(Bᵀ)ᵀ vec(X)
        let c = self.q.transpose() * vec_op(&spec.right.transpose());

        let values = grid
            .points()
            .par_iter()
            .map(|&x| self.contract_at(x, &u, &c))
            .collect::<Result<Vec<f64>>>()?;
        Ok(CorrelatorSpectrum {
            grid: grid.clone(),
            values,
        })
    }

    fn contract_at(&self, x: f64, u: &DVector<C64>, c: &DVector<C64>) -> Result<f64> {
        let n = u.len();
        let shift = C64::new(0.0, x);
        let scale = self.t.diagonal().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut z = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = u[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                acc -= self.t[(i, j)] * zj;
            }
            let diag = self.t[(i, i)] + shift;
            if diag.norm() <= 1e-13 * scale {
                return Err(Error::Numerical(format!("resolvent is singular at x = {x}")));
            }
            z[i] = acc / diag;
        }
        let s: C64 = c.iter().zip(&z).map(|(a, b)| a * b).sum();
        Ok(-s.re)
    }
}

/// Resolvent transform of a single correlator.
pub fn resolvent_correlator(
    l: &Liouvillian,
    rho_s: &DensityOperator,
    spec: &CorrelatorSpec,
    grid: &Grid,
) -> Result<CorrelatorSpectrum> {
    Resolvent::new(l, rho_s, spec.incoherent)?.correlator(spec, grid)
}

/// `¼[⟨R_zR_z(τ)⟩ + ⟨R⁺R⁻(τ)⟩ + ⟨R⁻R⁺(τ)⟩]` on the secular generator at resonance.
pub fn dressed_spectrum_oracle(params: &SystemParams, grid: &Grid) -> Result<SampledSpectrum> {
    if !params.is_resonant() {
        return Err(Error::Unsupported(
            "the dressed-frame oracle spectrum is only defined at resonance".into(),
        ));
    }
    let l = build_secular_liouvillian(params);
    let rho_s = steady_state(&l)?;
    let ops = collective_operators(params.n_emitters);
    let res = Resolvent::new(&l, &rho_s, true)?;
    let pairs = [
        (&ops.inversion, &ops.inversion),
        (&ops.raising, &ops.lowering),
        (&ops.lowering, &ops.raising),
    ];
    let mut total = vec![0.0; grid.len()];
    for (a, b) in pairs {
        let part = res.correlator(&CorrelatorSpec::incoherent(a.clone(), b.clone()), grid)?;
        for (t, v) in total.iter_mut().zip(part.values) {
            *t += 0.25 * v;
        }
    }
    SampledSpectrum::new(grid.clone(), total)
}

/// Incoherent `⟨S⁺(0)S⁻(τ)⟩` spectrum of the bare-frame generator.
pub fn bare_spectrum_oracle(params: &SystemParams, grid: &Grid) -> Result<SampledSpectrum> {
    let l = build_bare_liouvillian(params);
    let rho_s = steady_state(&l)?;
    let ops = collective_operators(params.n_emitters);
    let spec = CorrelatorSpec::incoherent(ops.raising, ops.lowering);
    let values = resolvent_correlator(&l, &rho_s, &spec, grid)?.values;
    // The spectrum of a positive correlator is non-negative; clip only
    // round-off far in the wings.
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let values = values
        .into_iter()
        .map(|v| if v < 0.0 && v > -1e-10 * scale.max(1e-300) { 0.0 } else { v })
        .collect();
    SampledSpectrum::new(grid.clone(), values)
}

/// Decay rate and oscillation frequency of one first-off-diagonal coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMode {
    pub rate: f64,
    pub frequency: f64,
}

/// Minimum frequency gap between sector eigenvalues for an unambiguous pairing.
pub const PAIRING_GAP: f64 = 1e-6;

/// Restriction of the secular generator to the coherences ρ_{n,n+1}, n = 0..N.
pub fn coherence_sector(l: &Liouvillian) -> DMatrix<C64> {
    let d = l.system_dim();
    let n = d - 1;
    let idx = |k: usize| k + (k + 1) * d;
    DMatrix::from_fn(n, n, |a, b| l.matrix[(idx(a), idx(b))])
}

/// Eigenmode of the coherence sector that belongs to ρ_{n,n+1}.
///
/// Pairing is by nearest expected frequency `2Ω − δ̃(1+2n−N)/2`.
pub fn coherence_decay_rates(l: &Liouvillian, n: usize) -> Result<CoherenceMode> {
    if l.frame != Frame::SecularDressed || !l.params.is_resonant() {
        return Err(Error::Unsupported(
            "coherence rates are defined for the resonant secular generator".into(),
        ));
    }
    let big_n = l.params.n_emitters;
    if n >= big_n {
        return Err(Error::InvalidParams(format!(
            "coherence index {n} out of range 0..{big_n}"
        )));
    }
    let eig = eigenvalues(&coherence_sector(l))?;
    let mut freqs: Vec<f64> = eig.iter().map(|z| z.im).collect();
    freqs.sort_by(f64::total_cmp);
    if freqs.windows(2).any(|w| w[1] - w[0] < PAIRING_GAP) {
        return Err(Error::Numerical(
            "coherence-sector eigenvalues are degenerate; pairing is ambiguous".into(),
        ));
    }
    let expected = 2.0 * l.params.rabi - l.params.delta_tilde() * (1.0 + 2.0 * n as f64 - big_n as f64) / 2.0;
    let best = eig
        .iter()
        .min_by(|a, b| (a.im - expected).abs().total_cmp(&(b.im - expected).abs()))
        .expect("sector is non-empty");
    Ok(CoherenceMode {
        rate: -best.re,
        frequency: best.im,
    })
}
