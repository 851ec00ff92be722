//! Pure states and density matrices over the computational basis `{|0⟩, …, |d−1⟩}`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{hermitian_eigen, ComplexMatrix, HermitianEigen, PSD_CLAMP};

/// Normalization / trace tolerance for state invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Default off-diagonal ℓ1 tolerance for incoherence tests.
pub const INCOHERENCE_TOL: f64 = 1e-9;

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps normalized amplitudes `⟨i|ψ⟩`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(CoherenceError::BadDim(0));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > STATE_TOL {
            return Err(CoherenceError::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(CoherenceError::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// `|Ψ_d⟩ = d^{-1/2} Σ_i |i⟩`.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            amplitudes: vec![Complex64::new(a, 0.0); dim],
        }
    }

    /// State with the given basis populations and phases.
    pub fn from_weights_phases(weights: &[f64], phases: &[f64]) -> Result<Self> {
        if weights.len() != phases.len() {
            return Err(CoherenceError::DimMismatch {
                expected: weights.len(),
                got: phases.len(),
            });
        }
        Self::new(
            weights
                .iter()
                .zip(phases)
                .map(|(&w, &t)| Complex64::from_polar(w.max(0.0).sqrt(), t))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `|⟨i|ψ⟩|²` for each `i`.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Equality up to a global phase: `|⟨ψ|φ⟩| ≥ 1 − 1e-10`.
    pub fn phase_equal(&self, other: &PureState) -> bool {
        self.dim() == other.dim() && self.inner(other).norm() >= 1.0 - STATE_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(CoherenceError::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matrix.is_hermitian(STATE_TOL) {
            return Err(CoherenceError::NonHermitian {
                deviation: matrix.hermiticity_defect(),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(CoherenceError::InvalidDensity(format!("trace {tr} != 1")));
        }
        let eig = hermitian_eigen(&matrix)?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -PSD_CLAMP {
                return Err(CoherenceError::NotPsd { eigenvalue: min });
            }
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diag(diag))
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.matrix).expect("density matrix is Hermitian by construction")
    }

    /// Eigenvalues with the rounding-noise window clamped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        self.eigen()
            .eigenvalues
            .into_iter()
            .map(|x| x.max(0.0))
            .collect()
    }

    /// `Σ_{i≠j} |ρ_ij|`.
    pub fn off_diagonal_l1(&self) -> f64 {
        let d = self.dim();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    total += self.matrix[(i, j)].norm();
                }
            }
        }
        total
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn fidelity_with(&self, phi: &PureState) -> f64 {
        let rho_phi = self.matrix.apply(phi.amplitudes());
        phi.amplitudes()
            .iter()
            .zip(&rho_phi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }

    /// `λ ρ_a + (1 − λ) ρ_b`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(CoherenceError::DimMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix.scale_real(lambda) + &other.matrix.scale_real(1.0 - lambda),
        })
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn from_pure(psi: &PureState) -> DensityMatrix {
    DensityMatrix {
        matrix: ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes()),
    }
}

/// Completely dephasing map Δ: keeps the diagonal, zeroes everything else.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        matrix: ComplexMatrix::from_real_diag(&rho.diagonal()),
    }
}

pub fn is_incoherent(rho: &DensityMatrix, tol: f64) -> bool {
    rho.off_diagonal_l1() <= tol
}

pub fn random_pure_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(CoherenceError::BadDim(dim));
    }
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        if let Ok(psi) = PureState::normalized(v) {
            return Ok(psi);
        }
    }
}

/// Haar-random pure state.
pub fn random_pure(dim: usize, seed: u64) -> Result<PureState> {
    random_pure_with(dim, &mut rng_from_seed(seed))
}

pub fn random_density_with<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(CoherenceError::BadDim(dim));
    }
    if rank < 1 || rank > dim {
        return Err(CoherenceError::BadRank { dim, rank });
    }
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| gaussian_complex(rng));
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let mut m = gg.scale_real(1.0 / tr);
    // Exact Hermitian symmetry.
    for i in 0..dim {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    Ok(DensityMatrix { matrix: m })
}

/// `GG†/tr(GG†)` with `G` a `dim × rank` complex Gaussian matrix.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, rank, &mut rng_from_seed(seed))
}

/// On-disk state format. Density matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub kind: StateKind,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
}

/// Either state flavour, as read from a [`StateFile`].
#[derive(Debug, Clone)]
pub enum AnyState {
    Pure(PureState),
    Density(DensityMatrix),
}

impl AnyState {
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            AnyState::Pure(psi) => from_pure(psi),
            AnyState::Density(rho) => rho.clone(),
        }
    }
}

fn split_parts(values: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (
        values.iter().map(|z| z.re).collect(),
        values.iter().map(|z| z.im).collect(),
    )
}

pub(crate) fn join_parts(re: &[f64], im: &[f64], expected: usize) -> Result<Vec<Complex64>> {
    if re.len() != expected || im.len() != expected {
        return Err(CoherenceError::Format(format!(
            "expected {expected} real and imaginary parts, got {} and {}",
            re.len(),
            im.len()
        )));
    }
    Ok(re
        .iter()
        .zip(im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect())
}

impl StateFile {
    pub fn from_pure(psi: &PureState) -> Self {
        let (re, im) = split_parts(psi.amplitudes());
        Self {
            dim: psi.dim(),
            kind: StateKind::Pure,
            re,
            im,
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let (re, im) = split_parts(rho.matrix().as_slice());
        Self {
            dim: rho.dim(),
            kind: StateKind::Density,
            re,
            im,
        }
    }

    pub fn to_state(&self) -> Result<AnyState> {
        match self.kind {
            StateKind::Pure => {
                let amps = join_parts(&self.re, &self.im, self.dim)?;
                Ok(AnyState::Pure(PureState::new(amps)?))
            }
            StateKind::Density => {
                let entries = join_parts(&self.re, &self.im, self.dim * self.dim)?;
                let m = ComplexMatrix::from_row_major(self.dim, self.dim, entries)?;
                Ok(AnyState::Density(DensityMatrix::new(m)?))
            }
        }
    }
}
