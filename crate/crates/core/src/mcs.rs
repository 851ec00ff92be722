//! Maximally coherent states: `(1/√d) Σ_j e^{iθ_j} |j⟩`.
//!
//! Besides membership and sampling this module builds the incoherent channel
//! that turns `|Ψ_d⟩` into an arbitrary target state.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{wrap_phase, KrausChannel};
use crate::error::{CoherenceError, Result};
use crate::numerics::ComplexMatrix;
use crate::states::{rng_from_seed, DensityMatrix, PureState, STATE_TOL};

/// Gauge-fixed phase vector of an MCS (`θ_0 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsDescriptor {
    phases: Vec<f64>,
}

impl McsDescriptor {
    /// Phases for `j = 1..d−1`; `θ_0` is fixed to zero.
    pub fn new(relative_phases: &[f64]) -> Self {
        let mut phases = Vec::with_capacity(relative_phases.len() + 1);
        phases.push(0.0);
        phases.extend(relative_phases.iter().map(|&t| wrap_phase(t)));
        Self { phases }
    }

    /// Reads the phases off an MCS vector, removing the global phase of `⟨0|ψ⟩`.
    pub fn from_state(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        let gauge = a[0].arg();
        Self {
            phases: std::iter::once(0.0)
                .chain(a[1..].iter().map(|z| wrap_phase(z.arg() - gauge)))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn to_state(&self) -> PureState {
        let a = 1.0 / (self.dim() as f64).sqrt();
        PureState::new(
            self.phases
                .iter()
                .map(|&t| Complex64::from_polar(a, t))
                .collect(),
        )
        .expect("unit-modulus phases over sqrt(d) are normalized")
    }
}

/// Purity `≥ 1 − tol` and every population within `tol` of `1/d`.
pub fn is_mcs(rho: &DensityMatrix, tol: f64) -> bool {
    if rho.purity() < 1.0 - tol {
        return false;
    }
    let target = 1.0 / rho.dim() as f64;
    rho.diagonal().iter().all(|p| (p - target).abs() <= tol)
}

pub fn mcs_sample_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(CoherenceError::BadDim(dim));
    }
    let rel: Vec<f64> = (1..dim).map(|_| rng.random_range(0.0..TAU)).collect();
    Ok(McsDescriptor::new(&rel).to_state())
}

/// MCS with `θ_1..θ_{d−1}` uniform in `[0, 2π)`.
pub fn mcs_sample(dim: usize, seed: u64) -> Result<PureState> {
    mcs_sample_with(dim, &mut rng_from_seed(seed))
}

/// Kraus operators `K_n = Σ_j ⟨j|φ⟩ |j⟩⟨(j+n) mod d|`, `n = 0..d−1`.
///
/// `K_n |Ψ_d⟩ = |φ⟩/√d` for every `n`, and `Σ_n K_n†K_n = I` holds exactly
/// because each column of `Σ_n` collects every population of `φ` once.
pub fn transform_mcs_to(target: &PureState) -> Result<KrausChannel> {
    let amps = target.amplitudes();
    let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > STATE_TOL {
        return Err(CoherenceError::NotNormalized { norm_sqr });
    }
    KrausChannel::new(shift_family(amps, 1.0))
}

fn shift_family(amps: &[Complex64], scale: f64) -> Vec<ComplexMatrix> {
    let d = amps.len();
    (0..d)
        .map(|n| {
            let mut k = ComplexMatrix::zeros(d, d);
            for (j, &a) in amps.iter().enumerate() {
                k[(j, (j + n) % d)] = a * scale;
            }
            k
        })
        .collect()
}

/// Mixed targets: `{√q_k K_n^(k)}` over the eigendecomposition of `target`.
pub fn transform_mcs_to_mixed(target: &DensityMatrix) -> Result<KrausChannel> {
    let eig = target.eigen();
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|&q| q.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut kraus = Vec::new();
    for (k, &q) in weights.iter().enumerate() {
        let q = q / total;
        if q <= 0.0 {
            continue;
        }
        kraus.extend(shift_family(&eig.eigenvector(k), q.sqrt()));
    }
    KrausChannel::new(kraus)
}
