//! Kraus channels, incoherent operations and coherence-preserving unitaries.
//!
//! A Kraus operator is incoherent when every column has at most one nonzero
//! entry: it then sends each basis state to a multiple of a basis state.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{hermitian_eigen, ComplexMatrix};
use crate::states::{join_parts, rng_from_seed, DensityMatrix};

/// Completeness tolerance `‖Σ K†K − I‖_F`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Entries with modulus at or below this count as zero for structure tests.
pub const ENTRY_TOL: f64 = 1e-10;
/// Selective outcomes with probability at or below this are dropped.
pub const OUTCOME_CUTOFF: f64 = 1e-14;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Wraps an angle into `[0, 2π)`.
pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// CPTP map given by square Kraus operators with `Σ K_n†K_n = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| {
            CoherenceError::BadParams("channel needs at least one Kraus operator".into())
        })?;
        let dim = first.rows();
        for k in &kraus {
            if !k.is_square() {
                return Err(CoherenceError::NonSquare {
                    rows: k.rows(),
                    cols: k.cols(),
                });
            }
            if k.rows() != dim {
                return Err(CoherenceError::DimMismatch {
                    expected: dim,
                    got: k.rows(),
                });
            }
        }
        let deviation = completeness_defect(&kraus, dim);
        if deviation > COMPLETENESS_TOL {
            return Err(CoherenceError::IncompleteChannel { deviation });
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// Conjugation by a single unitary.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Non-selective measurement in the computational basis, `{|i⟩⟨i|}`.
    pub fn projective_measurement(dim: usize) -> Self {
        let kraus = (0..dim)
            .map(|i| {
                let mut k = ComplexMatrix::zeros(dim, dim);
                k[(i, i)] = Complex64::new(1.0, 0.0);
                k
            })
            .collect();
        Self { dim, kraus }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `‖Σ K†K − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(&self.kraus, self.dim)
    }

    /// Choi matrix `Σ_n |K_n⟩⟩⟨⟨K_n|` with row-major vectorization.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim * self.dim;
        let mut c = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = k.as_slice();
            for a in 0..n {
                if v[a] == zero() {
                    continue;
                }
                for b in 0..n {
                    c[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        c
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(CoherenceError::DimMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        Ok(())
    }
}

fn completeness_defect(kraus: &[ComplexMatrix], dim: usize) -> f64 {
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for k in kraus {
        sum = &sum + &k.adjoint().matmul(k);
    }
    (&sum - &ComplexMatrix::identity(dim)).frobenius_norm()
}

fn column_is_incoherent(k: &ComplexMatrix, j: usize, tol: f64) -> bool {
    (0..k.rows()).filter(|&i| k[(i, j)].norm() > tol).count() <= 1
}

/// Every Kraus operator has at most one entry of modulus `> tol` per column.
pub fn is_incoherent_channel(ch: &KrausChannel, tol: f64) -> bool {
    ch.kraus
        .iter()
        .all(|k| (0..k.cols()).all(|j| column_is_incoherent(k, j, tol)))
}

/// `Σ_n K_n ρ K_n†`.
pub fn apply(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ch.check_dim(rho)?;
    let mut out = ComplexMatrix::zeros(ch.dim, ch.dim);
    for k in &ch.kraus {
        out = &out + &k.conjugate(rho.matrix());
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// One retained measurement outcome `(p_n, ρ_n)`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub probability: f64,
    pub state: DensityMatrix,
}

/// Outcomes `p_n = tr(K_n ρ K_n†)`, `ρ_n = K_n ρ K_n† / p_n`; negligible ones skipped.
pub fn apply_selective(ch: &KrausChannel, rho: &DensityMatrix) -> Result<Vec<Outcome>> {
    ch.check_dim(rho)?;
    Ok(ch
        .kraus
        .iter()
        .filter_map(|k| {
            let unnormalized = k.conjugate(rho.matrix());
            let p = unnormalized.trace().re;
            (p > OUTCOME_CUTOFF).then(|| Outcome {
                probability: p,
                state: DensityMatrix::from_matrix_unchecked(unnormalized.scale_real(1.0 / p)),
            })
        })
        .collect())
}

/// Kraus set `{A_m B_n}`: first `b`, then `a`.
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim != b.dim {
        return Err(CoherenceError::DimMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let kraus = a
        .kraus
        .iter()
        .flat_map(|am| b.kraus.iter().map(move |bn| am.matmul(bn)))
        .collect();
    Ok(KrausChannel { dim: a.dim, kraus })
}

/// Coherence-preserving operation: a unitary channel that is also incoherent.
///
/// Unitarity is read off the Choi matrix (second eigenvalue `≤ tol · first`)
/// so that Kraus sets with many proportional members are recognised.
pub fn is_cpo(ch: &KrausChannel, tol: f64) -> bool {
    if !is_incoherent_channel(ch, ENTRY_TOL) {
        return false;
    }
    choi_rank_one(ch, tol)
}

pub(crate) fn choi_rank_one(ch: &KrausChannel, tol: f64) -> bool {
    let eig = hermitian_eigen(&ch.choi()).expect("Choi matrix is Hermitian");
    let n = eig.eigenvalues.len();
    let first = eig.eigenvalues[n - 1];
    let second = if n >= 2 { eig.eigenvalues[n - 2] } else { 0.0 };
    first > 0.0 && second <= tol * first
}

/// One Kraus operator in canonical incoherent form
/// `K_n = Σ_j √p_n · K_nj · e^{iγ_nj} |λ_nj⟩⟨j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherentKrausTerm {
    pub weight: f64,
    pub column_map: Vec<usize>,
    pub moduli: Vec<f64>,
    pub phases: Vec<f64>,
}

impl IncoherentKrausTerm {
    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.column_map.len();
        let sp = self.weight.sqrt();
        let mut k = ComplexMatrix::zeros(d, d);
        for j in 0..d {
            k[(self.column_map[j], j)] = Complex64::from_polar(sp * self.moduli[j], self.phases[j]);
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherentKrausForm {
    pub terms: Vec<IncoherentKrausTerm>,
}

impl IncoherentKrausForm {
    pub fn reconstruct(&self) -> Vec<ComplexMatrix> {
        self.terms
            .iter()
            .map(IncoherentKrausTerm::to_matrix)
            .collect()
    }
}

/// Extracts `(p_n, λ_n, K_nj, γ_nj)` with `p_n = tr(K_n†K_n)/d`.
///
/// Zero columns get `λ_nj = j`, modulus 0 and phase 0; a zero operator gets `p_n = 0`.
pub fn canonical_form(ch: &KrausChannel) -> Result<IncoherentKrausForm> {
    if !is_incoherent_channel(ch, ENTRY_TOL) {
        return Err(CoherenceError::NotIncoherent);
    }
    let d = ch.dim;
    let terms = ch
        .kraus
        .iter()
        .map(|k| {
            let weight = k.frobenius_norm().powi(2) / d as f64;
            let scale = if weight > 0.0 {
                1.0 / weight.sqrt()
            } else {
                0.0
            };
            let mut column_map = Vec::with_capacity(d);
            let mut moduli = Vec::with_capacity(d);
            let mut phases = Vec::with_capacity(d);
            for j in 0..d {
                let (row, entry) = (0..d)
                    .map(|i| (i, k[(i, j)]))
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .expect("d >= 1");
                if entry.norm() > ENTRY_TOL {
                    column_map.push(row);
                    moduli.push(entry.norm() * scale);
                    phases.push(wrap_phase(entry.arg()));
                } else {
                    column_map.push(j);
                    moduli.push(0.0);
                    phases.push(0.0);
                }
            }
            IncoherentKrausTerm {
                weight,
                column_map,
                moduli,
                phases,
            }
        })
        .collect();
    Ok(IncoherentKrausForm { terms })
}

/// Basis relabeling with phases, `U = Σ_j e^{iθ_j} |α_j⟩⟨j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherentUnitary {
    perm: Vec<usize>,
    phases: Vec<f64>,
}

impl IncoherentUnitary {
    pub fn new(perm: Vec<usize>, phases: Vec<f64>) -> Result<Self> {
        let d = perm.len();
        if phases.len() != d {
            return Err(CoherenceError::DimMismatch {
                expected: d,
                got: phases.len(),
            });
        }
        let mut seen = vec![false; d];
        for &a in &perm {
            if a >= d || seen[a] {
                return Err(CoherenceError::BadParams(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            seen[a] = true;
        }
        if phases.iter().any(|t| !t.is_finite()) {
            return Err(CoherenceError::BadParams("non-finite phase".into()));
        }
        Ok(Self {
            perm,
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect(),
            phases: vec![0.0; dim],
        }
    }

    /// Cyclic shift `|j⟩ → |j + shift mod d⟩`, zero phases.
    pub fn cyclic(dim: usize, shift: usize) -> Self {
        Self {
            perm: (0..dim).map(|j| (j + shift) % dim).collect(),
            phases: vec![0.0; dim],
        }
    }

    pub fn random_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(rng);
        let phases = (0..dim).map(|_| rng.random_range(0.0..TAU)).collect();
        Self { perm, phases }
    }

    pub fn random(dim: usize, seed: u64) -> Self {
        Self::random_with(dim, &mut rng_from_seed(seed))
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `self ∘ other` (apply `other` first).
    pub fn then_after(&self, other: &IncoherentUnitary) -> IncoherentUnitary {
        let d = self.dim();
        let perm = (0..d).map(|j| self.perm[other.perm[j]]).collect();
        let phases = (0..d)
            .map(|j| wrap_phase(other.phases[j] + self.phases[other.perm[j]]))
            .collect();
        IncoherentUnitary { perm, phases }
    }

    /// `U†`, again a relabeling with phases.
    pub fn inverse(&self) -> IncoherentUnitary {
        let d = self.dim();
        let mut perm = vec![0; d];
        let mut phases = vec![0.0; d];
        for j in 0..d {
            perm[self.perm[j]] = j;
            phases[self.perm[j]] = wrap_phase(-self.phases[j]);
        }
        IncoherentUnitary { perm, phases }
    }

    pub fn to_channel(&self) -> KrausChannel {
        KrausChannel {
            dim: self.dim(),
            kraus: vec![realize_unitary(self)],
        }
    }

    /// `U ρ U†`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply(&self.to_channel(), rho)
    }
}

pub fn realize_unitary(u: &IncoherentUnitary) -> ComplexMatrix {
    let d = u.dim();
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        m[(u.perm[j], j)] = Complex64::from_polar(1.0, u.phases[j]);
    }
    m
}

/// Random incoherent channel.
///
/// Each of the `n_kraus` draws picks a column map `λ_n` uniformly, and for
/// every column the squared moduli across draws are Dirichlet(1, …, 1).
/// When `λ_n` sends several columns to the same row the draw is split into
/// injective pieces (k-th column of each collision group goes to piece k),
/// which keeps `Σ K†K = I` exact. The result can therefore hold more than
/// `n_kraus` operators.
pub fn random_incoherent_channel_with<R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if n_kraus < 1 {
        return Err(CoherenceError::BadParams("n_kraus must be >= 1".into()));
    }
    if dim < 1 {
        return Err(CoherenceError::BadDim(dim));
    }
    let maps: Vec<Vec<usize>> = (0..n_kraus)
        .map(|_| (0..dim).map(|_| rng.random_range(0..dim)).collect())
        .collect();
    // moduli[n][j]
    let mut moduli = vec![vec![0.0; dim]; n_kraus];
    for j in 0..dim {
        let draws: Vec<f64> = (0..n_kraus).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        for (row, x) in moduli.iter_mut().zip(&draws) {
            row[j] = (x / total).sqrt();
        }
    }
    let phases: Vec<Vec<f64>> = (0..n_kraus)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..TAU)).collect())
        .collect();

    let mut kraus = Vec::new();
    for n in 0..n_kraus {
        let mut slot_of_column = vec![0usize; dim];
        let mut used_per_row = vec![0usize; dim];
        for j in 0..dim {
            let row = maps[n][j];
            slot_of_column[j] = used_per_row[row];
            used_per_row[row] += 1;
        }
        let pieces = used_per_row.iter().copied().max().unwrap_or(1);
        for piece in 0..pieces {
            let mut k = ComplexMatrix::zeros(dim, dim);
            for j in (0..dim).filter(|&j| slot_of_column[j] == piece) {
                k[(maps[n][j], j)] = Complex64::from_polar(moduli[n][j], phases[n][j]);
            }
            kraus.push(k);
        }
    }
    KrausChannel::new(kraus)
}

pub fn random_incoherent_channel(dim: usize, n_kraus: usize, seed: u64) -> Result<KrausChannel> {
    random_incoherent_channel_with(dim, n_kraus, &mut rng_from_seed(seed))
}

/// On-disk channel format; each Kraus operator is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<MatrixParts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            dim: ch.dim,
            kraus: ch
                .kraus
                .iter()
                .map(|k| MatrixParts {
                    re: k.as_slice().iter().map(|z| z.re).collect(),
                    im: k.as_slice().iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        let d = self.dim;
        let kraus = self
            .kraus
            .iter()
            .map(|parts| {
                let entries = join_parts(&parts.re, &parts.im, d * d)?;
                ComplexMatrix::from_row_major(d, d, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(kraus)
    }
}
