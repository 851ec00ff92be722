//! Coherence measures.
//!
//! Entropies are in bits. `int_rand` is a convex roof and is only estimated
//! from above by a local search over ensemble decompositions.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoherenceError, Result};
use crate::numerics::{psd_sqrt, ComplexMatrix};
use crate::states::{is_incoherent, rng_from_seed, DensityMatrix, PureState, INCOHERENCE_TOL};

/// Probabilities at or below this contribute nothing to an entropy.
const LOG_FLOOR: f64 = 1e-15;
/// Purity threshold for taking the pure-state branch of `int_rand`.
const PURE_THRESHOLD: f64 = 1.0 - 1e-10;
/// Required reconstruction accuracy of an optimized ensemble.
const ENSEMBLE_TOL: f64 = 1e-9;

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > LOG_FLOOR)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.spectrum())
}

/// `Σ_{i≠j} |ρ_ij|`.
pub fn c_l1(rho: &DensityMatrix) -> f64 {
    rho.off_diagonal_l1()
}

/// `S(Δρ) − S(ρ)`.
pub fn c_rel_ent(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.diagonal()) - von_neumann_entropy(rho)
}

/// 0 on incoherent states, 1 on everything else.
pub fn c_trivial(rho: &DensityMatrix) -> f64 {
    if is_incoherent(rho, INCOHERENCE_TOL) {
        0.0
    } else {
        1.0
    }
}

/// Nondegenerate observable `K = Σ_i k_i |i⟩⟨i|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalObservable {
    values: Vec<f64>,
}

impl DiagonalObservable {
    pub const MIN_GAP: f64 = 1e-6;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, a) in values.iter().enumerate() {
            if !a.is_finite() {
                return Err(CoherenceError::BadParams(
                    "non-finite observable value".into(),
                ));
            }
            for b in &values[i + 1..] {
                if (a - b).abs() < Self::MIN_GAP {
                    return Err(CoherenceError::BadParams(format!(
                        "observable values {a} and {b} are not distinct"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    /// `k_i = i`.
    pub fn ladder(dim: usize) -> Self {
        Self {
            values: (0..dim).map(|i| i as f64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Wigner–Yanase skew information `−½ tr([√ρ, K]²)`.
pub fn c_skew(rho: &DensityMatrix, k: &DiagonalObservable) -> Result<f64> {
    let d = rho.dim();
    if k.dim() != d {
        return Err(CoherenceError::DimMismatch {
            expected: d,
            got: k.dim(),
        });
    }
    let s = psd_sqrt(rho.matrix())?;
    let kmat = ComplexMatrix::from_real_diag(k.values());
    let comm = &s.matmul(&kmat) - &kmat.matmul(&s);
    Ok(-0.5 * comm.matmul(&comm).trace().re)
}

/// Closed form for pure states: `½ Σ_{i≠j} |ψ_i|² (k_i − k_j)² |ψ_j|²`.
pub fn c_skew_pure(psi: &PureState, k: &DiagonalObservable) -> Result<f64> {
    if k.dim() != psi.dim() {
        return Err(CoherenceError::DimMismatch {
            expected: psi.dim(),
            got: k.dim(),
        });
    }
    let w = psi.populations();
    let kv = k.values();
    let mut total = 0.0;
    for i in 0..w.len() {
        for j in 0..w.len() {
            if i != j {
                total += w[i] * (kv[i] - kv[j]).powi(2) * w[j];
            }
        }
    }
    Ok(0.5 * total)
}

/// Settings for the convex-roof search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub step_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 500,
            step_tol: 1e-8,
            seed: 0,
        }
    }
}

/// Pure-state decomposition `ρ = Σ_k q_k |φ_k⟩⟨φ_k|`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub states: Vec<PureState>,
}

impl Ensemble {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.states.first().map_or(0, PureState::dim);
        let mut m = ComplexMatrix::zeros(d, d);
        for (q, s) in self.weights.iter().zip(&self.states) {
            m = &m + &ComplexMatrix::outer(s.amplitudes(), s.amplitudes()).scale_real(*q);
        }
        m
    }

    /// `Σ_k q_k C_rel.ent(φ_k)`.
    pub fn average_rel_ent(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.states)
            .map(|(q, s)| q * shannon_entropy(&s.populations()))
            .sum()
    }
}

/// Best ensemble found by the convex-roof search.
#[derive(Debug, Clone)]
pub struct ConvexRoofEstimate {
    pub value: f64,
    pub ensemble: Ensemble,
}

/// `q · H(|ψ̃|²/q)` for an unnormalized ensemble member `ψ̃`, `q = ‖ψ̃‖²`.
fn member_cost(v: &[Complex64]) -> f64 {
    let mut q = 0.0;
    let mut sum_xlogx = 0.0;
    for z in v {
        let x = z.norm_sqr();
        q += x;
        if x > 0.0 {
            sum_xlogx += x * x.log2();
        }
    }
    if q <= 0.0 {
        0.0
    } else {
        q * q.log2() - sum_xlogx
    }
}

/// Mixes members `a` and `b` with a 2×2 unitary `[[c, s e^{iφ}], [−s e^{−iφ}, c]]`.
fn givens_pair(
    a: &[Complex64],
    b: &[Complex64],
    theta: f64,
    phi: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(s, phi);
    let na = a.iter().zip(b).map(|(x, y)| x * c + y * e).collect();
    let nb = a
        .iter()
        .zip(b)
        .map(|(x, y)| -x * e.conj() + y * c)
        .collect();
    (na, nb)
}

/// Coordinate descent over pairwise rotations of the ensemble members.
/// The span `Σ ψ̃ψ̃†` is invariant under every step.
fn refine(members: &mut [Vec<Complex64>], opt: &OptimizerConfig) -> f64 {
    let m = members.len();
    let mut costs: Vec<f64> = members.iter().map(|v| member_cost(v)).collect();
    let mut step = 0.5;
    let directions = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (1.0, std::f64::consts::FRAC_PI_2),
        (-1.0, std::f64::consts::FRAC_PI_2),
    ];
    for _ in 0..opt.max_iterations {
        let mut improved = false;
        for a in 0..m {
            for b in (a + 1)..m {
                if member_norm(&members[a]) == 0.0 && member_norm(&members[b]) == 0.0 {
                    continue;
                }
                for &(sign, phi) in &directions {
                    let (na, nb) = givens_pair(&members[a], &members[b], sign * step, phi);
                    let (ca, cb) = (member_cost(&na), member_cost(&nb));
                    if ca + cb < costs[a] + costs[b] - 1e-15 {
                        members[a] = na;
                        members[b] = nb;
                        costs[a] = ca;
                        costs[b] = cb;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < opt.step_tol {
                break;
            }
        }
    }
    costs.iter().sum()
}

fn member_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Random `m × r` isometry by Gram–Schmidt on a complex Gaussian matrix.
fn random_isometry<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    while cols.len() < r {
        let mut v: Vec<Complex64> = (0..m)
            .map(|_| {
                Complex64::new(
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                )
            })
            .collect();
        for c in &cols {
            let proj: Complex64 = c.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= proj * ci;
            }
        }
        let norm = member_norm(&v).sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    cols
}

/// Upper estimate of the convex roof of `C_rel.ent` over pure ensembles.
///
/// Ensembles are `ψ̃_k = Σ_i U_ki √λ_i |e_i⟩` for an `m × r` isometry `U`
/// with `m = d²`. Restart 0 is the eigendecomposition itself, so the estimate
/// never exceeds the eigen-ensemble average.
pub fn convex_roof_rel_ent(
    rho: &DensityMatrix,
    opt: &OptimizerConfig,
) -> Result<ConvexRoofEstimate> {
    let d = rho.dim();
    let eig = rho.eigen();
    let weighted: Vec<Vec<Complex64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > LOG_FLOOR)
        .map(|(k, &l)| {
            eig.eigenvector(k)
                .into_iter()
                .map(|z| z * l.sqrt())
                .collect()
        })
        .collect();
    let r = weighted.len();
    if r == 0 {
        return Err(CoherenceError::OptimizerFailed(
            "state has no positive eigenvalue".into(),
        ));
    }
    let m = (d * d).max(r);
    let mut rng = rng_from_seed(opt.seed);

    let mut best: Option<(f64, Vec<Vec<Complex64>>)> = None;
    for restart in 0..opt.restarts.max(1) {
        let mut members: Vec<Vec<Complex64>> = if restart == 0 {
            (0..m)
                .map(|k| {
                    weighted
                        .get(k)
                        .cloned()
                        .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); d])
                })
                .collect()
        } else {
            let iso = random_isometry(m, r, &mut rng);
            (0..m)
                .map(|k| {
                    (0..d)
                        .map(|i| (0..r).map(|c| iso[c][k] * weighted[c][i]).sum())
                        .collect()
                })
                .collect()
        };
        let value = refine(&mut members, opt);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, members));
        }
    }
    let (value, members) = best.expect("at least one restart");

    let mut weights = Vec::new();
    let mut states = Vec::new();
    for v in members {
        let q = member_norm(&v);
        if q > 0.0 {
            weights.push(q);
            states.push(PureState::normalized(v)?);
        }
    }
    let ensemble = Ensemble { weights, states };
    let err = (&ensemble.reconstruct() - rho.matrix()).frobenius_norm();
    if err > ENSEMBLE_TOL {
        return Err(CoherenceError::OptimizerFailed(format!(
            "ensemble reproduces the state only to {err:.3e}"
        )));
    }
    Ok(ConvexRoofEstimate { value, ensemble })
}

/// Intrinsic randomness: `C_rel.ent` on pure states, its convex roof otherwise.
pub fn c_int_rand(rho: &DensityMatrix, opt: &OptimizerConfig) -> Result<f64> {
    if rho.purity() >= PURE_THRESHOLD {
        return Ok(c_rel_ent(rho));
    }
    Ok(convex_roof_rel_ent(rho, opt)?.value)
}

/// `Σ_k λ_k C_rel.ent(e_k)` over the eigendecomposition.
pub fn eigen_ensemble_rel_ent(rho: &DensityMatrix) -> f64 {
    let eig = rho.eigen();
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > LOG_FLOOR)
        .map(|(k, &l)| {
            let pops: Vec<f64> = eig.eigenvector(k).iter().map(|z| z.norm_sqr()).collect();
            l * shannon_entropy(&pops)
        })
        .sum()
}

/// A coherence measure selected by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    L1,
    RelEnt,
    IntRand(OptimizerConfig),
    /// `None` uses `K = diag(0, 1, …, d−1)`.
    Skew(Option<DiagonalObservable>),
    Trivial,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::L1 => "l1",
            Measure::RelEnt => "rel_ent",
            Measure::IntRand(_) => "int_rand",
            Measure::Skew(_) => "skew",
            Measure::Trivial => "trivial",
        }
    }

    /// Measures that satisfy the four standard criteria.
    pub fn is_valid(&self) -> bool {
        !matches!(self, Measure::Skew(_))
    }

    /// Whether values come from a heuristic optimizer.
    pub fn is_optimizer_mediated(&self) -> bool {
        matches!(self, Measure::IntRand(_))
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Measure::L1 => Ok(c_l1(rho)),
            Measure::RelEnt => Ok(c_rel_ent(rho)),
            Measure::IntRand(opt) => c_int_rand(rho, opt),
            Measure::Skew(k) => match k {
                Some(k) => c_skew(rho, k),
                None => c_skew(rho, &DiagonalObservable::ladder(rho.dim())),
            },
            Measure::Trivial => Ok(c_trivial(rho)),
        }
    }

    pub fn evaluate_pure(&self, psi: &PureState) -> Result<f64> {
        match self {
            Measure::Skew(k) => match k {
                Some(k) => c_skew_pure(psi, k),
                None => c_skew_pure(psi, &DiagonalObservable::ladder(psi.dim())),
            },
            // Pure-state rel. entropy is the population entropy.
            Measure::RelEnt | Measure::IntRand(_) => Ok(shannon_entropy(&psi.populations())),
            _ => self.evaluate(&crate::states::from_pure(psi)),
        }
    }
}

impl FromStr for Measure {
    type Err = CoherenceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Measure::L1),
            "rel_ent" => Ok(Measure::RelEnt),
            "int_rand" => Ok(Measure::IntRand(OptimizerConfig::default())),
            "skew" => Ok(Measure::Skew(None)),
            "trivial" => Ok(Measure::Trivial),
            other => Err(CoherenceError::UnknownMeasure(other.to_string())),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
