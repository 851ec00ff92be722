//! Randomized checks of the coherence-measure criteria.
//!
//! Every check draws independent trials, each from its own ChaCha stream
//! `(seed, trial index)`, so a report depends only on its configuration and
//! not on how many threads ran it. Slack is signed: negative means the
//! inequality under test was broken.
//!
//! | criterion  | per-trial slack                                   |
//! |------------|---------------------------------------------------|
//! | `C1`       | `min(−C(Δρ), C(ρ) − 1e-6)` (second term only for visibly coherent ρ) |
//! | `C2`       | `C(ρ) − C(Φ(ρ))`                                  |
//! | `C3`       | `C(ρ) − Σ p_n C(ρ_n)`                             |
//! | `C4`       | `λC(ρ_a) + (1−λ)C(ρ_b) − C(λρ_a + (1−λ)ρ_b)`      |
//! | `C5`       | `1e-3 − d_MCS(ψ)` over near-maximizers            |
//! | `LEMMA1`   | `−|C(UρU†) − C(ρ)|`                               |
//! | `LEMMA2`   | `d_MCS(Φ(ρ)) − tol` when Φ(ρ) should not be an MCS |
//! | `THEOREM3` | largest probe deviation minus `tol`               |

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    apply, apply_selective, is_cpo, random_incoherent_channel_with, ChannelFile, IncoherentUnitary,
    KrausChannel,
};
use crate::error::{CoherenceError, Result};
use crate::mcs::{is_mcs, mcs_sample_with};
use crate::measures::{c_l1, c_rel_ent, c_skew_pure, DiagonalObservable, Measure, OptimizerConfig};
use crate::states::{
    dephase, from_pure, random_density_with, random_pure_with, rng_from_seed, DensityMatrix,
    PureState, StateFile,
};

/// Default violation threshold for closed-form measures.
pub const EXACT_TOL: f64 = 1e-8;
/// Default violation threshold for optimizer-mediated measures.
pub const OPTIMIZER_TOL: f64 = 1e-6;
/// MCS tolerance applied to near-maximizers in the C5 check.
pub const C5_MCS_TOL: f64 = 1e-3;
/// Values within this of the best maximum count as maximizers.
pub const C5_NEAR_MAX: f64 = 1e-6;
/// CPOs must preserve probe values to this accuracy.
pub const CPO_PRESERVATION_TOL: f64 = 1e-9;
/// Size of the probe panel used by the `THEOREM3` check.
pub const PROBE_PANEL_SIZE: usize = 20;
/// Smallest C(ρ) accepted as "nonzero" for visibly coherent states in C1.
const FAITHFUL_FLOOR: f64 = 1e-6;
const FAITHFUL_MASS: f64 = 1e-3;
const CPO_CHOI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    C1,
    C2,
    C3,
    C4,
    C5,
    #[serde(rename = "LEMMA1")]
    Lemma1,
    #[serde(rename = "LEMMA2")]
    Lemma2,
    #[serde(rename = "THEOREM3")]
    Theorem3,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::C1,
        Criterion::C2,
        Criterion::C3,
        Criterion::C4,
        Criterion::C5,
        Criterion::Lemma1,
        Criterion::Lemma2,
        Criterion::Theorem3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::C1 => "C1",
            Criterion::C2 => "C2",
            Criterion::C3 => "C3",
            Criterion::C4 => "C4",
            Criterion::C5 => "C5",
            Criterion::Lemma1 => "LEMMA1",
            Criterion::Lemma2 => "LEMMA2",
            Criterion::Theorem3 => "THEOREM3",
        }
    }

    /// Criteria that are properties of a measure (the rest are measure-free).
    pub fn takes_measure(&self) -> bool {
        !matches!(self, Criterion::Lemma2 | Criterion::Theorem3)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = CoherenceError;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CoherenceError::BadParams(format!("unknown criterion `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dim: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub tol: f64,
    /// Inclusive range for the number of column maps drawn per random channel.
    pub n_kraus_range: (usize, usize),
}

impl TrialConfig {
    pub fn new(dim: usize, n_trials: usize, seed: u64) -> Self {
        Self {
            dim,
            n_trials,
            seed,
            tol: EXACT_TOL,
            n_kraus_range: (1, 4),
        }
    }

    /// Picks the violation threshold appropriate for `measure`.
    pub fn for_measure(measure: &Measure, dim: usize, n_trials: usize, seed: u64) -> Self {
        let mut cfg = Self::new(dim, n_trials, seed);
        if measure.is_optimizer_mediated() {
            cfg.tol = OPTIMIZER_TOL;
        }
        cfg
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(CoherenceError::BadDim(self.dim));
        }
        if self.n_trials < 1 {
            return Err(CoherenceError::BadParams("n_trials must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CoherenceError::BadParams("tol must be positive".into()));
        }
        let (lo, hi) = self.n_kraus_range;
        if lo < 1 || lo > hi {
            return Err(CoherenceError::BadParams(format!(
                "bad Kraus range ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = rng_from_seed(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

/// The operation a witness applies to its state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessOperation {
    /// C1: before = `C(ρ)`, after = `C(Δρ)`.
    Dephasing,
    /// C2: before = `C(ρ)`, after = `C(Φ(ρ))`.
    Channel { channel: ChannelFile },
    /// C3: before = `C(ρ)`, after = `Σ p_n C(ρ_n)`.
    Selective { channel: ChannelFile },
    /// C4: before = `λC(ρ) + (1−λ)C(partner)`, after = `C(λρ + (1−λ)partner)`.
    Mixture { partner: StateFile, weight: f64 },
    /// LEMMA1: before = `C(ρ)`, after = `C(UρU†)`.
    Unitary { unitary: IncoherentUnitary },
    /// LEMMA2 / THEOREM3: before/after are MCS distances (LEMMA2) or ℓ1 values (THEOREM3).
    McsChannel { channel: ChannelFile },
    /// C5: before = `C(ψ)`, after = MCS distance of ψ.
    Maximizer,
}

/// Reproducible counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub state: StateFile,
    pub operation: WitnessOperation,
    pub value_before: f64,
    pub value_after: f64,
}

impl ViolationWitness {
    pub fn density(&self) -> Result<DensityMatrix> {
        Ok(self.state.to_state()?.to_density())
    }

    /// Recomputes `(value_before, value_after)` from the stored data.
    pub fn reevaluate(
        &self,
        criterion: Criterion,
        measure: Option<&Measure>,
    ) -> Result<(f64, f64)> {
        let rho = self.density()?;
        let need =
            || measure.ok_or_else(|| CoherenceError::BadParams("witness needs a measure".into()));
        match &self.operation {
            WitnessOperation::Dephasing => {
                let m = need()?;
                Ok((m.evaluate(&rho)?, m.evaluate(&dephase(&rho))?))
            }
            WitnessOperation::Channel { channel } => {
                let m = need()?;
                let ch = channel.to_channel()?;
                Ok((m.evaluate(&rho)?, m.evaluate(&apply(&ch, &rho)?)?))
            }
            WitnessOperation::Selective { channel } => {
                let m = need()?;
                let ch = channel.to_channel()?;
                Ok((m.evaluate(&rho)?, selective_average(m, &ch, &rho)?))
            }
            WitnessOperation::Mixture { partner, weight } => {
                let m = need()?;
                let other = partner.to_state()?.to_density();
                let before = weight * m.evaluate(&rho)? + (1.0 - weight) * m.evaluate(&other)?;
                Ok((before, m.evaluate(&rho.mix(&other, *weight)?)?))
            }
            WitnessOperation::Unitary { unitary } => {
                let m = need()?;
                Ok((m.evaluate(&rho)?, m.evaluate(&unitary.apply(&rho)?)?))
            }
            WitnessOperation::McsChannel { channel } => {
                let ch = channel.to_channel()?;
                let out = apply(&ch, &rho)?;
                if criterion == Criterion::Theorem3 {
                    Ok((c_l1(&rho), c_l1(&out)))
                } else {
                    Ok((mcs_distance(&rho), mcs_distance(&out)))
                }
            }
            WitnessOperation::Maximizer => {
                let m = need()?;
                Ok((m.evaluate(&rho)?, mcs_distance(&rho)))
            }
        }
    }
}

/// Aggregated result of one criterion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub measure: String,
    pub dim: usize,
    pub trials: usize,
    pub violations: usize,
    pub worst_violation: f64,
    pub witness: Option<ViolationWitness>,
    pub seed: u64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub const CSV_HEADER: &'static str =
        "criterion,measure,dim,trials,violations,worst_violation,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{}",
            self.criterion,
            self.measure,
            self.dim,
            self.trials,
            self.violations,
            self.worst_violation,
            self.seed
        )
    }
}

struct TrialOutcome {
    slack: f64,
    violated: bool,
    witness: Option<ViolationWitness>,
}

/// Runs trials in parallel and merges them in index order.
fn run_trials<F>(
    criterion: Criterion,
    measure_name: &str,
    cfg: &TrialConfig,
    trial: F,
) -> Result<CriterionReport>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<TrialOutcome> + Sync,
{
    cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| trial(t, &mut cfg.trial_rng(t)))
        .collect::<Result<_>>()?;

    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut witness: Option<(f64, ViolationWitness)> = None;
    for o in outcomes {
        worst = worst.min(o.slack);
        if o.violated {
            violations += 1;
            if let Some(w) = o.witness {
                if witness.as_ref().is_none_or(|(s, _)| o.slack < *s) {
                    witness = Some((o.slack, w));
                }
            }
        }
    }
    Ok(CriterionReport {
        criterion: criterion.to_string(),
        measure: measure_name.to_string(),
        dim: cfg.dim,
        trials: cfg.n_trials,
        violations,
        worst_violation: worst,
        witness: witness.map(|(_, w)| w),
        seed: cfg.seed,
    })
}

fn sample_state(cfg: &TrialConfig, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let rank = rng.random_range(1..=cfg.dim);
    random_density_with(cfg.dim, rank, rng)
}

fn sample_channel(cfg: &TrialConfig, rng: &mut ChaCha8Rng) -> Result<KrausChannel> {
    let (lo, hi) = cfg.n_kraus_range;
    let n = rng.random_range(lo..=hi);
    random_incoherent_channel_with(cfg.dim, n, rng)
}

fn selective_average(m: &Measure, ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    apply_selective(ch, rho)?
        .iter()
        .map(|o| Ok(o.probability * m.evaluate(&o.state)?))
        .sum()
}

/// `max(1 − tr ρ², max_i |ρ_ii − 1/d|)`; `is_mcs(ρ, tol)` iff this is `≤ tol`.
pub fn mcs_distance(rho: &DensityMatrix) -> f64 {
    let target = 1.0 / rho.dim() as f64;
    rho.diagonal()
        .iter()
        .map(|p| (p - target).abs())
        .fold(1.0 - rho.purity(), f64::max)
}

/// C1: valid measures vanish on dephased states and not on visibly coherent ones.
pub fn check_c1(measure: &Measure, cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::C1, measure.name(), cfg, |_, rng| {
        let rho = sample_state(cfg, rng)?;
        let on_dephased = measure.evaluate(&dephase(&rho))?;
        let value = measure.evaluate(&rho)?;
        let mut slack = 0.0 - on_dephased;
        let mut violated = on_dephased > cfg.tol;
        if rho.off_diagonal_l1() > FAITHFUL_MASS {
            slack = slack.min(value - FAITHFUL_FLOOR);
            violated |= value <= FAITHFUL_FLOOR;
        }
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&rho),
                operation: WitnessOperation::Dephasing,
                value_before: value,
                value_after: on_dephased,
            }),
        })
    })
}

/// C2: monotonicity under non-selective incoherent channels.
pub fn check_c2(measure: &Measure, cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::C2, measure.name(), cfg, |_, rng| {
        let rho = sample_state(cfg, rng)?;
        let ch = sample_channel(cfg, rng)?;
        let before = measure.evaluate(&rho)?;
        let after = measure.evaluate(&apply(&ch, &rho)?)?;
        let slack = before - after;
        let violated = slack < -cfg.tol;
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&rho),
                operation: WitnessOperation::Channel {
                    channel: ChannelFile::from_channel(&ch),
                },
                value_before: before,
                value_after: after,
            }),
        })
    })
}

/// C3: monotonicity on average under selective incoherent measurements.
pub fn check_c3(measure: &Measure, cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::C3, measure.name(), cfg, |_, rng| {
        let rho = sample_state(cfg, rng)?;
        let ch = sample_channel(cfg, rng)?;
        let before = measure.evaluate(&rho)?;
        let after = selective_average(measure, &ch, &rho)?;
        let slack = before - after;
        let violated = slack < -cfg.tol;
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&rho),
                operation: WitnessOperation::Selective {
                    channel: ChannelFile::from_channel(&ch),
                },
                value_before: before,
                value_after: after,
            }),
        })
    })
}

/// C4 slack for a fixed pair and weight.
pub fn convexity_slack(
    measure: &Measure,
    a: &DensityMatrix,
    b: &DensityMatrix,
    lambda: f64,
) -> Result<(f64, f64)> {
    let before = lambda * measure.evaluate(a)? + (1.0 - lambda) * measure.evaluate(b)?;
    let after = measure.evaluate(&a.mix(b, lambda)?)?;
    Ok((before, after))
}

/// C4: convexity under mixing.
pub fn check_c4(measure: &Measure, cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::C4, measure.name(), cfg, |_, rng| {
        let a = sample_state(cfg, rng)?;
        let b = sample_state(cfg, rng)?;
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let (before, after) = convexity_slack(measure, &a, &b, lambda)?;
        let slack = before - after;
        let violated = slack < -cfg.tol;
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&a),
                operation: WitnessOperation::Mixture {
                    partner: StateFile::from_density(&b),
                    weight: lambda,
                },
                value_before: before,
                value_after: after,
            }),
        })
    })
}

/// `LEMMA1`: incoherent unitaries leave the measure unchanged.
///
/// `int_rand` is probed on pure states only, where it has a closed form.
pub fn check_lemma1(measure: &Measure, cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::Lemma1, measure.name(), cfg, |_, rng| {
        let rho = if measure.is_optimizer_mediated() {
            from_pure(&random_pure_with(cfg.dim, rng)?)
        } else {
            sample_state(cfg, rng)?
        };
        let u = IncoherentUnitary::random_with(cfg.dim, rng);
        let before = measure.evaluate(&rho)?;
        let after = measure.evaluate(&u.apply(&rho)?)?;
        let slack = -(after - before).abs();
        let violated = slack < -cfg.tol;
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&rho),
                operation: WitnessOperation::Unitary { unitary: u },
                value_before: before,
                value_after: after,
            }),
        })
    })
}

/// `LEMMA2`: `Φ(ρ)` is an MCS iff `Φ` is a CPO and `ρ` is an MCS.
///
/// Even trials feed MCS samples, odd trials generic states; every fourth
/// trial uses a random CPO so the forward direction is always exercised.
/// `cfg.tol` is the MCS membership tolerance.
pub fn check_lemma2(cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::Lemma2, "none", cfg, |t, rng| {
        let rho = if t % 2 == 0 {
            from_pure(&mcs_sample_with(cfg.dim, rng)?)
        } else {
            sample_state(cfg, rng)?
        };
        let ch = if t % 4 == 0 {
            IncoherentUnitary::random_with(cfg.dim, rng).to_channel()
        } else {
            sample_channel(cfg, rng)?
        };
        let out = apply(&ch, &rho)?;
        let expected = is_cpo(&ch, CPO_CHOI_TOL) && is_mcs(&rho, cfg.tol);
        let got = is_mcs(&out, cfg.tol);
        let dist = mcs_distance(&out);
        let slack = if expected {
            cfg.tol - dist
        } else {
            dist - cfg.tol
        };
        let violated = expected != got;
        Ok(TrialOutcome {
            slack,
            violated,
            witness: violated.then(|| ViolationWitness {
                state: StateFile::from_density(&rho),
                operation: WitnessOperation::McsChannel {
                    channel: ChannelFile::from_channel(&ch),
                },
                value_before: mcs_distance(&rho),
                value_after: dist,
            }),
        })
    })
}

/// Probe panel: `(|i⟩+|j⟩)/√2` for all pairs, topped up with Haar states.
pub fn probe_panel(dim: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<DensityMatrix>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut probes = Vec::with_capacity(size);
    'pairs: for i in 0..dim {
        for j in (i + 1)..dim {
            if probes.len() == size {
                break 'pairs;
            }
            let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); dim];
            amps[i] = num_complex::Complex64::new(h, 0.0);
            amps[j] = num_complex::Complex64::new(h, 0.0);
            probes.push(from_pure(&PureState::normalized(amps)?));
        }
    }
    while probes.len() < size {
        probes.push(from_pure(&random_pure_with(dim, rng)?));
    }
    Ok(probes)
}

/// Largest `|C(Φ(ρ)) − C(ρ)|` over probes and over {ℓ1, rel. entropy}, with the probe index.
fn max_probe_deviation(ch: &KrausChannel, probes: &[DensityMatrix]) -> Result<(f64, usize)> {
    let mut worst = (0.0, 0);
    for (idx, p) in probes.iter().enumerate() {
        let out = apply(ch, p)?;
        let dev = (c_l1(&out) - c_l1(p))
            .abs()
            .max((c_rel_ent(&out) - c_rel_ent(p)).abs());
        if dev > worst.0 {
            worst = (dev, idx);
        }
    }
    Ok(worst)
}

/// `THEOREM3`: no non-unitary incoherent channel preserves both ℓ1 and
/// relative-entropy values on the probe panel, while every CPO does.
pub fn check_theorem3(cfg: &TrialConfig) -> Result<CriterionReport> {
    run_trials(Criterion::Theorem3, "l1+rel_ent", cfg, |_, rng| {
        let probes = probe_panel(cfg.dim, PROBE_PANEL_SIZE, rng)?;
        let mut ch = sample_channel(cfg, rng)?;
        while is_cpo(&ch, CPO_CHOI_TOL) {
            ch = sample_channel(cfg, rng)?;
        }
        let (dev, idx) = max_probe_deviation(&ch, &probes)?;
        let masquerades = dev <= cfg.tol;

        let cpo = IncoherentUnitary::random_with(cfg.dim, rng).to_channel();
        let (cpo_dev, cpo_idx) = max_probe_deviation(&cpo, &probes)?;
        let cpo_broken = cpo_dev > CPO_PRESERVATION_TOL;

        let slack = (dev - cfg.tol).min(CPO_PRESERVATION_TOL - cpo_dev);
        let violated = masquerades || cpo_broken;
        let witness = violated.then(|| {
            let (culprit, probe) = if masquerades {
                (&ch, idx)
            } else {
                (&cpo, cpo_idx)
            };
            let rho = &probes[probe];
            ViolationWitness {
                state: StateFile::from_density(rho),
                operation: WitnessOperation::McsChannel {
                    channel: ChannelFile::from_channel(culprit),
                },
                value_before: c_l1(rho),
                value_after: apply(culprit, rho).map(|o| c_l1(&o)).unwrap_or(f64::NAN),
            }
        });
        Ok(TrialOutcome {
            slack,
            violated,
            witness,
        })
    })
}

/// Result of the maximality (C5) search.
#[derive(Debug, Clone)]
pub struct C5Outcome {
    pub report: CriterionReport,
    pub max_value: f64,
    pub best_state: PureState,
    /// The verdict rests on a heuristic upper bound (`int_rand`).
    pub advisory: bool,
}

impl C5Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Settings for the C5 maximizer: 64 restarts, step halving down to 1e-9.
pub fn maximizer_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        restarts: 64,
        max_iterations: 2000,
        step_tol: 1e-9,
        seed,
    }
}

fn state_from(weights: &[f64], phases: &[f64]) -> PureState {
    let total: f64 = weights.iter().sum();
    let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
    PureState::from_weights_phases(&w, phases).expect("weights renormalized")
}

/// Gradient-free ascent over populations (pairwise transfers on the simplex)
/// and phases (single-coordinate shifts) with step halving.
fn maximize_from(
    measure: &Measure,
    mut weights: Vec<f64>,
    mut phases: Vec<f64>,
    opt: &OptimizerConfig,
) -> Result<(f64, PureState)> {
    let d = weights.len();
    let mut best = measure.evaluate_pure(&state_from(&weights, &phases))?;
    let mut step: f64 = 0.25;
    for _ in 0..opt.max_iterations {
        let mut improved = false;
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let delta = step.min(weights[i]);
                if delta <= 0.0 {
                    continue;
                }
                let mut trial = weights.clone();
                trial[i] -= delta;
                trial[j] += delta;
                let v = measure.evaluate_pure(&state_from(&trial, &phases))?;
                if v > best {
                    best = v;
                    weights = trial;
                    improved = true;
                }
            }
        }
        for j in 1..d {
            for sign in [1.0, -1.0] {
                let mut trial = phases.clone();
                trial[j] = (trial[j] + sign * step * std::f64::consts::PI).rem_euclid(TAU);
                let v = measure.evaluate_pure(&state_from(&weights, &trial))?;
                if v > best {
                    best = v;
                    phases = trial;
                    improved = true;
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
    Ok((best, state_from(&weights, &phases)))
}

/// C5: every (near-)maximizer of the measure over pure states must be an MCS.
pub fn check_c5(measure: &Measure, dim: usize, opt: &OptimizerConfig) -> Result<C5Outcome> {
    if dim < 2 {
        return Err(CoherenceError::BadDim(dim));
    }
    let restarts = opt.restarts.max(1);
    let runs: Vec<(f64, PureState)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(opt.seed);
            rng.set_stream(r as u64);
            let start = random_pure_with(dim, &mut rng)?;
            let phases: Vec<f64> = start
                .amplitudes()
                .iter()
                .map(|z| z.arg().rem_euclid(TAU))
                .collect();
            maximize_from(measure, start.populations(), phases, opt)
        })
        .collect::<Result<_>>()?;

    let (max_value, best_state) = runs
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .cloned()
        .ok_or_else(|| CoherenceError::OptimizerFailed("no restart finished".into()))?;
    if !max_value.is_finite() {
        return Err(CoherenceError::OptimizerFailed("non-finite maximum".into()));
    }

    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut witness: Option<(f64, ViolationWitness)> = None;
    for (_, psi) in runs.iter().filter(|(v, _)| *v >= max_value - C5_NEAR_MAX) {
        let rho = from_pure(psi);
        let dist = mcs_distance(&rho);
        let slack = C5_MCS_TOL - dist;
        worst = worst.min(slack);
        if !is_mcs(&rho, C5_MCS_TOL) {
            violations += 1;
            if witness.as_ref().is_none_or(|(s, _)| slack < *s) {
                witness = Some((
                    slack,
                    ViolationWitness {
                        state: StateFile::from_density(&rho),
                        operation: WitnessOperation::Maximizer,
                        value_before: measure.evaluate(&rho)?,
                        value_after: dist,
                    },
                ));
            }
        }
    }
    Ok(C5Outcome {
        report: CriterionReport {
            criterion: Criterion::C5.to_string(),
            measure: measure.name().to_string(),
            dim,
            trials: restarts,
            violations,
            worst_violation: worst,
            witness: witness.map(|(_, w)| w),
            seed: opt.seed,
        },
        max_value,
        best_state,
        advisory: measure.is_optimizer_mediated(),
    })
}

/// Populations `(1/2, 1/3, 1/6)` scaled by `3/d`, then `1/d` on the remaining levels.
fn skew_witness_weights(dim: usize) -> Vec<f64> {
    let head = 3.0 / dim as f64;
    let mut w = vec![head / 2.0, head / 3.0, head / 6.0];
    w.extend(std::iter::repeat_n(1.0 / dim as f64, dim - 3));
    if dim == 3 {
        // exact rationals for the reference case
        w = vec![0.5, 1.0 / 3.0, 1.0 / 6.0];
    }
    w
}

/// Deterministic skew-information counterexample to `LEMMA1` / `C2`.
///
/// With `K = diag(0, …, d−1)` and the cyclic relabeling `j → j+1`, the
/// skew information of the witness state strictly increases under an
/// incoherent unitary. Only defined for `d ≥ 3`; for `d = 2` the pure-state
/// value is symmetric under every relabeling.
pub fn skew_violation_witness(dim: usize) -> Result<ViolationWitness> {
    if dim < 3 {
        return Err(CoherenceError::BadDim(dim));
    }
    let k = DiagonalObservable::ladder(dim);
    let weights = skew_witness_weights(dim);
    let zero_phases = vec![0.0; dim];
    let base = PureState::from_weights_phases(&weights, &zero_phases)?;
    let forward = IncoherentUnitary::cyclic(dim, 1);
    let backward = IncoherentUnitary::cyclic(dim, dim - 1);

    // shifted[j + 1] = weights[j]
    let mut shifted_w = vec![0.0; dim];
    for (j, &w) in weights.iter().enumerate() {
        shifted_w[(j + 1) % dim] = w;
    }
    let shifted = PureState::from_weights_phases(&shifted_w, &zero_phases)?;

    let v_base = c_skew_pure(&base, &k)?;
    let v_shifted = c_skew_pure(&shifted, &k)?;
    let (state, unitary, before, after) = if v_base > v_shifted {
        (shifted, backward, v_shifted, v_base)
    } else {
        (base, forward, v_base, v_shifted)
    };
    if after - before <= 0.05 {
        return Err(CoherenceError::BadParams(format!(
            "skew gap {} too small in dimension {dim}",
            after - before
        )));
    }
    Ok(ViolationWitness {
        state: StateFile::from_density(&from_pure(&state)),
        operation: WitnessOperation::Unitary { unitary },
        value_before: before,
        value_after: after,
    })
}

/// Runs one criterion; C5 uses `cfg.seed` with the default maximizer settings.
pub fn run_criterion(
    criterion: Criterion,
    measure: &Measure,
    cfg: &TrialConfig,
) -> Result<CriterionReport> {
    match criterion {
        Criterion::C1 => check_c1(measure, cfg),
        Criterion::C2 => check_c2(measure, cfg),
        Criterion::C3 => check_c3(measure, cfg),
        Criterion::C4 => check_c4(measure, cfg),
        Criterion::C5 => Ok(check_c5(measure, cfg.dim, &maximizer_config(cfg.seed))?.report),
        Criterion::Lemma1 => check_lemma1(measure, cfg),
        Criterion::Lemma2 => check_lemma2(cfg),
        Criterion::Theorem3 => check_theorem3(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_names_parse() {
        for c in Criterion::ALL {
            assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
        }
        assert!("C9".parse::<Criterion>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrialConfig::new(3, 0, 1).validate().is_err());
        assert!(TrialConfig::new(1, 10, 1).validate().is_err());
        assert!(TrialConfig::new(3, 10, 1).with_tol(0.0).validate().is_err());
        let mut cfg = TrialConfig::new(3, 10, 1);
        cfg.n_kraus_range = (3, 2);
        assert!(cfg.validate().is_err());
        assert_eq!(
            TrialConfig::for_measure(&"int_rand".parse().unwrap(), 3, 5, 0).tol,
            OPTIMIZER_TOL
        );
    }

    #[test]
    fn c4_degenerate_mixing_has_zero_slack() {
        let a = crate::states::random_density(3, 2, 1).unwrap();
        let b = crate::states::random_density(3, 3, 2).unwrap();
        for m in [Measure::L1, Measure::RelEnt, Measure::Trivial] {
            let (before, after) = convexity_slack(&m, &a, &b, 0.0).unwrap();
            assert_eq!(before - after, 0.0, "{m}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = TrialConfig::new(3, 50, 99);
        let a = check_c2(&Measure::Skew(None), &cfg).unwrap();
        let b = check_c2(&Measure::Skew(None), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.worst_violation.to_bits(), b.worst_violation.to_bits());
    }

    #[test]
    fn projective_measurement_fails_preservation() {
        let mut rng = rng_from_seed(0);
        let probes = probe_panel(3, PROBE_PANEL_SIZE, &mut rng).unwrap();
        assert_eq!(probes.len(), PROBE_PANEL_SIZE);
        let (dev, _) =
            max_probe_deviation(&KrausChannel::projective_measurement(3), &probes).unwrap();
        // |+⟩-type probes lose their ℓ1 value 1 entirely.
        assert!((dev - 1.0).abs() < 1e-12 || dev > 1.0);
    }

    #[test]
    fn lemma2_reference_cases() {
        let psi = from_pure(&crate::mcs::mcs_sample(3, 4).unwrap());
        let perm = IncoherentUnitary::random(3, 5).to_channel();
        assert!(is_mcs(&apply(&perm, &psi).unwrap(), 1e-10));
        let out = apply(
            &KrausChannel::projective_measurement(3),
            &from_pure(&PureState::uniform(3)),
        )
        .unwrap();
        assert!(crate::states::is_incoherent(&out, 1e-12));
        assert!(!is_mcs(&out, 1e-8));
    }

    #[test]
    fn mcs_distance_agrees_with_membership() {
        for seed in 0..20 {
            let rho = crate::states::random_density(3, 1 + seed as usize % 3, seed).unwrap();
            let d = mcs_distance(&rho);
            assert!(is_mcs(&rho, d + 1e-12));
        }
        assert!(mcs_distance(&from_pure(&PureState::uniform(5))) < 1e-15);
    }
}
