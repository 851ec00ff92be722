use coherence_core::channels::{apply, compose, is_cpo, random_incoherent_channel};
use coherence_core::harness::{
    check_c1, check_c2, check_c3, check_c4, check_c5, check_lemma1, check_lemma2, maximizer_config,
    run_criterion, skew_violation_witness, Criterion, TrialConfig,
};
use coherence_core::measures::{c_l1, c_rel_ent, c_skew, c_skew_pure, DiagonalObservable, Measure};
use coherence_core::numerics::{hermitian_eigen, psd_sqrt};
use coherence_core::states::{dephase, from_pure, random_density, random_pure};
use coherence_core::IncoherentUnitary;
use proptest::prelude::*;

fn assert_witness_reproduces(
    criterion: Criterion,
    measure: Option<&Measure>,
    report: &coherence_core::harness::CriterionReport,
) {
    assert_eq!(report.witness.is_some(), report.violations > 0);
    assert!(report.violations <= report.trials);
    if let Some(w) = &report.witness {
        let (b, a) = w.reevaluate(criterion, measure).unwrap();
        assert!(
            (b - w.value_before).abs() <= 1e-12,
            "{criterion}: {b} vs {}",
            w.value_before
        );
        assert!(
            (a - w.value_after).abs() <= 1e-12,
            "{criterion}: {a} vs {}",
            w.value_after
        );
    }
}

#[test]
fn skew_witnesses_reproduce_for_every_criterion() {
    let skew = Measure::Skew(None);
    let cfg = TrialConfig::new(3, 200, 21);
    for (c, r) in [
        (Criterion::C2, check_c2(&skew, &cfg).unwrap()),
        (Criterion::C3, check_c3(&skew, &cfg).unwrap()),
        (Criterion::C4, check_c4(&skew, &cfg).unwrap()),
        (Criterion::Lemma1, check_lemma1(&skew, &cfg).unwrap()),
        (Criterion::C1, check_c1(&skew, &cfg).unwrap()),
    ] {
        assert_witness_reproduces(c, Some(&skew), &r);
    }
    let lemma1 = check_lemma1(&skew, &cfg).unwrap();
    assert!(
        lemma1.violations > 0,
        "skew is not relabeling invariant at d=3"
    );
}

#[test]
fn trivial_c5_witness_reproduces() {
    let out = check_c5(&Measure::Trivial, 4, &maximizer_config(1)).unwrap();
    assert_witness_reproduces(Criterion::C5, Some(&Measure::Trivial), &out.report);
}

#[test]
fn lemma2_reports_are_consistent() {
    let r = check_lemma2(&TrialConfig::new(3, 200, 2)).unwrap();
    assert_witness_reproduces(Criterion::Lemma2, None, &r);
    assert_eq!(r.violations, 0);
}

#[test]
fn skew_witness_dimensions() {
    for d in 3..=8 {
        let w = skew_violation_witness(d).unwrap();
        assert!(w.value_after - w.value_before > 0.05, "d={d}");
        let (b, a) = w
            .reevaluate(Criterion::Lemma1, Some(&Measure::Skew(None)))
            .unwrap();
        assert!((b - w.value_before).abs() <= 1e-12 && (a - w.value_after).abs() <= 1e-12);
    }
    assert!(skew_violation_witness(2).is_err());
}

#[test]
fn int_rand_c5_is_advisory() {
    let opt = maximizer_config(0);
    let out = check_c5(&"int_rand".parse().unwrap(), 2, &opt).unwrap();
    assert!(out.advisory);
    assert!(out.passed());
    assert!((out.max_value - 1.0).abs() < 1e-6);
}

#[test]
fn determinism_covers_every_criterion() {
    let cfg = TrialConfig::new(3, 40, 77);
    for c in Criterion::ALL {
        let a = run_criterion(c, &Measure::RelEnt, &cfg).unwrap();
        let b = run_criterion(c, &Measure::RelEnt, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "{c}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measures_vanish_on_dephased_states(d in 2usize..=5, seed in any::<u64>()) {
        let rho = dephase(&random_density(d, d, seed).unwrap());
        prop_assert!(c_l1(&rho).abs() < 1e-12);
        prop_assert!(c_rel_ent(&rho).abs() < 1e-10);
        prop_assert!(c_skew(&rho, &DiagonalObservable::ladder(d)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn valid_measures_are_monotone(d in 2usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        let rho = random_density(d, 1 + (seed as usize % d), seed).unwrap();
        let ch = random_incoherent_channel(d, n, seed ^ 0x5eed).unwrap();
        let out = apply(&ch, &rho).unwrap();
        prop_assert!(c_l1(&out) <= c_l1(&rho) + 1e-10);
        prop_assert!(c_rel_ent(&out) <= c_rel_ent(&rho) + 1e-10);
    }

    #[test]
    fn relabeling_preserves_valid_measures(d in 2usize..=5, seed in any::<u64>()) {
        let rho = random_density(d, d, seed).unwrap();
        let u = IncoherentUnitary::random(d, seed.wrapping_add(1));
        let out = u.apply(&rho).unwrap();
        prop_assert!((c_l1(&out) - c_l1(&rho)).abs() < 1e-10);
        prop_assert!((c_rel_ent(&out) - c_rel_ent(&rho)).abs() < 1e-10);
        prop_assert!(is_cpo(&u.to_channel(), 1e-9));
    }

    #[test]
    fn composition_of_incoherent_channels_is_incoherent(d in 2usize..=4, seed in any::<u64>()) {
        let a = random_incoherent_channel(d, 2, seed).unwrap();
        let b = random_incoherent_channel(d, 3, seed ^ 1).unwrap();
        let ab = compose(&a, &b).unwrap();
        prop_assert!(ab.completeness_defect() < 1e-10);
        prop_assert!(coherence_core::channels::is_incoherent_channel(&ab, 1e-10));
        let rho = random_density(d, d, seed ^ 2).unwrap();
        let direct = apply(&a, &apply(&b, &rho).unwrap()).unwrap();
        let composed = apply(&ab, &rho).unwrap();
        prop_assert!((direct.matrix() - composed.matrix()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn pure_skew_formula_matches_commutator(d in 2usize..=6, seed in any::<u64>()) {
        let psi = random_pure(d, seed).unwrap();
        let k = DiagonalObservable::ladder(d);
        let closed = c_skew_pure(&psi, &k).unwrap();
        let general = c_skew(&from_pure(&psi), &k).unwrap();
        prop_assert!((closed - general).abs() < 1e-10, "{} vs {}", closed, general);
    }

    #[test]
    fn eigen_and_sqrt_reconstruct(d in 2usize..=8, rank in 1usize..=8, seed in any::<u64>()) {
        let rho = random_density(d, rank.min(d), seed).unwrap();
        let e = hermitian_eigen(rho.matrix()).unwrap();
        prop_assert!((&e.reconstruct() - rho.matrix()).frobenius_norm() < 1e-12);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let s = psd_sqrt(rho.matrix()).unwrap();
        prop_assert!((&s.matmul(&s) - rho.matrix()).frobenius_norm() < 1e-8);
    }
}
