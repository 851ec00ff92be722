use std::path::{Path, PathBuf};
use std::process::Command;

use coherence_core::channels::{ChannelFile, KrausChannel};
use coherence_core::cli::{
    emit_report, run, Format, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS,
};
use coherence_core::harness::{check_c2, CriterionReport, TrialConfig};
use coherence_core::numerics::ComplexMatrix;
use coherence_core::states::{from_pure, random_density, StateFile};
use coherence_core::{Measure, PureState};
use num_complex::Complex64;
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("coherence-lab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn hadamard_channel() -> KrausChannel {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = ComplexMatrix::from_row_major(
        2,
        2,
        [h, h, h, -h]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect(),
    )
    .unwrap();
    KrausChannel::unitary(u).unwrap()
}

#[test]
fn measure_l1_on_uniform_superposition() {
    let dir = tempfile::tempdir().unwrap();
    let psi = write_json(
        dir.path(),
        "psi.json",
        &StateFile::from_pure(&PureState::uniform(3)),
    );
    let (code, out, _) = invoke(&[
        "measure",
        "--state",
        psi.to_str().unwrap(),
        "--measure",
        "l1",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["measure"], "l1");
}

#[test]
fn measure_accepts_density_files() {
    let dir = tempfile::tempdir().unwrap();
    let rho = random_density(3, 2, 4).unwrap();
    let path = write_json(dir.path(), "rho.json", &StateFile::from_density(&rho));
    let (code, out, _) = invoke(&[
        "measure",
        "--state",
        path.to_str().unwrap(),
        "--measure",
        "rel_ent",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let expected = Measure::RelEnt.evaluate(&rho).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), expected);
}

#[test]
fn hadamard_channel_is_neither_incoherent_nor_cpo() {
    let dir = tempfile::tempdir().unwrap();
    let ch = write_json(
        dir.path(),
        "h.json",
        &ChannelFile::from_channel(&hadamard_channel()),
    );
    let (code, out, _) = invoke(&["check-channel", "--channel", ch.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["incoherent"], false);
    assert_eq!(v["cpo"], false);
    assert!(v["canonical_form"].is_null());
}

#[test]
fn projective_channel_dumps_canonical_form() {
    let dir = tempfile::tempdir().unwrap();
    let ch = write_json(
        dir.path(),
        "p.json",
        &ChannelFile::from_channel(&KrausChannel::projective_measurement(3)),
    );
    let (code, out, _) = invoke(&["check-channel", "--channel", ch.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["incoherent"], true);
    assert_eq!(v["cpo"], false);
    assert_eq!(v["canonical_form"]["terms"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_skew_c2_reports_violations() {
    let args = [
        "verify",
        "--measure",
        "skew",
        "--criterion",
        "C2",
        "--dim",
        "3",
        "--trials",
        "100",
        "--seed",
        "7",
    ];
    let (code, out, _) = invoke(&args);
    assert_eq!(code, EXIT_VIOLATIONS);
    let report: CriterionReport = serde_json::from_str(&out).unwrap();
    assert!(report.violations >= 1);
    assert!(report.witness.is_some());
    assert_eq!(report.seed, 7);
}

#[test]
fn verify_is_byte_identical_across_job_counts() {
    let base = [
        "verify",
        "--measure",
        "l1",
        "--criterion",
        "ALL",
        "--dim",
        "3",
        "--trials",
        "200",
        "--seed",
        "11",
    ];
    let (c1, a, _) = invoke(&[&base[..], &["--jobs", "1"]].concat());
    let (c2, b, _) = invoke(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert_eq!(a, b);
    let reports: Vec<CriterionReport> = serde_json::from_str(&a).unwrap();
    assert_eq!(reports.len(), 8);
}

#[test]
fn verify_csv_output() {
    let (code, out, _) = invoke(&[
        "verify",
        "--measure",
        "rel_ent",
        "--criterion",
        "C3",
        "--dim",
        "2",
        "--trials",
        "50",
        "--format",
        "csv",
    ]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "criterion,measure,dim,trials,violations,worst_violation,seed"
    );
    assert!(lines.next().unwrap().starts_with("C3,rel_ent,2,50,0,"));
}

#[test]
fn verify_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, out, _) = invoke(&[
        "verify",
        "--criterion",
        "LEMMA2",
        "--dim",
        "2",
        "--trials",
        "20",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let report: CriterionReport =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report.criterion, "LEMMA2");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(invoke(&["verify", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(
        invoke(&["verify", "--measure", "nope", "--criterion", "C2"]).0,
        EXIT_USAGE
    );
    assert_eq!(invoke(&["verify", "--criterion", "C2"]).0, EXIT_USAGE);
    assert_eq!(
        invoke(&["verify", "--measure", "l1", "--criterion", "C7"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        invoke(&["verify", "--measure", "l1", "--trials", "0"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        invoke(&["verify", "--measure", "l1", "--dim", "1"]).0,
        EXIT_USAGE
    );
    assert_eq!(invoke(&["hunt", "--dim", "2"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["mcs"]).0, EXIT_USAGE);
}

#[test]
fn io_and_format_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let (code, _, err) = invoke(&[
        "measure",
        "--state",
        missing.to_str().unwrap(),
        "--measure",
        "l1",
    ]);
    assert_eq!(code, EXIT_IO);
    assert!(err.starts_with("error:"));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"dim\": 2, \"kind\": \"pure\"").unwrap();
    assert_eq!(
        invoke(&[
            "measure",
            "--state",
            garbage.to_str().unwrap(),
            "--measure",
            "l1"
        ])
        .0,
        EXIT_IO
    );

    let unnormalized = dir.path().join("bad.json");
    std::fs::write(
        &unnormalized,
        r#"{"dim": 2, "kind": "pure", "re": [1.0, 1.0], "im": [0.0, 0.0]}"#,
    )
    .unwrap();
    assert_eq!(
        invoke(&[
            "measure",
            "--state",
            unnormalized.to_str().unwrap(),
            "--measure",
            "l1"
        ])
        .0,
        EXIT_IO
    );

    let short = dir.path().join("short.json");
    std::fs::write(
        &short,
        r#"{"dim": 2, "kraus": [{"re": [1.0], "im": [0.0]}]}"#,
    )
    .unwrap();
    assert_eq!(
        invoke(&["check-channel", "--channel", short.to_str().unwrap()]).0,
        EXIT_IO
    );
}

#[test]
fn hunt_emits_reproducible_witness() {
    let (code, out, _) = invoke(&["hunt", "--dim", "3", "--trials", "100", "--seed", "7"]);
    assert_eq!(code, EXIT_VIOLATIONS);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["witness"]["value_before"].as_f64().unwrap() - 17.0 / 36.0).abs() < 1e-15);
    assert!((v["witness"]["value_after"].as_f64().unwrap() - 5.0 / 9.0).abs() < 1e-15);
    assert_eq!(v["witness"]["operation"]["kind"], "unitary");
    assert!(v["reports"][0]["violations"].as_u64().unwrap() >= 1);
    assert_eq!(
        out,
        invoke(&["hunt", "--dim", "3", "--trials", "100", "--seed", "7"]).1
    );
}

#[test]
fn mcs_membership_and_transform() {
    let dir = tempfile::tempdir().unwrap();
    let psi = write_json(
        dir.path(),
        "psi.json",
        &StateFile::from_pure(&PureState::uniform(4)),
    );
    let (code, out, _) = invoke(&["mcs", "--state", psi.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["is_mcs"], true);
    assert_eq!(v["descriptor"]["phases"].as_array().unwrap().len(), 4);

    let basis = write_json(
        dir.path(),
        "b.json",
        &StateFile::from_pure(&PureState::basis(4, 2)),
    );
    let v: Value =
        serde_json::from_str(&invoke(&["mcs", "--state", basis.to_str().unwrap()]).1).unwrap();
    assert_eq!(v["is_mcs"], false);

    let target = coherence_core::states::random_pure(3, 8).unwrap();
    let tpath = write_json(dir.path(), "t.json", &StateFile::from_pure(&target));
    let (code, out, _) = invoke(&["mcs", "--transform-to", tpath.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let ch = serde_json::from_str::<ChannelFile>(&out)
        .unwrap()
        .to_channel()
        .unwrap();
    let result = coherence_core::channels::apply(&ch, &from_pure(&PureState::uniform(3))).unwrap();
    assert!((result.fidelity_with(&target) - 1.0).abs() < 1e-10);
}

#[test]
fn report_round_trips_and_nests_witness() {
    let report = check_c2(&Measure::Skew(None), &TrialConfig::new(3, 100, 7)).unwrap();
    let text = emit_report(&report, Format::Json);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["witness"].is_object());
    for key in [
        "criterion",
        "measure",
        "dim",
        "trials",
        "violations",
        "worst_violation",
        "witness",
        "seed",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let back: CriterionReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);

    let clean = check_c2(&Measure::L1, &TrialConfig::new(2, 10, 1)).unwrap();
    let v: Value = serde_json::from_str(&emit_report(&clean, Format::Json)).unwrap();
    assert!(v["witness"].is_null());
}

#[test]
fn binary_respects_seed_env_and_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_coherence-lab");
    let run_bin = |seed: &str| {
        Command::new(bin)
            .args([
                "verify",
                "--measure",
                "skew",
                "--criterion",
                "C2",
                "--dim",
                "3",
                "--trials",
                "50",
            ])
            .env("COHERENCE_LAB_SEED", seed)
            .output()
            .unwrap()
    };
    let a = run_bin("7");
    let b = run_bin("7");
    assert_eq!(a.stdout, b.stdout);
    let report: CriterionReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.seed, 7);
    assert_eq!(
        a.status.code(),
        Some(if report.violations > 0 { 1 } else { 0 })
    );

    let bad = Command::new(bin)
        .args(["measure", "--unknown"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
