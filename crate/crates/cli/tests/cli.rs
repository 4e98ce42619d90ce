use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tlcs::config::{parse_noise_params, write_noise_params};
use tlcs_core::noise::{CnotDamping, NoiseParams};

fn tlcs(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlcs"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn protocol_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "protocol", "--n", "4", "--bases", "XZYX", "--shots", "3000", "--seed", "11",
    ];
    assert!(tlcs(a.path(), &args).status.success());
    assert!(tlcs(
        b.path(),
        &["--threads", "1"]
            .iter()
            .chain(&args)
            .copied()
            .collect::<Vec<_>>()
    )
    .status
    .success());
    let name = "protocol-n4-XZYX-seed11";
    let files = dir_contents(&a.path().join(name));
    assert!(files.iter().any(|(f, _)| f == "records.txt"));
    assert_eq!(files, dir_contents(&b.path().join(name)));
}

#[test]
fn tomography_outputs_are_written() {
    let out = tempfile::tempdir().unwrap();
    let res = tlcs(
        out.path(),
        &[
            "tomography",
            "--n",
            "2",
            "--shots-per-setting",
            "200",
            "--bootstrap",
            "20",
            "--seed",
            "3",
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let dir = out.path().join("tomography-n2-s200-seed3");
    for f in [
        "config.conf",
        "run.txt",
        "counts.csv",
        "expectations.csv",
        "rho.json",
        "rho_linear.json",
        "summary.csv",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("N,fidelity,witness,ci_low,ci_high\n2,"));
    let config = fs::read_to_string(dir.join("config.conf")).unwrap();
    assert_eq!(
        parse_noise_params(&config).unwrap(),
        NoiseParams::reference_device()
    );
}

#[test]
fn exact_noiseless_tomography_is_perfect() {
    let out = tempfile::tempdir().unwrap();
    let res = tlcs(
        out.path(),
        &["tomography", "--n", "3", "--exact", "--no-noise"],
    );
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("fidelity: 1.0000"), "{stdout}");
    assert!(stdout.contains("witness: -0.5000"), "{stdout}");
}

#[test]
fn noise_file_round_trips() {
    let mut p = NoiseParams::reference_device();
    p.cnot_damping = CnotDamping::Split;
    p.damp_basis_rotations = false;
    p.b.t2_star = 12.5e-6;
    let text = write_noise_params(&p);
    assert_eq!(parse_noise_params(&text).unwrap(), p);

    let out = tempfile::tempdir().unwrap();
    let file = out.path().join("device.conf");
    fs::write(&file, &text).unwrap();
    let res = tlcs(
        out.path(),
        &[
            "protocol",
            "--n",
            "2",
            "--bases",
            "ZZ",
            "--shots",
            "100",
            "--noise-file",
            file.to_str().unwrap(),
        ],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let snapshot = fs::read_to_string(out.path().join("protocol-n2-ZZ-seed0/config.conf")).unwrap();
    assert_eq!(parse_noise_params(&snapshot).unwrap(), p);
}

#[test]
fn bad_noise_file_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let file = out.path().join("bad.conf");
    fs::write(&file, "a.t1 = 20 us\nwarp = 9\n").unwrap();
    let res = tlcs(
        out.path(),
        &[
            "protocol",
            "--n",
            "2",
            "--bases",
            "ZZ",
            "--noise-file",
            file.to_str().unwrap(),
        ],
    );
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("warp"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = tempfile::tempdir().unwrap();
    for args in [
        &["protocol", "--n", "3"][..],
        &["protocol", "--n", "3", "--bases", "XY"],
        &["tomography", "--n", "7"],
        &["witness-sweep", "--reps", "5,5"],
        &["frobnicate"],
    ] {
        assert_eq!(tlcs(out.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_passes_and_reports() {
    let out = tempfile::tempdir().unwrap();
    let res = tlcs(out.path(), &["verify"]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stdout)
    );
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.path().join("verify-seed0/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn injected_cnot_error_is_caught() {
    let out = tempfile::tempdir().unwrap();
    let res = tlcs(out.path(), &["verify", "--inject-cnot-sign-error"]);
    assert_eq!(res.status.code(), Some(1));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("FAIL swap_elimination"), "{stdout}");
    assert!(stdout.contains("counterexample: ["), "{stdout}");
}
