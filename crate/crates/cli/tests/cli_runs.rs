#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phasespace_core::{GaussianStateRecord, Quasienergy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_phasespace");

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn phasespace(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("PHASESPACE_TOL");
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t.to_string());
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = phasespace(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

/// (scenario, artifacts compared byte for byte)
const GOLDEN: [(&str, &[&str]); 3] = [
    ("photon_dist_vacuum", &["photon_dist_vacuum.csv", "photon_dist_vacuum.json"]),
    ("evolve_coherent", &["evolve_coherent.json"]),
    ("oscillator_free", &["oscillator_free.csv"]),
];

fn run_golden(dir: &Path, threads: Option<usize>) {
    for (scenario, files) in GOLDEN {
        let config = golden(&format!("{scenario}.scenario.json"));
        let out = dir.join(files[0]);
        let res = phasespace(&["--config", p(&config), "--out", p(&out)], threads);
        assert!(res.status.success(), "{scenario}: {}", String::from_utf8_lossy(&res.stderr));
    }
}

#[test]
fn golden_artifacts_reproduce_byte_for_byte() {
    for threads in [None, Some(1), Some(4)] {
        let dir = tempfile::tempdir().unwrap();
        run_golden(dir.path(), threads);
        for (_, files) in GOLDEN {
            for f in files.iter() {
                assert_eq!(read(&dir.path().join(f)), read(&golden(f)), "{f} with {threads:?} threads");
            }
        }
    }
}

#[test]
fn golden_artifacts_carry_the_expected_physics() {
    let photon = csv_rows(&read(&golden("photon_dist_vacuum.csv")));
    assert_eq!(photon, vec![vec![0.0, 1.0]]);

    let input: GaussianStateRecord = serde_json::from_str(&read(&golden("coherent.json"))).unwrap();
    let evolved: GaussianStateRecord = serde_json::from_str(&read(&golden("evolve_coherent.json"))).unwrap();
    for (a, b) in input.mean.iter().zip(&evolved.mean) {
        assert!((a + b).abs() <= 1e-12);
    }
    for (a, b) in input.dispersion_upper.iter().zip(&evolved.dispersion_upper) {
        assert!((a - b).abs() <= 1e-12);
    }

    let rows = csv_rows(&read(&golden("oscillator_free.csv")));
    let last = rows.last().unwrap();
    assert_eq!(last[0], 2.0);
    assert!((last[3] - 2.5).abs() <= 1e-12);
}

#[test]
fn metadata_sidecar_is_stable_and_timestamp_free() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let state = golden("coherent.json");
    let args = ["wigner-grid", "--state", p(&state), "--grid", "-2,2,-2,2,9", "--out", p(&out)];
    ok(&args);
    let first = read(&dir.path().join("w.csv.meta.json"));
    ok(&args);
    assert_eq!(first, read(&dir.path().join("w.csv.meta.json")));
    let meta: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(meta["command"], "wigner-grid");
    assert!(!first.contains("time\""));
}

#[test]
fn grid_outputs_do_not_depend_on_thread_count() {
    let cases: Vec<Vec<String>> = vec![
        vec!["cat", "--parity", "odd", "--alpha", "1.2,0.4", "--grid", "-5,5,-5,5,40", "--kind", "wigner"],
        vec!["wigner-grid", "--state", p(&golden("coherent.json")), "--grid", "-3,3,-3,3,33"],
        vec!["qfunc-grid", "--state", p(&golden("coherent.json"))],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for case in cases {
        let outputs: Vec<String> = [1, 4]
            .iter()
            .map(|&threads| {
                let dir = tempfile::tempdir().unwrap();
                let out = dir.path().join("grid.csv");
                let mut args: Vec<&str> = case.iter().map(String::as_str).collect();
                args.extend(["--out", p(&out)]);
                let res = phasespace(&args, Some(threads));
                assert!(res.status.success(), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
                read(&out)
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{}", case[0]);
    }
}

fn hamiltonian_json<R: Rng>(rng: &mut R, n: usize, modulated: bool) -> String {
    let rows = |m: &phasespace_core::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let base = common::random_symmetric(rng, 2 * n, 0.2, 1.6);
    let c: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let b = if modulated {
        let amp = common::random_symmetric(rng, 2 * n, -0.3, 0.3);
        serde_json::json!({"kind": "cosine_modulated", "base": rows(&base), "amplitude": rows(&amp), "frequency": 1.7})
    } else {
        serde_json::json!({"kind": "constant", "matrix": rows(&base)})
    };
    serde_json::json!({"n_modes": n, "B": b, "C": c}).to_string()
}

#[test]
fn evolve_then_inverse_recovers_the_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dir = tempfile::tempdir().unwrap();
    for case in 0..8 {
        let n = 1 + case % 2;
        let state = common::random_state(&mut rng, n, 2.0, 1.0).to_record();
        let input = dir.path().join(format!("in{case}.json"));
        std::fs::write(&input, serde_json::to_string(&state).unwrap()).unwrap();
        let h = dir.path().join(format!("h{case}.json"));
        std::fs::write(&h, hamiltonian_json(&mut rng, n, case >= 4)).unwrap();
        let t = format!("{}", rng.random_range(0.3..3.0));
        let forward = dir.path().join(format!("fwd{case}.json"));
        let back = dir.path().join(format!("back{case}.json"));
        ok(&["evolve", "--state", p(&input), "--hamiltonian", p(&h), "--t", &t, "--out", p(&forward)]);
        ok(&["evolve", "--state", p(&forward), "--hamiltonian", p(&h), "--t", &t, "--inverse", "--out", p(&back)]);
        let got: GaussianStateRecord = serde_json::from_str(&read(&back)).unwrap();
        let moved: GaussianStateRecord = serde_json::from_str(&read(&forward)).unwrap();
        assert!(moved.mean.iter().zip(&state.mean).any(|(a, b)| (a - b).abs() > 1e-6));
        for (a, b) in got.mean.iter().zip(&state.mean).chain(got.dispersion_upper.iter().zip(&state.dispersion_upper)) {
            assert!((a - b).abs() <= 1e-9, "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn flags_and_scenario_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let via_flags = dir.path().join("flags.csv");
    ok(&["photon-dist", "--state", p(&golden("vacuum.json")), "--cutoff", "5", "--out", p(&via_flags)]);
    assert_eq!(read(&via_flags), read(&golden("photon_dist_vacuum.csv")));

    let inline = dir.path().join("inline.csv");
    ok(&[
        "oscillator",
        "--profile",
        r#"{"kind": "free"}"#,
        "--t-final",
        "2",
        "--steps",
        "20",
        "--out",
        p(&inline),
    ]);
    assert_eq!(read(&inline), read(&golden("oscillator_free.csv")));
}

#[test]
fn quasienergy_json_has_the_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    ok(&["quasienergy", "--profile", r#"{"kind":"constant","omega_sq":1.0}"#, "--period", "1", "--out", p(&out)]);
    let q: Quasienergy = serde_json::from_str(&read(&out)).unwrap();
    assert!(q.stable);
    assert!((q.kappa.unwrap() - 1.0).abs() <= 1e-12);
    let raw: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    let keys: Vec<&str> = raw.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["kappa", "multipliers", "stable", "trace"]);
}

#[test]
fn cat_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let photon = dir.path().join("cat_photon.csv");
    ok(&["cat", "--parity", "even", "--alpha", "1,0", "--cutoff", "12", "--out", p(&photon)]);
    let rows = csv_rows(&read(&photon));
    assert!(rows.iter().all(|r| (r[0] as u32).is_multiple_of(2)));
    let p2 = rows.iter().find(|r| r[0] == 2.0).unwrap()[1];
    assert!((p2 - 0.5 / 1f64.cosh()).abs() <= 1e-7);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("cat_photon.json"))).unwrap();
    assert!((summary["p0"].as_f64().unwrap() - 1.0 / 1f64.cosh()).abs() <= 1e-7);

    let wf = dir.path().join("odd_wavefunction.csv");
    ok(&["cat", "--parity", "odd", "--alpha", "-0.5,1", "--t", "0.4", "--out", p(&wf)]);
    let rows = csv_rows(&read(&wf));
    let h = rows[1][0] - rows[0][0];
    let norm: f64 = rows.iter().map(|r| r[1] * r[1] + r[2] * r[2]).sum::<f64>() * h;
    assert!((norm - 1.0).abs() <= 1e-6);
}

#[test]
fn failures_map_to_exit_codes_and_error_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x_photon.csv");

    let res = phasespace(&["cat", "--parity", "odd", "--alpha", "0,0", "--out", p(&out)], None);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("NullState"));

    let res = phasespace(&["cat", "--parity", "even", "--alpha", "1,0", "--out", p(&dir.path().join("x.csv"))], None);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("ConfigInvalid"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_modes": 1, "mean": [0, 0], "dispersion_upper": [0.1, 0, 0.1]}"#).unwrap();
    let res = phasespace(&["photon-dist", "--state", p(&bad), "--cutoff", "3", "--out", p(&out)], None);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("UncertaintyViolated"));

    let res = phasespace(&["photon-dist", "--state", p(&dir.path().join("missing.json")), "--cutoff", "3", "--out", p(&out)], None);
    assert_eq!(res.status.code(), Some(2));

    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, r#"{"command": "photon-dist", "state": "v.json", "cutoff": 3, "out": "o.csv", "extra": 1}"#).unwrap();
    let res = phasespace(&["--config", p(&scenario)], None);
    assert_eq!(res.status.code(), Some(2));

    let res = phasespace(
        &["oscillator", "--profile", r#"{"kind":"free"}"#, "--t-final", "1", "--wronskian-tol", "-1", "--out", p(&out)],
        None,
    );
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn tolerance_override_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.json");
    // an unstable generic B: Λ grows like e^{0.6t} and its rounding defect sits far above 1e-300
    std::fs::write(&h, r#"{"n_modes": 1, "B": {"kind": "constant", "matrix": [[0.3, 0.7], [0.7, 0.2]]}}"#).unwrap();
    let state = dir.path().join("s.json");
    std::fs::write(&state, serde_json::to_string(&phasespace_core::GaussianState::vacuum(1).to_record()).unwrap())
        .unwrap();
    let out = dir.path().join("o.json");
    let args = ["evolve", "--state", p(&state), "--hamiltonian", p(&h), "--t", "3", "--out", p(&out)];
    let status = |tol: &str| {
        Command::new(BIN).args(args).env("PHASESPACE_TOL", tol).output().unwrap().status.code()
    };
    assert_eq!(status("1e-300"), Some(3));
    assert_eq!(status("1e-6"), Some(0));
    assert_eq!(status("zero"), Some(2));
}
