use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use levy_drift::io::read_skeleton;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn golden(name: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn levy_drift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-drift"))
        .args(args)
        .env_remove("LEVY_DRIFT_THREADS")
        .output()
        .unwrap()
}

/// Writes `text` as a config into `dir` and runs `cmd` on it.
fn run_text(dir: &Path, cmd: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    levy_drift(&args)
}

fn off_diagonal() -> String {
    std::fs::read_to_string(configs().join("off_diagonal_diffusion.toml")).unwrap()
}

#[test]
fn usage_errors_exit_64() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let o = levy_drift(&["constants", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read config"));

    assert_eq!(levy_drift(&["constants"]).status.code(), Some(64));
    assert_eq!(levy_drift(&["constants", "--no-such-flag"]).status.code(), Some(64));
    assert_eq!(levy_drift(&["frobnicate"]).status.code(), Some(64));

    let bad_cone = off_diagonal().replace("eps_big = 0.75", "eps_big = 0.4");
    let o = run_text(tmp.path(), "constants", &bad_cone, &[]);
    assert_eq!(o.status.code(), Some(64), "{}", String::from_utf8_lossy(&o.stderr));

    let unknown = off_diagonal().replace("[lyapunov]\np = 0.5", "[lyapunov]\np = 0.5\nq = 1.0");
    let o = run_text(tmp.path(), "constants", &unknown, &[]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));

    let bad_p = off_diagonal().replace("p = 0.5", "p = 1.5");
    assert_eq!(run_text(tmp.path(), "constants", &bad_p, &[]).status.code(), Some(64));

    let o = run_text(tmp.path(), "constants", &off_diagonal(), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn constants_report_matches_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_text(tmp.path(), "constants", &off_diagonal(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = golden("off_diagonal_diffusion.constants.txt");
    assert_eq!(o.stdout, text);
    let out = tmp.path().join("out");
    assert_eq!(std::fs::read(out.join("constants.txt")).unwrap(), text);
    assert_eq!(
        std::fs::read(out.join("constants.json")).unwrap(),
        golden("off_diagonal_diffusion.constants.json")
    );
}

#[test]
fn json_and_text_reports_carry_the_same_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let text = String::from_utf8(run_text(tmp.path(), "constants", &off_diagonal(), &[]).stdout).unwrap();
    let o = run_text(tmp.path(), "constants", &off_diagonal(), &["--json"]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let num = |ptr: &str| json.pointer(ptr).and_then(|v| v.as_f64()).unwrap_or_else(|| panic!("{ptr}"));
    for ptr in [
        "/p",
        "/eps_small",
        "/eps_big",
        "/general/a_small",
        "/general/a_big",
        "/pure_diffusion/value",
        "/pure_diffusion/liminf",
        "/pure_diffusion/trend_slope",
        "/certificate/c",
        "/certificate/gamma",
        "/rate/delta",
        "/rate/gamma_time",
    ] {
        let shown = format!("{:.6e}", num(ptr));
        assert!(text.contains(&shown), "{ptr} = {shown} missing from the text report");
    }
    assert_eq!(json["certificate"]["pipeline"], "pure-diffusion");
    assert_eq!(json["classification"]["kind"], "exponential");
    assert!(text.contains("exponential"));
}

#[test]
fn skeleton_dump_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("levy_ou.toml"))
        .unwrap()
        .replace("y0 = [-5.0]\n", "")
        .replace("horizon = 8.0", "horizon = 2.0")
        .replace("n_paths = 10000", "n_paths = 300\ndump_skeleton = true");
    let o = run_text(tmp.path(), "simulate", &text, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(tmp.path().join("out/skeleton.bin")).unwrap();
    let (d, n, k, data) = read_skeleton(&bytes).unwrap();
    assert_eq!((d, n, k), (1, 300, 9));
    assert_eq!(data.len(), d * n * k);
    // path-major: the first state of every path is x0
    assert!((0..n).all(|i| data[i * k] == 5.0));
    let last_mean = (0..n).map(|i| data[i * k + k - 1]).sum::<f64>() / n as f64;
    let summary = std::fs::read_to_string(tmp.path().join("out/skeleton_summary.csv")).unwrap();
    let last: Vec<f64> = summary
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(last[0], 2.0);
    assert!((last[1] - last_mean).abs() <= 1e-12 * last_mean.abs().max(1.0));
    assert!(read_skeleton(&bytes[..bytes.len() - 1]).is_none());
}
