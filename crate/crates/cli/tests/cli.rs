use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochflow"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A fast copy of a shipped config, rewritten into `dir`.
fn quick_config(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    std::fs::copy(
        configs().join("distribution.toml"),
        dir.join("distribution.toml"),
    )
    .unwrap();
    let text = std::fs::read_to_string(configs().join(name)).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, edit(text)).unwrap();
    path
}

fn shrink(text: String) -> String {
    text.replace("final_time = 0.1", "final_time = 0.01")
        .replace("{ samples = 128, cells = 64 },", "")
        .replace("{ samples = 8, cells = 64 },", "")
        .replace("reference = { samples = 16, cells = 128 }", "")
}

#[test]
fn weak_run_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "weak.toml", shrink);
    let mut bytes = Vec::new();
    for (run, threads) in ["a", "b"].into_iter().zip(["1", "3"]) {
        let out = dir.path().join(run);
        let status = bin()
            .args(["run-weak", "--config"])
            .arg(&cfg)
            .args(["--seed", "7", "--threads", threads, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        bytes.push(std::fs::read(out.join("report.json")).unwrap());
        assert!(out.join("level_01").join("boundedness.csv").exists());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes.pop().unwrap()).unwrap();
    assert!(text.contains("\"seed\": 7"));
}

#[test]
fn strong_run_prints_json_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "strong.toml", shrink);
    let out = bin()
        .args(["run-strong", "--config"])
        .arg(&cfg)
        .env("STOCHFLOW_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("strong_errors"));
}

#[test]
fn flag_beats_environment_for_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "strong.toml", shrink);
    let bad_env = bin()
        .args(["run-strong", "--config"])
        .arg(&cfg)
        .env("STOCHFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert!(!bad_env.status.success());
    let flag = bin()
        .args(["run-strong", "--threads", "2", "--config"])
        .arg(&cfg)
        .env("STOCHFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert!(flag.status.success());
}

#[test]
fn convergence_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "convergence.toml", |t| {
        t.replace("[32, 64, 128, 256]", "[16, 32]")
    });
    let out = bin()
        .args(["run-convergence", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("cells,h,error,order"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn config_and_io_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["run-weak", "--config"])
        .arg(dir.path().join("nope.toml"))
        .status()
        .unwrap();
    assert!(!missing.success());

    let cfg = quick_config(dir.path(), "weak.toml", |t| {
        t.replace("cfl = 0.4", "cfl = -1.0")
    });
    assert!(!bin()
        .args(["run-weak", "--config"])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());

    let cfg = quick_config(dir.path(), "strong.toml", shrink);
    assert!(!bin()
        .args(["run-weak", "--config"])
        .arg(&cfg)
        .status()
        .unwrap()
        .success());

    let cfg = quick_config(dir.path(), "weak.toml", shrink);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let status = bin()
        .args(["run-weak", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert!(!status.success());
}
