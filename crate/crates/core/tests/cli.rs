use std::path::Path;
use std::process::{Command, Output};

use matterwave::config::RunConfig;
use matterwave::io::read_pattern;

const SINGLE: &str = r#"
mode = "single"

[physics]
amplitude = 2.87e14

[geometry]
width = 10e-6
length = 0.01
thickness = 1.3e-6

[screen]
distance = 2.29
"#;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matterwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn single_pattern_peaks_on_axis() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("single.toml"), SINGLE).unwrap();
    let out = bin(
        dir.path(),
        &["single", "--config", "single.toml", "--out", "p.csv"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let p = read_pattern(&dir.path().join("p.csv")).unwrap();
    assert_eq!(p.len(), 1501);
    let peak = p
        .samples
        .iter()
        .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
        .unwrap();
    assert!(peak.s.abs() < 1e-12, "peak at {}", peak.s);
}

#[test]
fn pattern_file_echoes_its_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("decoherent.toml");
    let out = bin(
        dir.path(),
        &[
            "double",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "d.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let echo: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# config "))
        .map(|l| format!("{l}\n"))
        .collect();
    assert_eq!(
        RunConfig::parse(&echo).unwrap(),
        RunConfig::load(&cfg).unwrap()
    );
    let p = read_pattern(&dir.path().join("d.csv")).unwrap();
    assert_eq!(p.metadata["pattern"], "double-decoherent");
    assert_eq!(p.metadata["kernel"], "fresnel");
}

#[test]
fn visibility_of_reference_contrast() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.csv"),
        "s_m,intensity\n0,500\n1e-6,300\n2e-6,880\n3e-6,300\n4e-6,500\n",
    )
    .unwrap();
    let out = bin(dir.path(), &["visibility", "--pattern", "p.csv"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0.491525\n");
}

#[test]
fn oracle_check_passes() {
    let out = bin(Path::new("."), &["oracle-check"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn fit_writes_report_and_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = SINGLE.to_string() + "\n[fit]\nfree = [\"A\"]\n";
    std::fs::write(d.join("single.toml"), cfg).unwrap();
    assert!(
        bin(d, &["single", "--config", "single.toml", "--out", "p.csv"])
            .status
            .success()
    );
    let model = read_pattern(&d.join("p.csv")).unwrap();
    let mut data = String::from("s_m,counts\n# scaled model\n");
    for s in model.samples.iter().step_by(50) {
        data.push_str(&format!("{:e},{:e}\n", s.s, 9.0 * s.intensity));
    }
    std::fs::write(d.join("data.csv"), data).unwrap();
    let out = bin(
        d,
        &[
            "fit",
            "--config",
            "single.toml",
            "--data",
            "data.csv",
            "--out",
            "report.toml",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: toml::Table = std::fs::read_to_string(d.join("report.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let a = report["amplitude"].as_float().unwrap();
    assert!((a / (3.0 * 2.87e14) - 1.0).abs() < 1e-6, "{a}");
    assert_eq!(report["converged"].as_bool(), Some(true));
    let fitted = read_pattern(&d.join("report.csv")).unwrap();
    assert_eq!(fitted.len(), model.len());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(bin(d, &["bogus"]).status.code(), Some(2));
    assert_eq!(bin(d, &["single"]).status.code(), Some(2));
    assert_eq!(
        bin(d, &["single", "--config", "x.toml", "--kernel", "huygens"])
            .status
            .code(),
        Some(2)
    );

    let bad = SINGLE
        .replace("mode = \"single\"", "mode = \"double-coherent\"")
        .replace("thickness = 1.3e-6", "thickness = 1.3e-6\ngap = 1e-6")
        + "[superposition]\nc1 = 0.9\nc2 = 0.9\n";
    std::fs::write(d.join("bad.toml"), bad).unwrap();
    let out = bin(d, &["double", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("superposition"));

    std::fs::write(d.join("single.toml"), SINGLE).unwrap();
    assert_eq!(
        bin(d, &["double", "--config", "single.toml"]).status.code(),
        Some(3)
    );
    std::fs::write(d.join("empty.toml"), "").unwrap();
    let out = bin(d, &["single", "--config", "empty.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`mode`"));
}

#[test]
fn experimental_data_outside_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("single.toml"), SINGLE).unwrap();
    let rows: String = (0..6)
        .map(|i| format!("{:e},10\n", 140e-6 + 5e-6 * i as f64))
        .collect();
    std::fs::write(d.join("data.csv"), format!("s_m,counts\n{rows}")).unwrap();
    let out = bin(d, &["fit", "--config", "single.toml", "--data", "data.csv"]);
    assert_eq!(out.status.code(), Some(3));
}
