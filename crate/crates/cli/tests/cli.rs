use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cmimic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmimic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const PATH5: &str = "c path of length 5\np 6 5 2\ne 1 2 1\ne 2 3 1\ne 3 4 1\ne 4 5 1\ne 5 6 1\nt 1\nt 6\n";

const TWO_TRIANGLES: &str = "p 6 7 6\ne 1 2 2\ne 2 3 2\ne 1 3 2\ne 4 5 2\ne 5 6 2\ne 4 6 2\ne 3 4 1\nt 1\nt 2\nt 3\nt 4\nt 5\nt 6\n";

fn edge_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with("e "))
        .map(str::to_owned)
        .collect()
}

#[test]
fn build_then_verify_path() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "g.txt", PATH5);
    let out = dir.path().join("h.txt");
    let o = cmimic(&["build", &input, "--c", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("wall_time_ms="));
    let h = fs::read_to_string(&out).unwrap();
    assert_eq!(h.lines().filter(|l| l.starts_with("t ")).count(), 2);
    assert!(edge_lines(&out).len() <= 3);
    let stats = fs::read_to_string(dir.path().join("h.txt.stats")).unwrap();
    assert!(stats.contains("c=1"));
    assert!(!stats.contains("wall_time"));

    let v = cmimic(&["verify", &input, out.to_str().unwrap(), "--c", "1"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("equivalent=true"));
}

#[test]
fn verify_reports_a_witness() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.txt", TWO_TRIANGLES);
    let same = cmimic(&["verify", &g, &g, "--c", "2"]);
    assert_eq!(same.status.code(), Some(0));

    let broken = write(&dir, "h.txt", &TWO_TRIANGLES.replace("e 3 4 1\n", "").replace("p 6 7 6", "p 6 6 6"));
    let o = cmimic(&["verify", &g, &broken, "--c", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("equivalent=false"));
    assert!(text.lines().any(|l| l.starts_with("witness=1")));
}

#[test]
fn both_modes_and_oracles_build() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "g.txt", TWO_TRIANGLES);
    for (mode, oracle) in [("existence", "exact"), ("expander", "exact"), ("expander", "spectral")] {
        let out = dir.path().join(format!("{mode}-{oracle}.txt"));
        let o = cmimic(&[
            "build", &input, "--c", "2", "--mode", mode, "--oracle", oracle, "--seed", "9",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{mode}/{oracle}: {}", String::from_utf8_lossy(&o.stderr));
        let v = cmimic(&["verify", &input, out.to_str().unwrap(), "--c", "2"]);
        assert_eq!(v.status.code(), Some(0), "{mode}/{oracle}");
    }
}

#[test]
fn builds_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "g.txt", TWO_TRIANGLES);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = cmimic(&["build", &input, "--c", "1", "--seed", "4", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        (
            fs::read(&out).unwrap(),
            fs::read(dir.path().join(format!("{name}.stats"))).unwrap(),
        )
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.txt", "p 2 1 1\ne 1 2 0.5\nt 1\n");
    let out = dir.path().join("h.txt");
    let out = out.to_str().unwrap();
    assert_eq!(cmimic(&["build", &bad, "--c", "1", "--out", out]).status.code(), Some(2));
    let missing = dir.path().join("nope.txt");
    assert_eq!(
        cmimic(&["build", missing.to_str().unwrap(), "--c", "1", "--out", out]).status.code(),
        Some(2)
    );
    let good = write(&dir, "g.txt", PATH5);
    let conflict = cmimic(&["build", &good, "--c", "1", "--mode", "existence", "--phi", "0.5", "--out", out]);
    assert_eq!(conflict.status.code(), Some(2));
    assert_eq!(cmimic(&["build", &good, "--c", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(cmimic(&["build", &good, "--c", "1", "--prime", "100", "--out", out]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn guard_refusal_exits_3() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "g.txt", TWO_TRIANGLES);
    let out = dir.path().join("h.txt");
    let o = cmimic(&[
        "build", &input, "--c", "1", "--mode", "existence", "--enum-threshold", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stats_and_selftest() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "g.txt", TWO_TRIANGLES);
    let s = cmimic(&["stats", &input, "--c", "1"]);
    assert!(s.status.success());
    let text = stdout(&s);
    assert!(text.contains("vertices=6"));
    assert!(text.contains("edges=7"));
    assert!(text.contains("capped_unit_edges=13"));

    let t = cmimic(&["selftest", "--trials", "2", "--seed", "3"]);
    assert_eq!(t.status.code(), Some(0), "{}", stdout(&t));
    assert!(stdout(&t).ends_with("status=pass\n"));
}
