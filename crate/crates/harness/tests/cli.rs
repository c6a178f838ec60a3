use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_streamgp"))
}

fn write_config(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(
        &path,
        "[dataset]\nkind = \"synthetic-linear\"\nn = 120\n[model]\nnum_frequencies = 20\n[runs]\nreplicates = 2\n",
    )
    .unwrap();
    path
}

#[test]
fn generate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = bin()
        .args(["generate", "--kind", "synthetic-hetero", "--n", "40", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("wrote 40 rows"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,x3,y"));
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn run_prints_table_and_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("r.jsonl");
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("coverage %"));
    let lines = std::fs::read_to_string(&out).unwrap();
    assert_eq!(lines.lines().filter(|l| l.contains("\"kind\":\"replicate\"")).count(), 2);
    assert_eq!(lines.lines().filter(|l| l.contains("\"kind\":\"aggregate\"")).count(), 1);
}

#[test]
fn compare_csv_has_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = bin()
        .args(["compare", "--format", "csv", "--replicates", "1", "--methods", "EGP-OCP,RBF-BCS", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("EGP-OCP,"));
    assert!(rows[2].starts_with("RBF-BCS,"));
}

#[test]
fn trace_dumps_every_stream_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = bin().args(["trace", "--config"]).arg(&cfg).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("step,node,mean,var,threshold,lower,upper,y,covered,width"));
    assert_eq!(text.lines().count(), 1 + 84);
}

#[test]
fn errors_exit_nonzero() {
    let o = bin().args(["compare", "--methods", "EGP-XYZ"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("EGP-OCP"));
    let o = bin().args(["run", "--config", "/nonexistent.toml"]).output().unwrap();
    assert!(!o.status.success());
    let o = bin().args(["run", "--format", "xml"]).output().unwrap();
    assert!(!o.status.success());
}
