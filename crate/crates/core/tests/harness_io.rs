//! End-to-end runs on tiny grids: CSV and manifest round-trips,
//! checkpoints, determinism and the command-line tool.

use std::process::Command;

use vmfp_core::diagnostics::DiagnosticsRecord;
use vmfp_core::harness::io::{read_checkpoint, read_records, read_table, write_checkpoint, Checkpoint, SweepManifest};
use vmfp_core::harness::{run_kinetic, run_limit, run_sweep, InitialKind, ScenarioConfig};

fn tiny() -> ScenarioConfig {
    ScenarioConfig::from_toml_str(
        r#"
[grid]
n1 = 8
n2 = 8
nv = 8

[time]
t_final = 0.03
dt = 0.01
sample_every = 1

[sweep]
eps = [0.4, 0.2]
"#,
    )
    .unwrap()
}

#[test]
fn sweep_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_sweep(&tiny(), dir.path()).unwrap();
    assert!(m.complete);
    assert_eq!(m.entries.len(), 2);
    let back = SweepManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(back, m);
    for e in &m.entries {
        let recs = read_records(&dir.path().join(&e.records)).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(DiagnosticsRecord::is_finite));
        assert_eq!(recs.last().unwrap().t, 0.03);
        assert!(e.relative_mass_drift.abs() < 1e-12);
    }
    let (cols, rows) = read_table(&dir.path().join(&m.limit_records)).unwrap();
    assert_eq!(cols[0], "t");
    assert_eq!(rows.len(), 4);
    assert!(dir.path().join(&m.limit_trajectory).exists());
    assert!(matches!(read_checkpoint(&dir.path().join("limit")).unwrap(), Checkpoint::Limit(_)));
}

#[test]
fn checkpoint_is_bit_exact() {
    let run = run_kinetic(&tiny(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cp = run.checkpoint();
    write_checkpoint(dir.path(), &cp).unwrap();
    let back = read_checkpoint(dir.path()).unwrap();
    assert_eq!(back, cp);
    let Checkpoint::Kinetic(k) = back else { panic!("wrong kind") };
    assert_eq!(k.f.data, run.stepper.f.data);
    assert_eq!(k.f.t, run.stepper.f.t);
}

#[test]
fn runs_are_deterministic() {
    let a = run_kinetic(&tiny(), None).unwrap();
    let b = run_kinetic(&tiny(), None).unwrap();
    let bits = |r: &[DiagnosticsRecord]| -> Vec<u64> { r.iter().flat_map(|x| x.values()).map(f64::to_bits).collect() };
    assert_eq!(bits(&a.records), bits(&b.records));
}

#[test]
fn zero_final_time_gives_initial_record() {
    let mut c = tiny();
    c.time.t_final = 0.0;
    let r = run_kinetic(&c, None).unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].t, 0.0);
}

#[test]
fn equilibrium_records_are_flat() {
    let mut c = tiny();
    c.initial.kind = InitialKind::Equilibrium;
    let r = run_kinetic(&c, None).unwrap();
    let first = &r.records[0];
    for rec in &r.records {
        assert!((rec.mass - first.mass).abs() < 1e-12 * first.mass);
        assert!((rec.free_energy - first.free_energy).abs() < 1e-10 * first.free_energy.abs());
        assert!(rec.field_energy < 1e-20);
    }
}

#[test]
fn uniform_limit_density_is_stationary() {
    let mut c = tiny();
    c.initial.density_amplitude = 0.0;
    let r = run_limit(&c).unwrap();
    let n0 = &r.snapshots[0].n.data;
    let n1 = &r.snapshots.last().unwrap().n.data;
    let d = n0.iter().zip(n1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-13, "{d}");
}

#[test]
fn cli_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, tiny().to_toml()).unwrap();
    let out = dir.path().join("out");
    let st = Command::new(env!("CARGO_BIN_EXE_vmfp"))
        .args(["run-kinetic", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--eps", "0.3"])
        .status()
        .unwrap();
    assert!(st.success());
    let recs = read_records(&out.join("records.csv")).unwrap();
    assert_eq!(recs[0].eps, 0.3);
    let diag = Command::new(env!("CARGO_BIN_EXE_vmfp")).arg("diag").arg(&out).output().unwrap();
    assert!(diag.status.success());
    let v: serde_json::Value = serde_json::from_slice(&diag.stdout).unwrap();
    assert!(v.is_object());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nn1 = 0\n").unwrap();
    let st = Command::new(env!("CARGO_BIN_EXE_vmfp"))
        .args(["run-limit", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
