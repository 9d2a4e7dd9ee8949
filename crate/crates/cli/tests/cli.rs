use std::path::Path;
use std::process::{Command, Output};

fn xflow(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xflow"))
        .args(args)
        .env("XFLOW_OUTPUT_ROOT", root)
        .env("XFLOW_THREADS", "2")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
[grid]
dim = 1
cells = 64
length = 4.0

[energy]
family = "power"
m = 2.0

[time]
t_end = 0.05
snapshot_every = 0.025

[initial.rho1]
kind = "gaussian"
amplitude = 1.0
width = 0.3
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = xflow(tmp.path(), &["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("small");
    for f in ["config.toml", "manifest.json", "ledger.csv", "snapshots/rho1_00002.xflw"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let out = xflow(tmp.path(), &["report", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("balance at t = 0.05"), "{text}");
    assert!(text.contains("rho_p_extra_control"));
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), &SMALL.replace("m = 2.0", "m = 1.0"));
    let out = xflow(tmp.path(), &["run", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entropy"));

    let missing = tmp.path().join("nope.toml");
    let out = xflow(tmp.path(), &["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let saturating = write_config(
        tmp.path(),
        &SMALL.replace("family = \"power\"\nm = 2.0", "family = \"tabulated\"\ntable = \"z.txt\""),
    );
    std::fs::write(tmp.path().join("z.txt"), "0 0\n0.5 0.5\n1.0 1.0\n1.2 1.44\n").unwrap();
    let grow = std::fs::read_to_string(&saturating).unwrap().replace(
        "[time]",
        "[sources]\nkind = \"homeostatic\"\ng1 = 50.0\np_h = 100.0\n\n[time]",
    );
    std::fs::write(&saturating, grow).unwrap();
    let out = xflow(tmp.path(), &["run", "--config", &saturating]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("small/manifest.json").exists());
}

#[test]
fn emit_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = xflow(tmp.path(), &["emit-config"]);
    assert!(out.status.success());
    let first = String::from_utf8(out.stdout).unwrap();
    let cfg = write_config(tmp.path(), &first);
    let out = xflow(tmp.path(), &["emit-config", "--config", &cfg]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), first);
}

#[test]
fn studies_write_tables_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = xflow(
        tmp.path(),
        &["viscosity-study", "--config", &cfg, "--gammas", "1e-2,1e-1,1e-3", "--checkpoints", "10"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dat = std::fs::read_to_string(tmp.path().join("small-viscosity/viscosity.dat")).unwrap();
    let lines: Vec<&str> = dat.lines().collect();
    assert_eq!(lines[0], "# gamma dist");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1.0000000000000001e-1"));

    let out = xflow(
        tmp.path(),
        &["validate", "barenblatt", "--grids", "64,128", "--t-end", "0.2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("barenblatt/barenblatt.csv").exists());

    let out = xflow(
        tmp.path(),
        &["validate", "barenblatt", "--grids", "64", "--length", "2"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("length >="));
}
