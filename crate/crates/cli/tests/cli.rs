use std::path::{Path, PathBuf};
use std::process::Command;

use lrising_cli::config::LoadedConfig;
use lrising_cli::run::validate;
use lrising_cli::verify::{kernel_sum_equivalence, MisSigned};
use lrising_cli::{EXIT_DOMAIN, EXIT_ENUMERATION, EXIT_PARSE, EXIT_TOLERANCE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lrising"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, out: &Path) -> std::process::Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn repo_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(repo_configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = LoadedConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        validate(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn sums_scan_converges_to_the_continuum_constant() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&repo_configs().join("sums_scan.toml"), out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.path().join("sums_scan.csv")).unwrap();
    assert!(text.starts_with("# schema_version = 1\n"));
    assert!(text.contains("# resolved_seed = 1\n"));
    let q = 8.0 * 2f64.sqrt();
    let errs: Vec<f64> = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .map(|l| (l.split(',').nth(3).unwrap().parse::<f64>().unwrap() - q).abs())
        .collect();
    assert_eq!(errs.len(), 9);
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(errs[8] / q < 0.01);
    assert_eq!(listing(out.path()), vec!["sums_scan.csv"]);
}

#[test]
fn invalid_exponent_is_a_domain_error_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "schema_version = 1\nkind = \"sums_scan\"\n[params]\ndim = 2\ns = 2.0\nJ = 1.0\nl_grid = [4]\n",
    );
    let out = dir.path().join("out");
    let res = run(&cfg, &out);
    assert_eq!(res.status.code(), Some(EXIT_DOMAIN));
    assert!(!out.exists());
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let parse = write_config(dir.path(), "p.toml", "schema_version = 1\nkind = \"nope\"\n");
    assert_eq!(run(&parse, &out).status.code(), Some(EXIT_PARSE));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&missing, &out).status.code(), Some(EXIT_PARSE));
    let tol = write_config(
        dir.path(),
        "t.toml",
        "schema_version = 1\nkind = \"sums_scan\"\n[params]\ndim = 1\ns = 1.5\nJ = 1.0\ntol = 1e-30\nl_grid = [1000]\n",
    );
    assert_eq!(run(&tol, &out).status.code(), Some(EXIT_TOLERANCE));
    let cap = write_config(
        dir.path(),
        "c.toml",
        "schema_version = 1\nkind = \"exact_check\"\n[params]\ndim = 2\ns = 3.0\nJ = 1.0\ninner_l = 2\nkappas = [0.5]\nexteriors = [{ uniform = 1 }]\n",
    );
    assert_eq!(run(&cap, &out).status.code(), Some(EXIT_ENUMERATION));
    assert!(!out.exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.toml",
        r#"schema_version = 1
kind = "mc_run"
seed = 9

[params]
dim = 2
s = 3.0
J = 1.2
beta = 0.8
h = 0.05
side = 8
start = "random"
equil_sweeps = 20
measure_sweeps = 50
blocks = [2, 4]
t_inner = 1
"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a).status.success());
    assert!(run(&cfg, &b).status.success());
    for name in ["mc_run.csv", "mc_run.ckpt"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(listing(&a), vec!["mc_run.ckpt", "mc_run.csv"]);
    // the seed flag overrides the config and changes the trajectory
    let c = dir.path().join("c");
    let res = bin()
        .args(["run", "--seed", "10", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&c)
        .output()
        .unwrap();
    assert!(res.status.success());
    let text = std::fs::read_to_string(c.join("mc_run.csv")).unwrap();
    assert!(text.contains("# resolved_seed = 10\n"));
    assert_ne!(text.into_bytes(), std::fs::read(a.join("mc_run.csv")).unwrap());
}

#[test]
fn exact_check_accepts_zero_beta_and_echoes_config() {
    let out = tempfile::tempdir().unwrap();
    let res = run(&repo_configs().join("exact_check.toml"), out.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.path().join("exact_check.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(keys, ["schema_version", "kind", "seed", "config", "result"]);
    assert!(v["config"].as_str().unwrap().contains("kind = \"exact_check\""));
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 3 * 4 * 3);
    assert!(rows.iter().all(|r| r["holds"].as_bool().unwrap()));
    assert!(String::from_utf8_lossy(&res.stdout).contains("36/36"));
}

#[test]
fn field_sweep_json_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fs.toml",
        r#"schema_version = 1
kind = "field_sweep"
output = "free"

[params]
dim = 1
s = 2.0
J = 0.0
kappa = 0.0
sides = [8]
h_grid = [0.5, 0.25, 0.125]
equil_sweeps = 5
measure_sweeps = 64
"#,
    );
    let out = dir.path().join("out");
    assert!(run(&cfg, &out).status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("free.json")).unwrap()).unwrap();
    let per_l = &v["result"][0];
    assert_eq!(per_l["side"], 8);
    assert_eq!(per_l["points"].as_array().unwrap().len(), 3);
    for key in ["h", "m_mean", "m_err"] {
        assert!(per_l["points"][0].get(key).is_some());
    }
    let m0 = per_l["intercept"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&m0));
    assert!(per_l.get("intercept_err").is_some());
}

#[test]
fn verify_exact_suite_passes() {
    let res = bin().args(["verify", "mc-exact"]).output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.starts_with("[PASS] criterion  7"));
}

#[test]
fn mis_signed_kernel_fails_equivalence() {
    let c = kernel_sum_equivalence(&|p| Box::new(MisSigned(p.kernel())));
    assert!(!c.passed, "{c}");
    assert!(c.measured.contains("disjoint"));
}
