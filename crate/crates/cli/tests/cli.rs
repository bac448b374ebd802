use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
        .args(args)
        .env("NEMATIC_OUTPUT_DIR", out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"
[grid]
nx = 12
ny = 12

[forcing]
kappa = 0.5

[run]
name = "small"
t_end = 0.05
dt = 1e-3
sample_every = 5
seed = 3
checks = ["energy-law", "max-principle"]
"#;

#[test]
fn list_presets_names_every_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nematic(&["list-presets"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in [
        "energy-law-autonomous",
        "omega-limit",
        "rate-gamma2",
        "lifting-check",
        "minimizer-perturbation",
        "winding-defect",
    ] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn unknown_preset_is_an_error_listing_the_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nematic(&["preset", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("omega-limit"));
}

#[test]
fn missing_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nematic(&["run", "missing.cfg"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        &SMALL.replace("seed = 3", "seed = 3\nsed = 4"),
    );
    let o = nematic(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sed"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(nematic(&["launch"], tmp.path()).status.code(), Some(1));
    assert_eq!(nematic(&[], tmp.path()).status.code(), Some(1));
    let help = nematic(&["--help"], tmp.path());
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("fit-rate"));
}

#[test]
fn run_writes_outputs_under_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let o = nematic(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let dir = tmp.path().join("small");
    for f in ["records.csv", "final.snap", "manifest.txt"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let text = stdout(&o);
    assert!(
        text.contains("PASS energy-residual") && text.contains("PASS max-principle"),
        "{text}"
    );
}

#[test]
fn output_flag_overrides_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let other = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let o = nematic(
        &["--output", other.path().to_str().unwrap(), "run", &cfg],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(other.path().join("small/manifest.txt").is_file());
    assert!(!tmp.path().join("small").exists());
}

#[test]
fn failing_check_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        r#"checks = ["energy-law", "max-principle"]"#,
        r#"checks = ["omega-limit"]"#,
    );
    let cfg = write(tmp.path(), "short.toml", &text);
    let o = nematic(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn fit_rate_recovers_a_planted_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,dist_d_L2,other\n");
    for k in 0..100 {
        let t = k as f64 * 0.5;
        csv.push_str(&format!("{t},{},{}\n", 5.0 * (1.0 + t).powi(-3), 1.0));
    }
    let path = write(tmp.path(), "series.csv", &csv);
    let o = nematic(&["fit-rate", &path, "dist_d_L2"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "3.000");
    let missing = nematic(&["fit-rate", &path, "nope"], tmp.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("dist_d_L2"));
}

#[test]
fn majorant_matches_the_closed_form_blow_up_time() {
    let tmp = tempfile::tempdir().unwrap();
    let want = 0.5 * 2.0_f64.ln();
    let cfg = write(
        tmp.path(),
        "m.toml",
        &format!("[majorant]\nc_star = 1.0\ny0 = 1.0\nexpected_t_max = {want}\n"),
    );
    let o = nematic(&["majorant", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("T_max 0.34657"), "{}", stdout(&o));
    assert!(tmp.path().join("majorant/majorant.csv").is_file());

    let wrong = write(
        tmp.path(),
        "w.toml",
        "[majorant]\nc_star = 1.0\ny0 = 1.0\nexpected_t_max = 0.4\n",
    );
    assert_eq!(
        nematic(&["majorant", &wrong], tmp.path()).status.code(),
        Some(2)
    );
}

#[test]
fn steady_solves_and_writes_the_equilibrium() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let o = nematic(&["steady", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(tmp.path().join("small/equilibrium.snap").is_file());
    assert!(stdout(&o).contains("lowest eigenvalue"));
}

#[test]
fn lifting_check_runs_in_lifting_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace(
            "kappa = 0.5",
            "kappa = 0.5\nfamily = \"polynomial-decay\"\na_h = 0.3",
        )
        .replace("t_end = 0.05", "t_end = 50.0")
        .replace("dt = 1e-3", "dt = 1e-2");
    let cfg = write(tmp.path(), "lift.toml", &text);
    let o = nematic(&["lifting-check", &cfg], tmp.path());
    let out = stdout(&o);
    assert!(out.contains("lifting-dtdp-exponent"), "{out}{}", stderr(&o));
    assert!(tmp.path().join("small/lifting.csv").is_file());
    assert_eq!(o.status.code(), Some(0), "{out}");
}

#[test]
fn readme_config_example_runs() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").unwrap() + "```toml\n".len();
    let body = &readme[start..];
    let text = &body[..body.find("```").unwrap()];
    let text = text
        .replace("nx = 64 ", "nx = 12 ")
        .replace("ny = 64", "ny = 12")
        .replace("t_end = 20.0", "t_end = 0.02")
        .replace("dt = 2e-3 ", "dt = 1e-3 ")
        .replace(
            r#"checks = ["energy-law", "max-principle", "omega-limit", "rate"]"#,
            r#"checks = ["energy-law", "max-principle"]"#,
        );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "readme.toml", &text);
    let o = nematic(&["run", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let m = nematic(&["majorant", &cfg], tmp.path());
    assert_eq!(m.status.code(), Some(0), "{}{}", stdout(&m), stderr(&m));
}
