use std::fs;
use std::path::Path;

use sgdlab_cli::config::{emit, parse_str};
use sgdlab_cli::main_with;

const SMALL: &str = r#"
seed = 4

[scenario]
epsilon = 0.01
runs = 20
band = [0.75, 1.25]
transitions = [-0.5, 0.5]
landscape = { preset = "double_well" }
noise = { family = "alpha_stable", alpha = 1.5 }
steps = { kind = "literal", steps = 2000 }
start = { kind = "point", x = 1.0 }

[table1]
stable_epsilons = [0.1]
gaussian_epsilons = [0.1]
multiple = 1.0
runs = 20

[table2]
stable_epsilons = [0.1]
gaussian_epsilons = []
multiple = 2.0
runs = 20

[table3]
betas = [1.0]
runs = 200

[escape]
betas = [1.0]
runs = 200

[sticking]
ks = [1]
epsilons = [0.01]
runs = 10

[himmelblau]
epsilons = [0.001]
steps = 2000
"#;

fn sgdlab(args: &[&str]) -> i32 {
    let mut full = vec!["sgdlab"];
    full.extend_from_slice(args);
    main_with(full)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn every_subcommand_writes_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let golden = [
        ("run", "runs.csv", "index,seed,x0,final_x,steps,status,exit_step,exit_side,crossings,transitions"),
        ("trajectory", "trajectory.csv", "step,x"),
        ("table1", "table1.csv", "noise,epsilon,n_eps,fraction,ci_halfwidth,runs"),
        ("table2", "table2.csv", "noise,epsilon,n_eps,multiple,steps,fraction,ci_halfwidth,runs"),
        ("table3", "table3.csv", "beta,mu_up,mu_down,sim_left,est_left,sim_right,est_right"),
        ("escape", "escape.csv", "beta,mu_up,mu_down,sim_left,est_left,sim_right,est_right"),
        ("sticking", "sticking.csv", "regime,k,epsilon,delta,horizon,containment,ci_halfwidth,runs"),
        ("timescale", "timescale.csv", "epsilon,n_eps,eps_times_n,tail_times_n,eps_sq_times_n"),
        ("himmelblau", "himmelblau_eps1e-3.csv", "step,x,y"),
    ];
    for (cmd, file, want) in golden {
        let code = sgdlab(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{cmd}");
        assert_eq!(header(&out.join(file)), want, "{cmd}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    for key in ["config", "counters", "wall_clock_secs", "version"] {
        assert!(summary.get(key).is_some(), "summary.json lacks {key}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("alpha = 1.5", "alpha = 2.5")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(sgdlab(&["run", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert!(!out.join("runs.csv").exists());

    let errs = parse_str(&SMALL.replace("alpha = 1.5", "alpha = 2.5")).unwrap().validate();
    assert!(errs.iter().any(|e| e.path == "scenario.noise" && e.message.contains("alpha must lie in (1,2)")), "{errs:?}");

    assert_eq!(sgdlab(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]), 1);
    assert_eq!(sgdlab(&["frobnicate"]), 1);
}

#[test]
fn help_and_version_exit_with_zero() {
    assert_eq!(sgdlab(&["--help"]), 0);
    assert_eq!(sgdlab(&["--version"]), 0);
}

#[test]
fn presets_round_trip() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut seen = 0;
    for entry in fs::read_dir(presets).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let first = parse_str(&text).unwrap_or_else(|e| panic!("{}: {e:?}", path.display()));
        assert!(first.validate().is_empty(), "{}", path.display());
        let second = parse_str(&emit(&first)).unwrap();
        assert_eq!(emit(&first), emit(&second), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 9);
}
