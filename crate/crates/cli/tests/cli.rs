use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use wave_recon_cli::{preset, Flags, RunManifest, Task, PRESETS};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wave-recon"));
    cmd.env_remove(wave_recon_cli::OUT_DIR_ENV);
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn parse(args: &[String]) -> RunManifest {
    let mut argv = vec!["wave-recon".to_string()];
    argv.extend_from_slice(args);
    let mut flags = Flags::try_parse_from(argv).unwrap();
    // the environment never reaches these comparisons
    if !args.iter().any(|a| a == "--out") {
        flags.out = None;
    }
    RunManifest::resolve(flags).unwrap()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run_in(dir.path(), &["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("--preset") && stdout.contains("--obs-file"));
}

#[test]
fn typo_in_preset_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["--preset", "table-ex1-rhh"]);
    assert_eq!(code, 2);
    for (name, _) in PRESETS {
        assert!(stderr.contains(name), "{stderr}");
    }
}

#[test]
fn bad_names_and_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--example", "ex2"][..],
        &["--formulation", "uzawa"],
        &["--r", "h3"],
        &["--example", "ex3", "--formulation", "mixed"],
        &["--levels", "1"],
        &["--obs-file", "missing.csv", "--levels", "4"],
    ] {
        let (code, _, stderr) = run_in(dir.path(), args);
        assert_eq!(code, 2, "{args:?}: {stderr}");
    }
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub").display().to_string();
    let (code, _, stderr) = run_in(dir.path(), &["--levels", "4", "--out", &out]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn solver_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["--formulation", "dual-cg", "--levels", "6", "--cg-max-iter", "2", "--out", "o"],
    );
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("did not converge"));
    // outputs are still written for inspection
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn sweep_writes_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--example", "ex1", "--formulation", "mixed", "--r", "h2", "--levels", "8,16,32", "--T", "2"];
    fn with_out<'a>(args: &[&'a str], o: &'a str) -> Vec<&'a str> {
        let mut v = args.to_vec();
        v.extend(["--out", o]);
        v
    }
    let (code, _, stderr) = run_in(dir.path(), &with_out(&args, "a"));
    assert_eq!(code, 0, "{stderr}");
    let a = dir.path().join("a");
    let conv = fs::read_to_string(a.join("convergence.csv")).unwrap();
    let rows: Vec<Vec<f64>> = conv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(conv.lines().next().unwrap(), "h,rel_state_err,rel_trace_err,norm_Ly,norm_lambda,iters");
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]), "{conv}");
    for f in ["report.json", "table.csv", "manifest.conf", "levels/nx0016.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    assert!(report["rates"]["state"].as_f64().unwrap() > 0.5);

    // same flags, fewer workers: byte-identical tables
    let mut serial = with_out(&args, "b");
    serial.extend(["--jobs", "1"]);
    assert_eq!(run_in(dir.path(), &serial).0, 0);
    // the manifest copy reproduces the run on its own
    assert_eq!(run_in(dir.path(), &["--config", "a/manifest.conf", "--out", "c"]).0, 0);
    for other in ["b", "c"] {
        for f in ["convergence.csv", "table.csv"] {
            let x = fs::read(a.join(f)).unwrap();
            let y = fs::read(dir.path().join(other).join(f)).unwrap();
            assert_eq!(x, y, "{other}/{f}");
        }
    }
}

#[test]
fn dual_cg_reports_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["--example", "ex1", "--formulation", "dual-cg", "--r", "h2", "--levels", "10", "--out", "o"],
    );
    assert_eq!(code, 0, "{stderr}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    let diag = &report["levels"][0]["diagnostics"];
    assert!(diag["iterations"].as_u64().unwrap() > 5);
    assert_eq!(diag["converged"], true);
    let table = fs::read_to_string(dir.path().join("o/table.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("iters,")));
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .current_dir(dir.path())
        .env(wave_recon_cli::OUT_DIR_ENV, "from-env")
        .args(["--levels", "4"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("from-env/convergence.csv").exists());
    let status = bin()
        .current_dir(dir.path())
        .env(wave_recon_cli::OUT_DIR_ENV, "from-env2")
        .args(["--levels", "4", "--out", "from-flag"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("from-flag/convergence.csv").exists());
    assert!(!dir.path().join("from-env2").exists());
}

#[test]
fn config_file_mirrors_flags_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(
        &path,
        "# a source run\nexample = ex4\nformulation = source\nr = h4\nlevels = 6, 12\nT = 2\nout = conf-out\n",
    )
    .unwrap();
    let p = path.display().to_string();
    let m = parse(&["--config".into(), p.clone(), "--levels".into(), "8".into()]);
    assert_eq!(m.levels, vec![8]);
    assert_eq!(m.example.name(), "ex4");
    assert_eq!(m.out_dir, Path::new("conf-out"));
    assert_eq!(m.config_file.as_deref(), Some(path.as_path()));

    let (code, _, stderr) = run_in(dir.path(), &["--config", &p]);
    assert_eq!(code, 0, "{stderr}");
    let conv = fs::read_to_string(dir.path().join("conf-out/convergence.csv")).unwrap();
    assert!(conv.starts_with("h,rel_state_err,rel_trace_err,norm_Ly,norm_lambda,rel_mu_err,iters\n"));
    assert!(dir.path().join("conf-out/source_nx0012.csv").exists());

    fs::write(&path, "levels 4\n").unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["--config", &p]);
    assert_eq!(code, 2);
    assert!(stderr.contains("key = value"), "{stderr}");
}

#[test]
fn observation_file_input() {
    let dir = tempfile::tempdir().unwrap();
    // flux of sin(pi x) cos(pi t) on x = 1
    let mut csv = String::from("t,value\n");
    for k in 0..=400 {
        let t = 2.0 * k as f64 / 400.0;
        csv += &format!("{t},{}\n", -std::f64::consts::PI * (std::f64::consts::PI * t).cos());
    }
    fs::write(dir.path().join("obs.csv"), csv).unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["--obs-file", "obs.csv", "--levels", "8", "--out", "o"]);
    assert_eq!(code, 0, "{stderr}");
    let conv = fs::read_to_string(dir.path().join("o/convergence.csv")).unwrap();
    let row: Vec<&str> = conv.lines().nth(1).unwrap().split(',').collect();
    // no exact solution: error columns are empty, the multiplier is tiny
    assert_eq!(row[1], "");
    assert!(row[4].parse::<f64>().unwrap() < 1e-3, "{conv}");
    let manifest = fs::read_to_string(dir.path().join("o/manifest.conf")).unwrap();
    assert!(manifest.contains("example = file"));
}

#[test]
fn infsup_sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["--task", "infsup", "--r-sweep", "1,h2", "--levels", "4,8", "--out", "o"],
    );
    assert_eq!(code, 0, "{stderr}");
    let table = fs::read_to_string(dir.path().join("o/table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("r,"));
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("h2,"));
    let long = fs::read_to_string(dir.path().join("o/convergence.csv")).unwrap();
    assert_eq!(long.lines().count(), 5);
}

#[test]
fn manifests_round_trip_through_flags() {
    let mut manifests: Vec<RunManifest> = PRESETS.iter().map(|(n, _)| preset(n).unwrap()).collect();
    manifests.push(RunManifest::default());
    manifests.push(parse(
        &["--example", "ex5", "--formulation", "source", "--r", "0.001", "--levels", "5,7", "--noise", "0.02", "--seed", "42", "--T", "2.5", "--side", "left", "--alpha", "0.25", "--cg-tol", "1e-9", "--out", "x/y"]
            .map(String::from),
    ));
    for m in manifests {
        assert_eq!(parse(&m.to_args()), m, "{:?}", m.preset);
        let via_text = Flags::from_config_text(&m.to_config_text()).unwrap();
        assert_eq!(RunManifest::resolve(via_text).unwrap(), m);
    }
}

#[test]
fn presets_cover_the_tables() {
    let infsup = preset("table-infsup").unwrap();
    assert_eq!(infsup.task, Task::Infsup);
    assert_eq!(infsup.r_sweep.len() * infsup.levels.len(), 25);
    assert_eq!(preset("table-ex1-rh2").unwrap().levels.len(), 5);
    for name in ["table-ex3", "table-ex4", "table-ex5"] {
        assert_eq!(preset(name).unwrap().formulation.to_string(), "source");
    }
}
