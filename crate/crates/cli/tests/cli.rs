use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn csklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csklab")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn calibrate_reports_diffusion_and_optima() {
    let o = csklab(&["calibrate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let d: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("diffusion_coefficient = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((d / 7.6238e-11 - 1.0).abs() < 1e-3);
    for key in ["min_pe[beta=0]", "capacity_bits[beta=1]", "argmax_lambda[beta=0.5]", "calibration_achieved_pe"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn distance_sweep_fills_lambda_column() {
    let out = scratch("distance.csv");
    let o = csklab(&["sweep-distance", "--betas", "0,1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("variable_name,variable_value,beta,engine,pe,pe_ci_halfwidth,mi_bits,lambda,"));
    assert_eq!(rows.len(), 1 + 9 * 2);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], "distance");
        assert_eq!(cols[5], "", "analytic rows carry no interval");
        assert_eq!(cols[7], "20");
    }
    assert!(text.contains("# diffusion_source = calibrate"));
}

#[test]
fn threshold_sweep_to_stdout_records_seed() {
    let cfg = scratch("small.conf");
    fs::write(&cfg, "threshold_grid = 10:30:10\nnum_slots = 2000\nengine = both\n").unwrap();
    let o = csklab(&["sweep-threshold", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# master_seed = 7"));
    assert!(text.contains("# num_slots = 2000"));
    let mc_rows = text.lines().filter(|l| l.contains(",montecarlo,")).count();
    assert_eq!(mc_rows, 3 * 3);
    // optimum summaries go to stderr as well as metadata
    assert!(String::from_utf8_lossy(&o.stderr).contains("max MI"));
}

#[test]
fn simulate_prints_both_engines() {
    let o = csklab(&["simulate", "--slots", "5000", "--betas", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("pe[beta=0.5] = "));
    assert!(text.contains("analytic_pe[beta=0.5] = "));
    assert!(text.contains("molecules[beta=0.5] = released "));
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.conf");
    fs::write(&bad, "n = 100\ncolour = blue\n").unwrap();
    let o = csklab(&["calibrate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let unreachable = scratch("unreachable.conf");
    fs::write(&unreachable, "n = 1\ncalibrate_target_pe = 1e-9\n").unwrap();
    let o = csklab(&["calibrate", "--config", unreachable.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let o = csklab(&["sweep-threshold", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x.csv"));

    let o = csklab(&["calibrate", "--config", "/nonexistent-dir/missing.conf"]);
    assert_eq!(o.status.code(), Some(4));
}
