use std::process::{Command, Output};

fn holstein(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holstein")).args(args).output().expect("spawn holstein")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_header_and_one_row_per_point() {
    let o = holstein(&["simulate", "--sweep", "theta=0:3.141592653589793:5", "--sweep", "T=0.01:0.02:2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "observable,theta_rad,time_s,B0_tesla,temperature_K,value,flags");
    assert_eq!(lines.len(), 1 + 10);
    assert!(text.contains("# rows=10"));
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0], "pt");
        let v: f64 = fields[5].parse().unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
}

#[test]
fn output_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "2", "8"] {
        let path = dir.path().join(format!("w{w}.csv"));
        let o = holstein(&[
            "simulate",
            "--observable",
            "pts_max",
            "--sweep",
            "theta=0:1.5707963267948966:4",
            "--sweep",
            "t=0:20:201",
            "--time-in-inverse-omega",
            "--max-cutoff",
            "64",
            "--workers",
            w,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn json_output_parses() {
    let o = holstein(&["simulate", "--observable", "kt", "--format", "json", "--sweep", "B0=0:1e-4:3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    std::fs::write(&cfg, r#"{"J_ev": 5e-5, "phonon_cutoff": 32}"#).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate"];
        args.extend_from_slice(extra);
        let o = holstein(&args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        data_lines(&text)[1].split(',').nth(5).unwrap().parse::<f64>().unwrap()
    };
    let full = run(&["--config", cfg.to_str().unwrap()]);
    std::fs::write(&cfg, r#"{"phonon_cutoff": 32}"#).unwrap();
    let base = run(&["--config", cfg.to_str().unwrap()]);
    assert!((base / full / 4.0 - 1.0).abs() < 1e-9, "{}", base / full);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"not_a_key": 1}"#).unwrap();
    for args in [
        vec!["simulate", "--sweep", "theta=0:1"],
        vec!["simulate", "--sweep", "speed=0:1:2"],
        vec!["simulate", "--observable", "nonsense"],
        vec!["simulate", "--observable", "b0_scan"],
        vec!["simulate", "--sweep", "T=-1:1:2"],
        vec!["simulate", "--config", cfg.to_str().unwrap()],
        vec!["simulate", "--config", "/nonexistent/params.json"],
        vec!["frobnicate"],
    ] {
        let o = holstein(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(holstein(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_tables_reports_every_entry_and_warns_on_flags() {
    let o = holstein(&["verify-tables"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("table,entry,numeric,printed,deviation,status,note\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",ok,") || l.contains(",flagged,")));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("warning:")).count(), text.matches(",flagged,").count());
}

#[test]
fn dump_eigensystem_prints_24_pairs() {
    let o = holstein(&["dump-eigensystem"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 25);
    assert_eq!(lines[0].split(',').count(), 26);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
        assert!((v.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn oracle_compare_exit_codes() {
    // small instance, grid inside the first recurrence: within tolerance
    let p = holstein_core::oracle::small_oracle_instance().unwrap();
    let model = holstein_core::vibronic::VibronicModel::new(&p).unwrap();
    let t_rec = holstein_core::oracle::recurrence_time(holstein_core::oracle::smallest_coupled_gap(&model));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, p.to_json_value().to_string()).unwrap();
    let grid = format!("t={:e}:{:e}:8", t_rec / 8.0, t_rec);
    let o = holstein(&["oracle-compare", "--config", cfg.to_str().unwrap(), "--sweep", &grid]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("# error_window=before_recurrence"));

    // published parameters with a 4-level oracle disagree badly
    let o = holstein(&["oracle-compare", "--observable", "pts", "--sweep", "t=1:20:4", "--time-in-inverse-omega"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    // dimension cap violation is a validation error
    let o = holstein(&["oracle-compare", "--oracle-cutoff", "64", "--max-dimension", "100"]);
    assert_eq!(o.status.code(), Some(1));
}
