use std::path::Path;
use std::process::{Command, Output};

fn fracsolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsolve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn solve_sir_emits_one_row_per_grid_point() {
    let o = fracsolve(&["solve", "--model", "sir", "--method", "pc", "--h", "0.015625"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,x1,x2,x3"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6401);
    assert_eq!(rows.last().unwrap()[0], 100.0);
    assert!(!text.contains('\r'));
}

#[test]
fn solve_harmonic_has_a_single_state_column() {
    let o = fracsolve(&["solve", "--model", "harmonic", "--method", "nr"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("t,x1"));
}

#[test]
fn unknown_model_is_a_usage_error() {
    let o = fracsolve(&["solve", "--model", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown model"));
}

#[test]
fn malformed_flags_are_usage_errors() {
    for args in [
        &["solve", "--model", "sir", "--h", "tiny"][..],
        &["solve", "--model", "sir", "--tspan", "0"][..],
        &["solve", "--model", "sir", "--method", "rk4"][..],
        &["solve", "--model", "sir", "--fft", "maybe"][..],
        &["order", "--model", "sir"][..],
        &["bogus"][..],
    ] {
        assert_eq!(fracsolve(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn divergence_exits_with_one() {
    let o = fracsolve(&[
        "solve", "--model", "stiff", "--params", "-1e4", "--tspan", "0,100", "--h", "0.5", "--nc", "4",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim().lines().count(), 1);
    assert!(err.contains("diverged"));
}

#[test]
fn bench_nonstiff_errors_fall_with_h() {
    let o = fracsolve(&["bench", "--model", "nonstiff", "--method", "pc,nr", "--h", "2^-3,2^-4,2^-5,2^-6,2^-7,2^-8", "--repeats", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("model,method,h,wall_time_s,error,iterations"));
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 12);
    for method in ["PC", "NR"] {
        let errs: Vec<f64> = lines
            .iter()
            .filter(|l| l.split(',').nth(1) == Some(method))
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect();
        assert_eq!(errs.len(), 6);
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{method}: {errs:?}");
    }
    for l in &lines {
        let wall: f64 = l.split(',').nth(3).unwrap().parse().unwrap();
        assert!(wall > 0.0);
    }
}

#[test]
fn bench_marks_stiff_pc_at_coarse_step() {
    let o = fracsolve(&["bench", "--model", "stiff", "--method", "pc", "--h", "2^-3", "--nc", "4", "--repeats", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let err = text.lines().nth(1).unwrap().split(',').nth(4).unwrap();
    assert!(err == "inf" || err.parse::<f64>().unwrap() > 1.0, "{err}");
}

#[test]
fn bench_against_fine_reference_improves_for_every_model() {
    for model in ["nonstiff", "stiff", "harmonic", "sir", "lv3", "glv", "covid"] {
        let o = fracsolve(&[
            "bench", "--model", model, "--method", "nr", "--h", "2^-3,2^-6", "--reference", "fine", "--repeats", "1",
        ]);
        assert!(o.status.success(), "{model}: {}", String::from_utf8_lossy(&o.stderr));
        let errs: Vec<f64> = stdout(&o)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect();
        assert!(errs[1].is_finite() && errs[1] < errs[0], "{model}: {errs:?}");
    }
}

#[test]
fn sequential_bench_matches_parallel_errors() {
    let run = |extra: &[&str]| {
        let mut args = vec!["bench", "--model", "sir", "--reference", "fine", "--h", "2^-3,2^-4", "--repeats", "1"];
        args.extend_from_slice(extra);
        data_rows_text(&stdout(&fracsolve(&args)))
    };
    assert_eq!(run(&[]), run(&["--sequential"]));
}

/// Rows with the timing column dropped.
fn data_rows_text(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(3);
            f.join(",")
        })
        .collect()
}

fn mean_order(args: &[&str]) -> f64 {
    let o = fracsolve(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    err.trim().strip_prefix("mean order ").unwrap().parse().unwrap()
}

#[test]
fn order_examples() {
    let p = mean_order(&["order", "--model", "nonstiff", "--method", "pc", "--nc", "2"]);
    assert!((1.3..=1.7).contains(&p), "{p}");
    let p = mean_order(&["order", "--model", "harmonic", "--method", "nr", "--h", "2^-2,2^-3,2^-4,2^-5,2^-6,2^-7", "--norm", "max"]);
    assert!((1.7..=2.3).contains(&p), "{p}");
    let p = mean_order(&["order", "--model", "nonstiff", "--method", "nr", "--tol", "1e-10", "--norm", "max"]);
    assert!((1.7..=2.3).contains(&p), "{p}");
}

#[test]
fn order_table_has_one_estimate_per_pair() {
    let o = fracsolve(&["order", "--model", "stiff", "--method", "nr", "--h", "2^-4,2^-5,2^-6"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("h,error,order"));
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().ends_with(','));
}

fn write_series(path: &Path, rows: &[(usize, f64)]) {
    let mut s = String::from("day,count\n");
    for (d, v) in rows {
        s.push_str(&format!("{d},{v:.17e}\n"));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn rmsd_of_the_model_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let o = fracsolve(&["solve", "--model", "covid", "--h", "2^-4", "--out", traj.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = data_rows(&std::fs::read_to_string(&traj).unwrap());
    let daily: Vec<(usize, f64)> = (0..=120).map(|d| (d, rows[16 * d][3] + rows[16 * d][4] + rows[16 * d][6])).collect();

    let data = dir.path().join("data.csv");
    write_series(&data, &daily);
    let rmsd = |file: &Path| {
        let o = fracsolve(&[
            "rmsd", "--model", "covid", "--h", "2^-4", "--data", file.to_str().unwrap(), "--compartments", "I+P+H",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o).trim().parse::<f64>().unwrap()
    };
    assert!(rmsd(&data) <= 1e-12);

    let shifted = dir.path().join("shifted.csv");
    write_series(&shifted, &daily.iter().map(|&(d, v)| (d, v + 1.0)).collect::<Vec<_>>());
    assert!((rmsd(&shifted) - 1.0).abs() < 1e-6);
}

#[test]
fn rmsd_reports_missing_files_and_overlong_series() {
    let o = fracsolve(&["rmsd", "--model", "sir", "--data", "/no/such/file.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("long.csv");
    write_series(&data, &[(0, 1.0), (500, 1.0)]);
    let o = fracsolve(&["rmsd", "--model", "sir", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fft_switch_only_changes_rounding() {
    let on = data_rows(&stdout(&fracsolve(&["solve", "--model", "lv3", "--method", "nr", "--fft", "on"])));
    let off = data_rows(&stdout(&fracsolve(&["solve", "--model", "lv3", "--method", "nr", "--fft", "off"])));
    assert_eq!(on.len(), off.len());
    for (a, b) in on.iter().zip(&off) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9, "{x} {y}");
        }
    }
}
