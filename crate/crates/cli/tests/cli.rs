use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ehcrn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehcrn")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value printed after `key` on its report line.
fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap_or_default().to_string())
        })
        .unwrap_or_else(|| panic!("no {key} line in\n{out}"))
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn single_slot_config(b_p: f64, e_p: f64, e_s: f64) -> String {
    format!(
        "[system]\nalpha = 1.0\nsigma2 = 0.1\nb_p = {b_p}\n\n\
         [[slots]]\nh_pp = 1.0\nh_ps = 1.0\nh_ss = 1.0\nh_sp = 1.0\ne_p = {e_p}\ne_s = {e_s}\n"
    )
}

#[test]
fn hand_instance_prints_closed_form() {
    let cfg = configs().join("hand.cfg");
    let o = ehcrn(&["solve-single", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "mode"), "Cooperation");
    assert_eq!(field(&out, "delta_sp"), "0.25");
    assert_eq!(field(&out, "zeta"), "0.5");
    assert_eq!(field(&out, "p_p"), "0.85");
    assert_eq!(field(&out, "p_s"), "0.75");
    assert_eq!(field(&out, "pu_bits"), "1");
}

#[test]
fn small_secondary_harvest_means_no_cooperation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "a.cfg", &single_slot_config(1.0, 0.6, 0.3));
    let o = ehcrn(&["solve-single", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "mode"), "NoCooperation");
    assert_eq!(field(&stdout(&o), "delta_sp"), "0");
}

#[test]
fn unreachable_target_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "a.cfg", &single_slot_config(10.0, 0.01, 0.01));
    let o = ehcrn(&["solve-single", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(field(&stdout(&o), "mode"), "Infeasible");
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "a.cfg", "[system]\nalpha = 1.0\nb_p = 1.0\nsigma = 0.1\n");
    let o = ehcrn(&["solve-single", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("sigma"), "{err}");

    let cfg = write_config(&dir, "b.cfg", "[system]\nalpha = \n");
    let o = ehcrn(&["solve-single", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ehcrn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ehcrn(&["sweep"]).status.code(), Some(1));
    assert_eq!(ehcrn(&["sweep", "--config", "/nonexistent/x.cfg"]).status.code(), Some(1));
    assert_eq!(ehcrn(&["--help"]).status.code(), Some(0));
}

#[test]
fn multi_slot_with_one_slot_matches_single_slot() {
    let dir = tempfile::tempdir().unwrap();
    for (e_p, e_s) in [(0.6, 1.0), (0.6, 0.3), (1.5, 2.0)] {
        let cfg = write_config(&dir, "a.cfg", &single_slot_config(1.0, e_p, e_s));
        let single: f64 = field(&stdout(&ehcrn(&["solve-single", "--config", &cfg])), "su_bits").parse().unwrap();
        let o = ehcrn(&["solve-multi", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let multi: f64 = field(&stdout(&o), "su_bits").parse().unwrap();
        assert!(multi >= 0.98 * single && multi <= single + 1e-9, "{multi} vs {single}");
    }
}

#[test]
fn infinite_epsilon_stops_after_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\n[solver]\nepsilon = inf\n", single_slot_config(1.0, 0.6, 1.0));
    let cfg = write_config(&dir, "a.cfg", &text);
    let o = ehcrn(&["solve-multi", "--config", &cfg]);
    let out = stdout(&o);
    assert_eq!(field(&out, "converged"), "true");
    assert_eq!(field(&out, "iterations"), "1");
}

#[test]
fn multi_slot_run_is_deterministic_and_logs_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("multi.cfg");
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let log = dir.path().join(format!("{tag}.log.csv"));
        let o = ehcrn(&[
            "solve-multi",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
            "--log",
            log.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(field(&stdout(&o), "feasible"), "true");
        (stdout(&o), std::fs::read(csv).unwrap(), std::fs::read_to_string(log).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let mut lines = a.2.lines();
    assert_eq!(lines.next(), Some("iter,delta_norm,lagrangian,pu_slack,worst_violation"));
    assert!(lines.count() > 1);
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("fig2.cfg"))
        .unwrap()
        .replace("grid = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0]", "grid = []");
    let cfg = write_config(&dir, "a.cfg", &text);
    let o = ehcrn(&["sweep", "--config", &cfg, "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));
}

#[test]
fn oracle_rejects_three_slots() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("oracle_n2.cfg"))
        .unwrap()
        .replace("n_slots = 2", "n_slots = 3");
    let cfg = write_config(&dir, "a.cfg", &text);
    let o = ehcrn(&["oracle-check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("oracle supports N ≤ 2"), "{}", stderr(&o));
}

#[test]
fn single_slot_oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oracle_n1.cfg");
    let csv = dir.path().join("o.csv");
    let o = ehcrn(&["oracle-check", "--config", cfg.to_str().unwrap(), "--trials", "50", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "violations"), "0");
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 51);
}

#[test]
fn oracle_violation_exits_three() {
    // A ratio floor above 1 cannot be met, so every instance is a violation.
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("oracle_n2.cfg"))
        .unwrap()
        .replace("min_ratio = 0.9", "min_ratio = 1.5");
    let cfg = write_config(&dir, "a.cfg", &text);
    let o = ehcrn(&["oracle-check", "--config", &cfg, "--trials", "1", "--out", dir.path().join("o.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("params SystemParams"), "{}", stderr(&o));
}

#[test]
fn sweep_csv_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig2.csv");
    let cfg = configs().join("fig2.cfg");
    let o = ehcrn(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "40", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), std::fs::read_to_string(golden.join("fig2_t40.csv")).unwrap());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("fig2.dat")).unwrap(),
        std::fs::read_to_string(golden.join("fig2_t40.dat")).unwrap()
    );
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig4.cfg");
    let run = |seed: &str| {
        let csv = dir.path().join(format!("s{seed}.csv"));
        let o = ehcrn(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "30", "--seed", seed, "--out", csv.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(csv).unwrap()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}
