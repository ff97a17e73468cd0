use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tvbound::diffop::generate_signal;
use tvbound::phase::PhaseConfig;
use tvbound::statdim::gaussian_sample;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvbound")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn bound_single_point() {
    let o = run(&["bound", "--n", "50", "--s", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "paper=31.6956 kabanava=37.675 t_star=0.368678");

    let o = run(&["bound", "--n", "50", "--s", "49"]);
    assert_eq!(stdout(&o).trim(), "paper=50 kabanava=50 t_star=0");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bound", "--n", "2", "--s", "0"]).status.code(), Some(1));
    assert_eq!(run(&["bound", "--n", "50", "--bogus"]).status.code(), Some(2));
    let o = run(&["bound", "--s", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n"));
    assert_eq!(run(&["bound", "--n", "5", "--s", "9"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["solve", "--matrix", "/nonexistent/a.csv", "--measurements", "/nonexistent/y.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--matrix"));
}

#[test]
fn bound_sweep_meta_replays() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["bound", "--n", "50", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.contains("\n5,31.6956,37.675,0.368678\n"));

    let meta = dir.path().join("sweep.csv.meta");
    let text = fs::read_to_string(&meta).unwrap();
    assert!(text.contains("command=bound\n") && text.contains("n=50\n"));

    let again = dir.path().join("again.csv");
    let o = run(&["bound", "--config", path_str(&meta), "--out", path_str(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("b.cfg");
    fs::write(&cfg, "# test\nn=50\ns=5\n").unwrap();
    let o = run(&["bound", "--config", path_str(&cfg)]);
    assert_eq!(stdout(&o).trim(), "paper=31.6956 kabanava=37.675 t_star=0.368678");
    let o = run(&["bound", "--config", path_str(&cfg), "--s", "49"]);
    assert_eq!(stdout(&o).trim(), "paper=50 kabanava=50 t_star=0");

    fs::write(&cfg, "n=fifty\n").unwrap();
    assert_eq!(run(&["bound", "--config", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn statdim_outputs_and_replay() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("curve.csv");
    let o = run(&["statdim", "--n", "30", "--s", "3", "--samples", "500", "--seed", "9", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("delta_hat="));
    let curve = fs::read_to_string(&out).unwrap();
    assert!(curve.starts_with("t,mean_dist_sq,std_err\n0.0,"));

    let summary = fs::read_to_string(dir.path().join("curve.csv.summary")).unwrap();
    let keys: Vec<&str> = summary.lines().filter_map(|l| l.split_once('=')).map(|(k, _)| k).collect();
    assert_eq!(keys, ["delta_hat", "t_hat", "N", "seed"]);

    let meta = dir.path().join("curve.csv.meta");
    let again = dir.path().join("again.csv");
    let o = run(&["statdim", "--config", path_str(&meta), "--out", path_str(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let grid = dir.path().join("grid.csv");
    let o = run(&[
        "statdim",
        "--n",
        "30",
        "--support",
        "3,10",
        "--signs",
        "1,-1",
        "--samples",
        "200",
        "--t-grid",
        "0:0.5:2",
        "--out",
        path_str(&grid),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&grid).unwrap().lines().count(), 1 + 5);

    assert_eq!(run(&["statdim", "--n", "30", "--s", "3", "--samples", "10"]).status.code(), Some(2));
}

#[test]
fn lemma_check_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("signs.csv");
    let o = run(&["lemma-check", "--n", "6", "--samples", "20000", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "gap,j,k,estimate,closed_form,N");
    assert_eq!(rows.len(), 1 + 5);
    assert!(rows[1].starts_with("0,0,0,1.0,1.0,"));
}

fn write_instance(dir: &Path, m: usize, n: usize, s: usize, seed_value: u64) -> (PathBuf, PathBuf, Vec<f64>) {
    let x = generate_signal(n, s, seed_value).unwrap().x;
    let a: Vec<Vec<f64>> = (0..m).map(|i| gaussian_sample(n, seed_value ^ 0x5EED, i as u64)).collect();
    let y: Vec<f64> = a.iter().map(|row| row.iter().zip(&x).map(|(u, v)| u * v).sum()).collect();
    let a_path = dir.join("a.csv");
    let y_path = dir.join("y.csv");
    let a_text: String =
        a.iter().map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n").collect();
    fs::write(&a_path, a_text).unwrap();
    fs::write(&y_path, y.iter().map(|v| format!("{v:?}\n")).collect::<String>()).unwrap();
    (a_path, y_path, x)
}

#[test]
fn solve_recovers_from_files() {
    let dir = TempDir::new().unwrap();
    let (a, y, x) = write_instance(dir.path(), 30, 40, 2, 17);
    let out = dir.path().join("x.csv");
    let o = run(&["solve", "--matrix", path_str(&a), "--measurements", path_str(&y), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("converged=true"));
    let x_hat: Vec<f64> = fs::read_to_string(&out).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    let err: f64 = x.iter().zip(&x_hat).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    assert!(err < 1e-6, "{err}");
    assert!(fs::read_to_string(dir.path().join("x.csv.meta")).unwrap().contains("m=30\n"));

    let o = run(&["solve", "--matrix", path_str(&a), "--measurements", path_str(&y), "--eta", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));

    // 3 measurements against a 30-row matrix
    fs::write(&y, "1\n2\n3\n").unwrap();
    assert_eq!(run(&["solve", "--matrix", path_str(&a), "--measurements", path_str(&y)]).status.code(), Some(2));
}

#[test]
fn solve_reports_rank_deficiency() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    fs::write(&a, "1,2,3\n2,4,6\n").unwrap();
    fs::write(&y, "1\n2\n").unwrap();
    let o = run(&["solve", "--matrix", path_str(&a), "--measurements", path_str(&y)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn phase_is_byte_identical_and_replayable() {
    let dir = TempDir::new().unwrap();
    let cfg = configs_dir().join("phase50.cfg");
    let reduced = ["--s-values", "3,9", "--m-values", "10:10:50", "--trials", "4"];
    let first = dir.path().join("grid.csv");
    let second = dir.path().join("grid2.csv");
    for out in [&first, &second] {
        let mut args = vec!["phase", "--config", path_str(&cfg), "--out", path_str(out)];
        args.extend(reduced);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("cells=10 trials=4 not_converged=0"));
    }
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let grid = fs::read_to_string(&first).unwrap();
    assert!(grid.starts_with("n,s,m,trials,successes\n50,3,10,4,"));
    assert!(grid.contains("\n50,9,50,4,4\n"));
    let overlay = fs::read_to_string(dir.path().join("grid.overlay.csv")).unwrap();
    assert!(overlay.starts_with("s,paper_bound,kabanava_bound,t_star\n3,"));

    let meta = dir.path().join("grid.csv.meta");
    let text = fs::read_to_string(&meta).unwrap();
    assert!(text.contains("seed=2024\n") && text.contains("cell_seed.s9.m50="));
    let replay = dir.path().join("replay.csv");
    let o = run(&["phase", "--config", path_str(&meta), "--out", path_str(&replay), "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&replay).unwrap());

    assert_eq!(run(&["phase", "--config", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn shipped_configs_match_default_grids() {
    for n in [50usize, 200, 400, 500] {
        let text = fs::read_to_string(configs_dir().join(format!("phase{n}.cfg"))).unwrap();
        let pairs = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        assert_eq!(PhaseConfig::from_pairs(&pairs).unwrap(), PhaseConfig::default_for(n, 2024).unwrap(), "n={n}");
    }
}
