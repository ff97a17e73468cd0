use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use tvbound::bounds::{self, BoundReport};
use tvbound::diffop::equispaced_support;
use tvbound::format::sig6;
use tvbound::phase::{self, PhaseConfig};
use tvbound::solver::{solve_tv, SolverParams, TvProblem};
use tvbound::statdim::{self, SubdifferentialModel};

use crate::config::{flag_name, sibling, write_meta, Settings};
use crate::error::CliError;
use crate::{BoundArgs, LemmaArgs, PhaseArgs, SolveArgs, StatdimArgs};

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Writes through `f` to `path`, or to stdout when there is no path.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            f(&mut w).and_then(|_| w.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| CliError::Usage(format!("{}: cannot parse `{p}`", flag_name(key)))))
        .collect()
}

/// Comma list, or inclusive `start:step:end`.
fn parse_float_list(raw: &str, key: &str) -> Result<Vec<f64>> {
    if !raw.contains(':') {
        return parse_list(raw, key);
    }
    let parts: Vec<f64> = raw
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| CliError::Usage(format!("{}: cannot parse `{p}`", flag_name(key)))))
        .collect::<Result<_>>()?;
    let [start, step, end] = parts[..] else {
        return Err(CliError::Usage(format!("{}: expected start:step:end", flag_name(key))));
    };
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(CliError::Usage(format!("{}: empty or invalid range `{raw}`", flag_name(key))));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

pub fn bound(args: BoundArgs) -> Result<()> {
    let mut cfg = Settings::load(args.common.config.as_deref())?;
    let n: usize = cfg.require("n", args.n)?;
    let s: Option<usize> = cfg.get("s", args.s)?;
    let out = args.common.out.as_deref();

    match s {
        Some(s) => {
            let r = BoundReport::new(n, s)?;
            println!("paper={} kabanava={} t_star={}", sig6(r.paper_bound), sig6(r.kabanava_bound), sig6(r.t_star));
            if let Some(out) = out {
                emit(Some(out), |w| bounds::write_csv(w, &[r]))?;
                write_meta(out, "bound", &cfg, &[])?;
            }
        }
        None => {
            let reports = bounds::sweep(n, 0..n)?;
            emit(out, |w| bounds::write_csv(w, &reports))?;
            if let Some(out) = out {
                write_meta(out, "bound", &cfg, &[])?;
                println!("wrote {} rows to {}", reports.len(), out.display());
            }
        }
    }
    Ok(())
}

fn statdim_model(cfg: &mut Settings, args: &StatdimArgs, n: usize) -> Result<SubdifferentialModel> {
    let support: Vec<usize> = match cfg.get::<String>("support", args.support.clone())? {
        Some(raw) => {
            let mut rows: Vec<usize> = parse_list(&raw, "support")?;
            rows.sort_unstable();
            rows
        }
        None => {
            let s = cfg.require("s", args.s)?;
            let rows = equispaced_support(n, s)?;
            cfg.record("support", rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","));
            rows
        }
    };
    let signs: Vec<f64> = match cfg.get::<String>("signs", args.signs.clone())? {
        Some(raw) => parse_list(&raw, "signs")?,
        None => vec![1.0; support.len()],
    };
    Ok(SubdifferentialModel::new(n, support, signs)?)
}

pub fn statdim(args: StatdimArgs) -> Result<()> {
    let mut cfg = Settings::load(args.common.config.as_deref())?;
    let n: usize = cfg.require("n", args.n)?;
    let model = statdim_model(&mut cfg, &args, n)?;
    let samples = cfg.or("samples", args.samples, 10_000usize)?;
    let seed = cfg.or("seed", args.seed, 0u64)?;
    let result = match cfg.get::<String>("t_grid", args.t_grid.clone())? {
        Some(raw) => statdim::estimate_curve(&model, &parse_float_list(&raw, "t_grid")?, samples, seed)?,
        None => statdim::estimate_infimum(&model, samples, seed)?,
    };
    let paper = bounds::paper_bound(n, model.s()).ok();
    println!(
        "delta_hat={} std_err={} t_hat={} paper_bound={} N={samples}",
        sig6(result.delta_hat),
        sig6(result.delta_hat_std_err()),
        sig6(result.t_hat),
        paper.map_or_else(|| "undefined".into(), sig6),
    );
    if let Some(out) = args.common.out.as_deref() {
        emit(Some(out), |w| result.write_csv(w))?;
        let summary = sibling(out, ".summary");
        emit(Some(&summary), |w| result.write_summary(w))?;
        write_meta(out, "statdim", &cfg, &[])?;
    }
    Ok(())
}

pub fn lemma_check(args: LemmaArgs) -> Result<()> {
    let mut cfg = Settings::load(args.common.config.as_deref())?;
    let n = cfg.or("n", args.n, 12usize)?;
    let samples = cfg.or("samples", args.samples, 1_000_000usize)?;
    let seed = cfg.or("seed", args.seed, 0u64)?;
    let rows = statdim::sign_correlation_table(n, samples, seed)?;
    let out = args.common.out.as_deref();
    emit(out, |w| statdim::write_sign_csv(w, &rows))?;
    let worst = rows.iter().map(|r| (r.estimate - r.closed_form).abs()).fold(0.0, f64::max);
    let summary = format!("gaps={} N={samples} max_abs_deviation={}", rows.len(), sig6(worst));
    match out {
        Some(out) => {
            write_meta(out, "lemma-check", &cfg, &[])?;
            println!("{summary}");
        }
        None => eprintln!("{summary}"),
    }
    Ok(())
}

fn read_csv_rows(path: &Path, flag: &str) -> Result<Vec<Vec<f64>>> {
    let unreadable = |e: String| CliError::Usage(format!("{flag}: cannot read {}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| unreadable(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| unreadable(e.to_string()))?;
        let row = record
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|_| unreadable(format!("line {}: bad number `{f}`", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let mut cfg = Settings::load(args.common.config.as_deref())?;
    let matrix_path: PathBuf = cfg.require("matrix", args.matrix.as_ref().map(|p| p.display().to_string()))?.into();
    let y_path: PathBuf =
        cfg.require("measurements", args.measurements.as_ref().map(|p| p.display().to_string()))?.into();
    let eta = cfg.or("eta", args.eta, 0.0f64)?;

    let rows = read_csv_rows(&matrix_path, "--matrix")?;
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Usage(format!(
            "--matrix: expected a nonempty rectangular CSV in {}",
            matrix_path.display()
        )));
    }
    let y: Vec<f64> = read_csv_rows(&y_path, "--measurements")?.into_iter().flatten().collect();
    if y.len() != m {
        return Err(CliError::Usage(format!("--measurements: {} values for a matrix with {m} rows", y.len())));
    }
    let a = DMatrix::from_row_iterator(m, n, rows.into_iter().flatten());
    let problem = TvProblem::new(a, DVector::from_vec(y), eta)?;
    let result = solve_tv(&problem, &SolverParams::default())?;

    println!(
        "objective={} misfit={} iterations={} converged={}",
        sig6(result.objective),
        sig6(problem.misfit(&result.x_hat)),
        result.iterations,
        result.converged
    );
    if let Some(out) = args.common.out.as_deref() {
        emit(Some(out), |w| result.x_hat.iter().try_for_each(|v| writeln!(w, "{v:?}")))?;
        let derived = [
            ("m".to_string(), m.to_string()),
            ("n".to_string(), n.to_string()),
            ("converged".to_string(), result.converged.to_string()),
        ];
        write_meta(out, "solve", &cfg, &derived)?;
    }
    if !result.converged {
        return Err(CliError::Domain(format!("solver stopped at the iteration cap ({})", result.iterations)));
    }
    Ok(())
}

/// `grid.csv` → `grid.overlay.csv`.
fn overlay_path(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv") => out.with_extension("overlay.csv"),
        _ => sibling(out, ".overlay.csv"),
    }
}

pub fn phase(args: PhaseArgs) -> Result<()> {
    let mut cfg = Settings::load(args.common.config.as_deref())?;
    let out = args.common.out.clone().ok_or_else(|| CliError::Usage("missing required flag --out".into()))?;

    let mut pairs = BTreeMap::new();
    let flags = [
        ("n", args.n.map(|v| v.to_string())),
        ("s_values", args.s_values.clone()),
        ("m_values", args.m_values.clone()),
        ("trials", args.trials.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("threshold", args.threshold.map(|v| v.to_string())),
    ];
    for (key, flag) in flags {
        if let Some(v) = flag.or_else(|| cfg.file_value(key).map(str::to_string)) {
            pairs.insert(key.to_string(), v);
        }
    }
    if !pairs.contains_key("n") {
        return Err(CliError::Usage("missing required flag --n".into()));
    }
    let config = PhaseConfig::from_pairs(&pairs)?;
    for (k, v) in config.to_pairs() {
        cfg.record(&k, v);
    }

    let grid = phase::run_grid(&config)?;
    emit(Some(&out), |w| grid.write_csv(w))?;
    let overlay = overlay_path(&out);
    emit(Some(&overlay), |w| grid.write_overlay_csv(w))?;

    let derived: Vec<(String, String)> = grid
        .metadata()
        .lines()
        .filter_map(|l| l.split_once('='))
        .filter(|(k, _)| k.starts_with("cell_seed.") || *k == "not_converged")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    write_meta(&out, "phase", &cfg, &derived)?;
    println!(
        "cells={} trials={} not_converged={} grid={} overlay={}",
        config.s_values.len() * config.m_values.len(),
        config.trials,
        grid.total_not_converged(),
        out.display(),
        overlay.display()
    );
    Ok(())
}
