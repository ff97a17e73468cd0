//! Seeded phase-transition experiments: for every `(s, m)` cell, repeat
//! generate → measure → solve → adjudicate and count successes.
//!
//! Seeds are derived from `(master, s-index, m-index, trial)`, so a grid is
//! identical however its cells are scheduled.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bounds;
use crate::diffop::generate_signal;
use crate::error::{Error, Result};
use crate::seed;
use crate::solver::{solve_tv, SolverParams, TvProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub n: usize,
    pub s_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub success_threshold: f64,
    pub master_seed: u64,
}

impl PhaseConfig {
    /// The default grid: odd `s` below `n` and even `m` up to `n`, with strides
    /// scaled so that larger `n` keep roughly 25 rows and columns.
    pub fn default_for(n: usize, master_seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        let stride = (2 * n).div_ceil(50).max(2);
        let s_values = (1..n).step_by(stride).collect();
        let m_values = (stride..=n).step_by(stride).collect();
        let cfg = Self { n, s_values, m_values, trials: 50, success_threshold: 1e-3, master_seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.s_values.is_empty() || self.m_values.is_empty() {
            return Err(Error::invalid("s_values and m_values must be nonempty"));
        }
        if let Some(&s) = self.s_values.iter().find(|&&s| s >= self.n) {
            return Err(Error::invalid(format!("s={s} exceeds n-1={}", self.n - 1)));
        }
        if self.m_values.contains(&0) {
            return Err(Error::invalid("m_values must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold.is_finite()) {
            return Err(Error::invalid(format!("threshold must be positive, got {}", self.success_threshold)));
        }
        Ok(())
    }

    /// Builds a config from `key=value` pairs. Unknown keys are ignored so
    /// that run metadata files can be fed back in.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| pairs.get(k).ok_or_else(|| Error::invalid(format!("missing config key `{k}`")));
        let n = parse_scalar(get("n")?, "n")?;
        let mut cfg = match (pairs.get("s_values"), pairs.get("m_values")) {
            (Some(_), Some(_)) => Self {
                n,
                s_values: Vec::new(),
                m_values: Vec::new(),
                trials: 50,
                success_threshold: 1e-3,
                master_seed: 0,
            },
            _ => Self::default_for(n, 0)?,
        };
        if let Some(v) = pairs.get("s_values") {
            cfg.s_values = parse_int_list(v)?;
        }
        if let Some(v) = pairs.get("m_values") {
            cfg.m_values = parse_int_list(v)?;
        }
        if let Some(v) = pairs.get("trials") {
            cfg.trials = parse_scalar(v, "trials")?;
        }
        if let Some(v) = pairs.get("threshold") {
            cfg.success_threshold = parse_scalar(v, "threshold")?;
        }
        if let Some(v) = pairs.get("seed") {
            cfg.master_seed = parse_scalar(v, "seed")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Key-value form accepted by [`PhaseConfig::from_pairs`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("n".into(), self.n.to_string()),
            ("s_values".into(), format_int_list(&self.s_values)),
            ("m_values".into(), format_int_list(&self.m_values)),
            ("trials".into(), self.trials.to_string()),
            ("threshold".into(), format!("{:?}", self.success_threshold)),
            ("seed".into(), self.master_seed.to_string()),
        ]
    }

    /// Per-cell seed, recorded in run metadata.
    pub fn cell_seed(&self, s_index: usize, m_index: usize) -> u64 {
        seed::derive(self.master_seed, &[s_index as u64, m_index as u64])
    }

    pub fn trial_seed(&self, s_index: usize, m_index: usize, trial: usize) -> u64 {
        seed::derive(self.master_seed, &[s_index as u64, m_index as u64, trial as u64])
    }
}

fn parse_scalar<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::invalid(format!("cannot parse `{key}` value `{v}`")))
}

/// Parses `start:step:end` (inclusive), `start:end`, or a comma list.
pub fn parse_int_list(v: &str) -> Result<Vec<usize>> {
    let v = v.trim();
    if v.contains(':') {
        let parts: Vec<usize> = v.split(':').map(|p| parse_scalar(p, "range")).collect::<Result<_>>()?;
        let (start, step, end) = match parts[..] {
            [a, b] => (a, 1, b),
            [a, s, b] => (a, s, b),
            _ => return Err(Error::invalid(format!("bad range `{v}`"))),
        };
        if step == 0 || start > end {
            return Err(Error::invalid(format!("bad range `{v}`")));
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        v.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_scalar(p, "list")).collect()
    }
}

/// Compact inverse of [`parse_int_list`]: arithmetic progressions of
/// length ≥ 3 print as ranges.
pub fn format_int_list(xs: &[usize]) -> String {
    if xs.len() >= 3 && xs[1] > xs[0] {
        let step = xs[1] - xs[0];
        if xs.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] == step) {
            return format!("{}:{}:{}", xs[0], step, xs[xs.len() - 1]);
        }
    }
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Failure,
    /// The solver hit its iteration cap; counted as a failure.
    NotConverged,
}

/// One trial: `x` from the signal model, Gaussian `A`, `y = Ax`, and an
/// equality-constrained solve judged by `||x - x_hat|| <= threshold`.
pub fn run_trial(n: usize, s: usize, m: usize, trial_seed: u64, threshold: f64) -> Result<TrialOutcome> {
    run_trial_with(n, s, m, trial_seed, threshold, &SolverParams::default())
}

pub fn run_trial_with(
    n: usize,
    s: usize,
    m: usize,
    trial_seed: u64,
    threshold: f64,
    params: &SolverParams,
) -> Result<TrialOutcome> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let signal = generate_signal(n, s, seed::derive(trial_seed, &[0]))?;
    let attempt = |matrix_seed: u64| {
        let mut rng = seed::rng(matrix_seed);
        let a = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
        solve_tv(&TvProblem::from_signal(a, &signal.x)?, params)
    };
    let result = match attempt(seed::derive(trial_seed, &[1])) {
        Err(Error::RankDeficient(_)) => attempt(seed::derive(trial_seed, &[2]))?,
        other => other?,
    };
    if !result.converged {
        return Ok(TrialOutcome::NotConverged);
    }
    let err = signal.x.iter().zip(&result.x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(if err <= threshold { TrialOutcome::Success } else { TrialOutcome::Failure })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub config: PhaseConfig,
    /// `successes[i][j]` for `s_values[i]`, `m_values[j]`.
    pub successes: Vec<Vec<usize>>,
    /// Trials whose solve hit the iteration cap (already counted as failures).
    pub not_converged: Vec<Vec<usize>>,
    pub cell_seeds: Vec<Vec<u64>>,
}

pub fn run_grid(config: &PhaseConfig) -> Result<PhaseGrid> {
    config.validate()?;
    let (rows, cols) = (config.s_values.len(), config.m_values.len());
    let jobs: Vec<(usize, usize, usize)> =
        (0..rows).flat_map(|i| (0..cols).flat_map(move |j| (0..config.trials).map(move |t| (i, j, t)))).collect();
    let outcomes: Vec<Result<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(i, j, t)| {
            let trial_seed = config.trial_seed(i, j, t);
            run_trial(config.n, config.s_values[i], config.m_values[j], trial_seed, config.success_threshold)
        })
        .collect();

    let mut successes = vec![vec![0; cols]; rows];
    let mut not_converged = vec![vec![0; cols]; rows];
    let mut errors = Vec::new();
    for (&(i, j, t), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(TrialOutcome::Success) => successes[i][j] += 1,
            Ok(TrialOutcome::Failure) => {}
            Ok(TrialOutcome::NotConverged) => not_converged[i][j] += 1,
            Err(e) => errors.push(format!("s={} m={} trial={t}: {e}", config.s_values[i], config.m_values[j])),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Domain(format!("{} trial(s) failed: {}", errors.len(), errors.join("; "))));
    }
    let cell_seeds = (0..rows).map(|i| (0..cols).map(|j| config.cell_seed(i, j)).collect()).collect();
    Ok(PhaseGrid { config: config.clone(), successes, not_converged, cell_seeds })
}

/// Result of scanning a row for a success-fraction level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    At(f64),
    NoCrossing,
}

impl Crossing {
    pub fn value(self) -> Option<f64> {
        match self {
            Crossing::At(m) => Some(m),
            Crossing::NoCrossing => None,
        }
    }
}

impl PhaseGrid {
    pub fn row_index(&self, s: usize) -> Result<usize> {
        self.config
            .s_values
            .iter()
            .position(|&v| v == s)
            .ok_or_else(|| Error::invalid(format!("s={s} is not a grid row")))
    }

    pub fn fractions(&self, row: usize) -> Vec<f64> {
        self.successes[row].iter().map(|&c| c as f64 / self.config.trials as f64).collect()
    }

    pub fn total_not_converged(&self) -> usize {
        self.not_converged.iter().flatten().sum()
    }

    /// Upward scan for the first `m` whose success fraction reaches `level`,
    /// linearly interpolated against the previous column.
    pub fn transition_location(&self, s: usize, level: f64) -> Result<Crossing> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
        }
        let row = self.row_index(s)?;
        let p = self.fractions(row);
        let m = &self.config.m_values;
        for j in 0..p.len() {
            if p[j] >= level {
                if j == 0 {
                    return Ok(Crossing::At(m[0] as f64));
                }
                let (m0, m1) = (m[j - 1] as f64, m[j] as f64);
                let frac = (level - p[j - 1]) / (p[j] - p[j - 1]);
                return Ok(Crossing::At(m0 + frac * (m1 - m0)));
            }
        }
        Ok(Crossing::NoCrossing)
    }

    /// Sum of squared residuals of the isotonic (nondecreasing in `m`) fit
    /// to one row's success fractions.
    pub fn isotonic_residual(&self, row: usize) -> f64 {
        let p = self.fractions(row);
        let fit = isotonic_fit(&p);
        p.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Noise-level allowance for [`PhaseGrid::isotonic_residual`]: four times
    /// the largest per-cell binomial variance `0.25 / trials`, summed over
    /// the columns.
    pub fn isotonic_allowance(&self) -> f64 {
        4.0 * self.config.m_values.len() as f64 * 0.25 / self.config.trials as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{GRID_CSV_HEADER}")?;
        for (i, &s) in self.config.s_values.iter().enumerate() {
            for (j, &m) in self.config.m_values.iter().enumerate() {
                writeln!(w, "{},{s},{m},{},{}", self.config.n, self.config.trials, self.successes[i][j])?;
            }
        }
        Ok(())
    }

    /// Bound values for every grid row, to overlay on the diagram.
    pub fn write_overlay_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let reports = bounds::sweep(self.config.n, self.config.s_values.iter().copied())
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        bounds::write_csv(w, &reports)
    }

    /// `key=value` lines: the config plus derived cell seeds.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.config.to_pairs() {
            let _ = writeln!(out, "{k}={v}");
        }
        for (i, &s) in self.config.s_values.iter().enumerate() {
            for (j, &m) in self.config.m_values.iter().enumerate() {
                let _ = writeln!(out, "cell_seed.s{s}.m{m}={}", self.cell_seeds[i][j]);
            }
        }
        let _ = writeln!(out, "not_converged={}", self.total_not_converged());
        out
    }
}

pub const GRID_CSV_HEADER: &str = "n,s,m,trials,successes";

/// Least-squares nondecreasing fit by pool-adjacent-violators.
pub fn isotonic_fit(y: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * w1 as f64 + m2 * w2 as f64) / (w1 + w2) as f64, w1 + w2));
        }
    }
    blocks.into_iter().flat_map(|(m, w)| std::iter::repeat_n(m, w)).collect()
}
