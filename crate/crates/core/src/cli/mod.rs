//! Benchmark commands behind the `fastrk` binary: fast-versus-direct runs,
//! solve-count sweeps and quadrature-error sweeps.

pub mod config;

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};

use crate::analysis::{
    c0_constant, default_strip_half_width, estimate_lemma1, measure_quadrature_error, theorem3_bound, BoundInputs,
};
use crate::contour::select_parameters;
use crate::fastsolve::{plan, predicted_solve_count, run, uses_homogeneous_term, FastRunPlan};
use crate::operators::ShiftedSolver;
use crate::rk::{direct_operator_steps, make_tableau};
use crate::{Error, Result};

pub use config::{Forcing, OutputPaths, Problem, QuadErrSweep, RunConfig};

pub const RUN_CSV_HEADER: &str = "problem,tableau,N,h,base,K,fast_solves,direct_solves,deviation";
pub const BENCH_CSV_HEADER: &str = "N,direct_solves,fast_solves";
pub const QUADERR_CSV_HEADER: &str = "K,n,a,measured,bound";

/// Process exit status for a failed command: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Scalar { .. } => "scalar",
            Problem::Diagonal { .. } => "diagonal",
            Problem::Heat1d { .. } => "heat1d",
            Problem::Heat2dRobin { .. } => "heat2d_robin",
        }
    }
}

fn build_plan(cfg: &RunConfig, n: usize, h: f64) -> Result<FastRunPlan> {
    plan(n, h, &make_tableau(cfg.tableau), &cfg.plan_options(), &cfg.sector()?)
}

/// Solve counts known before running.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSummary {
    pub n_steps: usize,
    pub h: f64,
    pub dimension: usize,
    pub levels: usize,
    pub direct_steps: usize,
    pub predicted_solves: usize,
    pub direct_solves: usize,
    pub warnings: Vec<String>,
}

impl fmt::Display for PlanSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_steps = {}", self.n_steps)?;
        writeln!(f, "h = {}", self.h)?;
        writeln!(f, "dimension = {}", self.dimension)?;
        writeln!(f, "levels = {}", self.levels)?;
        writeln!(f, "direct_steps = {}", self.direct_steps)?;
        writeln!(f, "predicted_solves = {}", self.predicted_solves)?;
        writeln!(f, "direct_solves = {}", self.direct_solves)?;
        for w in &self.warnings {
            writeln!(f, "warning = {w}")?;
        }
        Ok(())
    }
}

fn prepare(cfg: &RunConfig) -> Result<(PlanSummary, ShiftedSolver, FastRunPlan)> {
    cfg.validate()?;
    let (n, h) = cfg.steps()?;
    let solver = cfg.build_solver()?;
    let dim = solver.dimension();
    let p = build_plan(cfg, n, h)?;
    let with_u0 = uses_homogeneous_term(&p, &cfg.initial_vector(dim));
    let summary = PlanSummary {
        n_steps: n,
        h,
        dimension: dim,
        levels: p.ladder.level_count,
        direct_steps: p.direct_steps(),
        predicted_solves: predicted_solve_count(&p, with_u0),
        direct_solves: p.tableau.stage_count() * n,
        warnings: p.warnings.clone(),
    };
    Ok((summary, solver, p))
}

/// Planning only: no linear systems are solved.
pub fn cmd_plan(cfg: &RunConfig) -> Result<PlanSummary> {
    prepare(cfg).map(|(summary, _, _)| summary)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub problem: &'static str,
    pub summary: PlanSummary,
    pub u_fast: Vec<f64>,
    pub u_direct: Vec<f64>,
    /// `|U_N - u_N|_inf / (1 + |u_N|_inf)`
    pub deviation: f64,
    pub fast_solves: usize,
    pub fast_seconds: f64,
    pub direct_seconds: f64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl RunReport {
    pub fn csv_row(&self, cfg: &RunConfig) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.6e}",
            self.problem,
            cfg.tableau,
            self.summary.n_steps,
            self.summary.h,
            cfg.base,
            cfg.k_max,
            self.fast_solves,
            self.summary.direct_solves,
            self.deviation
        )
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem = {}", self.problem)?;
        write!(f, "{}", self.summary)?;
        writeln!(f, "fast_solves = {}", self.fast_solves)?;
        writeln!(f, "deviation = {:.6e}", self.deviation)?;
        writeln!(f, "fast_max = {:.12e}", max_norm(&self.u_fast))?;
        writeln!(f, "direct_max = {:.12e}", max_norm(&self.u_direct))?;
        if self.u_fast.len() <= 8 {
            writeln!(f, "fast_u = {:?}", self.u_fast)?;
            writeln!(f, "direct_u = {:?}", self.u_direct)?;
        }
        writeln!(f, "fast_seconds = {:.4}", self.fast_seconds)?;
        write!(f, "direct_seconds = {:.4}", self.direct_seconds)
    }
}

fn append_line(path: &Path, header: &str, line: &str) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{header}")?;
    }
    writeln!(file, "{line}")?;
    Ok(())
}

/// Runs the fast algorithm and full direct stepping on the configured problem.
/// Appends a CSV row when `output.run_csv` is set; wall times stay out of the CSV.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport> {
    let (summary, solver, p) = prepare(cfg)?;
    let (n, h) = (summary.n_steps, summary.h);
    let g = cfg.build_forcing(&solver);
    let u0 = cfg.initial_vector(solver.dimension());

    let before = solver.solve_count();
    let start = Instant::now();
    let u_fast = run(&p, &solver, &g, &u0)?;
    let fast_seconds = start.elapsed().as_secs_f64();
    let fast_solves = solver.solve_count() - before;
    if fast_solves != summary.predicted_solves {
        warn!("fast run used {fast_solves} solves, predicted {}", summary.predicted_solves);
    }

    let before = solver.solve_count();
    let start = Instant::now();
    let dim = solver.dimension();
    let gf = |t: f64| g.eval(t, dim);
    let u_direct = direct_operator_steps(&p.tableau, &solver, h, 0.0, &gf, &u0, n)?;
    let direct_seconds = start.elapsed().as_secs_f64();
    debug_assert_eq!(solver.solve_count() - before, summary.direct_solves);

    let diff = u_fast.iter().zip(&u_direct).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let report = RunReport {
        problem: cfg.problem.name(),
        summary,
        deviation: diff / (1.0 + max_norm(&u_direct)),
        u_fast,
        u_direct,
        fast_solves,
        fast_seconds,
        direct_seconds,
    };
    info!("deviation {:.3e} with {} fast solves", report.deviation, report.fast_solves);
    if let Some(path) = &cfg.output.run_csv {
        append_line(path, RUN_CSV_HEADER, &report.csv_row(cfg))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchRow {
    pub n: usize,
    pub direct_solves: usize,
    pub fast_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    /// Smallest swept `N` at which the fast count is below the direct count.
    pub fn crossover(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.fast_solves < r.direct_solves).map(|r| r.n)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{BENCH_CSV_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.n, r.direct_solves, r.fast_solves));
        }
        s
    }
}

/// Solve counts of both methods for each `N`, at the configured step size.
///
/// Direct stepping here means a fresh solve per stage and step; a direct solver
/// that reuses one factorization across steps would shift the crossover.
pub fn cmd_bench_solves(cfg: &RunConfig, n_list: &[usize]) -> Result<BenchTable> {
    cfg.validate()?;
    let (_, h) = cfg.steps()?;
    let dim = cfg.build_solver()?.dimension();
    let u0 = cfg.initial_vector(dim);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let p = build_plan(cfg, n, h)?;
        rows.push(BenchRow {
            n,
            direct_solves: p.tableau.stage_count() * n,
            fast_solves: predicted_solve_count(&p, uses_homogeneous_term(&p, &u0)),
        });
    }
    let table = BenchTable { rows };
    if let Some(path) = &cfg.output.bench_csv {
        std::fs::write(path, table.to_csv())?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadErrRow {
    pub k: usize,
    pub n: u64,
    pub a: f64,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadErrTable {
    pub rows: Vec<QuadErrRow>,
    /// `(K, n, a)` combinations where the error bound does not apply.
    pub skipped: Vec<(usize, u64, f64)>,
}

impl QuadErrTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{QUADERR_CSV_HEADER}\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{:.6e},{:.6e}\n", r.k, r.n, r.a, r.measured, r.bound));
        }
        s
    }
}

/// Level whose panel contains `n`: the smallest `l >= 1` with `n < B^l`.
fn level_of(n: u64, base: usize) -> usize {
    let mut level = 1;
    let mut p = base as u64;
    while p <= n {
        p = p.saturating_mul(base as u64);
        level += 1;
    }
    level
}

/// Measured quadrature error against the a priori bound for scalar operators
/// `A = a`, over the configured `(K, n, a)` grid. The contour for `n` is the
/// one of the panel containing `n`.
pub fn cmd_quaderr(cfg: &RunConfig) -> Result<QuadErrTable> {
    cfg.validate()?;
    let sweep = &cfg.quaderr;
    let tab = make_tableau(cfg.tableau);
    let sector = cfg.sector()?;
    let h = sweep.h;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut constants = None;
    for &k in &sweep.k_list {
        for &n in &sweep.n_list {
            let level = level_of(n, cfg.base);
            let mut c = select_parameters(&cfg.strategy, h, cfg.base, level, cfg.eps_target, &sector, k)?;
            c.k_max = k;
            let (lemma, c0, d) = match constants {
                Some(v) => v,
                None => {
                    let d = default_strip_half_width(c.alpha, cfg.phi);
                    let lemma = estimate_lemma1(&tab, c.alpha, d, sweep.probe_rho)?;
                    let v = (lemma, c0_constant(&tab, &sector, c.alpha, d, lemma.rho)?, d);
                    constants = Some(v);
                    v
                }
            };
            for &a in &sweep.a_list {
                let inputs = BoundInputs {
                    c0,
                    b: lemma.b,
                    rho: lemma.rho,
                    mu: c.mu,
                    t: n as f64 * h,
                    n,
                    d,
                    tau: c.tau,
                    k_max: k,
                };
                let bound = match theorem3_bound(&inputs) {
                    Ok(b) => b,
                    Err(Error::TheoremInapplicable(msg)) => {
                        info!("skipping K = {k}, n = {n}, a = {a}: {msg}");
                        skipped.push((k, n, a));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let measured = measure_quadrature_error(&c, &tab, h, n, &[a])?;
                rows.push(QuadErrRow { k, n, a, measured, bound });
            }
        }
    }
    let table = QuadErrTable { rows, skipped };
    if let Some(path) = &cfg.output.quaderr_csv {
        std::fs::write(path, table.to_csv())?;
    }
    Ok(table)
}
