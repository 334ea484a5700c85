//! Drivers for the four numerical studies and for single configured runs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    default_eta, extrema_series, fitted_order, l2_error, support_series, waiting_time,
    WaitingTime,
};
use crate::config::{parse_config_str, ProblemKind, RunConfig};
use crate::error::{Error, Result};
use crate::mesh::{gauss_legendre, MAX_QUADRATURE_POINTS};
use crate::output::{fmt_f64, write_config, write_convergence, write_outputs, ConvergenceRow};
use crate::stepper::{march, RunOutput};

/// Environment variable holding the worker count for parallel sweeps.
pub const THREADS_ENV: &str = "PLAPMEM_THREADS";

/// Grid settings shared by the gap studies.
pub const GAP_T_FINAL: f64 = 0.3;

#[derive(Debug, Clone, Default)]
pub struct ExampleOptions {
    pub p: Option<f64>,
    pub lambda: Option<f64>,
    pub parallel: bool,
    pub out: Option<PathBuf>,
}

/// Maps `f` over `items`, in parallel when asked; output order always follows input order.
pub fn sweep<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if !parallel {
        return items.iter().map(f).collect();
    }
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("could not build thread pool ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

/// Builds a configuration from the JSON-level description.
pub fn config_for(
    problem: ProblemKind,
    p: f64,
    lambda: f64,
    r: usize,
    m: usize,
    n_steps: usize,
    t_final: f64,
) -> RunConfig {
    let json = serde_json::json!({
        "problem": problem,
        "p": p,
        "lambda": lambda,
        "r": r,
        "m": m,
        "N": n_steps,
        "T": t_final,
    });
    parse_config_str(&json.to_string()).expect("built-in configuration is valid")
}

pub fn run_config(config: &RunConfig) -> Result<RunOutput> {
    march(&config.problem_def(), &config.mesh()?, &config.solver_config())
}

/// Runs `config` and writes the echo and all series into `dir`.
pub fn solve_to_dir(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let run = run_config(config)?;
    std::fs::create_dir_all(dir)?;
    write_config(config, &dir.join("config.json"))?;
    write_outputs(&run, &config.snapshot_times, config.quadrature_points, dir)?;
    Ok(run)
}

/// `L²` errors of `U^N` and `Y^N` against the exact solution at `T`, measured with the
/// largest Gauss rule so the reading does not depend on the solver's quadrature.
pub fn final_errors(config: &RunConfig, run: &RunOutput) -> Result<(f64, f64)> {
    let def = config.problem_def();
    let (Some(eu), Some(ey)) = (def.exact_u, def.exact_y) else {
        return Err(Error::config("problem has no exact solution"));
    };
    let t = run.times[run.steps()];
    let quad = gauss_legendre(MAX_QUADRATURE_POINTS)?;
    let err_u = l2_error(&run.mesh, run.final_u(), |x| eu(x, t), &quad)?;
    let err_y = l2_error(&run.mesh, run.final_y(), |x| ey(x, t), &quad)?;
    Ok((err_u, err_y))
}

fn run_dir_name(p: f64, lambda: f64) -> String {
    format!("p{}_lambda{}", fmt_f64(p), fmt_f64(lambda))
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

// Example 1: manufactured convergence

pub const EX1_T: f64 = 0.1;
pub const EX1_LAMBDA: f64 = 1.0;
pub const EX1_H_DELTA: f64 = 1e-4;
pub const EX1_ELEMENTS: [usize; 4] = [4, 8, 16, 32];
pub const EX1_DEGREES: [usize; 3] = [1, 2, 3];
pub const EX1_EXPONENTS: [f64; 2] = [3.0, 4.0];
pub const EX1_DELTA_STEPS: [usize; 4] = [10, 20, 40, 80];

#[derive(Debug, Clone)]
pub struct Example1Report {
    pub h_sweep: Vec<ConvergenceRow>,
    pub delta_sweep: Vec<ConvergenceRow>,
}

/// Fitted orders of one sweep group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub p: f64,
    pub r: usize,
    pub order_u: f64,
    pub order_y: f64,
}

fn attach_orders(rows: &mut [ConvergenceRow], by_h: bool) {
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        if a.p != b.p || a.r != b.r {
            continue;
        }
        let (sa, sb) = if by_h { (a.h, b.h) } else { (a.delta, b.delta) };
        let ou = (a.err_u / b.err_u).ln() / (sa / sb).ln();
        let oy = (a.err_y / b.err_y).ln() / (sa / sb).ln();
        rows[i].order_u = Some(ou);
        rows[i].order_y = Some(oy);
    }
}

fn fits(rows: &[ConvergenceRow], by_h: bool) -> Result<Vec<OrderFit>> {
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for r in rows {
        if !groups.contains(&(r.p, r.r)) {
            groups.push((r.p, r.r));
        }
    }
    groups
        .into_iter()
        .map(|(p, r)| {
            let g: Vec<&ConvergenceRow> = rows.iter().filter(|x| x.p == p && x.r == r).collect();
            let steps: Vec<f64> = g.iter().map(|x| if by_h { x.h } else { x.delta }).collect();
            let eu: Vec<f64> = g.iter().map(|x| x.err_u).collect();
            let ey: Vec<f64> = g.iter().map(|x| x.err_y).collect();
            Ok(OrderFit {
                p,
                r,
                order_u: fitted_order(&eu, &steps)?,
                order_y: fitted_order(&ey, &steps)?,
            })
        })
        .collect()
}

impl Example1Report {
    pub fn h_fits(&self) -> Result<Vec<OrderFit>> {
        fits(&self.h_sweep, true)
    }

    pub fn delta_fits(&self) -> Result<Vec<OrderFit>> {
        fits(&self.delta_sweep, false)
    }
}

fn convergence_row(config: &RunConfig) -> Result<ConvergenceRow> {
    let run = run_config(config)?;
    let (err_u, err_y) = final_errors(config, &run)?;
    Ok(ConvergenceRow {
        p: config.p,
        r: config.r,
        h: (config.domain.b - config.domain.a) / config.m as f64,
        delta: config.delta(),
        err_u,
        err_y,
        order_u: None,
        order_y: None,
    })
}

/// Spatial sweep only.
pub fn example1_h_sweep(exponents: &[f64], lambda: f64, parallel: bool) -> Result<Vec<ConvergenceRow>> {
    let n_steps = (EX1_T / EX1_H_DELTA).round() as usize;
    let configs: Vec<RunConfig> = exponents
        .iter()
        .flat_map(|&p| {
            EX1_DEGREES.iter().flat_map(move |&r| {
                EX1_ELEMENTS.iter().map(move |&m| {
                    config_for(ProblemKind::Manufactured, p, lambda, r, m, n_steps, EX1_T)
                })
            })
        })
        .collect();
    let mut rows = first_error(sweep(&configs, parallel, convergence_row))?;
    attach_orders(&mut rows, true);
    Ok(rows)
}

/// Temporal sweep with quartic elements, for which the spatial error vanishes.
pub fn example1_delta_sweep(
    exponents: &[f64],
    lambda: f64,
    parallel: bool,
) -> Result<Vec<ConvergenceRow>> {
    let configs: Vec<RunConfig> = exponents
        .iter()
        .flat_map(|&p| {
            EX1_DELTA_STEPS
                .iter()
                .map(move |&n| config_for(ProblemKind::Manufactured, p, lambda, 4, 10, n, EX1_T))
        })
        .collect();
    let mut rows = first_error(sweep(&configs, parallel, convergence_row))?;
    attach_orders(&mut rows, false);
    Ok(rows)
}

pub fn example1(opts: &ExampleOptions) -> Result<Example1Report> {
    let exponents: Vec<f64> = opts.p.map_or(EX1_EXPONENTS.to_vec(), |p| vec![p]);
    let lambda = opts.lambda.unwrap_or(EX1_LAMBDA);
    let h_sweep = example1_h_sweep(&exponents, lambda, opts.parallel);
    let delta_sweep = example1_delta_sweep(&exponents, lambda, opts.parallel);
    // whatever finished is written even when the other sweep failed
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        let mut all: Vec<ConvergenceRow> = Vec::new();
        for rows in [&h_sweep, &delta_sweep].into_iter().flatten() {
            all.extend(rows.iter().cloned());
        }
        write_convergence(&all, &dir.join("convergence.csv"))?;
    }
    Ok(Example1Report {
        h_sweep: h_sweep?,
        delta_sweep: delta_sweep?,
    })
}

// Examples 2–4: runs over (p, λ) grids

pub const EX2_T: f64 = 3.0;
pub const EX2_ELEMENTS: usize = 10;
pub const EX2_STEPS: usize = 3000;
pub const EX2_LAMBDAS: [f64; 4] = [10.0, 0.0, -1.0, -10.0];
pub const EX2_EXPONENTS: [f64; 3] = [1.5, 2.0, 4.0];

pub const GAP_ELEMENTS: usize = 100;
pub const GAP_DELTA: f64 = 1e-3;
pub const GAP_LAMBDAS: [f64; 3] = [-5.0, 0.0, 5.0];

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub config: RunConfig,
    pub run: RunOutput,
}

impl CaseRun {
    pub fn p(&self) -> f64 {
        self.config.p
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda()
    }

    /// Smallest nodal value over the whole run.
    pub fn min_u(&self) -> f64 {
        extrema_series(&self.run).iter().map(|e| e.0).fold(f64::INFINITY, f64::min)
    }

    pub fn eta(&self) -> f64 {
        default_eta(&self.run.u[0])
    }

    pub fn support(&self) -> Vec<Option<(f64, f64)>> {
        support_series(&self.run, self.eta())
    }

    pub fn waiting_time(&self) -> Option<WaitingTime> {
        waiting_time(&self.support(), &self.run.times, self.run.mesh.node_spacing())
    }
}

/// A sweep point that either finished or stopped with an error.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum CaseOutcome {
    Done(CaseRun),
    Failed { config: RunConfig, error: Error },
}

impl CaseOutcome {
    pub fn config(&self) -> &RunConfig {
        match self {
            CaseOutcome::Done(c) => &c.config,
            CaseOutcome::Failed { config, .. } => config,
        }
    }
}

/// Outcomes of a `(p, λ)` sweep in sweep order. A failing point does not stop the others.
#[derive(Debug)]
pub struct ExampleReport {
    pub outcomes: Vec<CaseOutcome>,
}

impl ExampleReport {
    pub fn cases(&self) -> impl Iterator<Item = &CaseRun> {
        self.outcomes.iter().filter_map(|o| match o {
            CaseOutcome::Done(c) => Some(c),
            CaseOutcome::Failed { .. } => None,
        })
    }

    pub fn case(&self, p: f64, lambda: f64) -> Option<&CaseRun> {
        self.cases().find(|c| c.p() == p && c.lambda() == lambda)
    }

    pub fn first_error(&self) -> Option<&Error> {
        self.outcomes.iter().find_map(|o| match o {
            CaseOutcome::Failed { error, .. } => Some(error),
            CaseOutcome::Done(_) => None,
        })
    }
}

fn run_cases(configs: Vec<RunConfig>, opts: &ExampleOptions) -> Vec<CaseOutcome> {
    sweep(&configs, opts.parallel, |c| {
        let run = match &opts.out {
            Some(dir) => solve_to_dir(c, &dir.join(run_dir_name(c.p, c.lambda()))),
            None => run_config(c),
        };
        match run {
            Ok(run) => CaseOutcome::Done(CaseRun {
                config: c.clone(),
                run,
            }),
            Err(error) => {
                log::warn!("p = {}, lambda = {}: {error}", c.p, c.lambda());
                CaseOutcome::Failed {
                    config: c.clone(),
                    error,
                }
            }
        }
    })
}

fn grid(
    problem: ProblemKind,
    exponents: &[f64],
    lambdas: &[f64],
    m: usize,
    n_steps: usize,
    t_final: f64,
) -> Vec<RunConfig> {
    exponents
        .iter()
        .flat_map(|&p| {
            lambdas
                .iter()
                .map(move |&l| config_for(problem, p, l, 1, m, n_steps, t_final))
        })
        .collect()
}

fn status(error: &Error) -> &'static str {
    match error {
        Error::Config(_) => "config_error",
        Error::Divergence { .. } => "diverged",
        Error::LinearSolve(_) | Error::IllPosedStep { .. } | Error::NumericInput { .. } => {
            "solve_failed"
        }
        Error::Io(_) => "io_error",
    }
}

fn write_summary(report: &ExampleReport, dir: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join("summary.csv"))?;
    w.write_record([
        "p", "lambda", "status", "b0", "b_final", "b_min", "u_min", "gap_left", "gap_right",
        "t_star",
    ])?;
    for o in &report.outcomes {
        let c = match o {
            CaseOutcome::Done(c) => c,
            CaseOutcome::Failed { config, error } => {
                let mut row = vec![fmt_f64(config.p), fmt_f64(config.lambda()), status(error).into()];
                row.resize(10, String::new());
                w.write_record(row)?;
                continue;
            }
        };
        let e = &c.run.energy;
        let last = c.support().last().copied().flatten();
        let (gl, gr) = last.map_or((String::new(), String::new()), |(l, r)| (fmt_f64(l), fmt_f64(r)));
        w.write_record([
            fmt_f64(c.p()),
            fmt_f64(c.lambda()),
            "ok".into(),
            fmt_f64(e[0]),
            fmt_f64(e[e.len() - 1]),
            fmt_f64(e.iter().copied().fold(f64::INFINITY, f64::min)),
            fmt_f64(c.min_u()),
            gl,
            gr,
            c.waiting_time().map(|w| fmt_f64(w.t_star)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn finish(outcomes: Vec<CaseOutcome>, opts: &ExampleOptions) -> Result<ExampleReport> {
    let report = ExampleReport { outcomes };
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        write_summary(&report, dir)?;
    }
    Ok(report)
}

/// Quartic datum, `λ ∈ {10, 0, −1, −10}` × `p ∈ {1.5, 2, 4}`.
pub fn example2(opts: &ExampleOptions) -> Result<ExampleReport> {
    let exponents = opts.p.map_or(EX2_EXPONENTS.to_vec(), |p| vec![p]);
    let lambdas = opts.lambda.map_or(EX2_LAMBDAS.to_vec(), |l| vec![l]);
    let configs = grid(ProblemKind::Quartic, &exponents, &lambdas, EX2_ELEMENTS, EX2_STEPS, EX2_T);
    finish(run_cases(configs, opts), opts)
}

fn gap_steps(t_final: f64) -> usize {
    (t_final / GAP_DELTA).round() as usize
}

/// Quadratic-contact gap datum at `p = 3` over a `λ` sweep, plus a `p = 2` control.
pub fn example3(opts: &ExampleOptions) -> Result<ExampleReport> {
    let n = gap_steps(GAP_T_FINAL);
    let configs = match (opts.p, opts.lambda) {
        (None, None) => {
            let mut c = grid(ProblemKind::CubicGap, &[3.0], &GAP_LAMBDAS, GAP_ELEMENTS, n, GAP_T_FINAL);
            c.extend(grid(ProblemKind::CubicGap, &[2.0], &[0.0], GAP_ELEMENTS, n, GAP_T_FINAL));
            c
        }
        (p, l) => grid(
            ProblemKind::CubicGap,
            &[p.unwrap_or(3.0)],
            &l.map_or(GAP_LAMBDAS.to_vec(), |l| vec![l]),
            GAP_ELEMENTS,
            n,
            GAP_T_FINAL,
        ),
    };
    finish(run_cases(configs, opts), opts)
}

/// Seventh-order-contact gap datum at `p = 3` over a `λ` sweep.
pub fn example4(opts: &ExampleOptions) -> Result<ExampleReport> {
    let n = gap_steps(GAP_T_FINAL);
    let lambdas = opts.lambda.map_or(GAP_LAMBDAS.to_vec(), |l| vec![l]);
    let configs = grid(
        ProblemKind::FlatGap,
        &[opts.p.unwrap_or(3.0)],
        &lambdas,
        GAP_ELEMENTS,
        n,
        GAP_T_FINAL,
    );
    finish(run_cases(configs, opts), opts)
}
