//! CSV writers for run results.

use std::fs;
use std::path::Path;

use crate::analysis::{default_eta, support_series};
use crate::config::RunConfig;
use crate::error::Result;
use crate::mesh::{gauss_legendre, Mesh1D};
use crate::stepper::RunOutput;

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// One row of `convergence.csv`; orders are empty for the first entry of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub p: f64,
    pub r: usize,
    pub h: f64,
    pub delta: f64,
    pub err_u: f64,
    pub err_y: f64,
    pub order_u: Option<f64>,
    pub order_y: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["p", "r", "h", "delta", "err_u", "err_y", "order_u", "order_y"])?;
    for row in rows {
        w.write_record([
            fmt_f64(row.p),
            row.r.to_string(),
            fmt_f64(row.h),
            fmt_f64(row.delta),
            fmt_f64(row.err_u),
            fmt_f64(row.err_y),
            opt(row.order_u),
            opt(row.order_y),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Steps closest to the requested times; eleven evenly spaced times when none are given.
pub fn snapshot_steps(run: &RunOutput, times: &[f64]) -> Vec<usize> {
    let n = run.steps();
    let mut steps: Vec<usize> = if times.is_empty() {
        (0..=10).map(|i| (i * n + 5) / 10).collect()
    } else {
        times
            .iter()
            .map(|t| ((t / run.delta).round() as usize).min(n))
            .collect()
    };
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Mesh nodes plus quadrature points, with the element each sample belongs to.
fn sample_points(mesh: &Mesh1D, q: usize) -> Result<Vec<(usize, f64, f64)>> {
    let quad = gauss_legendre(q)?;
    let basis = mesh.basis();
    let mut refs: Vec<f64> = basis.nodes().to_vec();
    refs.extend(quad.points().iter().map(|s| 0.5 * (s + 1.0)));
    refs.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for e in 0..mesh.elements() {
        let (xl, xr) = mesh.element_bounds(e);
        for &xi in &refs {
            // shared nodes belong to the element on their left, except x = a
            if xi == 0.0 && e > 0 {
                continue;
            }
            out.push((e, xi, xl + xi * (xr - xl)));
        }
    }
    Ok(out)
}

fn eval_at(mesh: &Mesh1D, full: &[f64], e: usize, xi: f64) -> f64 {
    let basis = mesh.basis();
    (0..basis.len())
        .map(|j| full[mesh.local_to_global(e, j)] * basis.value(j, xi))
        .sum()
}

pub fn write_snapshots(run: &RunOutput, steps: &[usize], q: usize, path: &Path) -> Result<()> {
    let mesh = &run.mesh;
    let samples = sample_points(mesh, q)?;
    let mut w = writer(path)?;
    w.write_record(["t", "x", "u", "y"])?;
    for &k in steps {
        let u = mesh.expand(&run.u[k])?;
        let y = mesh.expand(&run.y[k])?;
        for &(e, xi, x) in &samples {
            w.write_record([
                fmt_f64(run.times[k]),
                fmt_f64(x),
                fmt_f64(eval_at(mesh, &u, e, xi)),
                fmt_f64(eval_at(mesh, &y, e, xi)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_energy(run: &RunOutput, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "b"])?;
    for (t, b) in run.times.iter().zip(&run.energy) {
        w.write_record([fmt_f64(*t), fmt_f64(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// Gap endpoints at node resolution; empty fields when there is no gap.
pub fn write_support(run: &RunOutput, eta: f64, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "left", "right"])?;
    for (t, gap) in run.times.iter().zip(support_series(run, eta)) {
        let (l, r) = match gap {
            Some((l, r)) => (fmt_f64(l), fmt_f64(r)),
            None => (String::new(), String::new()),
        };
        w.write_record([fmt_f64(*t), l, r])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(run: &RunOutput, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["k", "iterations", "increment_u", "increment_y"])?;
    for (k, d) in run.diagnostics.iter().enumerate() {
        w.write_record([
            k.to_string(),
            d.iterations.to_string(),
            fmt_f64(d.increment_u),
            fmt_f64(d.increment_y),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_config(config: &RunConfig, path: &Path) -> Result<()> {
    fs::write(path, config.to_json() + "\n")?;
    Ok(())
}

/// Writes `snapshots.csv`, `energy.csv`, `support.csv` and `diagnostics.csv` into `dir`.
pub fn write_outputs(run: &RunOutput, snapshot_times: &[f64], q: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let steps = snapshot_steps(run, snapshot_times);
    write_snapshots(run, &steps, q, &dir.join("snapshots.csv"))?;
    write_energy(run, &dir.join("energy.csv"))?;
    write_support(run, default_eta(&run.u[0]), &dir.join("support.csv"))?;
    write_diagnostics(run, &dir.join("diagnostics.csv"))?;
    Ok(())
}
