//! Step-size sweeps, convergence orders, RMSD against data, and the CSV
//! formats they produce.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use crate::conv::{ConvMode, ConvPlan};
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Method, Solution, SolverConfig};
use crate::solver::solve;
use crate::zoo::{ModelProblem, ModelSpec, Overrides};

/// Step size of the fine reference run.
pub const FINE_H: f64 = 1.0 / 1024.0;
/// Newton tolerance of the fine reference run.
pub const FINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Exact,
    /// NR at [`FINE_H`] and [`FINE_TOL`], subsampled to each coarse grid.
    Fine,
}

impl std::str::FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Reference::Exact),
            "fine" => Ok(Reference::Fine),
            other => Err(Error::Parse(format!("unknown reference `{other}`"))),
        }
    }
}

/// How a trajectory error is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    /// Euclidean norm of all differences over the shared grid points.
    #[default]
    Euclidean,
    /// Largest absolute difference.
    Max,
}

impl std::str::FromStr for ErrorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclid" | "euclidean" | "2" => Ok(ErrorNorm::Euclidean),
            "max" | "inf" => Ok(ErrorNorm::Max),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

impl ErrorNorm {
    fn reduce(self, diffs: impl Iterator<Item = f64>) -> f64 {
        match self {
            ErrorNorm::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            ErrorNorm::Max => diffs.map(f64::abs).fold(0.0, f64::max),
        }
    }
}

/// Error of `sol` against the model's exact solution.
pub fn exact_error(spec: &ModelSpec, problem: &ModelProblem, sol: &Solution, norm: ErrorNorm) -> Result<f64> {
    let mut diffs = Vec::with_capacity(sol.x.as_slice().len());
    for (r, &t) in sol.t.iter().enumerate() {
        let e = spec.exact(t, problem)?;
        diffs.extend(sol.x.row(r).iter().zip(&e).map(|(a, b)| a - b));
    }
    Ok(norm.reduce(diffs.into_iter()))
}

/// Error of `sol` against a finer trajectory on a nested grid.
pub fn reference_error(sol: &Solution, reference: &Solution, norm: ErrorNorm) -> Result<f64> {
    let h = sol.t.get(1).map_or(0.0, |t1| t1 - sol.t[0]);
    let hf = reference.t.get(1).map_or(0.0, |t1| t1 - reference.t[0]);
    let ratio = h / hf;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(Error::BadConfig(format!(
            "step {h} is not a multiple of the reference step {hf}"
        )));
    }
    if (sol.t.len() - 1) * stride > reference.t.len() - 1 {
        return Err(Error::BadConfig("reference grid is shorter than the solution".into()));
    }
    let diffs = (0..sol.t.len()).flat_map(|r| {
        sol.x
            .row(r)
            .iter()
            .zip(reference.x.row(r * stride))
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>()
    });
    Ok(norm.reduce(diffs))
}

/// One `(method, h)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub model: String,
    pub method: Method,
    pub h: f64,
    pub wall_time_s: f64,
    /// `f64::INFINITY` for a divergent run.
    pub error: f64,
    pub iterations: usize,
}

impl BenchRecord {
    pub fn diverged(&self) -> bool {
        self.error.is_infinite()
    }
}

/// A sweep over methods and step sizes.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub methods: Vec<Method>,
    pub hs: Vec<f64>,
    pub reference: Reference,
    /// `nc`, `tol` and `itmax`; `h` is taken from `hs`.
    pub config: SolverConfig,
    pub mode: ConvMode,
    pub norm: ErrorNorm,
    /// Timed runs per cell, after one warm-up.
    pub repeats: usize,
    /// Run cells concurrently.
    pub parallel: bool,
}

impl Sweep {
    pub fn new(methods: Vec<Method>, hs: Vec<f64>, config: SolverConfig) -> Self {
        Self {
            methods,
            hs,
            reference: Reference::Exact,
            config,
            mode: ConvMode::FftPartitioned,
            norm: ErrorNorm::Euclidean,
            repeats: 5,
            parallel: true,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `method` at `config` `1 + repeats` times and keeps the median time.
fn timed_solve(
    problem: &ModelProblem,
    method: Method,
    config: &SolverConfig,
    mode: ConvMode,
    repeats: usize,
) -> (Result<Solution>, f64) {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for k in 0..=repeats.max(1) {
        let start = Instant::now();
        let r = solve(problem, method, config, &mut ConvPlan::new(mode));
        let dt = start.elapsed().as_secs_f64();
        let failed = r.is_err();
        if k > 0 || failed {
            times.push(dt.max(f64::MIN_POSITIVE));
        }
        last = Some(r);
        if failed {
            break;
        }
    }
    (last.expect("at least one run"), median(times))
}

/// Runs every `(method, h)` cell and reports errors against the reference.
///
/// Divergent cells get an infinite error. Output is in input order, methods
/// outermost.
pub fn run_sweep(spec: &ModelSpec, overrides: &Overrides, sweep: &Sweep) -> Result<Vec<BenchRecord>> {
    let problem = spec.problem_with(overrides)?;
    problem.check()?;
    if sweep.hs.is_empty() || sweep.methods.is_empty() {
        return Err(Error::BadConfig("a sweep needs at least one method and one step size".into()));
    }
    let reference = match sweep.reference {
        Reference::Exact => {
            if !spec.has_exact() {
                return Err(Error::NoExactSolution(spec.name.to_string()));
            }
            None
        }
        Reference::Fine => {
            let config = sweep.config.with_h(FINE_H).with_tol(FINE_TOL);
            Some(solve(&problem, Method::Nr, &config, &mut ConvPlan::new(sweep.mode))?)
        }
    };
    let cells: Vec<(Method, f64)> = sweep
        .methods
        .iter()
        .flat_map(|&m| sweep.hs.iter().map(move |&h| (m, h)))
        .collect();
    let run = |&(method, h): &(Method, f64)| -> Result<BenchRecord> {
        let config = sweep.config.with_h(h);
        let (outcome, wall) = timed_solve(&problem, method, &config, sweep.mode, sweep.repeats);
        let (error, iterations) = match outcome {
            Ok(sol) => {
                let e = match &reference {
                    None => exact_error(spec, &problem, &sol, sweep.norm)?,
                    Some(r) => reference_error(&sol, r, sweep.norm)?,
                };
                // a run that blew up without tripping the finiteness check
                (if e.is_finite() { e } else { f64::INFINITY }, sol.diagnostics.iterations)
            }
            Err(e) if e.is_divergence() => (f64::INFINITY, 0),
            Err(e) => return Err(e),
        };
        Ok(BenchRecord {
            model: spec.name.to_string(),
            method,
            h,
            wall_time_s: wall,
            error,
            iterations,
        })
    };
    let out = if sweep.parallel {
        par::map_ordered(&cells, run)
    } else {
        par::map_sequential(&cells, run)
    };
    out.into_iter().collect()
}

/// One row of an order table.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub h: f64,
    pub error: f64,
    /// `log2(err(2h) / err(h))` against the previous (coarser) row.
    pub order: Option<f64>,
}

/// Estimated convergence orders against the exact solution.
///
/// Step sizes are sorted from coarse to fine; each adjacent pair yields one
/// estimate. Returns the table and the mean estimate.
pub fn run_order(
    spec: &ModelSpec,
    overrides: &Overrides,
    method: Method,
    hs: &[f64],
    config: SolverConfig,
    mode: ConvMode,
    norm: ErrorNorm,
) -> Result<(Vec<OrderRow>, f64)> {
    if !spec.has_exact() {
        return Err(Error::NoExactSolution(spec.name.to_string()));
    }
    if hs.len() < 3 {
        return Err(Error::BadConfig("order estimation needs at least three step sizes".into()));
    }
    let mut hs = hs.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut sweep = Sweep::new(vec![method], hs, config);
    sweep.mode = mode;
    sweep.norm = norm;
    sweep.repeats = 0;
    let records = run_sweep(spec, overrides, &sweep)?;
    let mut rows: Vec<OrderRow> = Vec::with_capacity(records.len());
    for r in &records {
        let order = rows.last().map(|prev| (prev.error / r.error).log2() / (prev.h / r.h).log2());
        rows.push(OrderRow {
            h: r.h,
            error: r.error,
            order,
        });
    }
    let estimates: Vec<f64> = rows.iter().filter_map(|r| r.order).collect();
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    Ok((rows, mean))
}

/// Column indices named by an expression such as `I+P+H` or `x3+x4`.
pub fn parse_compartments(spec: &ModelSpec, expr: &str) -> Result<Vec<usize>> {
    expr.split('+')
        .map(str::trim)
        .map(|term| {
            if let Some(i) = spec.components.iter().position(|c| c == term) {
                return Ok(i);
            }
            term.strip_prefix('x')
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1 && k <= spec.dim())
                .map(|k| k - 1)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "unknown compartment `{term}` (have {} or x1..x{})",
                        spec.components.join(","),
                        spec.dim()
                    ))
                })
        })
        .collect()
}

/// Sum of the chosen columns at `t0 + day` for every day index in `days`.
///
/// Each sampling time must fall on the grid.
pub fn sample_days(sol: &Solution, columns: &[usize], days: &[f64]) -> Result<Vec<f64>> {
    let t0 = sol.t[0];
    let h = sol.t.get(1).map_or(f64::NAN, |t1| t1 - t0);
    days.iter()
        .map(|&d| {
            let pos = d / h;
            let r = pos.round();
            if !(d >= 0.0) || (pos - r).abs() > 1e-9 * pos.max(1.0) || r as usize >= sol.t.len() {
                return Err(Error::LengthMismatch {
                    left: sol.t.len(),
                    right: r.max(0.0) as usize + 1,
                });
            }
            Ok(columns.iter().map(|&c| sol.x[(r as usize, c)]).sum())
        })
        .collect()
}

/// Reads a `(day index, count)` series with a header row.
pub fn read_series<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("row {} has {} fields, expected 2", line + 2, rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 2)));
        out.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(out)
}

pub fn read_series_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_series(f)
}

/// RMSD between the summed compartments and a data series.
pub fn rmsd_against(sol: &Solution, spec: &ModelSpec, expr: &str, data: &[(f64, f64)]) -> Result<f64> {
    let cols = parse_compartments(spec, expr)?;
    let days: Vec<f64> = data.iter().map(|d| d.0).collect();
    let model = sample_days(sol, &cols, &days)?;
    let observed: Vec<f64> = data.iter().map(|d| d.1).collect();
    crate::zoo::rmsd(&model, &observed)
}

/// Float formatting used in every CSV: 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `t,x1,...,xM` followed by one row per grid point.
pub fn write_solution_csv<W: Write>(w: W, sol: &Solution) -> Result<()> {
    let mut wr = csv_writer(w);
    let m = sol.x.cols();
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=m).map(|i| format!("x{i}"))).collect();
    wr.write_record(&header).map_err(csv_err)?;
    for (r, &t) in sol.t.iter().enumerate() {
        let row: Vec<String> = std::iter::once(t).chain(sol.x.row(r).iter().copied()).map(format_float).collect();
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub const BENCH_HEADER: [&str; 6] = ["model", "method", "h", "wall_time_s", "error", "iterations"];

pub fn write_bench_csv<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(BENCH_HEADER).map_err(csv_err)?;
    for r in records {
        wr.write_record([
            r.model.clone(),
            r.method.to_string(),
            format_float(r.h),
            format_float(r.wall_time_s),
            format_float(r.error),
            r.iterations.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_order_csv<W: Write>(w: W, rows: &[OrderRow]) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["h", "error", "order"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            format_float(r.h),
            format_float(r.error),
            r.order.map(format_float).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// A parsed numeric CSV: header plus rows of floats.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_numeric_csv(text: &str) -> Result<NumericTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(
            rec.iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(NumericTable { header, rows })
}

pub fn write_numeric_csv<W: Write>(w: W, table: &NumericTable) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        wr.write_record(row.iter().map(|&v| format_float(v))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}
