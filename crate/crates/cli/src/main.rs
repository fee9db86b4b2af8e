//! `fracsolve`: run the model zoo, sweep step sizes, estimate orders and
//! compare against data. Every table goes out as CSV.
//!
//! Exit codes: 0 on success, 1 when the solver diverges, 2 on usage errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fracsolve::conv::{ConvMode, ConvPlan};
use fracsolve::harness::{self, ErrorNorm, Reference, Sweep};
use fracsolve::zoo::{self, ModelSpec, Overrides};
use fracsolve::{solve, Error, Method, SolverConfig};

#[derive(Parser)]
#[command(name = "fracsolve", version, about = "Solvers for Caputo fractional differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model and print the trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
        /// pc or nr.
        #[arg(long, default_value = "pc")]
        method: String,
        /// Step size; accepts `2^-k`.
        #[arg(long, default_value = "2^-6")]
        h: String,
    },
    /// Error and wall time over a grid of methods and step sizes.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated methods.
        #[arg(long, default_value = "pc,nr")]
        method: String,
        /// Comma-separated step sizes.
        #[arg(long, default_value = "2^-3,2^-4,2^-5,2^-6,2^-7,2^-8")]
        h: String,
        /// exact or fine.
        #[arg(long, default_value = "exact")]
        reference: String,
        #[arg(long, default_value = "euclid")]
        norm: String,
        /// Timed repeats per cell after one warm-up.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Run cells one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Convergence-order estimates against the exact solution.
    Order {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "pc")]
        method: String,
        #[arg(long, default_value = "2^-5,2^-6,2^-7,2^-8")]
        h: String,
        #[arg(long, default_value = "euclid")]
        norm: String,
    },
    /// RMSD between summed compartments sampled daily and a data series.
    Rmsd {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "pc")]
        method: String,
        /// Step size; must divide one day.
        #[arg(long, default_value = "2^-6")]
        h: String,
        /// Two-column CSV (day index, value) with a header row.
        #[arg(long)]
        data: PathBuf,
        /// Sum of compartments, e.g. `I+P+H` or `x3+x4`.
        #[arg(long, default_value = "x1")]
        compartments: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: String,
    #[arg(long)]
    nc: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    itmax: Option<usize>,
    /// One order for every component, or one per component.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// `t0,T`.
    #[arg(long, allow_hyphen_values = true)]
    tspan: Option<String>,
    /// Comma-separated model parameters.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    /// on (FFT history sums) or off (direct sums).
    #[arg(long, default_value = "on")]
    fft: String,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Setup {
    spec: ModelSpec,
    overrides: Overrides,
    mode: ConvMode,
    nc: Option<usize>,
    tol: Option<f64>,
    itmax: Option<usize>,
}

impl Setup {
    fn from(common: &Common) -> Result<Self> {
        let spec = zoo::model_by_name(&common.model)?;
        let tspan = common
            .tspan
            .as_deref()
            .map(|s| match parse_list(s)?.as_slice() {
                &[a, b] => Ok((a, b)),
                _ => bail!("--tspan expects `t0,T`"),
            })
            .transpose()?;
        Ok(Self {
            spec,
            overrides: Overrides {
                params: common.params.as_deref().map(parse_list).transpose()?,
                beta: common.beta.as_deref().map(parse_list).transpose()?,
                t_span: tspan,
                x0: None,
            },
            mode: common.fft.parse()?,
            nc: common.nc,
            tol: common.tol,
            itmax: common.itmax,
        })
    }

    fn config(&self, h: f64) -> SolverConfig {
        let mut c = self.spec.config(h);
        if let Some(nc) = self.nc {
            c = c.with_nc(nc);
        }
        if let Some(tol) = self.tol {
            c = c.with_tol(tol);
        }
        if let Some(itmax) = self.itmax {
            c = c.with_itmax(itmax);
        }
        c
    }
}

/// A float, or `2^k` / `2^-k`.
fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp.parse().with_context(|| format!("bad exponent in `{s}`"))?;
        return Ok(2f64.powi(k));
    }
    s.parse().with_context(|| format!("`{s}` is not a number"))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(|m| Ok(m.trim().parse::<Method>()?)).collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common, method, h } => {
            let setup = Setup::from(&common)?;
            let method: Method = method.parse()?;
            let problem = setup.spec.problem_with(&setup.overrides)?;
            let config = setup.config(parse_number(&h)?);
            let sol = solve(&problem, method, &config, &mut ConvPlan::new(setup.mode))?;
            let d = &sol.diagnostics;
            if d.max_iteration_steps > 0 {
                eprintln!("warning: {} step(s) hit itmax without meeting tol", d.max_iteration_steps);
            }
            harness::write_solution_csv(output(common.out.as_deref())?, &sol)?;
        }
        Command::Bench {
            common,
            method,
            h,
            reference,
            norm,
            repeats,
            sequential,
        } => {
            let setup = Setup::from(&common)?;
            let mut sweep = Sweep::new(parse_methods(&method)?, parse_list(&h)?, setup.config(1.0));
            sweep.reference = reference.parse::<Reference>()?;
            sweep.mode = setup.mode;
            sweep.norm = norm.parse::<ErrorNorm>()?;
            sweep.repeats = repeats;
            sweep.parallel = !sequential;
            let records = harness::run_sweep(&setup.spec, &setup.overrides, &sweep)?;
            harness::write_bench_csv(output(common.out.as_deref())?, &records)?;
        }
        Command::Order { common, method, h, norm } => {
            let setup = Setup::from(&common)?;
            let (rows, mean) = harness::run_order(
                &setup.spec,
                &setup.overrides,
                method.parse()?,
                &parse_list(&h)?,
                setup.config(1.0),
                setup.mode,
                norm.parse()?,
            )?;
            if rows.iter().any(|r| r.error.is_infinite()) {
                return Err(Error::Diverged {
                    step: 0,
                    reason: "a step size in the order sweep diverged".into(),
                }
                .into());
            }
            harness::write_order_csv(output(common.out.as_deref())?, &rows)?;
            eprintln!("mean order {mean:.4}");
        }
        Command::Rmsd {
            common,
            method,
            h,
            data,
            compartments,
        } => {
            let setup = Setup::from(&common)?;
            let series = harness::read_series_file(&data)?;
            let problem = setup.spec.problem_with(&setup.overrides)?;
            let config = setup.config(parse_number(&h)?);
            let sol = solve(&problem, method.parse()?, &config, &mut ConvPlan::new(setup.mode))?;
            let value = harness::rmsd_against(&sol, &setup.spec, &compartments, &series)?;
            let mut out = output(common.out.as_deref())?;
            writeln!(out, "{}", harness::format_float(value))?;
            out.flush()?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_divergence() => 1,
        Some(Error::Domain(_) | Error::Convergence(_) | Error::Plan { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
