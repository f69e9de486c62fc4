//! Command-line front end: cost-curve sampling, direct shape-parameter
//! prediction, single interpolation runs, table reproductions, and the
//! failure-regime sweep. All table output is CSV with a one-line metadata
//! comment so runs are reproducible byte for byte.

use clap::{Args, Parser, Subcommand};
use mnshape::experiments::{
    published_n_t, rms_argmin, rows_to_csv, run_even_table, run_failure_sweep,
    run_scattered_table, Mode, RunConfig,
};
use mnshape::geometry::{barycentric_grid, degree_from_delta, scattered_1d, uniform_1d, Simplex};
use mnshape::mn::{curve_to_csv, predict_c, sample_curve, ProblemParams, SearchConfig};
use mnshape::rbf::{assemble, rms_error, sinc_target, solve, KernelSpec};
use mnshape::{with_precision, Dec, Error};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mnshape",
    about = "Direct shape-parameter prediction and extended-precision RBF interpolation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Problem parameters shared by every subcommand. Defaults follow the 1-D
/// inverse-multiquadric study setup.
#[derive(Args, Debug)]
struct ParamArgs {
    /// Space dimension n
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Kernel exponent beta (not a nonnegative even integer)
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    beta: String,
    /// Band limit sigma of the target class
    #[arg(long, default_value = "1")]
    sigma: String,
    /// Domain-diameter bound b0
    #[arg(long, default_value = "5")]
    b0: String,
    /// Fill distance delta (0 < delta < b0/2)
    #[arg(long)]
    delta: String,
    /// Constant rho (defaults to 1)
    #[arg(long, default_value = "1")]
    rho: String,
    /// Constant delta0; rescales the bound, never moves the argmin
    #[arg(long, default_value = "1")]
    delta0: String,
    /// Working precision in significant decimal digits
    /// [env: MNSHAPE_DIGITS, default: 220]
    #[arg(long)]
    digits: Option<u32>,
}

impl ParamArgs {
    fn digits(&self) -> Result<u32, Error> {
        if let Some(d) = self.digits {
            return Ok(d);
        }
        match std::env::var("MNSHAPE_DIGITS") {
            Ok(s) => s
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("MNSHAPE_DIGITS = {s:?} is not an integer"))),
            Err(_) => Ok(mnshape::DEFAULT_DIGITS),
        }
    }

    fn problem(&self) -> Result<ProblemParams, Error> {
        ProblemParams::new(
            self.n,
            self.beta.parse()?,
            self.sigma.parse()?,
            self.b0.parse()?,
            self.delta.parse()?,
            self.rho.parse()?,
            Some(self.delta0.parse()?),
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the cost curve ln MN(c) and write CSV `c,log10_mn`
    MnCurve {
        #[command(flatten)]
        params: ParamArgs,
        /// Lower end of the c range (defaults to 24*rho*delta)
        #[arg(long)]
        c_min: Option<f64>,
        /// Upper end of the c range
        #[arg(long, default_value_t = 120.0)]
        c_max: f64,
        /// Number of samples
        #[arg(long, default_value_t = 500)]
        count: u32,
        /// Output CSV path
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Predict the optimal shape parameter by minimizing MN(c)
    PredictC {
        #[command(flatten)]
        params: ParamArgs,
        /// Upper end of the search interval (defaults to 40*rho*b0)
        #[arg(long)]
        c_max: Option<String>,
        /// Golden-section tolerance on c
        #[arg(long, default_value_t = 1e-6)]
        tol_c: f64,
        /// Flat-bottom band height in natural-log units (default ln 10)
        #[arg(long)]
        eps_flat: Option<f64>,
        /// Reliability threshold on the flat-bottom width
        /// (default 0.5*(12*rho*b0 - 24*rho*delta))
        #[arg(long)]
        w_max: Option<f64>,
    },
    /// Run one interpolation cell and serialize the interpolant
    Interpolate {
        #[command(flatten)]
        params: ParamArgs,
        /// Shape parameter c
        #[arg(long)]
        c: String,
        /// Node generation mode
        #[arg(long, value_parser = parse_mode, default_value = "even")]
        mode: Mode,
        /// Interpolation domain as a:b
        #[arg(long, default_value = "0:5")]
        domain: String,
        /// Seed for scattered node generation
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Test-point count (defaults to the published table value, else 150)
        #[arg(long)]
        nt: Option<u32>,
        /// Output path for the serialized interpolant
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reproduce an evenly spaced table: rows over a grid of c
    TableEven {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated c grid
        #[arg(long, default_value = "20,30,40,50,60,70,80,90,100")]
        c_grid: String,
        /// Interpolation domain as a:b
        #[arg(long, default_value = "0:5")]
        domain: String,
        /// Test-point count (defaults to the published table value, else 150)
        #[arg(long)]
        nt: Option<u32>,
        /// Output CSV path
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reproduce a scattered table (one node draw shared across the grid)
    TableScattered {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated c grid
        #[arg(long, default_value = "20,30,40,48,50,52,54,56,60,70")]
        c_grid: String,
        /// Interpolation domain as a:b
        #[arg(long, default_value = "0:5")]
        domain: String,
        /// Node-draw seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Run this many consecutive seeds and append all rows
        #[arg(long, default_value_t = 1)]
        seeds: u32,
        /// Test-point count (defaults to the published table value, else 80)
        #[arg(long)]
        nt: Option<u32>,
        /// Output CSV path
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Small-spacing sweep: table rows plus the direct prediction
    FailureSweep {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated c grid
        #[arg(long, default_value = "30,40,50,60,70,80,90,100,110")]
        c_grid: String,
        /// Node generation mode
        #[arg(long, value_parser = parse_mode, default_value = "even")]
        mode: Mode,
        /// Interpolation domain as a:b
        #[arg(long, default_value = "0:5")]
        domain: String,
        /// Node-draw seed (scattered mode)
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Test-point count
        #[arg(long)]
        nt: Option<u32>,
        /// Output CSV path
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "even" => Ok(Mode::EvenSimplex),
        "scattered" => Ok(Mode::Scattered),
        _ => Err(format!("unknown mode {s:?} (expected even|scattered)")),
    }
}

fn parse_domain(s: &str) -> Result<(Dec, Dec), Error> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("domain {s:?} must be a:b")))?;
    Ok((a.parse()?, b.parse()?))
}

fn parse_grid(s: &str) -> Result<Vec<Dec>, Error> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SingularMatrix { .. } | Error::NumericalFailure(_) => {
                    ExitCode::from(EXIT_NUMERICAL)
                }
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::MnCurve {
            params,
            c_min,
            c_max,
            count,
            output,
        } => {
            let p = params.problem()?;
            let ctx = with_precision(params.digits()?)?;
            let lo = c_min.unwrap_or_else(|| p.c_lo().to_f64());
            let samples = sample_curve(&p, lo, c_max, count, &ctx)?;
            let csv = curve_to_csv(&samples, &ctx);
            write_file(&output, &csv)?;
            println!("wrote {} samples to {}", samples.len(), output.display());
            Ok(())
        }
        Command::PredictC {
            params,
            c_max,
            tol_c,
            eps_flat,
            w_max,
        } => {
            let p = params.problem()?;
            let ctx = with_precision(params.digits()?)?;
            let cfg = SearchConfig {
                c_max: c_max.map(|s| s.parse()).transpose()?,
                tol_c,
                eps_flat: eps_flat.unwrap_or(std::f64::consts::LN_10),
                w_max,
            };
            let r = predict_c(&p, &cfg, &ctx)?;
            println!("c_star={:.6} reliable={}", r.c_star.to_f64(), r.reliable);
            println!(
                "branch={} flat_bottom_width={:.3} log10_mn_star={:.6}",
                r.branch,
                r.flat_bottom_width,
                (&r.log_mn_star / &ctx.ln10()).to_f64()
            );
            Ok(())
        }
        Command::Interpolate {
            params,
            c,
            mode,
            domain,
            seed,
            nt,
            output,
        } => {
            let p = params.problem()?;
            let digits = params.digits()?;
            let ctx = with_precision(digits)?;
            let c: Dec = c.parse()?;
            let domain = parse_domain(&domain)?;
            let delta = p.delta;
            let nodes = match mode {
                Mode::EvenSimplex => {
                    let l = degree_from_delta(&c, &p)?;
                    let s = Simplex::interval(
                        &ctx.from_dec(&domain.0),
                        &ctx.from_dec(&domain.1),
                        &ctx,
                    )?;
                    barycentric_grid(&s, l, &ctx)?
                }
                Mode::Scattered => scattered_1d(&domain.0, &domain.1, &delta, seed, &ctx)?,
            };
            let n_t = nt
                .or_else(|| published_n_t(mode, &delta))
                .unwrap_or(if mode == Mode::EvenSimplex { 150 } else { 80 });
            let kernel = KernelSpec::new(p.beta, c, false)?;
            let values: Vec<_> = nodes
                .points()
                .iter()
                .map(|pt| sinc_target(&pt[0], &ctx))
                .collect();
            let sys = assemble(&nodes, &values, &kernel, &ctx)?;
            let (interp, report) = solve(&sys, &ctx)?;
            let test = uniform_1d(&domain.0, &domain.1, n_t, &ctx)?;
            let rms = rms_error(|z| sinc_target(&z[0], &ctx), &interp, &test, &ctx)?;
            write_file(&output, &interp.serialize())?;
            println!(
                "n_d={} n_t={} rms={} cond={} digits={}",
                nodes.len(),
                n_t,
                rms.to_sci(3),
                report.condition_number.to_sci(3),
                report.digits_used
            );
            Ok(())
        }
        Command::TableEven {
            params,
            c_grid,
            domain,
            nt,
            output,
        } => {
            let p = params.problem()?;
            let delta = p.delta;
            let cfg = RunConfig {
                params: p,
                c_grid: parse_grid(&c_grid)?,
                mode: Mode::EvenSimplex,
                domain: parse_domain(&domain)?,
                n_t: nt
                    .or_else(|| published_n_t(Mode::EvenSimplex, &delta))
                    .unwrap_or(150),
                seed: 0,
                digits: params.digits()?,
            };
            let rows = run_even_table(&cfg)?;
            let csv = rows_to_csv(&cfg, &rows);
            write_file(&output, &csv)?;
            report_table(&rows, &output);
            Ok(())
        }
        Command::TableScattered {
            params,
            c_grid,
            domain,
            seed,
            seeds,
            nt,
            output,
        } => {
            let p = params.problem()?;
            let delta = p.delta;
            let grid = parse_grid(&c_grid)?;
            let domain = parse_domain(&domain)?;
            let n_t = nt
                .or_else(|| published_n_t(Mode::Scattered, &delta))
                .unwrap_or(80);
            let digits = params.digits()?;
            if seeds == 0 {
                return Err(Error::Domain("--seeds must be >= 1".into()));
            }
            let mut csv = String::new();
            let mut all_rows = Vec::new();
            for k in 0..seeds {
                let cfg = RunConfig {
                    params: p.clone(),
                    c_grid: grid.clone(),
                    mode: Mode::Scattered,
                    domain,
                    n_t,
                    seed: seed + k as u64,
                    digits,
                };
                let rows = run_scattered_table(&cfg)?;
                if k == 0 {
                    csv.push_str(&rows_to_csv(&cfg, &rows));
                } else {
                    // append rows only; the metadata line records the first seed
                    let body = rows_to_csv(&cfg, &rows);
                    csv.push_str(body.splitn(3, '\n').nth(2).unwrap_or(""));
                }
                if seeds > 1 {
                    if let Some(am) = rms_argmin(&rows) {
                        println!("seed={} rms_argmin_c={}", seed + k as u64, am);
                    }
                }
                all_rows.extend(rows);
            }
            write_file(&output, &csv)?;
            report_table(&all_rows, &output);
            Ok(())
        }
        Command::FailureSweep {
            params,
            c_grid,
            mode,
            domain,
            seed,
            nt,
            output,
        } => {
            let p = params.problem()?;
            let delta = p.delta;
            let cfg = RunConfig {
                params: p,
                c_grid: parse_grid(&c_grid)?,
                mode,
                domain: parse_domain(&domain)?,
                n_t: nt
                    .or_else(|| published_n_t(mode, &delta))
                    .unwrap_or(150),
                seed,
                digits: params.digits()?,
            };
            let (rows, prediction) = run_failure_sweep(&cfg)?;
            let mut csv = rows_to_csv(&cfg, &rows);
            csv.push_str(&format!(
                "# prediction c_star={:.6} reliable={} flat_bottom_width={:.3}\n",
                prediction.c_star.to_f64(),
                prediction.reliable,
                prediction.flat_bottom_width
            ));
            write_file(&output, &csv)?;
            let argmin = rms_argmin(&rows);
            println!(
                "predicted c_star={:.6} reliable={} flat_bottom_width={:.3}",
                prediction.c_star.to_f64(),
                prediction.reliable,
                prediction.flat_bottom_width
            );
            match argmin {
                Some(c) => println!("measured rms argmin c={c}"),
                None => println!("measured rms argmin unavailable (all cells failed)"),
            }
            report_table(&rows, &output);
            Ok(())
        }
    }
}

type CellOutcome = std::result::Result<mnshape::experiments::ExperimentRow, (Dec, Error)>;

fn report_table(rows: &[CellOutcome], output: &std::path::Path) {
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    let skipped = rows.len() - ok;
    if skipped > 0 {
        println!(
            "wrote {ok} rows ({skipped} skipped) to {}",
            output.display()
        );
    } else {
        println!("wrote {ok} rows to {}", output.display());
    }
}

fn write_file(path: &std::path::Path, content: &str) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}
