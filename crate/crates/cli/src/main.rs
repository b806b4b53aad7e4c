//! Command-line surface of the bifractional laboratory: kernel evaluation,
//! ensemble simulation, and the deterministic experiment reports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::{FileConfig, OutputFormat};

#[derive(Parser)]
#[command(
    name = "bifbm",
    version,
    about = "Covariance kernels, exact simulation and limit-theorem experiments for the bifractional Brownian motion family",
    after_help = "Flags win over config-file values. Reports embed the resolved \
config, the seed and the schema version; rerunning with the same seed \
reproduces every number."
)]
struct Cli {
    /// Hurst-type parameter H in (0, 1)
    #[arg(long = "H", global = true)]
    h: Option<f64>,

    /// Second parameter K in (0, 1]
    #[arg(long = "K", global = true)]
    k: Option<f64>,

    /// RNG seed; generated from entropy and printed when absent
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (default: $BIFBM_OUT_DIR or ./<command>-report.json)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format; csv additionally writes the plot table next to the JSON
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// JSON config file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print errors as machine-readable JSON on stderr
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a covariance kernel at (s, t)
    Cov {
        /// bifbm | fbm | fbm-two-sided | xk | xhk | odd | even
        #[arg(long)]
        kernel: Option<String>,
        /// Hurst index for the fbm kernels (default: H*K)
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Draw a path ensemble and write it as CSV or binary plus metadata
    Simulate {
        /// bifbm | fbm | fbm-two-sided | xk | xhk | odd | even | xk-integral
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        hurst: Option<f64>,
        /// "a:b" for integers a..=b, or a comma list of times
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        paths: Option<usize>,
        /// Prepend the exact-zero origin column
        #[arg(long)]
        with_origin: bool,
        /// Write the compact binary layout instead of CSV
        #[arg(long)]
        binary: bool,
        /// Node count for the xk-integral sampler
        #[arg(long)]
        quad_nodes: Option<usize>,
    },
    /// Monte Carlo check of the covariance decomposition identity
    DecompositionCheck {
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Distance of the shifted increment covariance to its stationary limit
    Thm21 {
        #[arg(long)]
        grid: Option<String>,
        /// comma list of shift values h
        #[arg(long)]
        h_sweep: Option<String>,
    },
    /// Rate sweeps: exact values against leading-term predictions
    Asymptotics {
        /// prop22 | thm31 | thm41
        #[arg(long)]
        target: Option<String>,
        /// comma list of sweep points
        #[arg(long)]
        sweep: Option<String>,
        /// increment length for prop22
        #[arg(long)]
        t: Option<f64>,
        /// fixed lag n for thm31
        #[arg(long)]
        n: Option<f64>,
        /// fixed offset a for thm41
        #[arg(long)]
        a: Option<u64>,
        #[arg(long)]
        slope_tol: Option<f64>,
        #[arg(long)]
        ratio_tol: Option<f64>,
    },
    /// Partial-sum limit experiments over a correlated Gaussian sequence
    LimitTheorem {
        /// 61 (linear) or 62 (Hermite functional)
        #[arg(long)]
        prop: Option<u32>,
        #[arg(long)]
        n_list: Option<String>,
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        /// functional as Hermite terms "1:1,2:0.5"
        #[arg(long)]
        f_hermite: Option<String>,
        /// functional as monomial coefficients "c0,c1,c2,..."
        #[arg(long)]
        f_poly: Option<String>,
    },
    /// Integrate the covariance density over a rectangle vs the closed form
    Lemma62 {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Run every applicable check and write one combined report
    ReportAll {
        #[arg(long)]
        paths: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.json_errors;
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if json_errors {
                eprintln!(
                    "{}",
                    serde_json::json!({"error": format!("{e:#}"), "tool": "bifbm"})
                );
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let ctx = Ctx {
        file,
        h: cli.h,
        k: cli.k,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Cov { kernel, hurst, s, t } => commands::run_cov(&ctx, kernel, hurst, s, t),
        Command::Simulate {
            kernel,
            hurst,
            grid,
            paths,
            with_origin,
            binary,
            quad_nodes,
        } => commands::run_simulate(&ctx, kernel, hurst, grid, paths, with_origin, binary, quad_nodes),
        Command::DecompositionCheck { grid, paths } => {
            commands::run_decomposition_check(&ctx, grid, paths)
        }
        Command::Thm21 { grid, h_sweep } => commands::run_thm21(&ctx, grid, h_sweep),
        Command::Asymptotics {
            target,
            sweep,
            t,
            n,
            a,
            slope_tol,
            ratio_tol,
        } => commands::run_asymptotics(&ctx, target, sweep, t, n, a, slope_tol, ratio_tol),
        Command::LimitTheorem {
            prop,
            n_list,
            t_grid,
            paths,
            k_max,
            f_hermite,
            f_poly,
        } => commands::run_limit_theorem(&ctx, prop, n_list, t_grid, paths, k_max, f_hermite, f_poly),
        Command::Lemma62 { t, s, rel_tol } => commands::run_lemma62(&ctx, t, s, rel_tol),
        Command::ReportAll { paths } => commands::run_report_all(&ctx, paths),
    }
}
