use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpd_core::fields::FieldId;
use cpd_core::harness::{
    fit_rows, identity_suite, run_experiment, standard_eps_values, standard_h_values, write_csv, ExperimentConfig,
    ExperimentKind, Method, SweepVariable,
};
use cpd_core::Result;

#[derive(Parser)]
#[command(name = "cpd", about = "Uniformly accurate charged-particle dynamics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Standard convergence sweep for one method, with the fitted slope.
    Orders {
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "general")]
        field: FieldId,
        #[arg(long, value_enum)]
        sweep: Sweep,
        /// Fixed eps for an h sweep.
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Fixed step for an eps sweep.
        #[arg(long, default_value_t = 1.0 / 40.0)]
        h: f64,
    },
    /// Verify the stiff order conditions and the operator identities.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Eps,
    H,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = run_experiment(&cfg)?;
            match out.or(cfg.output.clone()) {
                Some(p) if p.as_os_str() != "-" => write_csv(&rows, std::fs::File::create(&p)?)?,
                _ => write_csv(&rows, std::io::stdout().lock())?,
            }
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} rows failed", rows.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Orders {
            method,
            field,
            sweep,
            eps,
            h,
        } => {
            let (kind, eps_values, h_values, var) = match sweep {
                Sweep::Eps => (
                    ExperimentKind::OrderVsEps,
                    standard_eps_values(),
                    vec![h],
                    SweepVariable::Eps,
                ),
                Sweep::H => (
                    ExperimentKind::OrderVsH,
                    vec![eps],
                    standard_h_values(),
                    SweepVariable::H,
                ),
            };
            let cfg = ExperimentConfig::sweep(kind, field, vec![method], eps_values, h_values);
            let rows = run_experiment(&cfg)?;
            write_csv(&rows, std::io::stdout().lock())?;
            let refs: Vec<_> = rows.iter().collect();
            match fit_rows(&refs, var) {
                Ok(fit) => eprintln!(
                    "{method} slope {:.3} ({} points, {} excluded)",
                    fit.slope, fit.used, fit.excluded
                ),
                Err(e) => eprintln!("{method}: no slope ({e})"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let mut ok = true;
            for c in identity_suite()? {
                ok &= c.passed();
                println!(
                    "{:<32} {:.2e} (tol {:.0e})  {}",
                    c.name,
                    c.residual,
                    c.tolerance,
                    if c.passed() { "ok" } else { "FAIL" }
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
