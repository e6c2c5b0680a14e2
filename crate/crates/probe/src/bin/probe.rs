use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scalar_probe::config::ExperimentConfig;
use scalar_probe::report::{self, Expectations, Table};
use scalar_probe::{runner, Error};

/// Probe language models for scalar adjective knowledge and scalar
/// implicature behavior.
#[derive(Parser)]
#[command(name = "probe", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its record.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config field, e.g. `direct.pooling=max`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the record path and summary only.
        #[arg(long)]
        quiet: bool,
    },
    /// Render a table from saved run records.
    Report {
        #[arg(long, value_enum)]
        table: Table,
        /// Glob matching record.json files.
        #[arg(long)]
        runs: String,
        /// Also write `<out>/tables/<TABLE>.md`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML file of expected cells; adds a PASS/FAIL comparison.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Check a config and its input files without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Cmd::Run {
            config,
            overrides,
            quiet,
        } => {
            let config = ExperimentConfig::load(&config, &overrides)?;
            let record = runner::run(&config)?;
            let path = record.save(&config.output_dir)?;
            println!("{}", path.display());
            if !quiet {
                for (k, c) in &record.summary.cells {
                    let std = c.std.map(|s| format!(" ± {s:.4}")).unwrap_or_default();
                    let note = c
                        .note
                        .as_ref()
                        .map(|n| format!(" ({n})"))
                        .unwrap_or_default();
                    println!(
                        "{} {} {k}: {:.4}{std}{note}",
                        record.summary.row, record.summary.column, c.mean
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report {
            table,
            runs,
            out,
            expect,
        } => {
            let records = report::load_records(&runs)?;
            let mut text = report::render(&records, table);
            let mut failed = false;
            if let Some(path) = expect {
                let checks = report::check(&records, table, &Expectations::load(&path)?);
                failed = checks.iter().any(|c| !c.passed());
                text.push_str(&report::render_checks(&checks));
            }
            print!("{text}");
            if let Some(dir) = out {
                let dir = dir.join("tables");
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let path = dir.join(format!("{table:?}.md"));
                std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
            }
            Ok(if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Validate { config, overrides } => {
            let config = ExperimentConfig::load(&config, &overrides)?;
            let inputs = runner::load_inputs(&config)?;
            for d in inputs.scale_datasets() {
                println!(
                    "{}: {} scales, {} pairs",
                    d.id(),
                    d.scales().len(),
                    d.distinct_pair_count()
                );
            }
            for d in inputs.si.iter().chain(&inputs.si_train) {
                let (n, yes, no) = d.counts();
                println!("{}: {n} items ({yes} yes / {no} no)", d.id());
            }
            println!("config ok ({})", config.hash());
            Ok(ExitCode::SUCCESS)
        }
    }
}
