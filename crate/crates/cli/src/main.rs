use clap::{Parser, Subcommand};
use lognd_cli::experiments::Experiment;
use lognd_cli::output::Format;
use lognd_cli::{RunOptions, EXIT_CONFIG};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lognd", version, about = "Runs lognd verification experiments")]
struct Cli {
    /// Print the available experiments and exit.
    #[arg(long)]
    list_experiments: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment(s) named in a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run seed; overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Which files to write.
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_experiments {
        for e in Experiment::ALL {
            println!("{:<24}{}", e.name(), e.description());
        }
        println!("{:<24}every experiment above with its preset parameters", "all");
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run {
        config,
        out,
        seed,
        format,
    }) = cli.command
    else {
        eprintln!("nothing to do: use `lognd run <config>` or `lognd --list-experiments`");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let opts = RunOptions { out, seed, format };
    let result = lognd_cli::run(&config, &opts, |run| {
        print!("{}", run.report.summary());
        println!("  runtime {:.2} s", run.runtime.as_secs_f64());
    });
    match result {
        Ok(summary) => {
            let failed: Vec<&str> = summary
                .runs
                .iter()
                .filter(|r| !r.report.passed())
                .map(|r| r.params.experiment.name())
                .collect();
            if failed.is_empty() {
                println!("all gates passed; manifest {}", summary.manifest.display());
            } else {
                println!("gates failed in: {}; manifest {}", failed.join(", "), summary.manifest.display());
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
