use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use rehearse::cli::{Cli, Command};
use rehearse::error::{HarnessError, Result};
use rehearse::experiment::run_experiment;
use rehearse::plot::{render_plot_svg, PlotOptions};
use rehearse::verify::run_verify;

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let spec = args.to_run_spec()?;
            let summary = run_experiment(&spec)?;
            println!(
                "{}: train_acc {:.4} test_acc {:.4} rehearsed_mean {:.2} -> {}",
                rehearse_core::training::Method::from(spec.method).name(),
                summary.train_acc_final,
                summary.test_acc_final,
                summary.rehearsed_mean,
                spec.out_dir.display()
            );
            Ok(())
        }
        Command::Plot(args) => {
            let paths: Vec<&Path> = args.csv.iter().map(|p| p.as_path()).collect();
            let opts = PlotOptions {
                column: args.column,
                title: args.title,
            };
            render_plot_svg(&paths, &args.labels, &opts, &args.out)
        }
        Command::Verify(args) => {
            let data = if args.spec.wants_data() {
                Some(args.spec.to_run_spec()?)
            } else {
                None
            };
            let report = run_verify(args.suite_seed, data.as_ref())?;
            for line in &report.lines {
                println!("{line}");
            }
            if report.passed() {
                Ok(())
            } else {
                Err(HarnessError::Property(report.failed_names().join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
