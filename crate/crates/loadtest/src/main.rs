use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tutorcast_load::{run_load, sweep, write_report, LoadProfile, SweepReport};

/// Simulated students log in, list tutorials and fetch a section bundle.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Base URL of a running service.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    target: String,
    #[arg(long, default_value_t = 50)]
    users: usize,
    /// Spread user start times over this window.
    #[arg(long, default_value_t = 0)]
    ramp_ms: u64,
    /// End-to-end p95 budget.
    #[arg(long, default_value_t = 5000)]
    budget_ms: u64,
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    sections: usize,
    #[arg(long, default_value = "load-report.jsonl")]
    report_path: PathBuf,
    /// Comma-separated user counts, e.g. 10,50,100. Overrides --users.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let profile = |users| LoadProfile { users, sections: args.sections, ramp_ms: args.ramp_ms, iterations: args.iterations, ..LoadProfile::default() };
    let result = if args.sweep.is_empty() {
        run_load(&profile(args.users), &args.target, args.budget_ms).await.map(|r| vec![r])
    } else {
        let profiles: Vec<_> = args.sweep.iter().map(|&u| profile(u)).collect();
        sweep(&profiles, &args.target, args.budget_ms).await
    };
    let runs = match result {
        Ok(runs) => runs,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    for (report, _) in &runs {
        println!("{}", report.table());
    }
    let summary = SweepReport::new(runs.iter().map(|r| r.0.clone()).collect());
    if runs.len() > 1 {
        println!("{}", summary.table());
    }
    if let Err(err) = write_report(&args.report_path, &runs) {
        eprintln!("error: writing {}: {err}", args.report_path.display());
        return ExitCode::from(2);
    }
    println!("report written to {}", args.report_path.display());
    if summary.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
