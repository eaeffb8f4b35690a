use std::process::ExitCode;

use clap::Parser;
use qkim::cli::{error_json, execute, Cli, JobSpec};
use serde_json::{json, Value};

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    let fail = |err: &qkim::Error, context: Value| {
        eprintln!("{}", error_json(err, context));
        ExitCode::from(1)
    };
    let job = match JobSpec::from_cli(&cli) {
        Ok(job) => job,
        Err(e) => return fail(&e, json!({ "stage": "validation", "n": cli.n })),
    };
    match execute(&job, cli.jobs.max(1)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, json!({ "stage": "run", "job": job })),
    }
}
