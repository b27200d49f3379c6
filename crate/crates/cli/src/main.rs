use std::process::ExitCode;

use clap::Parser;
use clockwork_cli::{parse_config, run, Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let msg = msg.strip_prefix("error: ").unwrap_or(&msg).to_string();
            return fail(&CliError::Usage(msg));
        }
    };
    match parse_config(&cli).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error[{}]: {}", e.category(), e.to_string().trim_end());
    ExitCode::from(e.exit_code())
}
