mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Command};
use crate::config::{echo, resolve};
use crate::error::CliError;

fn run() -> Result<(), CliError> {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");

    macro_rules! dispatch {
        ($args:expr, $run:path) => {{
            let config = $args.config.clone();
            let args = resolve($args, sub, config.as_deref())?;
            println!("{}", echo(name, &args));
            $run(&args)
        }};
    }

    match cli.command {
        Command::Train(a) => dispatch!(a, commands::train),
        Command::Capture(a) => dispatch!(a, commands::capture),
        Command::Factorize(a) => dispatch!(a, commands::factorize),
        Command::Sweep(a) => dispatch!(a, commands::sweep),
        Command::Spectra(a) => dispatch!(a, commands::spectra),
        Command::Heatmap(a) => dispatch!(a, commands::heatmap),
        Command::Latent(a) => dispatch!(a, commands::latent),
        Command::Assoc(a) => dispatch!(a, commands::assoc),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("factorlens: {e}");
            e.exit_code()
        }
    }
}
