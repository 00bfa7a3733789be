//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches};

use crate::commands::{cmd_benchmark, cmd_fit, cmd_truncation};
use crate::config::{Command, RunConfig, KEYS};
use crate::error::{usage, CliResult};

const BOOLEAN_KEYS: &[&str] = &["standardize", "group_column"];

fn options(cmd: clap::Command) -> clap::Command {
    let cmd = cmd
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value configuration file"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .help("override one configuration key"),
        );
    KEYS.iter().fold(cmd, |cmd, key| {
        let flag = key.replace('_', "-");
        let arg = Arg::new(*key).long(flag).value_name("VALUE");
        let arg = if BOOLEAN_KEYS.contains(key) {
            arg.num_args(0..=1).default_missing_value("true")
        } else {
            arg.allow_hyphen_values(true)
        };
        cmd.arg(arg)
    })
}

fn parser() -> clap::Command {
    clap::Command::new("pyics")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Pitman-Yor mixture samplers, diagnostics and truncation study")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(options(
            clap::Command::new("fit").about("Fit one chain and summarize the posterior density"),
        ))
        .subcommand(options(
            clap::Command::new("benchmark").about("Compare samplers by time per effective sample"),
        ))
        .subcommand(options(
            clap::Command::new("truncation").about("Simulate slice-sampler truncation levels"),
        ))
}

fn overrides(m: &ArgMatches) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            pairs.push((key.to_string(), v.clone()));
        }
    }
    for item in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses `args` (program name first) and runs the selected command.
/// Help and version requests print and succeed.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match parser().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            return Err(usage(
                e.render()
                    .to_string()
                    .trim_end()
                    .trim_start_matches("error: ")
                    .to_string(),
            ))
        }
    };
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| usage("missing command"))?;
    let command = match name {
        "fit" => Command::Fit,
        "benchmark" => Command::Benchmark,
        _ => Command::Truncation,
    };
    let file = sub.get_one::<String>("config").map(PathBuf::from);
    let config = RunConfig::resolve(file.as_deref(), &overrides(sub)?)?;
    execute(command, &config)
}

/// Runs `command` inside a worker pool sized by `config.threads`.
pub fn execute(command: Command, config: &RunConfig) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| {
            usage(format!(
                "cannot start {} worker threads: {e}",
                config.threads
            ))
        })?;
    pool.install(|| match command {
        Command::Fit => cmd_fit(config),
        Command::Benchmark => cmd_benchmark(config),
        Command::Truncation => cmd_truncation(config),
    })
}
