//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgMatches, Command};

use crate::commands::{RunContext, RunSummary, SubcommandRegistry};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult, EXIT_INVALID, EXIT_OK};
use crate::validate::validate_for;

fn config_arg() -> Arg {
    Arg::new("config")
        .long("config")
        .short('c')
        .value_name("PATH")
        .value_parser(clap::value_parser!(PathBuf))
        .required(true)
        .help("JSON experiment config")
}

pub fn command(registry: &SubcommandRegistry) -> Command {
    let mut cmd = Command::new("ergodic")
        .about("Ergodic averages, rearrangements and divergence certificates on atomic measure spaces")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help("Thread count: set RAYON_NUM_THREADS.")
        .arg(
            Arg::new("output-dir")
                .long("output-dir")
                .short('o')
                .global(true)
                .value_name("DIR")
                .value_parser(clap::value_parser!(PathBuf))
                .default_value(".")
                .help("Directory for output files"),
        );
    for sub in registry.iter() {
        let mut c = Command::new(sub.name()).about(sub.about());
        if sub.uses_config() {
            c = c.arg(config_arg());
        }
        cmd = cmd.subcommand(sub.configure(c));
    }
    cmd.subcommand(
        Command::new("run")
            .about("Run the subcommand named by the config's \"command\" field")
            .arg(config_arg()),
    )
    .subcommand(
        Command::new("validate")
            .about("Check a config and print its diagnostics")
            .arg(config_arg())
            .arg(
                Arg::new("command")
                    .long("command")
                    .value_name("NAME")
                    .help("Validate for this subcommand instead of the config's own"),
            ),
    )
}

/// Parses `args`, runs the selected subcommand, and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let registry = SubcommandRegistry::with_builtins();
    let matches = match command(&registry).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(&registry, &matches, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(
    registry: &SubcommandRegistry,
    matches: &ArgMatches,
    stdout: &mut dyn Write,
) -> CliResult<u8> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let output_dir = sub
        .get_one::<PathBuf>("output-dir")
        .cloned()
        .unwrap_or_else(|| PathBuf::from("."));

    if name == "validate" {
        let config = load(sub)?;
        let command = sub
            .get_one::<String>("command")
            .map(String::as_str)
            .or(config.command.as_deref());
        let diagnostics = validate_for(&config, command);
        if diagnostics.is_empty() {
            writeln!(stdout, "config is valid")?;
            return Ok(EXIT_OK);
        }
        for d in &diagnostics {
            writeln!(stdout, "{d}")?;
        }
        return Ok(EXIT_INVALID);
    }

    let (command_name, config) = if name == "run" {
        let config = load(sub)?;
        let Some(command) = config.command.clone() else {
            return Err(CliError::Usage(
                "config has no \"command\" field; name a subcommand or add one".into(),
            ));
        };
        (command, Some(config))
    } else {
        let cmd = registry.get(name).expect("registered subcommand");
        let config = if cmd.uses_config() { Some(load(sub)?) } else { None };
        (name.to_string(), config)
    };

    let cmd = registry.get(&command_name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown command {command_name:?}; known: {}",
            registry.names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    if name == "run" && !cmd.uses_config() {
        return Err(CliError::Usage(format!(
            "{command_name} takes flags, not a config; run `ergodic {command_name}` directly"
        )));
    }
    if let Some(c) = &config {
        let diagnostics = validate_for(c, Some(&command_name));
        if !diagnostics.is_empty() {
            return Err(CliError::Invalid(diagnostics));
        }
    }
    let ctx = RunContext {
        config: config.as_ref(),
        args: sub,
        output_dir: &output_dir,
    };
    let RunSummary { artifacts, message } = cmd.run(&ctx)?;
    writeln!(stdout, "{message}")?;
    for a in &artifacts {
        writeln!(stdout, "wrote {}", a.path.display())?;
    }
    Ok(EXIT_OK)
}

fn load(sub: &ArgMatches) -> CliResult<ExperimentConfig> {
    let path = sub.get_one::<PathBuf>("config").expect("config is required");
    ExperimentConfig::load(path)
}
