use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = ergodic_cli::app::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}
