use std::process::ExitCode;

fn main() -> ExitCode {
    tokenlab_cli::app::run(std::env::args_os())
}
