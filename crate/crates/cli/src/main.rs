use std::process::ExitCode;

fn main() -> ExitCode {
    imlsbm_cli::cli::main_with_args(std::env::args_os())
}
